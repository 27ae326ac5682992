//! Smallest eigenvalue of the Laplacian with Dirichlet conditions on part of
//! the boundary and natural conditions elsewhere, which enters the CFL
//! conditions of the open-boundary schemes. Compares with closed forms on the
//! unit square and prints the cylinder channel value.
//!
//! `cargo run --release --example eigenvalues`

use std::f64::consts::PI;
use std::sync::Arc;

use nsensemble::assembly::assemble_core;
use nsensemble::experiments::benchmarks::{cylinder_partition, graded_cylinder_mesh};
use nsensemble::fespace::build_space;
use nsensemble::linsolve::smallest_mixed_eigenvalue;
use nsensemble::mesh::{generate_unit_square, tags, BoundaryPartition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>4} {:>14} {:>14}", "n", "strip", "square");
    for n in [4, 8, 16, 32] {
        let mesh = Arc::new(generate_unit_square(n)?);
        let strip = build_space(
            mesh.clone(),
            BoundaryPartition::new(&mesh, [tags::LEFT], [tags::RIGHT, tags::BOTTOM, tags::TOP])?,
        );
        let square = build_space(mesh.clone(), BoundaryPartition::all_dirichlet(&mesh));
        let a = smallest_mixed_eigenvalue(&strip, &assemble_core(&strip))?;
        let b = smallest_mixed_eigenvalue(&square, &assemble_core(&square))?;
        println!("{n:>4} {:>14.9} {:>14.9}", a.lambda, b.lambda);
    }
    println!("{:>4} {:>14.9} {:>14.9}", "ref", PI * PI / 4.0, 2.0 * PI * PI);

    let mesh = Arc::new(graded_cylinder_mesh(0.033, 0.007)?);
    let part = cylinder_partition(&mesh, false)?;
    let space = build_space(mesh, part);
    let r = smallest_mixed_eigenvalue(&space, &assemble_core(&space))?;
    println!("cylinder channel, open outlet: lambda1 = {:.4} ({} iterations)", r.lambda, r.iterations);
    Ok(())
}
