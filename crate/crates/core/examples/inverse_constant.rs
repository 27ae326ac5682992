//! Estimates the inverse-inequality constant `|grad v| <= C h^-1 |v|` for P2
//! fields from element-wise generalized eigenvalues, on a uniform and on a
//! graded mesh.
//!
//! `cargo run --release --example inverse_constant`

use std::sync::Arc;

use nsensemble::experiments::benchmarks::{cylinder_partition, graded_cylinder_mesh};
use nsensemble::experiments::calibrate_inverse_constant;
use nsensemble::fespace::build_space;
use nsensemble::mesh::{generate_unit_square, BoundaryPartition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in [4, 16] {
        let mesh = Arc::new(generate_unit_square(n)?);
        let space = build_space(mesh.clone(), BoundaryPartition::all_dirichlet(&mesh));
        let r = calibrate_inverse_constant(&space)?;
        println!(
            "unit square n={n:<3} C = {:.4}  h = {:.4}  worst element {}  local ratio {:.4}",
            r.c_inverse, r.h, r.worst_element, r.local_ratio_max
        );
    }
    let mesh = Arc::new(graded_cylinder_mesh(0.07, 0.01)?);
    let part = cylinder_partition(&mesh, false)?;
    let r = calibrate_inverse_constant(&build_space(mesh, part))?;
    // the global h hides the small elements at the obstacle, so C grows
    println!(
        "graded cylinder      C = {:.4}  h = {:.4}  worst element {}  local ratio {:.4}",
        r.c_inverse, r.h, r.worst_element, r.local_ratio_max
    );
    Ok(())
}
