//! Force evaluation and mesh quality on the obstacle geometry.

use std::sync::Arc;

use nsensemble::assembly::assemble_core;
use nsensemble::experiments::benchmarks::{
    cylinder_member_data, cylinder_partition, graded_cylinder_mesh, stokes_solve, CYLINDER_CENTER, CYLINDER_RADIUS,
};
use nsensemble::experiments::forces::{boundary_forces, volume_forces};
use nsensemble::fespace::build_space;
use nsensemble::mesh::tags;

#[test]
fn graded_mesh_is_tagged_fine_near_the_obstacle_and_well_shaped() {
    let mesh = graded_cylinder_mesh(0.07, 0.01).unwrap();
    let seen = mesh.boundary_tags();
    for t in [tags::INLET, tags::OUTLET, tags::WALL, tags::CYLINDER] {
        assert!(seen.contains(&t), "tag {t} missing");
    }
    let v = mesh.vertices();
    let mut min_angle = f64::INFINITY;
    let (mut near, mut far) = (0.0f64, 0.0f64);
    for tri in mesh.triangles() {
        let p = tri.map(|i| v[i]);
        for k in 0..3 {
            let a = p[k];
            let b = p[(k + 1) % 3];
            let c = p[(k + 2) % 3];
            let (u, w) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
            let cos = (u[0] * w[0] + u[1] * w[1]) / (u[0].hypot(u[1]) * w[0].hypot(w[1]));
            min_angle = min_angle.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
        }
        let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        let d = (c[0] - CYLINDER_CENTER[0]).hypot(c[1] - CYLINDER_CENTER[1]);
        let h = (0..3)
            .map(|k| (p[k][0] - p[(k + 1) % 3][0]).hypot(p[k][1] - p[(k + 1) % 3][1]))
            .fold(0.0, f64::max);
        if d < 1.5 * CYLINDER_RADIUS {
            near = near.max(h);
        } else if c[0] > 1.5 {
            far = far.max(h);
        }
    }
    assert!(min_angle > 20.0, "{min_angle}");
    assert!(near < far / 2.0, "near {near} far {far}");
}

/// On a discrete Stokes solution the volume residual and the boundary traction
/// integral measure the same force up to the consistency gap of the traction.
#[test]
fn stokes_drag_from_volume_and_boundary_forms() {
    let mesh = Arc::new(graded_cylinder_mesh(0.07, 0.01).unwrap());
    let part = cylinder_partition(&mesh, false).unwrap();
    let space = build_space(mesh, part);
    let ops = assemble_core(&space);
    let nu = 1e-3;
    let data = cylinder_member_data();
    let (u, p) = stokes_solve(&space, &ops, nu, None, data.dirichlet.as_ref(), 4.0).unwrap();
    let zero = vec![0.0; u.len()];
    let vol = volume_forces(&space, &ops, nu, &u, &zero, &p, tags::CYLINDER);
    let bnd = boundary_forces(&space, nu, &u, &p, tags::CYLINDER);
    let gap = (vol[0] - bnd[0]).abs() / vol[0].abs();
    println!("stokes drag: volume {:.6e}, boundary {:.6e}, relative gap {gap:.3e}", vol[0], bnd[0]);
    assert!(vol[0] > 0.0 && bnd[0] > 0.0);
    assert!(vol.iter().chain(&bnd).all(|x| x.is_finite()));
}
