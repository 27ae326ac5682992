//! Flow past a cylinder on a coarse graded mesh: a three-member ensemble
//! with the open-outlet scheme, reporting drag, lift and the pressure
//! difference across the obstacle. Pass a final time to shorten or extend
//! the run.
//!
//! `cargo run --release --example cylinder_forces [-- 8.0]`

use std::sync::Arc;

use nsensemble::ensemble::{Algorithm, Ensemble, EnsembleConfig, InitialData};
use nsensemble::experiments::benchmarks::{
    cylinder_member_data, cylinder_partition, cylinder_run, force_extremes, graded_cylinder_mesh, CYLINDER_NU3,
};
use nsensemble::fespace::build_space;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t_final: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let mesh = Arc::new(graded_cylinder_mesh(0.07, 0.01)?);
    let part = cylinder_partition(&mesh, false)?;
    let space = build_space(mesh, part);
    println!("{} velocity + {} pressure dofs", space.n_velocity(), space.n_pressure());

    let nu = CYLINDER_NU3.to_vec();
    let mut cfg = EnsembleConfig::new(Algorithm::A5, nu.clone(), 0.004, t_final);
    cfg.gamma = 1.5;
    cfg.l = 0.01;
    let members = vec![cylinder_member_data(); nu.len()];
    let mut e = Ensemble::new(space.clone(), cfg, members, InitialData::at_rest(&space, nu.len()))?;
    let (summary, samples) = cylinder_run(&mut e)?;

    println!("{} steps, {} halvings", summary.steps, summary.halvings.len());
    for j in 0..nu.len() {
        let ext = force_extremes(&samples, j).unwrap();
        let last = samples.iter().filter(|s| s.member == j).next_back().unwrap();
        println!(
            "nu = 1/{:.0}: max c_d = {:.4}  max c_l = {:.4}  dp(T) = {:.4}",
            1.0 / nu[j],
            ext.drag,
            ext.lift,
            last.forces.pressure_drop
        );
    }
    Ok(())
}
