//! Three members with different viscosities share one matrix per step. The
//! run starts from random divergence-free data in a closed box, picks gamma
//! automatically and prints the per-member energies, CFL margins and solver
//! counters.
//!
//! `cargo run --release --example ensemble_energy`

use std::sync::Arc;

use nsensemble::assembly::assemble_core;
use nsensemble::ensemble::{select_gamma, Algorithm, Ensemble, EnsembleConfig, InitialData};
use nsensemble::experiments::benchmarks::random_smooth_ensemble;
use nsensemble::fespace::build_space;
use nsensemble::mesh::{generate_unit_square, BoundaryPartition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Arc::new(generate_unit_square(12)?);
    let space = build_space(mesh.clone(), BoundaryPartition::all_dirichlet(&mesh));
    let ops = assemble_core(&space);
    let nu = vec![0.02, 0.04, 0.07];
    let sel = select_gamma(&nu);
    println!("gamma = {:.4}, sigma = {:.4}, guaranteed = {}", sel.gamma, sel.sigma, sel.guaranteed);

    let mut cfg = EnsembleConfig::new(Algorithm::A4, nu, 0.01, 1.0);
    cfg.gamma = sel.gamma;
    let u0 = random_smooth_ensemble(&space, &ops, 3, 42, 0.2)?;
    let mut e = Ensemble::new(space, cfg, vec![], InitialData::new(u0))?;

    println!("{:>6} {:>10} {:>10} {:>12} {:>12} {:>12} {:>8}", "step", "t", "dt", "E_0", "E_1", "E_2", "margin");
    let summary = e.run_with(|_, r| {
        if r.step % 25 == 0 || !r.halvings.is_empty() {
            let margin = r.members.iter().map(|m| m.max_margin()).fold(0.0, f64::max);
            let en: Vec<String> = r.members.iter().map(|m| format!("{:12.5e}", m.energy)).collect();
            println!("{:>6} {:>10.4} {:>10.3e} {} {:>8.3}", r.step, r.t, r.dt, en.join(" "), margin);
        }
    })?;
    println!(
        "{} steps, {} halvings, {} factorizations, {} solves",
        summary.steps,
        summary.halvings.len(),
        summary.counters.factorizations,
        summary.counters.solves
    );
    Ok(())
}
