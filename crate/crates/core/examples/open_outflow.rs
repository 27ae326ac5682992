//! Decaying flow in a channel with an open outlet, advanced with the relaxed
//! open-boundary schemes. With homogeneous Dirichlet data and no forcing each
//! member obeys the per-step ledger
//! `Ener^{n+1} - Ener^n + dt F <= dt (nu/L) |w|^2_outlet`, with the outflow
//! dissipation `F` nonnegative.
//!
//! `cargo run --release --example open_outflow`

use std::sync::Arc;

use nsensemble::assembly::assemble_core;
use nsensemble::ensemble::{select_gamma, Algorithm, Ensemble, EnsembleConfig, InitialData};
use nsensemble::experiments::benchmarks::random_smooth_ensemble;
use nsensemble::fespace::build_space;
use nsensemble::mesh::{generate_channel, tags, BoundaryPartition};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Arc::new(generate_channel(4.0, 1.0, 24, 6, None)?);
    let part = BoundaryPartition::new(&mesh, [tags::INLET, tags::WALL, tags::TOP], [tags::OUTLET])?;
    let space = build_space(mesh, part);
    let ops = assemble_core(&space);
    let nu = vec![0.01, 0.015, 0.02];

    for alg in [Algorithm::A2, Algorithm::A5] {
        let mut cfg = EnsembleConfig::new(alg, nu.clone(), 0.01, 1.0);
        if alg.is_second_order() {
            cfg.gamma = select_gamma(&nu).gamma;
        }
        cfg.l = 0.05;
        let u0 = random_smooth_ensemble(&space, &ops, nu.len(), 7, 0.5)?;
        let mut e = Ensemble::new(space.clone(), cfg, vec![], InitialData::new(u0))?;

        let mut worst = f64::NEG_INFINITY;
        let mut min_flux = f64::INFINITY;
        let summary = e.run_with(|_, r| {
            for m in &r.members {
                worst = worst.max(m.ledger_excess(r.dt) / m.energy_before.max(f64::MIN_POSITIVE));
                min_flux = min_flux.min(m.flux);
            }
            if r.step % 100 == 0 {
                let en: Vec<String> = r.members.iter().map(|m| format!("{:.4e}", m.energy)).collect();
                println!("{alg} t = {:.2}  dt = {:.2e}  energies [{}]", r.t, r.dt, en.join(", "));
            }
        })?;
        println!(
            "{alg}: {} steps, {} halvings, largest relative ledger excess {worst:.3e}, smallest F {min_flux:.3e}\n",
            summary.steps,
            summary.halvings.len()
        );
    }
    Ok(())
}
