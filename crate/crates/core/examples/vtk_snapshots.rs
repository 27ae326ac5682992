//! Writes legacy VTK files of every member of a short ensemble run in the
//! two-outlet contraction channel, for viewing in ParaView or VisIt.
//!
//! `cargo run --release --example vtk_snapshots [-- out_dir]`

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use nsensemble::assembly::assemble_core;
use nsensemble::ensemble::{Algorithm, Ensemble, EnsembleConfig, InitialData};
use nsensemble::experiments::benchmarks::{contraction_initial, contraction_member_data, contraction_space, CONTRACTION_NU};
use nsensemble::fespace::vtk::write_vtk;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "vtk_snapshots".into()));
    fs::create_dir_all(&dir)?;
    let space = contraction_space(0.08)?;
    let ops = assemble_core(&space);
    let nu = CONTRACTION_NU.to_vec();
    let (inflow_eps, force_eps) = (0.1, 0.01);
    let u0 = contraction_initial(&space, &ops, &nu, inflow_eps, force_eps)?;

    let mut cfg = EnsembleConfig::new(Algorithm::A5, nu.clone(), 0.01, 0.02);
    cfg.gamma = 1.0;
    cfg.l = 0.01;
    let members = (0..nu.len()).map(|j| contraction_member_data(j, inflow_eps)).collect();
    let mut e = Ensemble::new(space, cfg, members, InitialData::new(u0))?;

    let mut written = Vec::new();
    let mut failure = None;
    e.run_with(|e, r| {
        if r.step % 10 != 0 || failure.is_some() {
            return;
        }
        for j in 0..e.config().members() {
            let path = dir.join(format!("member{j}_{:04}.vtk", r.step));
            let res = File::create(&path).and_then(|f| {
                let st = e.state();
                write_vtk(&mut BufWriter::new(f), e.space(), &format!("t = {}", r.t), Some(&st.u[j]), Some(&st.p[j]), true)
            });
            match res {
                Ok(()) => written.push(path),
                Err(err) => failure = Some(err),
            }
        }
    })?;
    if let Some(err) = failure {
        return Err(err.into());
    }
    println!("wrote {} files to {}", written.len(), dir.display());
    Ok(())
}
