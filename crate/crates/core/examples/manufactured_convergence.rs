//! Temporal convergence of the second-order ensemble scheme on a
//! manufactured two-member family whose fields are reproduced exactly in
//! space, so the tabulated error is purely temporal.
//!
//! `cargo run --release --example manufactured_convergence [-- A1|A4 ...]`

use nsensemble::ensemble::Algorithm;
use nsensemble::experiments::{convergence_study, ConvergenceSetup};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let algorithms: Vec<Algorithm> = match std::env::args().skip(1).map(|a| a.parse()).collect::<Result<Vec<_>, _>>()? {
        v if v.is_empty() => vec![Algorithm::A4],
        v => v,
    };
    for alg in algorithms {
        let mut setup = ConvergenceSetup::reference();
        setup.algorithm = alg;
        if !alg.is_second_order() {
            setup.gamma = 0.0;
        }
        // a longer sequence shows where the asymptotic rate sets in
        setup.dts = vec![0.02, 0.01, 0.005, 0.0025, 0.00125, 0.000625];
        let table = convergence_study(&setup)?;
        println!("{alg}, J = {}, gamma = {}", setup.family.members, setup.gamma);
        print!("{}", table.render());
        println!();
    }
    Ok(())
}
