//! The stability function `g_gamma(x)` behind the second-order schemes, the
//! optimal gamma for a few viscosity sets, and the viscosity-spread check of
//! the baseline ensemble method.
//!
//! `cargo run --release --example gamma_selection`

use nsensemble::ensemble::{check_baseline_restriction, compute_sigma, select_gamma, stability_g};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{:>6}", "x");
    let gammas = [0.5, 1.0, 1.5, 1.99];
    for g in gammas {
        print!("  g_{g:<6}");
    }
    println!();
    for x in [1.0, 1.5, 2.0, 4.0, 7.0, 9.0] {
        print!("{x:>6}");
        for g in gammas {
            print!("  {:<8.4}", stability_g(g, x)?);
        }
        println!();
    }

    let sets: [(&str, Vec<f64>); 4] = [
        ("cylinder", vec![1.0 / 1000.0, 1.0 / 900.0, 1.0 / 800.0]),
        ("contraction", vec![0.001, 0.003, 0.005]),
        ("ratio 7", vec![1.0, 7.0]),
        ("ratio 9", vec![1.0, 3.0, 9.0]),
    ];
    for (name, nu) in &sets {
        let s = select_gamma(nu);
        println!(
            "{name:<12} best gamma {:.4} sigma {:.6} (below 1: {}, above 1/2: {}), sigma at gamma=1.5: {:.6}",
            s.gamma,
            s.sigma,
            s.guaranteed,
            s.above_half,
            compute_sigma(1.5, nu)?
        );
    }

    for nu in [vec![1.0, 1.2], vec![1.0, 1.0, 10.0]] {
        let b = check_baseline_restriction(&nu);
        println!("baseline {nu:?}: required mu {:.4}, feasible {}", b.required_mu, b.feasible);
    }
    Ok(())
}
