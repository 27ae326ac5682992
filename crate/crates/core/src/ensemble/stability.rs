//! The second-order stability function, gamma selection and the viscosity
//! restriction of the mean-viscosity baseline.

use super::EnsembleError;

/// `g_gamma(x) = (x + gamma - 1)^2 / (4 gamma (x - 1) + 2 (gamma - 1) + 2 x)`.
pub fn stability_g(gamma: f64, x: f64) -> Result<f64, EnsembleError> {
    let den = 4.0 * gamma * (x - 1.0) + 2.0 * (gamma - 1.0) + 2.0 * x;
    if !(den > 0.0) {
        return Err(EnsembleError::NonPositiveDenominator { gamma, x, denominator: den });
    }
    Ok((x + gamma - 1.0).powi(2) / den)
}

fn nu_max(nu: &[f64]) -> f64 {
    nu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `sigma = max_j g_gamma(nu_max / nu_j)`.
pub fn compute_sigma(gamma: f64, nu: &[f64]) -> Result<f64, EnsembleError> {
    if nu.is_empty() {
        return Err(EnsembleError::InvalidConfig("empty viscosity list".into()));
    }
    let top = nu_max(nu);
    let mut s = f64::NEG_INFINITY;
    for &v in nu {
        s = s.max(stability_g(gamma, top / v)?);
    }
    Ok(s)
}

/// Like [`compute_sigma`] but uses the continuous extension `g_0(1) = 0` at the
/// single removable singularity (`gamma = 0`, ratio 1).
pub fn sigma_extended(gamma: f64, nu: &[f64]) -> f64 {
    let top = nu_max(nu);
    nu.iter()
        .map(|&v| {
            let x = top / v;
            if gamma == 0.0 && x == 1.0 {
                0.0
            } else {
                stability_g(gamma, x).unwrap_or(f64::INFINITY)
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSelection {
    pub gamma: f64,
    pub sigma: f64,
    /// `sigma < 1`: the second-order stability theorems apply.
    pub guaranteed: bool,
    /// `sigma > 1/2`; can fail for nearly equal viscosities.
    pub above_half: bool,
}

fn admissible_sigma(gamma: f64, nu: &[f64]) -> Option<f64> {
    let top = nu_max(nu);
    // nu_tilde_j = nu_max + (gamma - 1) nu_j > 0
    if nu.iter().any(|&v| top + (gamma - 1.0) * v <= 0.0) {
        return None;
    }
    compute_sigma(gamma, nu).ok()
}

const GRID_STEP: f64 = 1e-3;
const GAMMA_MAX: f64 = 2.0;

/// Minimizes `sigma` over admissible `gamma` in `(0, 2)`: grid search with step
/// `1e-3`, then golden-section refinement around the best grid point.
pub fn select_gamma(nu: &[f64]) -> GammaSelection {
    assert!(!nu.is_empty(), "select_gamma needs at least one viscosity");
    let n = (GAMMA_MAX / GRID_STEP).round() as usize;
    let mut best = (f64::NAN, f64::INFINITY);
    for k in 0..n {
        let g = k as f64 * GRID_STEP;
        if let Some(s) = admissible_sigma(g, nu) {
            if s < best.1 {
                best = (g, s);
            }
        }
    }
    let f = |g: f64| admissible_sigma(g, nu).unwrap_or(f64::INFINITY);
    let mut a = (best.0 - GRID_STEP).max(1e-12);
    let mut b = (best.0 + GRID_STEP).min(GAMMA_MAX - 1e-12);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let (g_ref, s_ref) = if fc < fd { (c, fc) } else { (d, fd) };
    let (gamma, sigma) = if s_ref < best.1 { (g_ref, s_ref) } else { best };
    GammaSelection {
        gamma,
        sigma,
        guaranteed: sigma < 1.0,
        above_half: sigma > 0.5,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineCheck {
    pub mean_viscosity: f64,
    /// `max_j |nu_j - nu_mean| / nu_mean`.
    pub max_relative_deviation: f64,
    /// Smallest admissible `mu`: the squared deviation.
    pub required_mu: f64,
    /// `required_mu < 1`.
    pub feasible: bool,
}

/// Checks `|nu_j - nu_mean| / nu_mean <= sqrt(mu)` for some `mu < 1`.
pub fn check_baseline_restriction(nu: &[f64]) -> BaselineCheck {
    assert!(!nu.is_empty(), "baseline check needs at least one viscosity");
    let mean = nu.iter().sum::<f64>() / nu.len() as f64;
    let dev = nu.iter().map(|v| (v - mean).abs() / mean).fold(0.0, f64::max);
    BaselineCheck {
        mean_viscosity: mean,
        max_relative_deviation: dev,
        required_mu: dev * dev,
        feasible: dev * dev < 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g_at_ratio_one_is_half_gamma() {
        for g in [0.1, 0.5, 1.0, 1.5, 1.99] {
            assert!((stability_g(g, 1.0).unwrap() - g / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn g_reference_values() {
        assert!((stability_g(1.0, 5.0).unwrap() - 25.0 / 26.0).abs() < 1e-15);
        assert!((stability_g(2.0, 7.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((stability_g(0.3, 1.25).unwrap() - 0.3025 / 1.4).abs() < 1e-15);
    }

    #[test]
    fn g_rejects_zero_denominator() {
        assert!(matches!(
            stability_g(0.0, 1.0),
            Err(EnsembleError::NonPositiveDenominator { .. })
        ));
        assert!(stability_g(0.0, 0.5).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert!((compute_sigma(1.0, &[0.001, 0.003, 0.005]).unwrap() - 0.961538).abs() < 1e-6);
        let s = compute_sigma(1.5, &[1.0 / 1000.0, 1.0 / 900.0, 1.0 / 800.0]).unwrap();
        assert!((s - 0.75).abs() < 1e-12);
        assert!((compute_sigma(0.8, &[0.2, 0.2, 0.2]).unwrap() - 0.4).abs() < 1e-15);
        assert!(compute_sigma(0.0, &[1.0, 2.0]).is_err());
        assert_eq!(sigma_extended(0.0, &[1.0]), 0.0);
    }

    #[test]
    fn selection_for_small_ratio_is_guaranteed() {
        let s = select_gamma(&[1.0 / 1000.0, 1.0 / 900.0, 1.0 / 800.0]);
        assert!(s.guaranteed);
        assert!(s.sigma <= compute_sigma(1.5, &[1.0 / 1000.0, 1.0 / 900.0, 1.0 / 800.0]).unwrap());
        assert!((compute_sigma(s.gamma, &[1.0 / 1000.0, 1.0 / 900.0, 1.0 / 800.0]).unwrap() - s.sigma).abs() < 1e-15);
    }

    #[test]
    fn selection_for_ratio_nine_is_not_guaranteed() {
        let s = select_gamma(&[1.0, 9.0]);
        assert!(!s.guaranteed && s.sigma > 1.0);
    }

    #[test]
    fn single_member_pushes_gamma_to_zero() {
        let s = select_gamma(&[0.7]);
        assert!(s.gamma > 0.0 && s.gamma < 1e-3);
        assert!(s.sigma < 1e-3 && !s.above_half);
    }

    #[test]
    fn baseline_examples() {
        let c = check_baseline_restriction(&[1.0, 1.0, 1.0]);
        assert!(c.feasible && c.required_mu == 0.0);
        let c = check_baseline_restriction(&[1.0, 1.0, 10.0]);
        assert!(!c.feasible && (c.required_mu - 2.25).abs() < 1e-15);
        let c = check_baseline_restriction(&[1.0, 1.2]);
        assert!(c.feasible && (c.required_mu - (0.1f64 / 1.1).powi(2)).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn selection_is_scale_invariant(
            nu in proptest::collection::vec(0.5f64..3.0, 1..5),
            scale in 1e-3f64..1e3,
        ) {
            let a = select_gamma(&nu);
            let scaled: Vec<f64> = nu.iter().map(|v| v * scale).collect();
            let b = select_gamma(&scaled);
            prop_assert!((a.sigma - b.sigma).abs() <= 1e-9 * a.sigma.max(1e-12));
            prop_assert!((a.gamma - b.gamma).abs() <= 1e-6);
        }

        #[test]
        fn sigma_dominates_every_member(gamma in 0.01f64..1.99, nu in proptest::collection::vec(0.1f64..1.0, 1..6)) {
            let s = compute_sigma(gamma, &nu).unwrap();
            let top = nu.iter().copied().fold(0.0, f64::max);
            for v in &nu {
                prop_assert!(stability_g(gamma, top / v).unwrap() <= s);
            }
            prop_assert!(s >= gamma / 2.0 - 1e-15);
        }
    }
}
