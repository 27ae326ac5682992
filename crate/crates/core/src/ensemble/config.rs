use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fespace::{ThetaParams, TaylorHoodSpace};

use super::stability::{compute_sigma, sigma_extended};
use super::EnsembleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    /// Mean-viscosity first-order scheme, Dirichlet boundaries only.
    Baseline,
}

/// Explicit treatment of the fluctuation advection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplicitForm {
    B1,
    B1PlusB2,
    B3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::A1,
        Algorithm::A2,
        Algorithm::A3,
        Algorithm::A4,
        Algorithm::A5,
        Algorithm::A6,
        Algorithm::Baseline,
    ];

    pub fn is_second_order(self) -> bool {
        matches!(self, Algorithm::A4 | Algorithm::A5 | Algorithm::A6)
    }

    /// Backward-Euler scheme used to produce the first BDF2 step.
    pub fn first_order_partner(self) -> Algorithm {
        match self {
            Algorithm::A4 => Algorithm::A1,
            Algorithm::A5 => Algorithm::A2,
            Algorithm::A6 => Algorithm::A3,
            a => a,
        }
    }

    /// Schemes that require `Gamma_N` to be empty.
    pub fn dirichlet_only(self) -> bool {
        matches!(self, Algorithm::A1 | Algorithm::A4 | Algorithm::Baseline)
    }

    /// Schemes carrying the `L (du/dt, v)_{Gamma_N}` relaxation term.
    pub fn uses_relaxation(self) -> bool {
        matches!(self, Algorithm::A2 | Algorithm::A5)
    }

    /// Schemes with the implicit backflow term `b2(mean, u^{n+1}, v)`.
    pub fn implicit_backflow(self) -> bool {
        matches!(self, Algorithm::A2 | Algorithm::A3 | Algorithm::A5 | Algorithm::A6)
    }

    pub fn explicit_form(self) -> ExplicitForm {
        match self {
            Algorithm::A1 | Algorithm::A4 | Algorithm::Baseline => ExplicitForm::B1,
            Algorithm::A2 | Algorithm::A5 => ExplicitForm::B1PlusB2,
            Algorithm::A3 | Algorithm::A6 => ExplicitForm::B3,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Algorithm::A1 => "A1",
            Algorithm::A2 => "A2",
            Algorithm::A3 => "A3",
            Algorithm::A4 => "A4",
            Algorithm::A5 => "A5",
            Algorithm::A6 => "A6",
            Algorithm::Baseline => "BASELINE",
        };
        f.write_str(s)
    }
}

impl FromStr for Algorithm {
    type Err = EnsembleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A1" | "1" => Ok(Algorithm::A1),
            "A2" | "2" => Ok(Algorithm::A2),
            "A3" | "3" => Ok(Algorithm::A3),
            "A4" | "4" => Ok(Algorithm::A4),
            "A5" | "5" => Ok(Algorithm::A5),
            "A6" | "6" => Ok(Algorithm::A6),
            "BASELINE" => Ok(Algorithm::Baseline),
            other => Err(EnsembleError::InvalidConfig(format!(
                "unknown algorithm '{other}' (expected A1..A6 or BASELINE)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CflPolicy {
    /// Halve the timestep while any margin exceeds one.
    pub halve_on_violation: bool,
    /// Multiplies every margin before the comparison.
    pub safety: f64,
    /// Smallest admissible timestep.
    pub dt_floor: f64,
}

impl Default for CflPolicy {
    fn default() -> Self {
        Self {
            halve_on_violation: true,
            safety: 1.0,
            dt_floor: 1e-8,
        }
    }
}

impl CflPolicy {
    pub fn disabled() -> Self {
        Self {
            halve_on_violation: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub nu: Vec<f64>,
    pub algorithm: Algorithm,
    /// Stabilization constant of the second-order schemes, in `[0, 2)`.
    pub gamma: f64,
    /// Boundary relaxation length (A2, A5).
    pub l: f64,
    pub theta: ThetaParams,
    pub dt0: f64,
    pub t_final: f64,
    pub policy: CflPolicy,
    /// Inverse-inequality constant in the gradient-based conditions (A3, A6).
    pub c_inverse: f64,
    /// Reject second-order runs whose sigma lies outside `(1/2, 1)`.
    pub require_guarantee: bool,
    /// Mixed eigenvalue override; computed from the mesh when absent.
    pub lambda1: Option<f64>,
}

impl EnsembleConfig {
    pub fn new(algorithm: Algorithm, nu: Vec<f64>, dt0: f64, t_final: f64) -> Self {
        Self {
            nu,
            algorithm,
            gamma: 0.0,
            l: 0.0,
            theta: ThetaParams::default(),
            dt0,
            t_final,
            policy: CflPolicy::default(),
            c_inverse: 1.0,
            require_guarantee: false,
            lambda1: None,
        }
    }

    pub fn members(&self) -> usize {
        self.nu.len()
    }

    /// `nu_infinity`, the largest viscosity.
    pub fn nu_max(&self) -> f64 {
        self.nu.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn nu_mean(&self) -> f64 {
        self.nu.iter().sum::<f64>() / self.nu.len() as f64
    }

    /// Viscosity multiplying the implicit stiffness.
    pub fn implicit_viscosity(&self) -> f64 {
        if self.algorithm == Algorithm::Baseline {
            self.nu_mean()
        } else {
            self.nu_max()
        }
    }

    /// `sigma` when the stability function is defined for every member.
    pub fn sigma(&self) -> Option<f64> {
        compute_sigma(self.gamma, &self.nu).ok()
    }

    /// `sigma` with the removable singularity at `gamma = 0` filled in.
    pub fn sigma_or_limit(&self) -> f64 {
        sigma_extended(self.gamma, &self.nu)
    }

    /// `nu_tilde_j = nu_infinity + (gamma - 1) nu_j`.
    pub fn nu_tilde(&self, j: usize) -> f64 {
        self.nu_max() + (self.gamma - 1.0) * self.nu[j]
    }

    /// Relaxation length actually used by the scheme (zero unless A2/A5).
    pub fn effective_l(&self) -> f64 {
        if self.algorithm.uses_relaxation() {
            self.l
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |m: String| Err(EnsembleError::InvalidConfig(m));
        if self.nu.is_empty() {
            return bad("at least one ensemble member is required (J >= 1)".into());
        }
        if let Some(v) = self.nu.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return bad(format!("viscosities must be positive and finite, got {v}"));
        }
        if !(self.dt0.is_finite() && self.dt0 > 0.0) {
            return bad(format!("initial timestep must be positive, got {}", self.dt0));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return bad(format!("final time must be positive, got {}", self.t_final));
        }
        if !(self.policy.safety.is_finite() && self.policy.safety > 0.0) {
            return bad(format!("CFL safety factor must be positive, got {}", self.policy.safety));
        }
        if !(self.policy.dt_floor > 0.0) {
            return bad(format!("timestep floor must be positive, got {}", self.policy.dt_floor));
        }
        if !(self.c_inverse.is_finite() && self.c_inverse > 0.0) {
            return bad(format!("inverse-inequality constant must be positive, got {}", self.c_inverse));
        }
        if self.algorithm.uses_relaxation() && !(self.l.is_finite() && self.l > 0.0) {
            return bad(format!(
                "{} needs a positive boundary relaxation length L, got {}",
                self.algorithm, self.l
            ));
        }
        if self.algorithm.is_second_order() {
            if !(0.0..2.0).contains(&self.gamma) {
                return bad(format!("gamma must lie in [0, 2) for {}, got {}", self.algorithm, self.gamma));
            }
            if self.require_guarantee {
                if let Some(j) = (0..self.nu.len()).find(|&j| self.nu_tilde(j) <= 0.0) {
                    return bad(format!(
                        "nu_tilde = nu_max + (gamma - 1) nu_j must be positive; member {j} gives {}",
                        self.nu_tilde(j)
                    ));
                }
                match self.sigma() {
                    Some(s) if s > 0.5 && s < 1.0 => {}
                    Some(s) => return bad(format!("sigma = {s} lies outside (1/2, 1)")),
                    None => return bad(format!("sigma is undefined for gamma = {}", self.gamma)),
                }
            }
        }
        if let Some(l1) = self.lambda1 {
            if !(l1.is_finite() && l1 > 0.0) {
                return bad(format!("lambda1 override must be positive, got {l1}"));
            }
        }
        Ok(())
    }

    /// Checks the boundary partition against the scheme.
    pub fn validate_space(&self, space: &TaylorHoodSpace) -> Result<(), EnsembleError> {
        if self.algorithm.dirichlet_only() && space.partition().has_open() {
            return Err(EnsembleError::OpenBoundaryNotAllowed(self.algorithm));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_algorithms() {
        for a in Algorithm::ALL {
            assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("a5".parse::<Algorithm>().unwrap(), Algorithm::A5);
        assert!("A7".parse::<Algorithm>().is_err());
    }

    #[test]
    fn partners_and_forms() {
        assert_eq!(Algorithm::A5.first_order_partner(), Algorithm::A2);
        assert_eq!(Algorithm::A3.first_order_partner(), Algorithm::A3);
        assert_eq!(Algorithm::A6.explicit_form(), ExplicitForm::B3);
        assert!(Algorithm::A3.implicit_backflow() && !Algorithm::A3.uses_relaxation());
    }

    #[test]
    fn validation_rules() {
        let mut c = EnsembleConfig::new(Algorithm::A4, vec![1.0, 2.0], 0.01, 1.0);
        c.gamma = 1.0;
        assert!(c.validate().is_ok());
        c.gamma = 2.0;
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("[0, 2)"), "{e}");
        c.gamma = 1.0;
        c.nu = vec![];
        assert!(c.validate().is_err());
        c.nu = vec![1.0, -1.0];
        assert!(c.validate().is_err());
        let mut c = EnsembleConfig::new(Algorithm::A2, vec![1.0], 0.01, 1.0);
        assert!(c.validate().is_err());
        c.l = 0.01;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn guarantee_flag_checks_sigma() {
        let mut c = EnsembleConfig::new(Algorithm::A5, vec![1.0, 9.0], 0.01, 1.0);
        c.l = 0.1;
        c.gamma = 1.5;
        assert!(c.validate().is_ok());
        c.require_guarantee = true;
        assert!(c.validate().is_err());
        c.nu = vec![1.0 / 1000.0, 1.0 / 900.0, 1.0 / 800.0];
        assert!(c.validate().is_ok());
    }
}
