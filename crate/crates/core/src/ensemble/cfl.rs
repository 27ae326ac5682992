//! Timestep conditions of the stability theorems. Each margin is the left-hand
//! side of its condition, so a margin of at most one certifies the step.

use std::fmt;

use crate::fespace::norms::{velocity_h1_semi_sq, velocity_inf_norms};
use crate::fespace::{TaylorHoodSpace, ThetaParams};

use super::{Algorithm, EnsembleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CflCondition {
    /// `(dt/nu_j) (|u'|_inf + diam/2 |div u'|_inf)^2`
    Dirichlet,
    /// As `Dirichlet` with `lambda1^{-1/2}` in place of `diam/2`.
    OpenDivergence,
    /// `dt/(8 nu_j) |(u'.n) theta0(u'.n)|_inf^2` on the open boundary.
    OpenBackflow,
    /// `C dt/(h nu_j) |grad u'|^2`
    OpenGradient,
    Dirichlet2,
    OpenDivergence2,
    OpenBackflow2,
    OpenGradient2,
}

impl CflCondition {
    pub fn name(self) -> &'static str {
        match self {
            CflCondition::Dirichlet => "stab",
            CflCondition::OpenDivergence => "obc1",
            CflCondition::OpenBackflow => "obc2",
            CflCondition::OpenGradient => "obc3",
            CflCondition::Dirichlet2 => "stab_2nd",
            CflCondition::OpenDivergence2 => "obc1_2nd",
            CflCondition::OpenBackflow2 => "obc2_2nd",
            CflCondition::OpenGradient2 => "obc3_2nd",
        }
    }

    /// Conditions monitored for each scheme. The baseline has none.
    pub fn active(algorithm: Algorithm) -> &'static [CflCondition] {
        use CflCondition::*;
        match algorithm {
            Algorithm::A1 => &[Dirichlet],
            Algorithm::A2 => &[OpenDivergence, OpenBackflow],
            Algorithm::A3 => &[OpenGradient],
            Algorithm::A4 => &[Dirichlet2],
            Algorithm::A5 => &[OpenDivergence2, OpenBackflow2],
            Algorithm::A6 => &[OpenGradient2],
            Algorithm::Baseline => &[],
        }
    }

    pub fn needs_lambda1(self) -> bool {
        matches!(self, CflCondition::OpenDivergence | CflCondition::OpenDivergence2)
    }
}

impl fmt::Display for CflCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Scalar parameters entering the margins of one member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginParams {
    pub dt: f64,
    pub nu_j: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub diam: f64,
    pub h: f64,
    pub lambda1: Option<f64>,
    pub c_inverse: f64,
}

/// Norms of the fluctuation (`u'` or `E'`) used by the margins.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FluctuationMeasures {
    pub value_inf: f64,
    pub divergence_inf: f64,
    pub backflow_inf: f64,
    pub grad_l2: f64,
}

impl FluctuationMeasures {
    pub fn of(space: &TaylorHoodSpace, w: &[f64], theta: &ThetaParams) -> Self {
        let inf = velocity_inf_norms(space, w, theta);
        Self {
            value_inf: inf.value_inf,
            divergence_inf: inf.divergence_inf,
            backflow_inf: inf.boundary_normal_theta_inf,
            grad_l2: velocity_h1_semi_sq(space, w).sqrt(),
        }
    }
}

/// `(1+gamma)^2 / ((1+4 gamma)(1-sigma))`, infinite when `sigma >= 1`.
fn second_order_factor(gamma: f64, sigma: f64) -> f64 {
    if sigma >= 1.0 {
        f64::INFINITY
    } else {
        (1.0 + gamma).powi(2) / ((1.0 + 4.0 * gamma) * (1.0 - sigma))
    }
}

pub fn margin(cond: CflCondition, p: &MarginParams, m: &FluctuationMeasures) -> Result<f64, EnsembleError> {
    use CflCondition::*;
    let lam = || {
        p.lambda1
            .filter(|l| *l > 0.0)
            .ok_or(EnsembleError::MissingEigenvalue)
    };
    let zero = m.value_inf == 0.0 && m.divergence_inf == 0.0 && m.backflow_inf == 0.0 && m.grad_l2 == 0.0;
    let v = match cond {
        Dirichlet => p.dt / p.nu_j * (m.value_inf + p.diam / 2.0 * m.divergence_inf).powi(2),
        OpenDivergence => p.dt / p.nu_j * (m.value_inf + m.divergence_inf / lam()?.sqrt()).powi(2),
        OpenBackflow => p.dt / (8.0 * p.nu_j) * m.backflow_inf.powi(2),
        OpenGradient => p.c_inverse * p.dt / (p.h * p.nu_j) * m.grad_l2.powi(2),
        Dirichlet2 | OpenDivergence2 | OpenGradient2 => {
            let base = match cond {
                Dirichlet2 => margin(Dirichlet, p, m)?,
                OpenDivergence2 => margin(OpenDivergence, p, m)?,
                _ => margin(OpenGradient, p, m)?,
            };
            if zero {
                0.0
            } else {
                base * second_order_factor(p.gamma, p.sigma)
            }
        }
        OpenBackflow2 => {
            p.dt * (p.gamma + 1.0).powi(2) / ((4.0 * p.gamma + 1.0) * p.nu_j) * m.backflow_inf.powi(2)
        }
    };
    Ok(v)
}
