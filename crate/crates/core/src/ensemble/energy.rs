//! Discrete energies of the stability theorems and the open-boundary
//! dissipation integrals.

use crate::assembly::outflow_dissipation;
use crate::fespace::norms::{velocity_boundary_l2_sq, velocity_h1_semi_sq, velocity_l2_sq};
use crate::fespace::{TaylorHoodSpace, ThetaParams};

use super::{combine, Algorithm};

/// `|u|^2/2 + L |u|^2_{Gamma_N}/2 + dt nu/2 |grad u|^2`.
pub fn first_order_energy(space: &TaylorHoodSpace, u: &[f64], dt: f64, nu: f64, l: f64) -> f64 {
    let mut e = 0.5 * velocity_l2_sq(space, u) + 0.5 * dt * nu * velocity_h1_semi_sq(space, u);
    if l != 0.0 {
        e += 0.5 * l * velocity_boundary_l2_sq(space, u);
    }
    e
}

/// Parameters of the second-order energy of one member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderWeights {
    pub dt: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub nu_j: f64,
    pub nu_tilde: f64,
    pub l: f64,
}

/// `(|u|^2 + |E|^2)/4 + gamma |u - u_prev|^2/2 + L (same on Gamma_N)
///  + dt nu_tilde/2 |grad (u - u_prev)|^2 + dt sigma nu_j |grad u|^2`
/// with `E = 2u - u_prev`.
pub fn second_order_energy(space: &TaylorHoodSpace, u: &[f64], u_prev: &[f64], w: &SecondOrderWeights) -> f64 {
    let e = combine(2.0, u, -1.0, u_prev);
    let d = combine(1.0, u, -1.0, u_prev);
    let mut s = 0.25 * (velocity_l2_sq(space, u) + velocity_l2_sq(space, &e))
        + 0.5 * w.gamma * velocity_l2_sq(space, &d)
        + 0.5 * w.dt * w.nu_tilde * velocity_h1_semi_sq(space, &d)
        + w.dt * w.sigma * w.nu_j * velocity_h1_semi_sq(space, u);
    if w.l != 0.0 {
        s += w.l
            * (0.25 * (velocity_boundary_l2_sq(space, u) + velocity_boundary_l2_sq(space, &e))
                + 0.5 * w.gamma * velocity_boundary_l2_sq(space, &d));
    }
    s
}

/// Inputs of one step as seen by one member.
pub struct FluxInputs<'a> {
    /// Advecting mean (`u_bar^n` or `E_bar^n`).
    pub mean: &'a [f64],
    /// Fluctuation (`u'^n` or `E'^n`).
    pub fluctuation: &'a [f64],
    /// Explicit field (`u^n` or `E^n`).
    pub explicit: &'a [f64],
    pub new: &'a [f64],
    pub gamma: f64,
}

/// Boundary dissipation `F_{n+1}` of the open-boundary energy identities;
/// zero for the Dirichlet-only schemes.
pub fn boundary_dissipation(
    space: &TaylorHoodSpace,
    algorithm: Algorithm,
    x: &FluxInputs<'_>,
    theta: &ThetaParams,
) -> f64 {
    if !space.partition().has_open() {
        return 0.0;
    }
    let implicit_part = |v: &[f64]| outflow_dissipation(space, x.mean, v, theta);
    match algorithm {
        Algorithm::A2 => implicit_part(x.new) + outflow_dissipation(space, x.fluctuation, x.explicit, theta),
        Algorithm::A3 => implicit_part(x.new),
        Algorithm::A5 | Algorithm::A6 => {
            // u^{n+1} + gamma (u^{n+1} - E^n)
            let v = combine(1.0 + x.gamma, x.new, -x.gamma, x.explicit);
            let mut f = implicit_part(&v);
            if algorithm == Algorithm::A5 {
                f += outflow_dissipation(space, x.fluctuation, x.explicit, theta);
            }
            f
        }
        _ => 0.0,
    }
}

/// Right-hand side of the per-step open-boundary ledger
/// `Ener^{n+1} - Ener^n + dt F_{n+1} <= dt (nu_j / L) |w|^2_{Gamma_N}`,
/// where `w` is the explicit field. Zero for schemes without relaxation.
pub fn ledger_bound(space: &TaylorHoodSpace, algorithm: Algorithm, explicit: &[f64], dt: f64, nu_j: f64, l: f64) -> f64 {
    if algorithm.uses_relaxation() && l > 0.0 {
        dt * nu_j / l * velocity_boundary_l2_sq(space, explicit)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::FEFunction;
    use crate::mesh::tags;
    use crate::testutil::square_space;

    #[test]
    fn zero_state_has_zero_energy() {
        let s = square_space(3, &[tags::RIGHT]);
        let z = vec![0.0; s.n_velocity()];
        assert_eq!(first_order_energy(&s, &z, 0.1, 1.0, 0.5), 0.0);
        let w = SecondOrderWeights {
            dt: 0.1,
            gamma: 1.0,
            sigma: 0.7,
            nu_j: 1.0,
            nu_tilde: 1.0,
            l: 0.3,
        };
        assert_eq!(second_order_energy(&s, &z, &z, &w), 0.0);
    }

    #[test]
    fn first_order_closed_form() {
        // |u|^2 = 2/3 and |grad u|^2 = 2 for u = (x, -y)
        let s = square_space(4, &[]);
        let u = FEFunction::interpolate_velocity(&s, |x| [x[0], -x[1]]);
        let e = first_order_energy(&s, u.values(), 0.1, 1.0, 0.0);
        assert!((e - (1.0 / 3.0 + 0.1)).abs() < 1e-13);
    }

    #[test]
    fn second_order_constant_in_time_state() {
        let s = square_space(4, &[tags::RIGHT]);
        let u = FEFunction::interpolate_velocity(&s, |x| [x[0] * x[1], 1.0 - x[0]]);
        let n = u.norms();
        let w = SecondOrderWeights {
            dt: 0.05,
            gamma: 1.2,
            sigma: 0.8,
            nu_j: 0.5,
            nu_tilde: 0.9,
            l: 0.0,
        };
        let e = second_order_energy(&s, u.values(), u.values(), &w);
        let exact = n.l2.powi(2) / 2.0 + 0.05 * 0.8 * 0.5 * n.h1_semi.powi(2);
        assert!((e - exact).abs() < 1e-13);
        let e_l = second_order_energy(&s, u.values(), u.values(), &SecondOrderWeights { l: 0.2, ..w });
        assert!((e_l - exact - 0.1 * n.boundary_l2.powi(2)).abs() < 1e-13);
    }

    #[test]
    fn dissipation_of_pure_outflow_is_positive() {
        let s = square_space(4, &[tags::RIGHT]);
        let mean = FEFunction::interpolate_velocity(&s, |x| [x[1] * (1.0 - x[1]), 0.0]);
        let z = vec![0.0; s.n_velocity()];
        let th = ThetaParams::default();
        let x = FluxInputs {
            mean: mean.values(),
            fluctuation: &z,
            explicit: mean.values(),
            new: mean.values(),
            gamma: 0.0,
        };
        let f2 = boundary_dissipation(&s, Algorithm::A2, &x, &th);
        let f3 = boundary_dissipation(&s, Algorithm::A3, &x, &th);
        assert!(f2 > 0.0 && (f2 - f3).abs() < 1e-15);
        assert_eq!(boundary_dissipation(&s, Algorithm::A1, &x, &th), 0.0);
        let f6 = boundary_dissipation(&s, Algorithm::A6, &FluxInputs { gamma: 1.0, ..x }, &th);
        assert!((f6 - f3).abs() < 1e-15);
    }
}
