//! Bilinear operators and trilinear forms on a Taylor-Hood space.
//!
//! Velocity operators act identically on both components, so the matrices here
//! are the scalar P2 blocks; the velocity operator is `diag(A, A)`. Test
//! functions index rows, trial functions index columns.

pub mod sparse;

use std::str::FromStr;

use thiserror::Error;

use crate::fespace::{TaylorHoodSpace, ThetaParams};
pub use sparse::CsrMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("the open boundary is empty")]
    NoOpenBoundary,
    #[error("unknown trilinear form '{0}' (expected b, b1, b2 or b3)")]
    UnknownForm(String),
}

/// Mass, stiffness, boundary mass and divergence operators.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    /// Scalar P2 mass `int phi_i phi_k`.
    pub mass: CsrMatrix,
    /// Scalar P2 stiffness `int grad phi_i . grad phi_k`.
    pub stiffness: CsrMatrix,
    /// Scalar P2 mass over the open boundary (same pattern as `mass`).
    pub boundary_mass: CsrMatrix,
    /// `int q_m d(phi_k)/dx` (P1 rows, P2 columns).
    pub div_x: CsrMatrix,
    /// `int q_m d(phi_k)/dy`.
    pub div_y: CsrMatrix,
    /// `int q_m`, the pressure-mean functional.
    pub pressure_mean: Vec<f64>,
}

/// Zero scalar P2 matrix with the element coupling pattern.
pub fn p2_pattern(space: &TaylorHoodSpace) -> CsrMatrix {
    let mut rows = vec![Vec::new(); space.n_p2()];
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        for &i in &d {
            rows[i].extend_from_slice(&d);
        }
    }
    CsrMatrix::from_pattern(space.n_p2(), space.n_p2(), rows)
}

pub fn assemble_core(space: &TaylorHoodSpace) -> OperatorSet {
    let pattern = p2_pattern(space);
    let mut mass = pattern.clone();
    let mut stiffness = pattern.clone();
    let mut boundary_mass = pattern;
    let mut b_rows = vec![Vec::new(); space.n_p1()];
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        for m in 0..3 {
            b_rows[d[m]].extend_from_slice(&d);
        }
    }
    let mut div_x = CsrMatrix::from_pattern(space.n_p1(), space.n_p2(), b_rows);
    let mut div_y = div_x.clone();
    let mut pressure_mean = vec![0.0; space.n_p1()];

    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        let mut me = [[0.0; 6]; 6];
        let mut ke = [[0.0; 6]; 6];
        let mut bx = [[0.0; 6]; 3];
        let mut by = [[0.0; 6]; 3];
        for qp in space.element_quadrature(t) {
            let w = qp.weight;
            for i in 0..6 {
                for k in 0..6 {
                    me[i][k] += w * qp.phi[i] * qp.phi[k];
                    ke[i][k] += w * (qp.grad[i][0] * qp.grad[k][0] + qp.grad[i][1] * qp.grad[k][1]);
                }
            }
            for m in 0..3 {
                pressure_mean[d[m]] += w * qp.lambda[m];
                for k in 0..6 {
                    bx[m][k] += w * qp.lambda[m] * qp.grad[k][0];
                    by[m][k] += w * qp.lambda[m] * qp.grad[k][1];
                }
            }
        }
        for i in 0..6 {
            for k in 0..6 {
                mass.add(d[i], d[k], me[i][k]);
                stiffness.add(d[i], d[k], ke[i][k]);
            }
        }
        for m in 0..3 {
            for k in 0..6 {
                div_x.add(d[m], d[k], bx[m][k]);
                div_y.add(d[m], d[k], by[m][k]);
            }
        }
    }
    for e in space.open_edges() {
        let d = space.boundary_dofs(e);
        for ep in space.edge_quadrature(e) {
            for a in 0..3 {
                for b in 0..3 {
                    boundary_mass.add(d[a], d[b], ep.weight * ep.phi[a] * ep.phi[b]);
                }
            }
        }
    }
    OperatorSet {
        mass,
        stiffness,
        boundary_mass,
        div_x,
        div_y,
        pressure_mean,
    }
}

impl OperatorSet {
    /// Applies `diag(A, A)` to a velocity vector.
    pub fn block_apply(scalar: &CsrMatrix, u: &[f64]) -> Vec<f64> {
        let n2 = scalar.nrows();
        let mut y = vec![0.0; 2 * n2];
        scalar.matvec_add(1.0, &u[..n2], &mut y[..n2]);
        scalar.matvec_add(1.0, &u[n2..], &mut y[n2..]);
        y
    }

    /// `y += alpha diag(A, A) u`.
    pub fn block_apply_add(scalar: &CsrMatrix, alpha: f64, u: &[f64], y: &mut [f64]) {
        let n2 = scalar.nrows();
        scalar.matvec_add(alpha, &u[..n2], &mut y[..n2]);
        scalar.matvec_add(alpha, &u[n2..], &mut y[n2..]);
    }

    /// `(q_m, div u)` for every pressure basis function.
    pub fn divergence(&self, u: &[f64]) -> Vec<f64> {
        let n2 = self.div_x.ncols();
        let mut y = vec![0.0; self.div_x.nrows()];
        self.div_x.matvec_add(1.0, &u[..n2], &mut y);
        self.div_y.matvec_add(1.0, &u[n2..], &mut y);
        y
    }

    /// `(p, div v_i)` for every velocity test function.
    pub fn pressure_gradient_pairing(&self, p: &[f64]) -> Vec<f64> {
        let n2 = self.div_x.ncols();
        let mut y = vec![0.0; 2 * n2];
        self.div_x.matvec_transpose_add(1.0, p, &mut y[..n2]);
        self.div_y.matvec_transpose_add(1.0, p, &mut y[n2..]);
        y
    }
}

/// Scalar block of `b1(w, ., .)`: `int (w . grad phi_k) phi_i + 1/2 (div w) phi_k phi_i`.
pub fn convection_b1_matrix(space: &TaylorHoodSpace, pattern: &CsrMatrix, w: &[f64]) -> CsrMatrix {
    let mut c = pattern.zeroed();
    add_b1_matrix(space, w, 1.0, &mut c);
    c
}

/// `c += alpha * N1(w)`.
pub fn add_b1_matrix(space: &TaylorHoodSpace, w: &[f64], alpha: f64, c: &mut CsrMatrix) {
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        let mut ce = [[0.0; 6]; 6];
        for qp in space.element_quadrature(t) {
            let (wv, wg) = space.velocity_at(w, &d, &qp);
            let half_div = 0.5 * (wg[0][0] + wg[1][1]);
            for k in 0..6 {
                let adv = wv[0] * qp.grad[k][0] + wv[1] * qp.grad[k][1] + half_div * qp.phi[k];
                for i in 0..6 {
                    ce[i][k] += qp.weight * adv * qp.phi[i];
                }
            }
        }
        for i in 0..6 {
            for k in 0..6 {
                c.add(d[i], d[k], alpha * ce[i][k]);
            }
        }
    }
}

/// Scalar block of `b2(w, ., .)`: `-1/2 int_{open} (w.n) theta0(w.n) phi_k phi_i`.
pub fn convection_b2_matrix(
    space: &TaylorHoodSpace,
    pattern: &CsrMatrix,
    w: &[f64],
    theta: &ThetaParams,
) -> Result<CsrMatrix, AssemblyError> {
    if space.open_edges().next().is_none() {
        return Err(AssemblyError::NoOpenBoundary);
    }
    let mut c = pattern.zeroed();
    add_b2_matrix(space, w, theta, 1.0, &mut c);
    Ok(c)
}

/// `c += alpha * N2(w)`; no-op without an open boundary.
pub fn add_b2_matrix(space: &TaylorHoodSpace, w: &[f64], theta: &ThetaParams, alpha: f64, c: &mut CsrMatrix) {
    for e in space.open_edges() {
        let d = space.boundary_dofs(e);
        let n = space.normal(e);
        for ep in space.edge_quadrature(e) {
            let wv = space.velocity_on_edge(w, e, &ep);
            let s = wv[0] * n[0] + wv[1] * n[1];
            let coef = -0.5 * s * theta.theta0(s) * ep.weight * alpha;
            for a in 0..3 {
                for b in 0..3 {
                    c.add(d[a], d[b], coef * ep.phi[a] * ep.phi[b]);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrilinearForm {
    /// `int (u . grad v) . w`
    B,
    /// `b + 1/2 int (div u) v . w`
    B1,
    /// `-1/2 int_{open} (u.n) theta0(u.n) v . w`
    B2,
    /// `1/2 (b(u, v, w) - b(u, w, v))`
    B3,
}

impl FromStr for TrilinearForm {
    type Err = AssemblyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "b" => Ok(Self::B),
            "b1" => Ok(Self::B1),
            "b2" => Ok(Self::B2),
            "b3" => Ok(Self::B3),
            other => Err(AssemblyError::UnknownForm(other.to_string())),
        }
    }
}

/// Quadrature value of a trilinear form.
pub fn trilinear(
    space: &TaylorHoodSpace,
    form: TrilinearForm,
    u: &[f64],
    v: &[f64],
    w: &[f64],
    theta: &ThetaParams,
) -> f64 {
    match form {
        TrilinearForm::B2 => {
            let mut s = 0.0;
            for e in space.open_edges() {
                let n = space.normal(e);
                for ep in space.edge_quadrature(e) {
                    let uv = space.velocity_on_edge(u, e, &ep);
                    let vv = space.velocity_on_edge(v, e, &ep);
                    let wv = space.velocity_on_edge(w, e, &ep);
                    let un = uv[0] * n[0] + uv[1] * n[1];
                    s -= 0.5 * ep.weight * un * theta.theta0(un) * (vv[0] * wv[0] + vv[1] * wv[1]);
                }
            }
            s
        }
        _ => {
            let mut s = 0.0;
            for t in 0..space.n_elements() {
                let d = space.element_dofs(t);
                for qp in space.element_quadrature(t) {
                    let (uv, ug) = space.velocity_at(u, &d, &qp);
                    let (vv, vg) = space.velocity_at(v, &d, &qp);
                    let (wv, wg) = space.velocity_at(w, &d, &qp);
                    let adv = |g: &[[f64; 2]; 2], z: &[f64; 2]| -> f64 {
                        (0..2)
                            .map(|c| (uv[0] * g[c][0] + uv[1] * g[c][1]) * z[c])
                            .sum()
                    };
                    let val = match form {
                        TrilinearForm::B => adv(&vg, &wv),
                        TrilinearForm::B1 => {
                            adv(&vg, &wv) + 0.5 * (ug[0][0] + ug[1][1]) * (vv[0] * wv[0] + vv[1] * wv[1])
                        }
                        TrilinearForm::B3 => 0.5 * (adv(&vg, &wv) - adv(&wg, &vv)),
                        TrilinearForm::B2 => unreachable!(),
                    };
                    s += qp.weight * val;
                }
            }
            s
        }
    }
}

/// `r_i = b1(w, v, phi_i)` for every velocity test function.
pub fn b1_action(space: &TaylorHoodSpace, w: &[f64], v: &[f64]) -> Vec<f64> {
    let n2 = space.n_p2();
    let mut r = vec![0.0; 2 * n2];
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        for qp in space.element_quadrature(t) {
            let (wv, wg) = space.velocity_at(w, &d, &qp);
            let (vv, vg) = space.velocity_at(v, &d, &qp);
            let half_div = 0.5 * (wg[0][0] + wg[1][1]);
            for c in 0..2 {
                let a = qp.weight * (wv[0] * vg[c][0] + wv[1] * vg[c][1] + half_div * vv[c]);
                for i in 0..6 {
                    r[c * n2 + d[i]] += a * qp.phi[i];
                }
            }
        }
    }
    r
}

/// `r_i = b2(w, v, phi_i)`; zero without an open boundary.
pub fn b2_action(space: &TaylorHoodSpace, w: &[f64], v: &[f64], theta: &ThetaParams) -> Vec<f64> {
    let n2 = space.n_p2();
    let mut r = vec![0.0; 2 * n2];
    for e in space.open_edges() {
        let d = space.boundary_dofs(e);
        let n = space.normal(e);
        for ep in space.edge_quadrature(e) {
            let wv = space.velocity_on_edge(w, e, &ep);
            let vv = space.velocity_on_edge(v, e, &ep);
            let s = wv[0] * n[0] + wv[1] * n[1];
            let coef = -0.5 * ep.weight * s * theta.theta0(s);
            for c in 0..2 {
                for a in 0..3 {
                    r[c * n2 + d[a]] += coef * vv[c] * ep.phi[a];
                }
            }
        }
    }
    r
}

/// `r_i = b3(w, v, phi_i)`.
pub fn b3_action(space: &TaylorHoodSpace, w: &[f64], v: &[f64]) -> Vec<f64> {
    let n2 = space.n_p2();
    let mut r = vec![0.0; 2 * n2];
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        for qp in space.element_quadrature(t) {
            let (wv, _) = space.velocity_at(w, &d, &qp);
            let (vv, vg) = space.velocity_at(v, &d, &qp);
            for c in 0..2 {
                let a = 0.5 * qp.weight * (wv[0] * vg[c][0] + wv[1] * vg[c][1]);
                let b = 0.5 * qp.weight * vv[c];
                for i in 0..6 {
                    let w_grad_phi = wv[0] * qp.grad[i][0] + wv[1] * qp.grad[i][1];
                    r[c * n2 + d[i]] += a * qp.phi[i] - b * w_grad_phi;
                }
            }
        }
    }
    r
}

/// Load vector `int f . phi_i`.
pub fn rhs_forcing(space: &TaylorHoodSpace, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let n2 = space.n_p2();
    let mut r = vec![0.0; 2 * n2];
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        for qp in space.element_quadrature(t) {
            let fv = f(qp.x);
            for i in 0..6 {
                r[d[i]] += qp.weight * fv[0] * qp.phi[i];
                r[n2 + d[i]] += qp.weight * fv[1] * qp.phi[i];
            }
        }
    }
    r
}

/// `int_{boundary} (u.n) v . w` over the whole boundary.
pub fn boundary_normal_flux(space: &TaylorHoodSpace, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let mut s = 0.0;
    for e in 0..space.n_boundary_edges() {
        let n = space.normal(e);
        for ep in space.edge_quadrature(e) {
            let uv = space.velocity_on_edge(u, e, &ep);
            let vv = space.velocity_on_edge(v, e, &ep);
            let wv = space.velocity_on_edge(w, e, &ep);
            s += ep.weight * (uv[0] * n[0] + uv[1] * n[1]) * (vv[0] * wv[0] + vv[1] * wv[1]);
        }
    }
    s
}

/// `int_{open} (a.n)/2 |v|^2 theta1(a.n)`: the outflow dissipation of `v`
/// advected by `a`.
pub fn outflow_dissipation(space: &TaylorHoodSpace, a: &[f64], v: &[f64], theta: &ThetaParams) -> f64 {
    let mut s = 0.0;
    for e in space.open_edges() {
        let n = space.normal(e);
        for ep in space.edge_quadrature(e) {
            let av = space.velocity_on_edge(a, e, &ep);
            let vv = space.velocity_on_edge(v, e, &ep);
            let an = av[0] * n[0] + av[1] * n[1];
            s += ep.weight * 0.5 * an * theta.theta1(an) * (vv[0] * vv[0] + vv[1] * vv[1]);
        }
    }
    s
}
