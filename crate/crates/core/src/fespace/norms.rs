//! Integral and sampled norms of finite element fields.

use super::{quadrature, FEFunction, FeError, FieldKind, TaylorHoodSpace, ThetaParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    /// L2 norm over the open boundary.
    pub boundary_l2: f64,
}

/// Suprema over the sample set: P2 nodes plus volume quadrature points (and
/// open-boundary quadrature points for the boundary term).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfNorms {
    pub value_inf: f64,
    pub divergence_inf: f64,
    /// `max |(u.n) theta0(u.n)|` over open-boundary quadrature points.
    pub boundary_normal_theta_inf: f64,
}

pub fn velocity_l2_sq(space: &TaylorHoodSpace, u: &[f64]) -> f64 {
    let mut s = 0.0;
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        for qp in space.element_quadrature(t) {
            let (v, _) = space.velocity_at(u, &d, &qp);
            s += qp.weight * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    s
}

pub fn velocity_h1_semi_sq(space: &TaylorHoodSpace, u: &[f64]) -> f64 {
    let mut s = 0.0;
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        for qp in space.element_quadrature(t) {
            let (_, g) = space.velocity_at(u, &d, &qp);
            s += qp.weight * (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2));
        }
    }
    s
}

/// Squared L2 norm over the open boundary.
pub fn velocity_boundary_l2_sq(space: &TaylorHoodSpace, u: &[f64]) -> f64 {
    let mut s = 0.0;
    for e in space.open_edges() {
        for ep in space.edge_quadrature(e) {
            let v = space.velocity_on_edge(u, e, &ep);
            s += ep.weight * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    s
}

pub fn velocity_norms(space: &TaylorHoodSpace, u: &[f64]) -> Norms {
    Norms {
        l2: velocity_l2_sq(space, u).sqrt(),
        h1_semi: velocity_h1_semi_sq(space, u).sqrt(),
        boundary_l2: velocity_boundary_l2_sq(space, u).sqrt(),
    }
}

pub fn pressure_norms(space: &TaylorHoodSpace, p: &[f64]) -> Norms {
    let rule = quadrature::triangle_rule();
    let (mut l2, mut h1) = (0.0, 0.0);
    for t in 0..space.n_elements() {
        let g = space.geometry(t);
        let d = space.element_dofs(t);
        let grad = [0, 1].map(|c| (0..3).map(|m| p[d[m]] * g.grad_lambda[m][c]).sum::<f64>());
        h1 += g.area * (grad[0] * grad[0] + grad[1] * grad[1]);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let v = space.pressure_at(p, t, *l);
            l2 += w * g.area * v * v;
        }
    }
    let mut b = 0.0;
    for e in space.open_edges() {
        let d = space.boundary_dofs(e);
        for (s, w) in quadrature::edge_rule().points.iter().zip(&quadrature::edge_rule().weights) {
            let v = (1.0 - s) * p[d[0]] + s * p[d[1]];
            b += w * space.boundary_length(e) * v * v;
        }
    }
    Norms {
        l2: l2.sqrt(),
        h1_semi: h1.sqrt(),
        boundary_l2: b.sqrt(),
    }
}

/// `|| u_h - u ||_{L2}` against a closed-form field.
pub fn velocity_l2_error(space: &TaylorHoodSpace, u: &[f64], exact: impl Fn([f64; 2]) -> [f64; 2]) -> f64 {
    let mut s = 0.0;
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        for qp in space.element_quadrature(t) {
            let (v, _) = space.velocity_at(u, &d, &qp);
            let e = exact(qp.x);
            s += qp.weight * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2));
        }
    }
    s.sqrt()
}

/// `|| p_h - p ||_{L2}` against a closed-form field.
pub fn pressure_l2_error(space: &TaylorHoodSpace, p: &[f64], exact: impl Fn([f64; 2]) -> f64) -> f64 {
    let rule = quadrature::triangle_rule();
    let mut s = 0.0;
    for t in 0..space.n_elements() {
        let g = space.geometry(t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let x = [0, 1].map(|c| l[0] * g.vertices[0][c] + l[1] * g.vertices[1][c] + l[2] * g.vertices[2][c]);
            let v = space.pressure_at(p, t, *l);
            s += w * g.area * (v - exact(x)).powi(2);
        }
    }
    s.sqrt()
}

/// Sampled sup norms; rejects pressure fields.
pub fn inf_norms(f: &FEFunction, theta: &ThetaParams) -> Result<InfNorms, FeError> {
    f.expect_kind(FieldKind::Velocity)?;
    Ok(velocity_inf_norms(f.space(), f.values(), theta))
}

pub fn velocity_inf_norms(space: &TaylorHoodSpace, u: &[f64], theta: &ThetaParams) -> InfNorms {
    let n2 = space.n_p2();
    let mut value_inf = (0..n2)
        .map(|i| (u[i] * u[i] + u[n2 + i] * u[n2 + i]).sqrt())
        .fold(0.0, f64::max);
    let mut divergence_inf = 0.0f64;
    for t in 0..space.n_elements() {
        let d = space.element_dofs(t);
        for qp in space.element_quadrature(t) {
            let (v, g) = space.velocity_at(u, &d, &qp);
            value_inf = value_inf.max((v[0] * v[0] + v[1] * v[1]).sqrt());
            divergence_inf = divergence_inf.max((g[0][0] + g[1][1]).abs());
        }
    }
    let mut boundary_normal_theta_inf = 0.0f64;
    for e in space.open_edges() {
        let n = space.normal(e);
        for ep in space.edge_quadrature(e) {
            let v = space.velocity_on_edge(u, e, &ep);
            let s = v[0] * n[0] + v[1] * n[1];
            boundary_normal_theta_inf = boundary_normal_theta_inf.max((s * theta.theta0(s)).abs());
        }
    }
    InfNorms {
        value_inf,
        divergence_inf,
        boundary_normal_theta_inf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::square_space;
    use crate::mesh::tags;

    #[test]
    fn constant_field() {
        let s = square_space(3, &[]);
        let u = FEFunction::interpolate_velocity(&s, |_| [3.0, -4.0]);
        let n = u.norms();
        assert!((n.l2 - 5.0).abs() < 1e-13);
        assert!(n.h1_semi.abs() < 1e-12);
    }

    #[test]
    fn linear_field_l2() {
        let s = square_space(2, &[]);
        let u = FEFunction::interpolate_velocity(&s, |x| [x[0], 0.0]);
        assert!((u.norms().l2 - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn boundary_norm_on_open_side() {
        let s = square_space(2, &[tags::RIGHT]);
        let u = FEFunction::interpolate_velocity(&s, |x| [x[1], 0.0]);
        assert!((u.norms().boundary_l2 - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn inf_norms_of_simple_fields() {
        let s = square_space(2, &[tags::RIGHT]);
        let th = ThetaParams::default();
        let n = inf_norms(&FEFunction::interpolate_velocity(&s, |_| [1.0, 0.0]), &th).unwrap();
        assert!((n.value_inf - 1.0).abs() < 1e-14 && n.divergence_inf < 1e-13);
        let n = inf_norms(&FEFunction::interpolate_velocity(&s, |x| [x[0], -x[1]]), &th).unwrap();
        assert!((n.value_inf - 2f64.sqrt()).abs() < 1e-14 && n.divergence_inf < 1e-12);
        let unit = ThetaParams::new(1.0, 1.0).unwrap();
        let n = inf_norms(&FEFunction::interpolate_velocity(&s, |x| [x[0], 0.0]), &unit).unwrap();
        assert!((n.boundary_normal_theta_inf - (1.0 - 1f64.tanh()) / 2.0).abs() < 1e-14);
        let p = FEFunction::zeros(s, FieldKind::Pressure);
        assert!(inf_norms(&p, &th).is_err());
    }
}
