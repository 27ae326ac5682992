//! Taylor-Hood P2/P1 spaces on a [`Mesh`].
//!
//! Scalar P2 dofs are numbered vertices first, then edges (in the mesh edge
//! order). Velocity vectors are component-blocked: `[ux (n2), uy (n2)]`.
//! Pressure dofs coincide with the vertices.

pub mod norms;
pub mod quadrature;
pub mod vtk;

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{BoundaryPartition, Mesh};
use quadrature::{edge_rule, triangle_rule};

pub use norms::{inf_norms, InfNorms, Norms};

#[derive(Debug, Error, PartialEq)]
pub enum FeError {
    #[error("coefficient vector has length {got}, the {kind:?} space needs {expected}")]
    LengthMismatch {
        kind: FieldKind,
        expected: usize,
        got: usize,
    },
    #[error("expected a {expected:?} field")]
    WrongKind { expected: FieldKind },
    #[error("theta parameters must be positive (epsilon = {epsilon}, U0 = {u0})")]
    InvalidTheta { epsilon: f64, u0: f64 },
}

/// Smoothed Heaviside parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ThetaParams {
    pub epsilon: f64,
    pub u0: f64,
}

impl Default for ThetaParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            u0: 1.0,
        }
    }
}

impl ThetaParams {
    pub fn new(epsilon: f64, u0: f64) -> Result<Self, FeError> {
        if !(epsilon > 0.0 && u0 > 0.0 && epsilon.is_finite() && u0.is_finite()) {
            return Err(FeError::InvalidTheta { epsilon, u0 });
        }
        Ok(Self { epsilon, u0 })
    }

    /// `(1 - tanh(s / (eps U0))) / 2`, written as a logistic function so that it
    /// neither overflows nor loses relative accuracy in the tails.
    pub fn theta0(&self, s: f64) -> f64 {
        1.0 / (1.0 + (2.0 * s / (self.epsilon * self.u0)).exp())
    }

    pub fn theta1(&self, s: f64) -> f64 {
        1.0 - self.theta0(s)
    }
}

/// `(theta0(s), theta1(s))`.
pub fn theta(s: f64, params: &ThetaParams) -> (f64, f64) {
    let t0 = params.theta0(s);
    (t0, 1.0 - t0)
}

#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
    pub vertices: [[f64; 2]; 3],
}

/// Data at one quadrature point of an element.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub x: [f64; 2],
    /// Barycentric coordinates, which are also the P1 shape functions.
    pub lambda: [f64; 3],
    /// Physical weight (includes the element area).
    pub weight: f64,
    pub phi: [f64; 6],
    pub grad: [[f64; 2]; 6],
}

/// Data at one quadrature point of a boundary edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgePoint {
    pub x: [f64; 2],
    pub weight: f64,
    /// Shape functions of the edge dofs `[start, end, midpoint]`.
    pub phi: [f64; 3],
}

#[derive(Debug)]
pub struct TaylorHoodSpace {
    mesh: Arc<Mesh>,
    partition: BoundaryPartition,
    geometry: Vec<ElementGeometry>,
    dofs: Vec<[usize; 6]>,
    coords: Vec<[f64; 2]>,
    dirichlet: Vec<bool>,
    dirichlet_dofs: Vec<usize>,
    boundary_dofs: Vec<[usize; 3]>,
    boundary_lengths: Vec<f64>,
}

pub fn build_space(mesh: Arc<Mesh>, partition: BoundaryPartition) -> Arc<TaylorHoodSpace> {
    Arc::new(TaylorHoodSpace::new(mesh, partition))
}

impl TaylorHoodSpace {
    pub fn new(mesh: Arc<Mesh>, partition: BoundaryPartition) -> Self {
        let nv = mesh.n_vertices();
        let n2 = nv + mesh.n_edges();
        let mut coords = mesh.vertices().to_vec();
        for e in mesh.edges() {
            let (p, q) = (mesh.vertices()[e[0]], mesh.vertices()[e[1]]);
            coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        }
        let mut dofs = Vec::with_capacity(mesh.n_triangles());
        let mut geometry = Vec::with_capacity(mesh.n_triangles());
        for (tri, te) in mesh.triangles().iter().zip(mesh.triangle_edges()) {
            dofs.push([
                tri[0],
                tri[1],
                tri[2],
                nv + te[0],
                nv + te[1],
                nv + te[2],
            ]);
            let v = tri.map(|i| mesh.vertices()[i]);
            let area =
                0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]));
            let s = 1.0 / (2.0 * area);
            let grad_lambda = [
                [(v[1][1] - v[2][1]) * s, (v[2][0] - v[1][0]) * s],
                [(v[2][1] - v[0][1]) * s, (v[0][0] - v[2][0]) * s],
                [(v[0][1] - v[1][1]) * s, (v[1][0] - v[0][0]) * s],
            ];
            geometry.push(ElementGeometry {
                area,
                grad_lambda,
                vertices: v,
            });
        }
        let mut dirichlet = vec![false; n2];
        let mut boundary_dofs = Vec::with_capacity(mesh.boundary_edges().len());
        let mut boundary_lengths = Vec::with_capacity(mesh.boundary_edges().len());
        for (k, (e, &eid)) in mesh
            .boundary_edges()
            .iter()
            .zip(mesh.boundary_edge_ids())
            .enumerate()
        {
            let d = [e.vertices[0], e.vertices[1], nv + eid];
            if !partition.is_open(k) {
                for &i in &d {
                    dirichlet[i] = true;
                }
            }
            boundary_dofs.push(d);
            let (p, q) = (coords[d[0]], coords[d[1]]);
            boundary_lengths.push(((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt());
        }
        let dirichlet_dofs = (0..n2).filter(|&i| dirichlet[i]).collect();
        Self {
            mesh,
            partition,
            geometry,
            dofs,
            coords,
            dirichlet,
            dirichlet_dofs,
            boundary_dofs,
            boundary_lengths,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn partition(&self) -> &BoundaryPartition {
        &self.partition
    }

    /// Scalar P2 dof count (vertices + edges).
    pub fn n_p2(&self) -> usize {
        self.coords.len()
    }

    pub fn n_p1(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_p2()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_p1()
    }

    pub fn n_elements(&self) -> usize {
        self.dofs.len()
    }

    /// Scalar P2 dofs of element `t` in local order `[v0, v1, v2, e01, e12, e20]`.
    /// The first three are also the element's P1 (pressure) dofs.
    pub fn element_dofs(&self, t: usize) -> [usize; 6] {
        self.dofs[t]
    }

    pub fn geometry(&self, t: usize) -> &ElementGeometry {
        &self.geometry[t]
    }

    /// Coordinates of the scalar P2 nodes.
    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn is_dirichlet(&self, scalar_dof: usize) -> bool {
        self.dirichlet[scalar_dof]
    }

    /// Scalar P2 dofs on the Dirichlet boundary, sorted.
    pub fn dirichlet_scalar_dofs(&self) -> &[usize] {
        &self.dirichlet_dofs
    }

    /// Velocity dofs (both components) fixed by Dirichlet data, sorted.
    pub fn constrained_velocity_dofs(&self) -> Vec<usize> {
        let n2 = self.n_p2();
        self.dirichlet_dofs
            .iter()
            .copied()
            .chain(self.dirichlet_dofs.iter().map(|&i| i + n2))
            .collect()
    }

    /// Scalar dofs `[start, end, midpoint]` of each boundary edge.
    pub fn boundary_dofs(&self, boundary_edge: usize) -> [usize; 3] {
        self.boundary_dofs[boundary_edge]
    }

    pub fn boundary_length(&self, boundary_edge: usize) -> f64 {
        self.boundary_lengths[boundary_edge]
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.boundary_dofs.len()
    }

    /// Boundary edges on the open part of the boundary.
    pub fn open_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.boundary_dofs.len()).filter(|&e| self.partition.is_open(e))
    }

    pub fn normal(&self, boundary_edge: usize) -> [f64; 2] {
        self.partition.normals()[boundary_edge]
    }

    pub fn element_quadrature(&self, t: usize) -> Vec<QuadPoint> {
        let rule = triangle_rule();
        let g = &self.geometry[t];
        (0..rule.points.len())
            .map(|q| {
                let l = rule.points[q];
                let x = [
                    l[0] * g.vertices[0][0] + l[1] * g.vertices[1][0] + l[2] * g.vertices[2][0],
                    l[0] * g.vertices[0][1] + l[1] * g.vertices[1][1] + l[2] * g.vertices[2][1],
                ];
                let mut grad = [[0.0; 2]; 6];
                for (i, gi) in grad.iter_mut().enumerate() {
                    for m in 0..3 {
                        let c = rule.dphi[q][i][m];
                        gi[0] += c * g.grad_lambda[m][0];
                        gi[1] += c * g.grad_lambda[m][1];
                    }
                }
                QuadPoint {
                    x,
                    lambda: l,
                    weight: rule.weights[q] * g.area,
                    phi: rule.phi[q],
                    grad,
                }
            })
            .collect()
    }

    pub fn edge_quadrature(&self, boundary_edge: usize) -> Vec<EdgePoint> {
        let rule = edge_rule();
        let d = self.boundary_dofs[boundary_edge];
        let (p, q) = (self.coords[d[0]], self.coords[d[1]]);
        let len = self.boundary_lengths[boundary_edge];
        rule.points
            .iter()
            .zip(&rule.weights)
            .zip(&rule.phi)
            .map(|((&s, &w), &phi)| EdgePoint {
                x: [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])],
                weight: w * len,
                phi,
            })
            .collect()
    }

    /// Velocity value and gradient (`grad[c][d] = d u_c / d x_d`) at a quadrature point.
    pub fn velocity_at(&self, u: &[f64], dofs: &[usize; 6], qp: &QuadPoint) -> ([f64; 2], [[f64; 2]; 2]) {
        let n2 = self.n_p2();
        let mut val = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for i in 0..6 {
            let (ux, uy) = (u[dofs[i]], u[n2 + dofs[i]]);
            val[0] += ux * qp.phi[i];
            val[1] += uy * qp.phi[i];
            for d in 0..2 {
                grad[0][d] += ux * qp.grad[i][d];
                grad[1][d] += uy * qp.grad[i][d];
            }
        }
        (val, grad)
    }

    /// Velocity value on a boundary edge quadrature point.
    pub fn velocity_on_edge(&self, u: &[f64], boundary_edge: usize, ep: &EdgePoint) -> [f64; 2] {
        let n2 = self.n_p2();
        let d = self.boundary_dofs[boundary_edge];
        let mut val = [0.0; 2];
        for k in 0..3 {
            val[0] += u[d[k]] * ep.phi[k];
            val[1] += u[n2 + d[k]] * ep.phi[k];
        }
        val
    }

    /// P1 pressure value at a quadrature point given its barycentric weights.
    pub fn pressure_at(&self, p: &[f64], t: usize, l: [f64; 3]) -> f64 {
        let d = self.dofs[t];
        l[0] * p[d[0]] + l[1] * p[d[1]] + l[2] * p[d[2]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Velocity,
    Pressure,
}

/// Coefficient vector over a Taylor-Hood space.
#[derive(Debug, Clone)]
pub struct FEFunction {
    space: Arc<TaylorHoodSpace>,
    kind: FieldKind,
    values: Vec<f64>,
}

impl FEFunction {
    pub fn new(space: Arc<TaylorHoodSpace>, kind: FieldKind, values: Vec<f64>) -> Result<Self, FeError> {
        let expected = match kind {
            FieldKind::Velocity => space.n_velocity(),
            FieldKind::Pressure => space.n_pressure(),
        };
        if values.len() != expected {
            return Err(FeError::LengthMismatch {
                kind,
                expected,
                got: values.len(),
            });
        }
        Ok(Self { space, kind, values })
    }

    pub fn zeros(space: Arc<TaylorHoodSpace>, kind: FieldKind) -> Self {
        let n = match kind {
            FieldKind::Velocity => space.n_velocity(),
            FieldKind::Pressure => space.n_pressure(),
        };
        Self {
            space,
            kind,
            values: vec![0.0; n],
        }
    }

    /// Nodal P2 interpolant of a vector field.
    pub fn interpolate_velocity(space: &Arc<TaylorHoodSpace>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let n2 = space.n_p2();
        let mut values = vec![0.0; 2 * n2];
        for (i, &x) in space.dof_coords().iter().enumerate() {
            let v = f(x);
            values[i] = v[0];
            values[n2 + i] = v[1];
        }
        Self {
            space: space.clone(),
            kind: FieldKind::Velocity,
            values,
        }
    }

    /// Nodal P1 interpolant of a scalar field.
    pub fn interpolate_pressure(space: &Arc<TaylorHoodSpace>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = space.mesh().vertices().iter().map(|&x| f(x)).collect();
        Self {
            space: space.clone(),
            kind: FieldKind::Pressure,
            values,
        }
    }

    pub fn space(&self) -> &Arc<TaylorHoodSpace> {
        &self.space
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn expect_kind(&self, kind: FieldKind) -> Result<(), FeError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(FeError::WrongKind { expected: kind })
        }
    }

    /// Point evaluation; `None` outside the mesh. Velocity fields give both
    /// components, pressure fields give `[p, 0]`.
    pub fn evaluate(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let (t, l) = self.space.mesh().locate(x)?;
        match self.kind {
            FieldKind::Pressure => Some([self.space.pressure_at(&self.values, t, l), 0.0]),
            FieldKind::Velocity => {
                let d = self.space.element_dofs(t);
                let phi = quadrature::p2_values(l);
                let n2 = self.space.n_p2();
                let mut v = [0.0; 2];
                for i in 0..6 {
                    v[0] += phi[i] * self.values[d[i]];
                    v[1] += phi[i] * self.values[n2 + d[i]];
                }
                Some(v)
            }
        }
    }

    pub fn norms(&self) -> Norms {
        match self.kind {
            FieldKind::Velocity => norms::velocity_norms(&self.space, &self.values),
            FieldKind::Pressure => norms::pressure_norms(&self.space, &self.values),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tags;
    use crate::testutil::square_space;

    #[test]
    fn dof_counts() {
        let s = square_space(1, &[]);
        assert_eq!((s.n_p2(), s.n_velocity(), s.n_pressure()), (9, 18, 4));
        assert_eq!(square_space(2, &[]).n_pressure(), 9);
    }

    #[test]
    fn all_dirichlet_constrains_every_boundary_dof() {
        let s = square_space(3, &[]);
        for (i, x) in s.dof_coords().iter().enumerate() {
            let on_boundary = x[0] == 0.0 || x[0] == 1.0 || x[1] == 0.0 || x[1] == 1.0;
            assert_eq!(s.is_dirichlet(i), on_boundary);
        }
        assert_eq!(s.constrained_velocity_dofs().len(), 2 * 4 * 6);
    }

    #[test]
    fn open_side_dofs_stay_free_except_corners() {
        let s = square_space(2, &[tags::RIGHT]);
        for (i, x) in s.dof_coords().iter().enumerate() {
            if x[0] == 1.0 && x[1] > 0.0 && x[1] < 1.0 {
                assert!(!s.is_dirichlet(i));
            }
        }
    }

    #[test]
    fn constant_interpolation() {
        let s = square_space(2, &[]);
        let u = FEFunction::interpolate_velocity(&s, |_| [1.0, 0.0]);
        let n2 = s.n_p2();
        assert!(u.values()[..n2].iter().all(|&v| v == 1.0));
        assert!(u.values()[n2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_fields_are_reproduced() {
        let s = square_space(3, &[]);
        let t: f64 = 0.7;
        let exact = |x: [f64; 2]| {
            [
                x[0] * x[0] - x[1] * t.sin(),
                -2.0 * x[0] * x[1] + x[0] * t.cos(),
            ]
        };
        let u = FEFunction::interpolate_velocity(&s, exact);
        for p in [[0.13, 0.77], [0.5, 0.5], [0.91, 0.02]] {
            let v = u.evaluate(p).unwrap();
            let e = exact(p);
            assert!((v[0] - e[0]).abs() < 1e-14 && (v[1] - e[1]).abs() < 1e-14);
        }
        let pr = FEFunction::interpolate_pressure(&s, |x| (x[0] + x[1] - 1.0) * 1f64.sin());
        let v = pr.evaluate([0.3, 0.4]).unwrap()[0];
        assert!((v - (0.3 + 0.4 - 1.0) * 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn theta_values() {
        let p = ThetaParams::default();
        assert_eq!(p.theta0(0.0), 0.5);
        let s = 10.0 * p.epsilon * p.u0;
        let expected = (1.0 - 10f64.tanh()) / 2.0;
        assert!((p.theta0(s) - expected).abs() < 1e-15);
        assert!((p.theta0(-s) - (1.0 - expected)).abs() < 1e-15);
        assert!(p.theta0(1e6) == 0.0 && p.theta0(-1e6) == 1.0);
        assert!(ThetaParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn wrong_length_is_rejected() {
        let s = square_space(1, &[]);
        assert!(FEFunction::new(s.clone(), FieldKind::Pressure, vec![0.0; 5]).is_err());
        assert!(FEFunction::new(s, FieldKind::Velocity, vec![0.0; 18]).is_ok());
    }
}
