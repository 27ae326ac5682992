//! Drag, lift and pressure drop on an immersed obstacle.

use crate::assembly::{trilinear, OperatorSet, TrilinearForm};
use crate::fespace::{TaylorHoodSpace, ThetaParams};

use super::ExperimentError;

/// `2 / (rho U^2 D)` with `rho = 1`, mean inflow `U = 1` and diameter `D = 0.1`.
pub const DRAG_SCALE: f64 = 20.0;

/// Front and back probe points of the cylinder benchmark.
pub const PRESSURE_PROBES: [[f64; 2]; 2] = [[0.15, 0.2], [0.25, 0.2]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forces {
    pub drag: f64,
    pub lift: f64,
    pub pressure_drop: f64,
}

/// Velocity test function equal to `e_d` on every P2 dof of the tagged boundary
/// and zero elsewhere.
fn surface_indicator(space: &TaylorHoodSpace, tag: i32, d: usize) -> Vec<f64> {
    let n2 = space.n_p2();
    let mut v = vec![0.0; 2 * n2];
    for (e, edge) in space.mesh().boundary_edges().iter().enumerate() {
        if edge.tag == tag {
            for k in space.boundary_dofs(e) {
                v[d * n2 + k] = 1.0;
            }
        }
    }
    v
}

/// Force exerted by the fluid on the tagged surface from the weak residual
/// tested with a function that is `e_x` (resp. `e_y`) on the surface:
/// `F_d = -[(u_t, v_d) + b(u, u, v_d) + nu (grad u, grad v_d) - (p, div v_d)]`.
///
/// Returns the unscaled force `[F_x, F_y]`.
pub fn volume_forces(
    space: &TaylorHoodSpace,
    ops: &OperatorSet,
    nu: f64,
    u: &[f64],
    dudt: &[f64],
    p: &[f64],
    tag: i32,
) -> [f64; 2] {
    let mu = OperatorSet::block_apply(&ops.mass, dudt);
    let ku = OperatorSet::block_apply(&ops.stiffness, u);
    let pg = ops.pressure_gradient_pairing(p);
    let theta = ThetaParams::default();
    [0, 1].map(|d| {
        let v = surface_indicator(space, tag, d);
        let dot = |a: &[f64]| a.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        let conv = trilinear(space, TrilinearForm::B, u, u, &v, &theta);
        -(dot(&mu) + conv + nu * dot(&ku) - dot(&pg))
    })
}

/// P2 basis gradients from barycentric coordinates.
fn p2_gradients(l: [f64; 3], gl: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut g = [[0.0; 2]; 6];
    for i in 0..3 {
        for c in 0..2 {
            g[i][c] = (4.0 * l[i] - 1.0) * gl[i][c];
        }
    }
    for k in 0..3 {
        let (a, b) = (k, (k + 1) % 3);
        for c in 0..2 {
            g[3 + k][c] = 4.0 * (l[a] * gl[b][c] + l[b] * gl[a][c]);
        }
    }
    g
}

/// Same force by quadrature of the traction `-(nu grad u - p I) n` over the
/// tagged edges, `n` pointing out of the fluid.
pub fn boundary_forces(space: &TaylorHoodSpace, nu: f64, u: &[f64], p: &[f64], tag: i32) -> [f64; 2] {
    let mesh = space.mesh();
    let n2 = space.n_p2();
    let mut owner = vec![usize::MAX; mesh.n_edges()];
    for (t, es) in mesh.triangle_edges().iter().enumerate() {
        for &e in es {
            owner[e] = t;
        }
    }
    let mut f = [0.0; 2];
    for (e, edge) in mesh.boundary_edges().iter().enumerate() {
        if edge.tag != tag {
            continue;
        }
        let t = owner[mesh.boundary_edge_ids()[e]];
        let geo = space.geometry(t);
        let dofs = space.element_dofs(t);
        let n = space.normal(e);
        for ep in space.edge_quadrature(e) {
            let l = barycentric(&geo.vertices, ep.x);
            let g = p2_gradients(l, &geo.grad_lambda);
            let mut grad = [[0.0; 2]; 2];
            for i in 0..6 {
                for d in 0..2 {
                    grad[0][d] += u[dofs[i]] * g[i][d];
                    grad[1][d] += u[n2 + dofs[i]] * g[i][d];
                }
            }
            let pv = space.pressure_at(p, t, l);
            for c in 0..2 {
                let traction = nu * (grad[c][0] * n[0] + grad[c][1] * n[1]) - pv * n[c];
                f[c] -= ep.weight * traction;
            }
        }
    }
    f
}

fn barycentric(v: &[[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let l1 = ((x[0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (x[1] - v[0][1])) / det;
    let l2 = ((v[1][0] - v[0][0]) * (x[1] - v[0][1]) - (x[0] - v[0][0]) * (v[1][1] - v[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Pressure at a point of the mesh.
pub fn pressure_probe(space: &TaylorHoodSpace, p: &[f64], x: [f64; 2]) -> Result<f64, ExperimentError> {
    let (t, l) = space.mesh().locate(x).ok_or(ExperimentError::ProbeOutside(x))?;
    Ok(space.pressure_at(p, t, l))
}

/// `p(front) - p(back)`.
pub fn pressure_difference(space: &TaylorHoodSpace, p: &[f64], front: [f64; 2], back: [f64; 2]) -> Result<f64, ExperimentError> {
    Ok(pressure_probe(space, p, front)? - pressure_probe(space, p, back)?)
}

/// Scaled drag and lift from the volume residual, and the probe pressure drop.
#[allow(clippy::too_many_arguments)]
pub fn drag_lift_dp(
    space: &TaylorHoodSpace,
    ops: &OperatorSet,
    nu: f64,
    u: &[f64],
    dudt: &[f64],
    p: &[f64],
    tag: i32,
    probes: [[f64; 2]; 2],
) -> Result<Forces, ExperimentError> {
    let f = volume_forces(space, ops, nu, u, dudt, p, tag);
    Ok(Forces {
        drag: DRAG_SCALE * f[0],
        lift: DRAG_SCALE * f[1],
        pressure_drop: pressure_difference(space, p, probes[0], probes[1])?,
    })
}
