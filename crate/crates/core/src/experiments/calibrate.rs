//! Inverse-inequality constant `||grad v|| <= C h^-1 ||v||` on the P2 space.

use faer::{Mat, Side};

use crate::fespace::TaylorHoodSpace;

use super::ExperimentError;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    /// `h sqrt(max_T lambda_T)` with the global mesh size `h`.
    pub c_inverse: f64,
    pub h: f64,
    /// Largest element-wise generalized eigenvalue of `(K_T, M_T)`.
    pub lambda_max: f64,
    pub worst_element: usize,
    /// `max_T h_T sqrt(lambda_T)`, a shape-regularity measure.
    pub local_ratio_max: f64,
}

/// Scalar P2 element stiffness and mass matrices.
pub fn element_matrices(space: &TaylorHoodSpace, t: usize) -> (Mat<f64>, Mat<f64>) {
    let mut k = Mat::<f64>::zeros(6, 6);
    let mut m = Mat::<f64>::zeros(6, 6);
    for qp in space.element_quadrature(t) {
        for i in 0..6 {
            for j in 0..6 {
                k[(i, j)] += qp.weight * (qp.grad[i][0] * qp.grad[j][0] + qp.grad[i][1] * qp.grad[j][1]);
                m[(i, j)] += qp.weight * qp.phi[i] * qp.phi[j];
            }
        }
    }
    (k, m)
}

/// Largest `lambda` with `K x = lambda M x` for symmetric `K` and SPD `M`.
pub fn generalized_lambda_max(k: &Mat<f64>, m: &Mat<f64>) -> Result<f64, ExperimentError> {
    let n = m.nrows();
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| ExperimentError::Eigen(format!("{e:?}")))?;
    let s = eig.S().column_vector();
    let q = eig.U();
    let mut scale = vec![0.0; n];
    for i in 0..n {
        if !(s[i] > 0.0) {
            return Err(ExperimentError::Eigen(format!("mass matrix not positive definite (eigenvalue {})", s[i])));
        }
        scale[i] = 1.0 / s[i].sqrt();
    }
    let qkq = q.transpose() * k * q;
    let b = Mat::<f64>::from_fn(n, n, |i, j| scale[i] * qkq[(i, j)] * scale[j]);
    let vals = b
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| ExperimentError::Eigen(format!("{e:?}")))?;
    Ok(*vals.last().expect("nonempty"))
}

fn element_h(space: &TaylorHoodSpace, t: usize) -> f64 {
    let v = space.geometry(t).vertices;
    (0..3)
        .map(|k| {
            let (a, b) = (v[k], v[(k + 1) % 3]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max)
}

pub fn calibrate_inverse_constant(space: &TaylorHoodSpace) -> Result<CalibrationReport, ExperimentError> {
    let h = space.mesh().metrics().h;
    let mut lambda_max = 0.0;
    let mut worst_element = 0;
    let mut local_ratio_max = 0.0f64;
    for t in 0..space.n_elements() {
        let (k, m) = element_matrices(space, t);
        let lam = generalized_lambda_max(&k, &m)?;
        if lam > lambda_max {
            lambda_max = lam;
            worst_element = t;
        }
        local_ratio_max = local_ratio_max.max(element_h(space, t) * lam.sqrt());
    }
    Ok(CalibrationReport {
        c_inverse: h * lambda_max.sqrt(),
        h,
        lambda_max,
        worst_element,
        local_ratio_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::build_space;
    use crate::mesh::{generate_channel, BoundaryPartition};
    use crate::testutil::square_space;
    use std::sync::Arc;

    /// Power iteration on `M^-1 K` with a hand-written Gaussian elimination.
    fn power_lambda(k: &Mat<f64>, m: &Mat<f64>) -> f64 {
        let n = k.nrows();
        let solve = |b: &[f64]| -> Vec<f64> {
            let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).chain([b[i]]).collect()).collect();
            for c in 0..n {
                let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
                a.swap(c, piv);
                for r in c + 1..n {
                    let f = a[r][c] / a[c][c];
                    for j in c..=n {
                        a[r][j] -= f * a[c][j];
                    }
                }
            }
            let mut x = vec![0.0; n];
            for r in (0..n).rev() {
                let s: f64 = (r + 1..n).map(|j| a[r][j] * x[j]).sum();
                x[r] = (a[r][n] - s) / a[r][r];
            }
            x
        };
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let mut lam = 0.0;
        for _ in 0..2000 {
            let kx: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)] * x[j]).sum()).collect();
            let y = solve(&kx);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            lam = norm / x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x = y.iter().map(|v| v / norm).collect();
        }
        lam
    }

    #[test]
    fn generalized_eigenvalue_matches_power_iteration() {
        let space = square_space(3, &[]);
        let (k, m) = element_matrices(&space, 4);
        let a = generalized_lambda_max(&k, &m).unwrap();
        let b = power_lambda(&k, &m);
        assert!((a - b).abs() < 1e-8 * a, "{a} {b}");
    }

    #[test]
    fn constant_is_scale_invariant() {
        let build = |s: f64| {
            let mesh = Arc::new(generate_channel(2.0 * s, s, 6, 3, None).unwrap());
            let part = BoundaryPartition::all_dirichlet(&mesh);
            build_space(mesh, part)
        };
        let a = calibrate_inverse_constant(&build(1.0)).unwrap();
        let b = calibrate_inverse_constant(&build(0.01)).unwrap();
        assert!((a.c_inverse - b.c_inverse).abs() < 1e-9 * a.c_inverse);
        assert!((b.lambda_max * 1e-4 - a.lambda_max).abs() < 1e-8 * a.lambda_max);
    }

    #[test]
    fn uniform_mesh_local_equals_global() {
        let space = square_space(4, &[]);
        let r = calibrate_inverse_constant(&space).unwrap();
        assert!((r.c_inverse - r.local_ratio_max).abs() < 1e-10 * r.c_inverse);
        assert!(r.c_inverse > 1.0 && r.c_inverse < 30.0, "{r:?}");
    }

    #[test]
    fn inequality_holds_for_global_fields() {
        // ||grad v||^2 <= (C/h)^2 ||v||^2 for random P2 scalar fields
        let space = square_space(4, &[]);
        let r = calibrate_inverse_constant(&space).unwrap();
        let v = crate::testutil::random_vector(space.n_p2(), 3);
        let (mut g, mut l2) = (0.0, 0.0);
        for t in 0..space.n_elements() {
            let (k, m) = element_matrices(&space, t);
            let d = space.element_dofs(t);
            for i in 0..6 {
                for j in 0..6 {
                    g += v[d[i]] * k[(i, j)] * v[d[j]];
                    l2 += v[d[i]] * m[(i, j)] * v[d[j]];
                }
            }
        }
        assert!(g <= (r.c_inverse / r.h).powi(2) * l2 * (1.0 + 1e-12));
    }
}
