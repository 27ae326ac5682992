use crate::assembly::{CsrMatrix, OperatorSet};
use crate::fespace::TaylorHoodSpace;

use super::{DirectSolver, SolveError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    pub iterations: usize,
    /// `||K x - lambda M x|| / ||K x||` at exit.
    pub residual: f64,
}

const MAX_ITERATIONS: usize = 5000;

fn restrict(a: &CsrMatrix, free: &[usize], map: &[usize]) -> CsrMatrix {
    let mut t = Vec::new();
    for (r_new, &r) in free.iter().enumerate() {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if map[c] != usize::MAX {
                t.push((r_new, map[c], v));
            }
        }
    }
    CsrMatrix::from_triplets(free.len(), free.len(), &t)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest `lambda` with `K x = lambda M x` on scalar P2 functions vanishing
/// on the Dirichlet boundary (natural conditions on the open boundary), by
/// inverse iteration with shift zero. Without a Dirichlet boundary the answer
/// is zero (constants).
pub fn smallest_mixed_eigenvalue(space: &TaylorHoodSpace, ops: &OperatorSet) -> Result<EigenResult, SolveError> {
    if space.dirichlet_scalar_dofs().is_empty() {
        return Ok(EigenResult {
            lambda: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let n2 = space.n_p2();
    let free: Vec<usize> = (0..n2).filter(|&i| !space.is_dirichlet(i)).collect();
    let mut map = vec![usize::MAX; n2];
    for (k, &i) in free.iter().enumerate() {
        map[i] = k;
    }
    let k = restrict(&ops.stiffness, &free, &map);
    let m = restrict(&ops.mass, &free, &map);
    let solver = DirectSolver::new();
    let lu = solver.factorize(&k)?;

    let mut x = vec![1.0; free.len()];
    let mut lambda_old = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let y = lu.solve(&m.matvec(&x))?;
        let my = m.matvec(&y);
        let norm = dot(&y, &my).sqrt();
        x = y.iter().map(|v| v / norm).collect();
        let kx = k.matvec(&x);
        let mx: Vec<f64> = my.iter().map(|v| v / norm).collect();
        let lambda = dot(&x, &kx);
        let r: f64 = kx
            .iter()
            .zip(&mx)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        residual = r / dot(&kx, &kx).sqrt();
        let stagnation = (lambda - lambda_old).abs() / lambda.abs();
        lambda_old = lambda;
        if stagnation <= 1e-10 && residual <= 1e-8 {
            return Ok(EigenResult {
                lambda,
                iterations: it,
                residual,
            });
        }
    }
    Err(SolveError::NotConverged {
        iterations: MAX_ITERATIONS,
        residual,
    })
}
