//! Saddle-point systems, reusable sparse LU factorizations and the smallest
//! mixed Dirichlet-Neumann eigenvalue.

mod eigen;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rayon::prelude::*;
use thiserror::Error;

use crate::assembly::{CsrMatrix, OperatorSet};
use crate::fespace::TaylorHoodSpace;

pub use eigen::{smallest_mixed_eigenvalue, EigenResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("singular system: {0}")]
    Singular(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("solution contains non-finite values")]
    NonFinite,
    #[error("eigen-iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("factorization backend failed: {0}")]
    Backend(String),
    #[error("factorization does not belong to this matrix")]
    StaleFactorization,
}

#[derive(Debug, Default)]
struct Counters {
    factorizations: AtomicUsize,
    solves: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CounterSnapshot {
    pub factorizations: usize,
    pub solves: usize,
}

impl std::ops::Sub for CounterSnapshot {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            factorizations: self.factorizations - rhs.factorizations,
            solves: self.solves - rhs.solves,
        }
    }
}

/// Hash of dimensions, sparsity pattern and value bits.
pub fn fingerprint(a: &CsrMatrix) -> u64 {
    let mut h = DefaultHasher::new();
    a.nrows().hash(&mut h);
    a.ncols().hash(&mut h);
    a.indptr().hash(&mut h);
    a.indices().hash(&mut h);
    for v in a.data() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn pattern_hash(a: &CsrMatrix) -> u64 {
    let mut h = DefaultHasher::new();
    a.nrows().hash(&mut h);
    a.indptr().hash(&mut h);
    a.indices().hash(&mut h);
    h.finish()
}

/// Direct sparse solver with factorization and solve counters.
///
/// The symbolic analysis is cached and reused while the sparsity pattern stays
/// the same; every call to [`DirectSolver::factorize`] performs one numeric
/// factorization.
#[derive(Debug, Default)]
pub struct DirectSolver {
    counters: Arc<Counters>,
    symbolic: Mutex<Option<(u64, SymbolicLu<usize>)>>,
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn counters(&self) -> CounterSnapshot {
        CounterSnapshot {
            factorizations: self.counters.factorizations.load(Ordering::SeqCst),
            solves: self.counters.solves.load(Ordering::SeqCst),
        }
    }

    pub fn factorize(&self, a: &CsrMatrix) -> Result<Factorization, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        let triplets: Vec<Triplet<usize, usize, f64>> =
            a.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| SolveError::Backend(format!("{e:?}")))?;
        let key = pattern_hash(a);
        let symbolic = {
            let mut cache = self.symbolic.lock().unwrap();
            match cache.as_ref() {
                Some((k, s)) if *k == key => s.clone(),
                _ => {
                    let s = SymbolicLu::try_new(mat.symbolic())
                        .map_err(|e| SolveError::Backend(format!("{e:?}")))?;
                    *cache = Some((key, s.clone()));
                    s
                }
            }
        };
        let lu = Lu::try_new_with_symbolic(symbolic, mat.as_ref())
            .map_err(|e| SolveError::Singular(format!("LU breakdown: {e:?}")))?;
        let f = Factorization {
            lu,
            n,
            fingerprint: fingerprint(a),
            counters: self.counters.clone(),
        };
        f.probe(a)?;
        self.counters.factorizations.fetch_add(1, Ordering::SeqCst);
        Ok(f)
    }
}

/// Reusable LU factorization of one matrix.
#[derive(Debug)]
pub struct Factorization {
    lu: Lu<usize, f64>,
    n: usize,
    fingerprint: u64,
    counters: Arc<Counters>,
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// True when `a` is bit-identical to the factorized matrix.
    pub fn matches(&self, a: &CsrMatrix) -> bool {
        fingerprint(a) == self.fingerprint
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves `A x = A z` for a fixed `z` and rejects the factorization when
    /// `z` is not recovered: pivots that are zero up to rounding leave the
    /// null-space component undetermined.
    fn probe(&self, a: &CsrMatrix) -> Result<(), SolveError> {
        let z: Vec<f64> = (0..self.n)
            .map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0)
            .collect();
        let x = self.raw_solve(&a.matvec(&z));
        let err = x
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !err.is_finite() || err > 1e-3 * norm {
            return Err(SolveError::Singular(format!(
                "round trip A^-1 (A z) misses z by {:.3e} (relative); check for an unconstrained pressure mode",
                err / norm
            )));
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        if b.len() != self.n {
            return Err(SolveError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let x = self.raw_solve(b);
        self.counters.solves.fetch_add(1, Ordering::SeqCst);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::NonFinite);
        }
        Ok(x)
    }

    /// Solves every column against the shared factorization (in parallel).
    pub fn solve_multi(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, SolveError> {
        for b in rhs {
            if b.len() != self.n {
                return Err(SolveError::DimensionMismatch {
                    expected: self.n,
                    got: b.len(),
                });
            }
        }
        rhs.par_iter().map(|b| self.solve(b)).collect()
    }
}

/// Block system `[[A, B^T], [B, 0]]` (plus an optional mean-pressure row) with
/// Dirichlet rows of `A` replaced by identity rows.
///
/// Unknown layout: `[ux, uy, p, (lagrange multiplier)]`. `B = -(q, div u)`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    matrix: CsrMatrix,
    n_velocity: usize,
    n_pressure: usize,
    mean_constraint: bool,
    constrained: Vec<usize>,
}

impl SaddleSystem {
    /// `velocity_block` is the scalar P2 block shared by both components.
    pub fn assemble(
        space: &TaylorHoodSpace,
        ops: &OperatorSet,
        velocity_block: &CsrMatrix,
        mean_constraint: bool,
    ) -> Self {
        let n2 = space.n_p2();
        let nu = 2 * n2;
        let np = space.n_pressure();
        let dim = nu + np + usize::from(mean_constraint);
        let mut t = Vec::with_capacity(2 * velocity_block.nnz() + 4 * ops.div_x.nnz() + 2 * np);
        for (i, k, v) in velocity_block.triplets() {
            if !space.is_dirichlet(i) {
                t.push((i, k, v));
                t.push((n2 + i, n2 + k, v));
            }
        }
        for &i in space.dirichlet_scalar_dofs() {
            t.push((i, i, 1.0));
            t.push((n2 + i, n2 + i, 1.0));
        }
        for (c, div) in [&ops.div_x, &ops.div_y].into_iter().enumerate() {
            for (m, k, v) in div.triplets() {
                if !space.is_dirichlet(k) {
                    t.push((c * n2 + k, nu + m, -v));
                }
                t.push((nu + m, c * n2 + k, -v));
            }
        }
        if mean_constraint {
            for (m, &w) in ops.pressure_mean.iter().enumerate() {
                t.push((nu + np, nu + m, w));
                t.push((nu + m, nu + np, w));
            }
        }
        Self {
            matrix: CsrMatrix::from_triplets(dim, dim, &t),
            n_velocity: nu,
            n_pressure: np,
            mean_constraint,
            constrained: space.constrained_velocity_dofs(),
        }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_velocity(&self) -> usize {
        self.n_velocity
    }

    pub fn n_pressure(&self) -> usize {
        self.n_pressure
    }

    pub fn has_mean_constraint(&self) -> bool {
        self.mean_constraint
    }

    /// Velocity dofs whose rows are identity rows.
    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    /// Full right-hand side from a momentum load vector and Dirichlet values
    /// (`dirichlet[k]` belongs to `constrained()[k]`).
    pub fn rhs(&self, momentum: &[f64], dirichlet: &[f64]) -> Vec<f64> {
        assert_eq!(momentum.len(), self.n_velocity);
        assert_eq!(dirichlet.len(), self.constrained.len());
        let mut b = vec![0.0; self.dim()];
        b[..self.n_velocity].copy_from_slice(momentum);
        for (&i, &g) in self.constrained.iter().zip(dirichlet) {
            b[i] = g;
        }
        b
    }

    /// Splits a solution into velocity and pressure.
    pub fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (
            x[..self.n_velocity].to_vec(),
            x[self.n_velocity..self.n_velocity + self.n_pressure].to_vec(),
        )
    }

    /// `||A x - b|| / ||b||`.
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let r: f64 = ax.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum();
        let nb: f64 = b.iter().map(|v| v * v).sum();
        (r / nb.max(f64::MIN_POSITIVE)).sqrt()
    }
}
