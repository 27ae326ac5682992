//! Single-member linearly implicit Navier-Stokes steppers written directly
//! from the scheme definitions, without ensemble splitting.

use std::sync::Arc;

use crate::assembly::{assemble_core, convection_b1_matrix, p2_pattern, rhs_forcing, OperatorSet};
use crate::fespace::TaylorHoodSpace;
use crate::linsolve::{DirectSolver, SaddleSystem, SolveError};

use super::{combine, dirichlet_dof_tags, dirichlet_values, MemberData};

/// Backward Euler with lagged advection and BDF2 with extrapolated
/// advection, optionally stabilized by `gamma`:
/// `b1(E, u^{n+1} + gamma (u^{n+1} - E), v)`.
pub struct ClassicalStepper {
    space: Arc<TaylorHoodSpace>,
    ops: OperatorSet,
    nu: f64,
    gamma: f64,
    data: MemberData,
    tags: Vec<i32>,
    solver: DirectSolver,
    pub t: f64,
    pub dt: f64,
    pub u: Vec<f64>,
    pub u_prev: Option<Vec<f64>>,
    pub p: Vec<f64>,
}

impl ClassicalStepper {
    pub fn new(space: Arc<TaylorHoodSpace>, nu: f64, dt: f64, u0: Vec<f64>, data: MemberData) -> Self {
        let ops = assemble_core(&space);
        Self {
            tags: dirichlet_dof_tags(&space),
            p: vec![0.0; space.n_pressure()],
            ops,
            nu,
            gamma: 0.0,
            data,
            solver: DirectSolver::new(),
            t: 0.0,
            dt,
            u: u0,
            u_prev: None,
            space,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    fn solve(&mut self, a: &crate::assembly::CsrMatrix, mut mom: Vec<f64>) -> Result<(), SolveError> {
        let t_new = self.t + self.dt;
        if let Some(f) = &self.data.forcing {
            let load = rhs_forcing(&self.space, |x| f(x, t_new));
            mom.iter_mut().zip(&load).for_each(|(a, b)| *a += b);
        }
        let sys = SaddleSystem::assemble(&self.space, &self.ops, a, !self.space.partition().has_open());
        let g = dirichlet_values(&self.space, sys.constrained(), &self.tags, self.data.dirichlet.as_ref(), t_new);
        let x = self.solver.factorize(sys.matrix())?.solve(&sys.rhs(&mom, &g))?;
        let (u, p) = sys.split(&x);
        self.u_prev = Some(std::mem::replace(&mut self.u, u));
        self.p = p;
        self.t = t_new;
        Ok(())
    }

    /// `(u^{n+1} - u^n)/dt + b1(u^n, u^{n+1}, v) + nu (grad u^{n+1}, grad v) - (p, div v) = f`.
    pub fn step_backward_euler(&mut self) -> Result<(), SolveError> {
        let mut a = convection_b1_matrix(&self.space, &p2_pattern(&self.space), &self.u);
        a.add_scaled(1.0 / self.dt, &self.ops.mass);
        a.add_scaled(self.nu, &self.ops.stiffness);
        let mom = OperatorSet::block_apply(&self.ops.mass, &self.u);
        let mom = mom.iter().map(|v| v / self.dt).collect();
        self.solve(&a, mom)
    }

    /// `(3u^{n+1} - 4u^n + u^{n-1})/(2dt) + b1(E, u^{n+1} + gamma (u^{n+1} - E), v)
    ///  + nu (grad u^{n+1}, grad v) - (p, div v) = f`. Falls back to backward
    /// Euler without history.
    pub fn step_bdf2(&mut self) -> Result<(), SolveError> {
        let Some(prev) = self.u_prev.clone() else {
            return self.step_backward_euler();
        };
        let e = combine(2.0, &self.u, -1.0, &prev);
        let c = convection_b1_matrix(&self.space, &p2_pattern(&self.space), &e);
        let mut a = c.clone();
        a.scale(1.0 + self.gamma);
        a.add_scaled(1.5 / self.dt, &self.ops.mass);
        a.add_scaled(self.nu, &self.ops.stiffness);
        let hist = combine(4.0, &self.u, -1.0, &prev);
        let mut mom: Vec<f64> = OperatorSet::block_apply(&self.ops.mass, &hist)
            .iter()
            .map(|v| 0.5 * v / self.dt)
            .collect();
        if self.gamma != 0.0 {
            OperatorSet::block_apply_add(&c, self.gamma, &e, &mut mom);
        }
        self.solve(&a, mom)
    }
}
