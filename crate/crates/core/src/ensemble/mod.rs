//! Ensemble time steppers: every member shares one coefficient matrix per step
//! and differs only in its right-hand side.

pub mod cfl;
pub mod classical;
mod config;
pub mod energy;
pub mod output;
pub mod stability;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::assembly::{
    add_b1_matrix, add_b2_matrix, assemble_core, b1_action, b2_action, b3_action, p2_pattern, rhs_forcing,
    CsrMatrix, OperatorSet,
};
use crate::fespace::{FEFunction, FieldKind, TaylorHoodSpace};
use crate::linsolve::{smallest_mixed_eigenvalue, CounterSnapshot, DirectSolver, SaddleSystem, SolveError};

pub use cfl::{CflCondition, FluctuationMeasures, MarginParams};
pub use config::{Algorithm, CflPolicy, EnsembleConfig, ExplicitForm};
pub use stability::{
    check_baseline_restriction, compute_sigma, select_gamma, stability_g, BaselineCheck, GammaSelection,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),
    #[error("stability function denominator {denominator} is not positive (gamma = {gamma}, ratio = {x})")]
    NonPositiveDenominator { gamma: f64, x: f64, denominator: f64 },
    #[error("{0} is defined for Dirichlet boundaries only; the mesh has an open boundary")]
    OpenBoundaryNotAllowed(Algorithm),
    #[error("open-boundary CFL condition needs a positive mixed eigenvalue lambda1")]
    MissingEigenvalue,
    #[error("timestep {dt:.3e} fell below the floor {floor:.3e} at t = {t} (worst margin {worst:.3e})")]
    TimestepUnderflow { t: f64, dt: f64, floor: f64, worst: f64 },
    #[error("non-finite value in member {member} at step {step}")]
    NonFinite { step: usize, member: usize },
    #[error("initial data: {0}")]
    InitialData(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Body force `f(x, t)`.
pub type Forcing = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;
/// Dirichlet data `g(x, t, tag)` on the Dirichlet boundary.
pub type DirichletData = Arc<dyn Fn([f64; 2], f64, i32) -> [f64; 2] + Send + Sync>;

/// Member-specific data; absent entries mean zero.
#[derive(Clone, Default)]
pub struct MemberData {
    pub forcing: Option<Forcing>,
    pub dirichlet: Option<DirichletData>,
}

impl fmt::Debug for MemberData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MemberData")
            .field("forcing", &self.forcing.is_some())
            .field("dirichlet", &self.dirichlet.is_some())
            .finish()
    }
}

/// `a x + b y`.
pub(crate) fn combine(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
}

pub fn mean_field(fields: &[Vec<f64>]) -> Vec<f64> {
    let mut m = vec![0.0; fields[0].len()];
    for f in fields {
        for (a, b) in m.iter_mut().zip(f) {
            *a += b;
        }
    }
    let inv = 1.0 / fields.len() as f64;
    m.iter_mut().for_each(|v| *v *= inv);
    m
}

pub fn fluctuations(fields: &[Vec<f64>], mean: &[f64]) -> Vec<Vec<f64>> {
    fields.iter().map(|f| combine(1.0, f, -1.0, mean)).collect()
}

/// Smallest Dirichlet tag touching each scalar dof (0 for interior and open dofs).
pub fn dirichlet_dof_tags(space: &TaylorHoodSpace) -> Vec<i32> {
    let mut tags = vec![0; space.n_p2()];
    for (e, be) in space.mesh().boundary_edges().iter().enumerate() {
        if space.partition().is_open(e) {
            continue;
        }
        for d in space.boundary_dofs(e) {
            if tags[d] == 0 || be.tag < tags[d] {
                tags[d] = be.tag;
            }
        }
    }
    tags
}

/// Dirichlet values in the order of [`SaddleSystem::constrained`].
pub fn dirichlet_values(
    space: &TaylorHoodSpace,
    constrained: &[usize],
    tags: &[i32],
    data: Option<&DirichletData>,
    t: f64,
) -> Vec<f64> {
    let n2 = space.n_p2();
    match data {
        None => vec![0.0; constrained.len()],
        Some(g) => constrained
            .iter()
            .map(|&i| {
                let s = i % n2;
                g(space.dof_coords()[s], t, tags[s])[i / n2]
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub t: f64,
    pub dt: f64,
    /// Number of accepted steps.
    pub step: usize,
    pub u: Vec<Vec<f64>>,
    /// Velocities one level back; needed by the BDF2 schemes.
    pub u_prev: Option<Vec<Vec<f64>>>,
    pub p: Vec<Vec<f64>>,
}

impl EnsembleState {
    pub fn members(&self) -> usize {
        self.u.len()
    }

    pub fn mean(&self) -> Vec<f64> {
        mean_field(&self.u)
    }

    pub fn fluctuations(&self) -> Vec<Vec<f64>> {
        fluctuations(&self.u, &self.mean())
    }

    /// `E^n = 2 u^n - u^{n-1}` when history is available.
    pub fn extrapolated(&self) -> Option<Vec<Vec<f64>>> {
        self.u_prev
            .as_ref()
            .map(|prev| self.u.iter().zip(prev).map(|(u, v)| combine(2.0, u, -1.0, v)).collect())
    }
}

/// Initial velocities at `t0` and optional history at `t0 - dt0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub t0: f64,
    pub u0: Vec<Vec<f64>>,
    pub u_prev: Option<Vec<Vec<f64>>>,
}

impl InitialData {
    pub fn new(u0: Vec<Vec<f64>>) -> Self {
        Self { t0: 0.0, u0, u_prev: None }
    }

    pub fn at_rest(space: &TaylorHoodSpace, members: usize) -> Self {
        Self::new(vec![vec![0.0; space.n_velocity()]; members])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalvingEvent {
    /// Accepted steps before the halving.
    pub step: usize,
    pub t: f64,
    pub old_dt: f64,
    pub new_dt: f64,
    /// Largest scaled margin that triggered the halving.
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberReport {
    /// Energy before the step, with the step's timestep.
    pub energy_before: f64,
    pub energy: f64,
    /// Boundary dissipation `F_{n+1}`.
    pub flux: f64,
    /// `dt (nu_j / L) |w^n|^2_{Gamma_N}` for the relaxed schemes, else 0.
    pub ledger_bound: f64,
    /// Margins checked before the step.
    pub margins: Vec<(CflCondition, f64)>,
}

impl MemberReport {
    /// `Ener^{n+1} - Ener^n + dt F - bound`; nonpositive when the per-step
    /// energy inequality holds.
    pub fn ledger_excess(&self, dt: f64) -> f64 {
        self.energy - self.energy_before + dt * self.flux - self.ledger_bound
    }

    pub fn max_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.1).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Accepted steps after this one.
    pub step: usize,
    /// Time after the step.
    pub t: f64,
    pub dt: f64,
    /// Scheme used (the first-order partner for a BDF2 startup step).
    pub scheme: Algorithm,
    pub members: Vec<MemberReport>,
    /// Cumulative solver counters.
    pub counters: CounterSnapshot,
    /// Halvings performed right before this step.
    pub halvings: Vec<HalvingEvent>,
    pub matrix_fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub reports: Vec<StepReport>,
    pub halvings: Vec<HalvingEvent>,
    pub counters: CounterSnapshot,
    pub steps: usize,
    pub final_t: f64,
    pub final_dt: f64,
}

/// Ensemble simulation: configuration, operators, solver and current state.
pub struct Ensemble {
    space: Arc<TaylorHoodSpace>,
    ops: OperatorSet,
    pattern: CsrMatrix,
    config: EnsembleConfig,
    sigma: f64,
    lambda1: Option<f64>,
    h: f64,
    diam: f64,
    members: Vec<MemberData>,
    tags: Vec<i32>,
    mean_constraint: bool,
    solver: DirectSolver,
    state: EnsembleState,
    warnings: Vec<String>,
}

impl Ensemble {
    /// `members` may be empty (zero forcing and Dirichlet data for everyone).
    pub fn new(
        space: Arc<TaylorHoodSpace>,
        config: EnsembleConfig,
        mut members: Vec<MemberData>,
        initial: InitialData,
    ) -> Result<Self, EnsembleError> {
        config.validate()?;
        config.validate_space(&space)?;
        let j = config.members();
        if members.is_empty() {
            members = vec![MemberData::default(); j];
        }
        if members.len() != j {
            return Err(EnsembleError::InvalidConfig(format!(
                "{} member data entries for {j} viscosities",
                members.len()
            )));
        }
        let nv = space.n_velocity();
        let check = |fields: &[Vec<f64>], what: &str| -> Result<(), EnsembleError> {
            if fields.len() != j || fields.iter().any(|f| f.len() != nv) {
                return Err(EnsembleError::InitialData(format!(
                    "{what} must hold {j} velocity vectors of length {nv}"
                )));
            }
            Ok(())
        };
        check(&initial.u0, "u0")?;
        if let Some(prev) = &initial.u_prev {
            check(prev, "history")?;
        }
        let ops = assemble_core(&space);
        let pattern = p2_pattern(&space);
        let metrics = space.mesh().metrics();
        let needs_lambda = [config.algorithm, config.algorithm.first_order_partner()]
            .iter()
            .flat_map(|a| CflCondition::active(*a))
            .any(|c| c.needs_lambda1());
        let lambda1 = match config.lambda1 {
            Some(l) => Some(l),
            None if needs_lambda => Some(smallest_mixed_eigenvalue(&space, &ops)?.lambda).filter(|l| *l > 0.0),
            None => None,
        };
        let mut warnings = Vec::new();
        if config.algorithm == Algorithm::Baseline {
            let c = check_baseline_restriction(&config.nu);
            if !c.feasible {
                warnings.push(format!(
                    "baseline viscosity restriction violated: max |nu_j - nu_mean|/nu_mean = {:.4} needs mu = {:.4} >= 1",
                    c.max_relative_deviation, c.required_mu
                ));
            }
        }
        if config.algorithm.is_second_order() {
            let s = config.sigma_or_limit();
            if !(s > 0.5 && s < 1.0) {
                warnings.push(format!("sigma = {s:.6} lies outside (1/2, 1); no stability guarantee"));
            }
        }
        let state = EnsembleState {
            t: initial.t0,
            dt: config.dt0,
            step: 0,
            p: vec![vec![0.0; space.n_pressure()]; j],
            u: initial.u0,
            u_prev: if config.algorithm.is_second_order() {
                initial.u_prev
            } else {
                None
            },
        };
        Ok(Self {
            tags: dirichlet_dof_tags(&space),
            mean_constraint: !space.partition().has_open(),
            sigma: config.sigma_or_limit(),
            ops,
            pattern,
            lambda1,
            h: metrics.h,
            diam: metrics.diam,
            members,
            solver: DirectSolver::new(),
            state,
            warnings,
            config,
            space,
        })
    }

    pub fn space(&self) -> &Arc<TaylorHoodSpace> {
        &self.space
    }

    pub fn operators(&self) -> &OperatorSet {
        &self.ops
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn state(&self) -> &EnsembleState {
        &self.state
    }

    pub fn counters(&self) -> CounterSnapshot {
        self.solver.counters()
    }

    pub fn lambda1(&self) -> Option<f64> {
        self.lambda1
    }

    /// `sigma` used in energies and margins (continuous extension at `gamma = 0`).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn velocity(&self, j: usize) -> FEFunction {
        FEFunction::new(self.space.clone(), FieldKind::Velocity, self.state.u[j].clone()).expect("velocity length")
    }

    pub fn pressure(&self, j: usize) -> FEFunction {
        FEFunction::new(self.space.clone(), FieldKind::Pressure, self.state.p[j].clone()).expect("pressure length")
    }

    /// Scheme of the next step: BDF2 schemes without history start with their
    /// first-order partner.
    pub fn next_scheme(&self) -> Algorithm {
        let a = self.config.algorithm;
        if a.is_second_order() && self.state.u_prev.is_none() {
            a.first_order_partner()
        } else {
            a
        }
    }

    /// `u^n` for first-order schemes, `E^n` for BDF2 schemes.
    fn explicit_fields(&self, scheme: Algorithm) -> Vec<Vec<f64>> {
        if scheme.is_second_order() {
            self.state.extrapolated().expect("BDF2 step without history")
        } else {
            self.state.u.clone()
        }
    }

    fn l_for(&self, scheme: Algorithm) -> f64 {
        if scheme.uses_relaxation() {
            self.config.l
        } else {
            0.0
        }
    }

    /// Member-independent system for a given advecting mean and timestep.
    pub fn system_matrix(&self, scheme: Algorithm, mean: &[f64], dt: f64) -> SaddleSystem {
        let (mass_coef, conv_coef) = if scheme.is_second_order() {
            (1.5 / dt, 1.0 + self.config.gamma)
        } else {
            (1.0 / dt, 1.0)
        };
        let mut a = self.pattern.clone();
        a.add_scaled(mass_coef, &self.ops.mass);
        let l = self.l_for(scheme);
        if l != 0.0 {
            a.add_scaled(mass_coef * l, &self.ops.boundary_mass);
        }
        add_b1_matrix(&self.space, mean, conv_coef, &mut a);
        if scheme.implicit_backflow() {
            add_b2_matrix(&self.space, mean, &self.config.theta, conv_coef, &mut a);
        }
        a.add_scaled(self.config.implicit_viscosity(), &self.ops.stiffness);
        SaddleSystem::assemble(&self.space, &self.ops, &a, self.mean_constraint)
    }

    /// Matrix member `j` would assemble from its own view of the step
    /// (shared mean, shared timestep); identical for every member.
    pub fn member_system(&self, _j: usize) -> SaddleSystem {
        let scheme = self.next_scheme();
        let mean = mean_field(&self.explicit_fields(scheme));
        self.system_matrix(scheme, &mean, self.state.dt)
    }

    fn margin_params(&self, j: usize, dt: f64) -> MarginParams {
        MarginParams {
            dt,
            nu_j: self.config.nu[j],
            gamma: self.config.gamma,
            sigma: self.sigma,
            diam: self.diam,
            h: self.h,
            lambda1: self.lambda1,
            c_inverse: self.config.c_inverse,
        }
    }

    fn margins_with(
        &self,
        scheme: Algorithm,
        fluct: &[Vec<f64>],
        dt: f64,
    ) -> Result<Vec<Vec<(CflCondition, f64)>>, EnsembleError> {
        let conds = CflCondition::active(scheme);
        fluct
            .par_iter()
            .enumerate()
            .map(|(j, w)| {
                if conds.is_empty() {
                    return Ok(Vec::new());
                }
                let m = FluctuationMeasures::of(&self.space, w, &self.config.theta);
                let p = self.margin_params(j, dt);
                conds.iter().map(|&c| Ok((c, cfl::margin(c, &p, &m)?))).collect()
            })
            .collect()
    }

    /// Margins of the next step, per member, on the current explicit fields.
    pub fn margins(&self) -> Result<Vec<Vec<(CflCondition, f64)>>, EnsembleError> {
        let scheme = self.next_scheme();
        let e = self.explicit_fields(scheme);
        let fl = fluctuations(&e, &mean_field(&e));
        self.margins_with(scheme, &fl, self.state.dt)
    }

    fn energy_of(&self, scheme: Algorithm, j: usize, u: &[f64], u_prev: Option<&[f64]>, dt: f64) -> f64 {
        let l = self.l_for(scheme);
        if scheme.is_second_order() {
            let w = energy::SecondOrderWeights {
                dt,
                gamma: self.config.gamma,
                sigma: self.sigma,
                nu_j: self.config.nu[j],
                nu_tilde: self.config.nu_tilde(j),
                l,
            };
            energy::second_order_energy(&self.space, u, u_prev.expect("history"), &w)
        } else {
            energy::first_order_energy(&self.space, u, dt, self.config.implicit_viscosity(), l)
        }
    }

    /// Energy of member `j` in the current state, as defined for the next scheme.
    pub fn energy(&self, j: usize) -> f64 {
        let scheme = self.next_scheme();
        let prev = self.state.u_prev.as_ref().map(|p| p[j].as_slice());
        self.energy_of(scheme, j, &self.state.u[j], prev, self.state.dt)
    }

    fn explicit_advection(&self, scheme: Algorithm, w: &[f64], v: &[f64]) -> Vec<f64> {
        match scheme.explicit_form() {
            ExplicitForm::B1 => b1_action(&self.space, w, v),
            ExplicitForm::B1PlusB2 => {
                let mut r = b1_action(&self.space, w, v);
                let r2 = b2_action(&self.space, w, v, &self.config.theta);
                r.iter_mut().zip(&r2).for_each(|(a, b)| *a += b);
                r
            }
            ExplicitForm::B3 => b3_action(&self.space, w, v),
        }
    }

    fn member_momentum(
        &self,
        scheme: Algorithm,
        j: usize,
        mean: &[f64],
        fluct: &[f64],
        explicit: &[f64],
        dt: f64,
        t_new: f64,
    ) -> Vec<f64> {
        let u = &self.state.u[j];
        let l = self.l_for(scheme);
        let mut r = vec![0.0; self.space.n_velocity()];
        if scheme.is_second_order() {
            let prev = &self.state.u_prev.as_ref().expect("history")[j];
            let hist = combine(4.0, u, -1.0, prev);
            OperatorSet::block_apply_add(&self.ops.mass, 0.5 / dt, &hist, &mut r);
            if l != 0.0 {
                OperatorSet::block_apply_add(&self.ops.boundary_mass, 0.5 * l / dt, &hist, &mut r);
            }
            let gamma = self.config.gamma;
            if gamma != 0.0 {
                let mut s = b1_action(&self.space, mean, explicit);
                if scheme.implicit_backflow() {
                    let s2 = b2_action(&self.space, mean, explicit, &self.config.theta);
                    s.iter_mut().zip(&s2).for_each(|(a, b)| *a += b);
                }
                r.iter_mut().zip(&s).for_each(|(a, b)| *a += gamma * b);
            }
        } else {
            OperatorSet::block_apply_add(&self.ops.mass, 1.0 / dt, u, &mut r);
            if l != 0.0 {
                OperatorSet::block_apply_add(&self.ops.boundary_mass, l / dt, u, &mut r);
            }
        }
        let adv = self.explicit_advection(scheme, fluct, explicit);
        r.iter_mut().zip(&adv).for_each(|(a, b)| *a -= b);
        let dnu = self.config.implicit_viscosity() - self.config.nu[j];
        if dnu != 0.0 {
            OperatorSet::block_apply_add(&self.ops.stiffness, dnu, explicit, &mut r);
        }
        if let Some(f) = &self.members[j].forcing {
            let load = rhs_forcing(&self.space, |x| f(x, t_new));
            r.iter_mut().zip(&load).for_each(|(a, b)| *a += b);
        }
        r
    }

    /// One step with the current timestep: one factorization, `J` solves.
    pub fn step(&mut self) -> Result<StepReport, EnsembleError> {
        let scheme = self.next_scheme();
        let dt = self.state.dt;
        let t_new = self.state.t + dt;
        let explicit = self.explicit_fields(scheme);
        let mean = mean_field(&explicit);
        let fluct = fluctuations(&explicit, &mean);
        let margins = self.margins_with(scheme, &fluct, dt)?;
        let jn = self.config.members();
        let prev = self.state.u_prev.clone();
        let energy_before: Vec<f64> = (0..jn)
            .into_par_iter()
            .map(|j| {
                self.energy_of(scheme, j, &self.state.u[j], prev.as_ref().map(|p| p[j].as_slice()), dt)
            })
            .collect();

        let sys = self.system_matrix(scheme, &mean, dt);
        let lu = self.solver.factorize(sys.matrix())?;
        let rhs: Vec<Vec<f64>> = (0..jn)
            .into_par_iter()
            .map(|j| {
                let mom = self.member_momentum(scheme, j, &mean, &fluct[j], &explicit[j], dt, t_new);
                let g = dirichlet_values(
                    &self.space,
                    sys.constrained(),
                    &self.tags,
                    self.members[j].dirichlet.as_ref(),
                    t_new,
                );
                sys.rhs(&mom, &g)
            })
            .collect();
        let sols = lu.solve_multi(&rhs)?;
        let mut new_u = Vec::with_capacity(jn);
        let mut new_p = Vec::with_capacity(jn);
        for (j, x) in sols.iter().enumerate() {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(EnsembleError::NonFinite {
                    step: self.state.step + 1,
                    member: j,
                });
            }
            let (u, p) = sys.split(x);
            new_u.push(u);
            new_p.push(p);
        }

        let members: Vec<MemberReport> = (0..jn)
            .into_par_iter()
            .map(|j| {
                let inputs = energy::FluxInputs {
                    mean: &mean,
                    fluctuation: &fluct[j],
                    explicit: &explicit[j],
                    new: &new_u[j],
                    gamma: self.config.gamma,
                };
                MemberReport {
                    energy_before: energy_before[j],
                    energy: self.energy_of(scheme, j, &new_u[j], Some(&self.state.u[j]), dt),
                    flux: energy::boundary_dissipation(&self.space, scheme, &inputs, &self.config.theta),
                    ledger_bound: energy::ledger_bound(
                        &self.space,
                        scheme,
                        &explicit[j],
                        dt,
                        self.config.nu[j],
                        self.l_for(scheme),
                    ),
                    margins: margins[j].clone(),
                }
            })
            .collect();

        let old = std::mem::replace(&mut self.state.u, new_u);
        self.state.u_prev = Some(old);
        self.state.p = new_p;
        self.state.t = t_new;
        self.state.step += 1;
        Ok(StepReport {
            step: self.state.step,
            t: t_new,
            dt,
            scheme,
            members,
            counters: self.solver.counters(),
            halvings: Vec::new(),
            matrix_fingerprint: lu.fingerprint(),
        })
    }

    /// Halves the timestep; BDF2 history is moved onto the new grid by linear
    /// interpolation.
    fn halve(&mut self, worst: f64) -> Result<HalvingEvent, EnsembleError> {
        let old_dt = self.state.dt;
        let new_dt = 0.5 * old_dt;
        if new_dt < self.config.policy.dt_floor {
            return Err(EnsembleError::TimestepUnderflow {
                t: self.state.t,
                dt: new_dt,
                floor: self.config.policy.dt_floor,
                worst,
            });
        }
        if let Some(prev) = self.state.u_prev.as_mut() {
            let r = new_dt / old_dt;
            for (p, u) in prev.iter_mut().zip(&self.state.u) {
                for (a, b) in p.iter_mut().zip(u) {
                    *a = b - r * (b - *a);
                }
            }
        }
        self.state.dt = new_dt;
        Ok(HalvingEvent {
            step: self.state.step,
            t: self.state.t,
            old_dt,
            new_dt,
            worst_margin: worst,
        })
    }

    /// Applies the predictive timestep policy, then takes one step.
    pub fn checked_step(&mut self) -> Result<StepReport, EnsembleError> {
        let mut halvings = Vec::new();
        if self.config.policy.halve_on_violation {
            loop {
                let worst = self
                    .margins()?
                    .iter()
                    .flatten()
                    .map(|m| m.1 * self.config.policy.safety)
                    .fold(0.0, f64::max);
                if worst <= 1.0 {
                    break;
                }
                halvings.push(self.halve(worst)?);
            }
        }
        let mut report = self.step()?;
        report.halvings = halvings;
        Ok(report)
    }

    /// Advances to the final time, calling `observer` after every step.
    pub fn run_with(&mut self, mut observer: impl FnMut(&Ensemble, &StepReport)) -> Result<RunSummary, EnsembleError> {
        let mut reports = Vec::new();
        while self.state.t < self.config.t_final - 1e-9 * self.state.dt {
            let r = self.checked_step()?;
            observer(self, &r);
            reports.push(r);
        }
        let halvings = reports.iter().flat_map(|r| r.halvings.iter().copied()).collect();
        Ok(RunSummary {
            halvings,
            counters: self.solver.counters(),
            steps: reports.len(),
            final_t: self.state.t,
            final_dt: self.state.dt,
            reports,
        })
    }

    pub fn run(&mut self) -> Result<RunSummary, EnsembleError> {
        self.run_with(|_, _| {})
    }
}

/// Discrete Leray projection: the discretely divergence-free field closest
/// to `u` in L2, keeping the Dirichlet values of `u`.
pub fn project_divergence_free(space: &TaylorHoodSpace, ops: &OperatorSet, u: &[f64]) -> Result<Vec<f64>, SolveError> {
    let mut a = p2_pattern(space);
    a.add_scaled(1.0, &ops.mass);
    let sys = SaddleSystem::assemble(space, ops, &a, !space.partition().has_open());
    let mom = OperatorSet::block_apply(&ops.mass, u);
    let g: Vec<f64> = sys.constrained().iter().map(|&i| u[i]).collect();
    let lu = DirectSolver::new().factorize(sys.matrix())?;
    Ok(sys.split(&lu.solve(&sys.rhs(&mom, &g))?).0)
}

/// Interpolates `f` and projects it onto discretely divergence-free fields.
pub fn divergence_free_interpolant(
    space: &Arc<TaylorHoodSpace>,
    ops: &OperatorSet,
    f: impl Fn([f64; 2]) -> [f64; 2],
) -> Result<Vec<f64>, SolveError> {
    let u = FEFunction::interpolate_velocity(space, f);
    project_divergence_free(space, ops, u.values())
}

impl fmt::Debug for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ensemble")
            .field("algorithm", &self.config.algorithm)
            .field("members", &self.config.members())
            .field("t", &self.state.t)
            .field("dt", &self.state.dt)
            .field("step", &self.state.step)
            .finish()
    }
}

#[cfg(test)]
mod tests;
