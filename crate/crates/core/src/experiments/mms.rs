//! Manufactured solutions and the temporal convergence study.

use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::ensemble::{
    Algorithm, CflPolicy, DirichletData, Ensemble, EnsembleConfig, Forcing, InitialData, MemberData,
};
use crate::fespace::norms::{pressure_l2_error, velocity_l2_error};
use crate::fespace::{build_space, FEFunction, TaylorHoodSpace};
use crate::mesh::{generate_unit_square, BoundaryPartition};

use super::ExperimentError;

/// `u = (x^2 - y sin t, -2xy + x cos t)`.
pub fn base_velocity(x: [f64; 2], t: f64) -> [f64; 2] {
    [x[0] * x[0] - x[1] * t.sin(), -2.0 * x[0] * x[1] + x[0] * t.cos()]
}

/// `p = (x + y - 1) sin t`.
pub fn base_pressure(x: [f64; 2], t: f64) -> f64 {
    (x[0] + x[1] - 1.0) * t.sin()
}

/// Members `u_j = (1 + a_j) u`, `p_j = (1 + a_j) p`, `nu_j = (1 + a_j) nu` with
/// `a_j = j eps` for the first half (1-based `j <= J/2`) and
/// `a_j = -(j - J/2) eps` for the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsFamily {
    pub members: usize,
    pub epsilon: f64,
    pub nu: f64,
}

impl MmsFamily {
    pub fn new(members: usize, epsilon: f64, nu: f64) -> Self {
        Self { members, epsilon, nu }
    }

    /// `a_j` for the 0-based member index `j`.
    pub fn scale(&self, j: usize) -> f64 {
        let k = j + 1;
        let half = self.members / 2;
        if k <= half {
            k as f64 * self.epsilon
        } else {
            -((k - half) as f64) * self.epsilon
        }
    }

    pub fn viscosity(&self, j: usize) -> f64 {
        (1.0 + self.scale(j)) * self.nu
    }

    pub fn viscosities(&self) -> Vec<f64> {
        (0..self.members).map(|j| self.viscosity(j)).collect()
    }

    pub fn velocity(&self, j: usize, x: [f64; 2], t: f64) -> [f64; 2] {
        let s = 1.0 + self.scale(j);
        base_velocity(x, t).map(|v| s * v)
    }

    pub fn pressure(&self, j: usize, x: [f64; 2], t: f64) -> f64 {
        (1.0 + self.scale(j)) * base_pressure(x, t)
    }

    /// `f_j = d_t u_j + u_j . grad u_j - nu_j lap u_j + grad p_j`.
    pub fn forcing(&self, j: usize, x: [f64; 2], t: f64) -> [f64; 2] {
        let s = 1.0 + self.scale(j);
        let nu_j = self.viscosity(j);
        let (sn, cs) = t.sin_cos();
        let (px, py) = (x[0], x[1]);
        let u = base_velocity(x, t);
        let du_dt = [-py * cs, -px * sn];
        // rows: grad of each component
        let grad = [[2.0 * px, -sn], [-2.0 * py + cs, -2.0 * px]];
        let conv = [
            u[0] * grad[0][0] + u[1] * grad[0][1],
            u[0] * grad[1][0] + u[1] * grad[1][1],
        ];
        let lap = [2.0, 0.0];
        let gp = [sn, sn];
        [0, 1].map(|c| s * du_dt[c] + s * s * conv[c] - nu_j * s * lap[c] + s * gp[c])
    }

    pub fn member_data(&self, j: usize) -> MemberData {
        let fam = *self;
        let forcing: Forcing = Arc::new(move |x, t| fam.forcing(j, x, t));
        let dirichlet: DirichletData = Arc::new(move |x, t, _| fam.velocity(j, x, t));
        MemberData {
            forcing: Some(forcing),
            dirichlet: Some(dirichlet),
        }
    }

    pub fn interpolate(&self, space: &Arc<TaylorHoodSpace>, t: f64) -> Vec<Vec<f64>> {
        (0..self.members)
            .map(|j| FEFunction::interpolate_velocity(space, |x| self.velocity(j, x, t)).into_values())
            .collect()
    }
}

/// All-Dirichlet unit square with `n x n` cells.
pub fn mms_space(n: usize) -> Result<Arc<TaylorHoodSpace>, ExperimentError> {
    let mesh = Arc::new(generate_unit_square(n)?);
    let part = BoundaryPartition::all_dirichlet(&mesh);
    Ok(build_space(mesh, part))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSetup {
    pub algorithm: Algorithm,
    pub family: MmsFamily,
    pub gamma: f64,
    /// Relaxation length (only read by A2/A5; no open boundary here).
    pub l: f64,
    /// Cells per side of the unit square.
    pub n: usize,
    pub dts: Vec<f64>,
    pub t_final: f64,
    /// Take `u^{-1}` from the closed form for BDF2 schemes.
    pub exact_history: bool,
}

impl ConvergenceSetup {
    /// J=2, eps=0.1, nu=1, A4 with gamma=1.5 on a 10x10 square, T=1.
    pub fn reference() -> Self {
        Self {
            algorithm: Algorithm::A4,
            family: MmsFamily::new(2, 0.1, 1.0),
            gamma: 1.5,
            l: 0.01,
            n: 10,
            dts: vec![0.02, 0.01, 0.005, 0.0025],
            t_final: 1.0,
            exact_history: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub h: f64,
    pub steps: usize,
    pub velocity_errors: Vec<f64>,
    pub pressure_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub algorithm: Algorithm,
    pub rows: Vec<ConvergenceRow>,
}

fn rates(rows: &[ConvergenceRow], pick: impl Fn(&ConvergenceRow) -> &Vec<f64>) -> Vec<Vec<f64>> {
    rows.windows(2)
        .map(|w| {
            let r = (w[0].dt / w[1].dt).ln();
            pick(&w[0])
                .iter()
                .zip(pick(&w[1]))
                .map(|(a, b)| (a / b).ln() / r)
                .collect()
        })
        .collect()
}

impl ConvergenceTable {
    /// Observed orders between consecutive rows, per member.
    pub fn velocity_rates(&self) -> Vec<Vec<f64>> {
        rates(&self.rows, |r| &r.velocity_errors)
    }

    pub fn pressure_rates(&self) -> Vec<Vec<f64>> {
        rates(&self.rows, |r| &r.pressure_errors)
    }

    pub fn members(&self) -> usize {
        self.rows.first().map_or(0, |r| r.velocity_errors.len())
    }

    /// Rate columns follow the row they start from; the last row has none.
    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(
            out,
            "# errors at the final time in L2 (velocity, pressure); rate_* = log(e_k/e_(k+1))/log(dt_k/dt_(k+1)); dt, h in model units"
        )?;
        write!(out, "dt,h,steps")?;
        for j in 0..self.members() {
            write!(out, ",u_err_{j},u_rate_{j},p_err_{j},p_rate_{j}")?;
        }
        writeln!(out)?;
        let (vr, pr) = (self.velocity_rates(), self.pressure_rates());
        for (k, row) in self.rows.iter().enumerate() {
            write!(out, "{:.12e},{:.12e},{}", row.dt, row.h, row.steps)?;
            for j in 0..self.members() {
                let cell = |r: &Vec<Vec<f64>>| r.get(k).map(|v| format!("{:.6}", v[j])).unwrap_or_default();
                write!(
                    out,
                    ",{:.12e},{},{:.12e},{}",
                    row.velocity_errors[j],
                    cell(&vr),
                    row.pressure_errors[j],
                    cell(&pr)
                )?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Plain-text rendering for terminals.
    pub fn render(&self) -> String {
        let mut s = format!("{:>10}", "dt");
        for j in 0..self.members() {
            s += &format!(" {:>13} {:>7} {:>13} {:>7}", format!("|u-uh|_{j}"), "rate", format!("|p-ph|_{j}"), "rate");
        }
        s.push('\n');
        let (vr, pr) = (self.velocity_rates(), self.pressure_rates());
        for (k, row) in self.rows.iter().enumerate() {
            s += &format!("{:>10.6}", row.dt);
            for j in 0..self.members() {
                let cell = |r: &Vec<Vec<f64>>| r.get(k).map(|v| format!("{:.4}", v[j])).unwrap_or_default();
                s += &format!(
                    " {:>13.6e} {:>7} {:>13.6e} {:>7}",
                    row.velocity_errors[j],
                    cell(&vr),
                    row.pressure_errors[j],
                    cell(&pr)
                );
            }
            s.push('\n');
        }
        s
    }
}

/// Runs one manufactured-solution simulation and returns the errors at the
/// final time.
pub fn mms_run(setup: &ConvergenceSetup, space: &Arc<TaylorHoodSpace>, dt: f64) -> Result<ConvergenceRow, ExperimentError> {
    let fam = setup.family;
    let mut cfg = EnsembleConfig::new(setup.algorithm, fam.viscosities(), dt, setup.t_final);
    cfg.gamma = setup.gamma;
    cfg.l = setup.l;
    cfg.policy = CflPolicy::disabled();
    let mut init = InitialData::new(fam.interpolate(space, 0.0));
    if setup.algorithm.is_second_order() && setup.exact_history {
        init.u_prev = Some(fam.interpolate(space, -dt));
    }
    let members = (0..fam.members).map(|j| fam.member_data(j)).collect();
    let mut e = Ensemble::new(space.clone(), cfg, members, init)?;
    let summary = e.run()?;
    let t = e.state().t;
    let velocity_errors = (0..fam.members)
        .map(|j| velocity_l2_error(space, &e.state().u[j], |x| fam.velocity(j, x, t)))
        .collect();
    let pressure_errors = (0..fam.members)
        .map(|j| pressure_l2_error(space, &e.state().p[j], |x| fam.pressure(j, x, t)))
        .collect();
    Ok(ConvergenceRow {
        dt,
        h: space.mesh().metrics().h,
        steps: summary.steps,
        velocity_errors,
        pressure_errors,
    })
}

/// Errors at the final time for every timestep in the setup (rows run in parallel).
pub fn convergence_study(setup: &ConvergenceSetup) -> Result<ConvergenceTable, ExperimentError> {
    if setup.dts.is_empty() {
        return Err(ExperimentError::Invalid("empty timestep list".into()));
    }
    let space = mms_space(setup.n)?;
    let rows = setup
        .dts
        .par_iter()
        .map(|&dt| mms_run(setup, &space, dt))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceTable {
        algorithm: setup.algorithm,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Forward-mode dual number for exact first derivatives.
    #[derive(Clone, Copy)]
    struct D(f64, f64);
    impl std::ops::Add for D {
        type Output = D;
        fn add(self, o: D) -> D {
            D(self.0 + o.0, self.1 + o.1)
        }
    }
    impl std::ops::Sub for D {
        type Output = D;
        fn sub(self, o: D) -> D {
            D(self.0 - o.0, self.1 - o.1)
        }
    }
    impl std::ops::Mul for D {
        type Output = D;
        fn mul(self, o: D) -> D {
            D(self.0 * o.0, self.0 * o.1 + self.1 * o.0)
        }
    }
    fn c(v: f64) -> D {
        D(v, 0.0)
    }
    fn sin(a: D) -> D {
        D(a.0.sin(), a.1 * a.0.cos())
    }
    fn cos(a: D) -> D {
        D(a.0.cos(), -a.1 * a.0.sin())
    }
    fn u_dual(x: D, y: D, t: D) -> [D; 2] {
        [x * x - y * sin(t), c(-2.0) * x * y + x * cos(t)]
    }
    fn p_dual(x: D, y: D, t: D) -> D {
        (x + y - c(1.0)) * sin(t)
    }

    /// Strong residual of the member equations computed from derivatives of
    /// the closed-form fields alone.
    fn strong_residual(fam: &MmsFamily, j: usize, x: f64, y: f64, t: f64) -> [f64; 2] {
        let s = 1.0 + fam.scale(j);
        let ut = u_dual(c(x), c(y), D(t, 1.0)).map(|d| s * d.1);
        let ux = u_dual(D(x, 1.0), c(y), c(t)).map(|d| s * d.1);
        let uy = u_dual(c(x), D(y, 1.0), c(t)).map(|d| s * d.1);
        let u = base_velocity([x, y], t).map(|v| s * v);
        let px = s * p_dual(D(x, 1.0), c(y), c(t)).1;
        let py = s * p_dual(c(x), D(y, 1.0), c(t)).1;
        // quadratic in space: the central second difference is exact
        let hh = 0.5;
        let lap: [f64; 2] = [0, 1].map(|k| {
            let f = |a: f64, b: f64| s * base_velocity([a, b], t)[k];
            (f(x + hh, y) - 2.0 * f(x, y) + f(x - hh, y) + f(x, y + hh) - 2.0 * f(x, y) + f(x, y - hh)) / (hh * hh)
        });
        let nu = fam.viscosity(j);
        let f = fam.forcing(j, [x, y], t);
        let grad_p = [px, py];
        [0, 1].map(|k| ut[k] + u[0] * ux[k] + u[1] * uy[k] - nu * lap[k] + grad_p[k] - f[k])
    }

    #[test]
    fn forcing_matches_strong_form() {
        let fam = MmsFamily::new(4, 0.1, 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (x, y, t) = (rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0), rng.random_range(0.0..3.0));
            for j in 0..4 {
                let r = strong_residual(&fam, j, x, y, t);
                let scale = 1.0 + fam.forcing(j, [x, y], t).iter().map(|v| v.abs()).fold(0.0, f64::max);
                assert!(r[0].abs() < 1e-12 * scale && r[1].abs() < 1e-12 * scale, "{r:?}");
            }
        }
    }

    #[test]
    fn forcing_reference_value() {
        let fam = MmsFamily::new(2, 0.1, 1.0);
        assert!((fam.scale(0) - 0.1).abs() < 1e-15);
        assert!((fam.scale(1) + 0.1).abs() < 1e-15);
        let f = fam.forcing(0, [0.0, 0.0], 0.0);
        assert!((f[0] + 2.42).abs() < 1e-14 && f[1] == 0.0);
    }

    #[test]
    fn pressure_gradient_term_at_quarter_period() {
        // at x = y = 0 and t = pi/2 the velocity is (0, 0) and d_t u = (0, 0)
        let fam = MmsFamily::new(2, 0.1, 0.0);
        let f = fam.forcing(0, [0.0, 0.0], std::f64::consts::FRAC_PI_2);
        assert!((f[0] - 1.1).abs() < 1e-14 && (f[1] - 1.1).abs() < 1e-14);
    }

    #[test]
    fn exact_fields() {
        assert_eq!(base_velocity([1.0, 0.0], 0.0), [1.0, 1.0]);
        let fam = MmsFamily::new(1, 0.0, 1.0);
        assert_eq!(fam.velocity(0, [0.3, 0.8], 1.1), base_velocity([0.3, 0.8], 1.1));
        // div u = 2x - 2x
        let (x, y, t) = (0.37, -1.2, 0.4);
        let ux = u_dual(D(x, 1.0), c(y), c(t))[0].1;
        let vy = u_dual(c(x), D(y, 1.0), c(t))[1].1;
        assert!((ux + vy).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact() {
        let space = mms_space(3).unwrap();
        let fam = MmsFamily::new(2, 0.1, 1.0);
        let u = fam.interpolate(&space, 0.6);
        for j in 0..2 {
            assert!(velocity_l2_error(&space, &u[j], |x| fam.velocity(j, x, 0.6)) < 1e-14);
        }
    }

    #[test]
    fn short_study_shows_second_order() {
        let setup = ConvergenceSetup {
            dts: vec![0.05, 0.025],
            t_final: 0.2,
            n: 4,
            ..ConvergenceSetup::reference()
        };
        let t = convergence_study(&setup).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].steps, 8);
        for r in &t.velocity_rates()[0] {
            assert!(*r > 1.7 && *r < 2.3, "{r}");
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 4);
        assert!(s.lines().nth(1).unwrap().starts_with("dt,h,steps,u_err_0,u_rate_0"));
        assert!(t.render().lines().count() == 3);
    }
}
