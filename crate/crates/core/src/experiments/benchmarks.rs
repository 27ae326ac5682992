//! Flow past a cylinder, the two-outlet contraction channel, and helpers for
//! building initial ensembles.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{p2_pattern, rhs_forcing, OperatorSet};
use crate::ensemble::{
    dirichlet_dof_tags, dirichlet_values, project_divergence_free, Algorithm, DirichletData, Ensemble,
    EnsembleError, Forcing, MemberData, RunSummary,
};
use crate::fespace::{build_space, FEFunction, TaylorHoodSpace};
use crate::linsolve::{DirectSolver, SaddleSystem};
use crate::mesh::{contraction_channel, generate_channel, tags, refine_loops, BoundaryLoop, BoundaryPartition, Hole, Mesh};

use super::forces::{drag_lift_dp, Forces, PRESSURE_PROBES};
use super::ExperimentError;

pub const CYLINDER_LENGTH: f64 = 2.2;
pub const CYLINDER_HEIGHT: f64 = 0.41;
pub const CYLINDER_CENTER: [f64; 2] = [0.2, 0.2];
pub const CYLINDER_RADIUS: f64 = 0.05;

/// Viscosities of the three-member cylinder ensemble.
pub const CYLINDER_NU3: [f64; 3] = [1.0 / 1000.0, 1.0 / 900.0, 1.0 / 800.0];
/// Viscosities of the seven-member cylinder ensemble.
pub const CYLINDER_NU7: [f64; 7] = [
    1.0 / 1000.0,
    1.0 / 900.0,
    1.0 / 800.0,
    1.0 / 700.0,
    1.0 / 1100.0,
    1.0 / 1200.0,
    1.0 / 1300.0,
];
/// Viscosities of the contraction-channel ensemble.
pub const CONTRACTION_NU: [f64; 3] = [0.001, 0.003, 0.005];

/// `2.2 x 0.41` channel with the obstacle, `nx x ny` background cells.
pub fn cylinder_mesh(nx: usize, ny: usize) -> Result<Mesh, ExperimentError> {
    Ok(generate_channel(
        CYLINDER_LENGTH,
        CYLINDER_HEIGHT,
        nx,
        ny,
        Some(Hole {
            center: CYLINDER_CENTER,
            radius: CYLINDER_RADIUS,
        }),
    )?)
}

/// Channel with the obstacle: boundary spacing `h_near` on the circle and
/// `h_far` on the outer walls, refined to a 30 degree angle bound and to
/// areas of an equilateral triangle with side `h_far`. The angle bound grades
/// the mesh away from the obstacle.
pub fn graded_cylinder_mesh(h_far: f64, h_near: f64) -> Result<Mesh, ExperimentError> {
    if !(h_near > 0.0 && h_far >= h_near && h_far <= 0.1) {
        return Err(ExperimentError::Invalid(format!(
            "graded cylinder mesh needs 0 < h_near <= h_far <= 0.1, got {h_near} and {h_far}"
        )));
    }
    let (lx, ly) = (CYLINDER_LENGTH, CYLINDER_HEIGHT);
    let [cx, cy] = CYLINDER_CENTER;
    let nx = (lx / h_far).ceil() as usize;
    let ny = (ly / h_far).ceil() as usize;
    let (dx, dy) = (lx / nx as f64, ly / ny as f64);
    let mut outer = BoundaryLoop::default();
    for i in 0..nx {
        outer.push([i as f64 * dx, 0.0], tags::WALL);
    }
    for j in 0..ny {
        outer.push([lx, j as f64 * dy], tags::OUTLET);
    }
    for i in (1..=nx).rev() {
        outer.push([i as f64 * dx, ly], tags::WALL);
    }
    for j in (1..=ny).rev() {
        outer.push([0.0, j as f64 * dy], tags::INLET);
    }
    let segments = ((2.0 * PI * CYLINDER_RADIUS / h_near).ceil() as usize).max(16);
    let mut circle = BoundaryLoop::default();
    for k in 0..segments {
        let a = 2.0 * PI * k as f64 / segments as f64;
        circle.push([cx + CYLINDER_RADIUS * a.cos(), cy + CYLINDER_RADIUS * a.sin()], tags::CYLINDER);
    }
    Ok(refine_loops(&[outer, circle], 3f64.sqrt() / 4.0 * h_far * h_far, 30.0)?)
}

/// Inlet, walls and obstacle are Dirichlet; the outlet is open unless
/// `dirichlet_outflow` is set.
pub fn cylinder_partition(mesh: &Mesh, dirichlet_outflow: bool) -> Result<BoundaryPartition, ExperimentError> {
    let mut d = vec![tags::INLET, tags::WALL, tags::CYLINDER];
    let mut open = vec![tags::OUTLET];
    if dirichlet_outflow {
        d.append(&mut open);
    }
    Ok(BoundaryPartition::new(mesh, d, open)?)
}

pub fn cylinder_space(nx: usize, ny: usize, dirichlet_outflow: bool) -> Result<Arc<TaylorHoodSpace>, ExperimentError> {
    let mesh = cylinder_mesh(nx, ny)?;
    let part = cylinder_partition(&mesh, dirichlet_outflow)?;
    Ok(build_space(Arc::new(mesh), part))
}

/// `(6 / 0.41^2) sin(pi t / 8) y (0.41 - y)`.
pub fn cylinder_inflow(y: f64, t: f64) -> f64 {
    6.0 / (CYLINDER_HEIGHT * CYLINDER_HEIGHT) * (PI * t / 8.0).sin() * y * (CYLINDER_HEIGHT - y)
}

/// Parabolic profile on inlet and outlet, no slip elsewhere. On the open
/// variant the outlet dofs are not constrained so the outlet branch is unused.
pub fn cylinder_member_data() -> MemberData {
    let g: DirichletData = Arc::new(|x, t, tag| match tag {
        tags::INLET | tags::OUTLET => [cylinder_inflow(x[1], t), 0.0],
        _ => [0.0, 0.0],
    });
    MemberData {
        forcing: None,
        dirichlet: Some(g),
    }
}

/// Two-outlet contraction channel: inlet and walls Dirichlet, both outlets open.
pub fn contraction_space(h: f64) -> Result<Arc<TaylorHoodSpace>, ExperimentError> {
    let mesh = contraction_channel(h)?;
    let part = BoundaryPartition::new(&mesh, [tags::INLET, tags::WALL], [tags::OUTLET, tags::TOP_OUTLET])?;
    Ok(build_space(Arc::new(mesh), part))
}

/// Inlet amplitude of member `j`: `1`, `1 + eps`, `1 - eps`, repeating.
pub fn contraction_inflow_scale(j: usize, eps: f64) -> f64 {
    match j % 3 {
        0 => 1.0,
        1 => 1.0 + eps,
        _ => 1.0 - eps,
    }
}

/// Body force of member `j` for the Stokes start: `0`,
/// `eps (cos(pi x y + t), sin(pi (x + y) + t))`,
/// `eps (sin(pi (x + y) + t), cos(pi x y + t))`, repeating.
pub fn contraction_start_force(j: usize, eps: f64) -> Forcing {
    match j % 3 {
        0 => Arc::new(|_, _| [0.0, 0.0]),
        1 => Arc::new(move |x, t| {
            [eps * (PI * x[0] * x[1] + t).cos(), eps * (PI * (x[0] + x[1]) + t).sin()]
        }),
        _ => Arc::new(move |x, t| {
            [eps * (PI * (x[0] + x[1]) + t).sin(), eps * (PI * x[0] * x[1] + t).cos()]
        }),
    }
}

pub fn contraction_member_data(j: usize, eps: f64) -> MemberData {
    let s = contraction_inflow_scale(j, eps);
    let g: DirichletData = Arc::new(move |x, _, tag| {
        if tag == tags::INLET {
            [s * 4.0 * x[1] * (1.0 - x[1]), 0.0]
        } else {
            [0.0, 0.0]
        }
    });
    MemberData {
        forcing: None,
        dirichlet: Some(g),
    }
}

/// Steady Stokes solution `-nu lap u + grad p = f`, `div u = 0` with the
/// member's Dirichlet data at time `t`.
pub fn stokes_solve(
    space: &TaylorHoodSpace,
    ops: &OperatorSet,
    nu: f64,
    forcing: Option<&Forcing>,
    dirichlet: Option<&DirichletData>,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>), ExperimentError> {
    let mut a = p2_pattern(space);
    a.add_scaled(nu, &ops.stiffness);
    let sys = SaddleSystem::assemble(space, ops, &a, !space.partition().has_open());
    let mom = match forcing {
        Some(f) => rhs_forcing(space, |x| f(x, t)),
        None => vec![0.0; space.n_velocity()],
    };
    let g = dirichlet_values(space, sys.constrained(), &dirichlet_dof_tags(space), dirichlet, t);
    let lu = DirectSolver::new().factorize(sys.matrix())?;
    Ok(sys.split(&lu.solve(&sys.rhs(&mom, &g))?))
}

/// Stokes start of the contraction ensemble (perturbed inflow and body force).
pub fn contraction_initial(
    space: &TaylorHoodSpace,
    ops: &OperatorSet,
    nu: &[f64],
    inflow_eps: f64,
    force_eps: f64,
) -> Result<Vec<Vec<f64>>, ExperimentError> {
    nu.iter()
        .enumerate()
        .map(|(j, &n)| {
            let f = contraction_start_force(j, force_eps);
            let d = contraction_member_data(j, inflow_eps).dirichlet;
            Ok(stokes_solve(space, ops, n, Some(&f), d.as_ref(), 0.0)?.0)
        })
        .collect()
}

/// Divergence-free fields built from a few random Fourier modes, zero on the
/// Dirichlet boundary, each scaled to L-infinity norm `amplitude`.
pub fn random_smooth_ensemble(
    space: &Arc<TaylorHoodSpace>,
    ops: &OperatorSet,
    members: usize,
    seed: u64,
    amplitude: f64,
) -> Result<Vec<Vec<f64>>, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n2 = space.n_p2();
    (0..members)
        .map(|_| {
            let modes: Vec<[f64; 6]> = (0..4)
                .map(|_| {
                    [
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(0.5..3.0),
                        rng.random_range(0.5..3.0),
                        rng.random_range(0.0..2.0 * PI),
                        rng.random_range(0.0..2.0 * PI),
                    ]
                })
                .collect();
            let mut u = FEFunction::interpolate_velocity(space, |x| {
                let mut v = [0.0; 2];
                for m in &modes {
                    v[0] += m[0] * (m[2] * x[0] + m[4]).sin() * (m[3] * x[1] + m[5]).cos();
                    v[1] += m[1] * (m[3] * x[0] + m[5]).cos() * (m[2] * x[1] + m[4]).sin();
                }
                v
            })
            .into_values();
            for &s in space.dirichlet_scalar_dofs() {
                u[s] = 0.0;
                u[n2 + s] = 0.0;
            }
            let mut u = project_divergence_free(space, ops, &u)?;
            let m = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if m > 0.0 {
                u.iter_mut().for_each(|v| *v *= amplitude / m);
            }
            Ok(u)
        })
        .collect()
}

/// Backward difference matching the scheme that produced `u_new`.
pub fn discrete_time_derivative(scheme: Algorithm, dt: f64, u_new: &[f64], u: &[f64], u_prev: Option<&[f64]>) -> Vec<f64> {
    match (scheme.is_second_order(), u_prev) {
        (true, Some(up)) => u_new
            .iter()
            .zip(u)
            .zip(up)
            .map(|((a, b), c)| (3.0 * a - 4.0 * b + c) / (2.0 * dt))
            .collect(),
        _ => u_new.iter().zip(u).map(|(a, b)| (a - b) / dt).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceSample {
    pub step: usize,
    pub t: f64,
    pub member: usize,
    pub forces: Forces,
}

/// Runs to the final time recording drag, lift and pressure drop of every
/// member after each step.
pub fn run_with_forces(
    ensemble: &mut Ensemble,
    tag: i32,
    probes: [[f64; 2]; 2],
    mut observer: impl FnMut(&Ensemble, &crate::ensemble::StepReport),
) -> Result<(RunSummary, Vec<ForceSample>), ExperimentError> {
    let mut samples = Vec::new();
    let mut reports = Vec::new();
    let mut halvings = Vec::new();
    let t_final = ensemble.config().t_final;
    while ensemble.state().t < t_final - 1e-9 * ensemble.state().dt {
        let mut before = ensemble.state().u_prev.clone();
        let dt_before = ensemble.state().dt;
        let r = ensemble.checked_step()?;
        // replay the history interpolation applied by any halving
        if let Some(prev) = before.as_mut() {
            let current = ensemble.state().u_prev.as_ref().expect("history after a step");
            let ratio = r.dt / dt_before;
            if ratio != 1.0 {
                for (p, u) in prev.iter_mut().zip(current) {
                    for (a, b) in p.iter_mut().zip(u) {
                        *a = b - ratio * (b - *a);
                    }
                }
            }
        }
        let st = ensemble.state();
        let space = ensemble.space().clone();
        for j in 0..ensemble.config().members() {
            let u_old = &st.u_prev.as_ref().expect("history after a step")[j];
            let dudt = discrete_time_derivative(r.scheme, r.dt, &st.u[j], u_old, before.as_ref().map(|b| b[j].as_slice()));
            let forces = drag_lift_dp(
                &space,
                ensemble.operators(),
                ensemble.config().nu[j],
                &st.u[j],
                &dudt,
                &st.p[j],
                tag,
                probes,
            )?;
            samples.push(ForceSample {
                step: r.step,
                t: r.t,
                member: j,
                forces,
            });
        }
        observer(ensemble, &r);
        halvings.extend(r.halvings.iter().cloned());
        reports.push(r);
    }
    let st = ensemble.state();
    Ok((
        RunSummary {
            steps: reports.len(),
            counters: ensemble.counters(),
            final_t: st.t,
            final_dt: st.dt,
            reports,
            halvings,
        },
        samples,
    ))
}

/// Cylinder run with the benchmark probes.
pub fn cylinder_run(ensemble: &mut Ensemble) -> Result<(RunSummary, Vec<ForceSample>), ExperimentError> {
    run_with_forces(ensemble, tags::CYLINDER, PRESSURE_PROBES, |_, _| {})
}

pub fn write_force_csv(out: &mut impl Write, samples: &[ForceSample]) -> io::Result<()> {
    writeln!(
        out,
        "# drag = 20 F_x, lift = 20 F_y from the volume residual on the obstacle; pressure_drop = p(front) - p(back)"
    )?;
    writeln!(out, "step,t,member,drag,lift,pressure_drop")?;
    for s in samples {
        writeln!(
            out,
            "{},{:.12e},{},{:.12e},{:.12e},{:.12e}",
            s.step, s.t, s.member, s.forces.drag, s.forces.lift, s.forces.pressure_drop
        )?;
    }
    Ok(())
}

/// Maximum drag and lift of member `j` over the record, with the pressure drop
/// at the last sample.
pub fn force_extremes(samples: &[ForceSample], j: usize) -> Option<Forces> {
    let mine: Vec<&ForceSample> = samples.iter().filter(|s| s.member == j).collect();
    let last = mine.last()?;
    Some(Forces {
        drag: mine.iter().map(|s| s.forces.drag).fold(f64::NEG_INFINITY, f64::max),
        lift: mine.iter().map(|s| s.forces.lift).fold(f64::NEG_INFINITY, f64::max),
        pressure_drop: last.forces.pressure_drop,
    })
}

impl From<EnsembleError> for ExperimentError {
    fn from(e: EnsembleError) -> Self {
        ExperimentError::Ensemble(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_core;
    use crate::ensemble::{CflPolicy, EnsembleConfig, InitialData};

    #[test]
    fn inflow_profile() {
        assert_eq!(cylinder_inflow(0.0, 1.0), 0.0);
        assert_eq!(cylinder_inflow(0.41, 1.0), 0.0);
        assert!((cylinder_inflow(0.205, 4.0) - 1.5).abs() < 1e-14);
        assert!(cylinder_inflow(0.205, 0.0).abs() < 1e-15);
    }

    #[test]
    fn cylinder_mesh_tags_and_partition() {
        let space = cylinder_space(22, 6, false).unwrap();
        let tags_seen = space.mesh().boundary_tags();
        for t in [tags::INLET, tags::OUTLET, tags::WALL, tags::CYLINDER] {
            assert!(tags_seen.contains(&t));
        }
        assert!(space.partition().has_open());
        let closed = cylinder_space(22, 6, true).unwrap();
        assert!(!closed.partition().has_open());
        assert!(cylinder_mesh(0, 3).is_err());
    }

    #[test]
    fn contraction_scales_and_forces() {
        assert_eq!(contraction_inflow_scale(0, 0.1), 1.0);
        assert_eq!(contraction_inflow_scale(1, 0.1), 1.1);
        assert_eq!(contraction_inflow_scale(2, 0.1), 0.9);
        assert_eq!(contraction_start_force(0, 0.01)([0.3, 0.4], 0.0), [0.0, 0.0]);
        let f = contraction_start_force(1, 0.01)([0.0, 0.0], 0.0);
        assert!((f[0] - 0.01).abs() < 1e-15 && f[1].abs() < 1e-15);
    }

    #[test]
    fn stokes_reproduces_poiseuille() {
        // straight channel with parabolic inflow and open outlet: u = (4y(1-y), 0), p = 8 nu (L - x)
        let mesh = generate_channel(2.0, 1.0, 8, 4, None).unwrap();
        let part = BoundaryPartition::new(&mesh, [tags::INLET, tags::WALL], [tags::OUTLET]).unwrap();
        let space = build_space(Arc::new(mesh), part);
        let ops = crate::assembly::assemble_core(&space);
        let g: DirichletData = Arc::new(|x, _, tag| if tag == tags::INLET { [4.0 * x[1] * (1.0 - x[1]), 0.0] } else { [0.0, 0.0] });
        let nu = 0.1;
        let (u, p) = stokes_solve(&space, &ops, nu, None, Some(&g), 0.0).unwrap();
        let eu = crate::fespace::norms::velocity_l2_error(&space, &u, |x| [4.0 * x[1] * (1.0 - x[1]), 0.0]);
        let ep = crate::fespace::norms::pressure_l2_error(&space, &p, |x| 8.0 * nu * (2.0 - x[0]));
        assert!(eu < 1e-10 && ep < 1e-10, "{eu} {ep}");
    }

    #[test]
    fn random_ensemble_is_solenoidal_and_deterministic() {
        let space = crate::testutil::square_space(6, &[]);
        let ops = assemble_core(&space);
        let a = random_smooth_ensemble(&space, &ops, 3, 11, 0.5).unwrap();
        let b = random_smooth_ensemble(&space, &ops, 3, 11, 0.5).unwrap();
        assert_eq!(a, b);
        for u in &a {
            let m = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!((m - 0.5).abs() < 1e-14);
            let div = ops.divergence(u);
            assert!(div.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-12);
        }
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn bdf2_derivative_is_exact_for_quadratics() {
        let dt = 0.1;
        let f = |t: f64| vec![t * t, 3.0 * t];
        let d = discrete_time_derivative(Algorithm::A4, dt, &f(1.0), &f(0.9), Some(&f(0.8)));
        assert!((d[0] - 2.0).abs() < 1e-12 && (d[1] - 3.0).abs() < 1e-12);
        let d1 = discrete_time_derivative(Algorithm::A1, dt, &f(1.0), &f(0.9), None);
        assert!((d1[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn short_cylinder_run_records_forces() {
        let space = cylinder_space(22, 6, false).unwrap();
        let mut cfg = EnsembleConfig::new(Algorithm::A5, CYLINDER_NU3.to_vec(), 0.01, 0.03);
        cfg.gamma = 1.5;
        cfg.l = 0.01;
        cfg.policy = CflPolicy::disabled();
        cfg.lambda1 = Some(59.3467);
        let members = vec![cylinder_member_data(); 3];
        let init = InitialData::at_rest(&space, 3);
        let mut e = Ensemble::new(space, cfg, members, init).unwrap();
        let (summary, samples) = cylinder_run(&mut e).unwrap();
        assert_eq!(summary.steps, 3);
        assert_eq!(samples.len(), 9);
        assert!(samples.iter().all(|s| s.forces.drag.is_finite()));
        let ext = force_extremes(&samples, 0).unwrap();
        assert!(ext.drag.is_finite());
        let mut buf = Vec::new();
        write_force_csv(&mut buf, &samples).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 11);
    }
}
