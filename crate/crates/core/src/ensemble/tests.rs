use std::sync::Arc;

use proptest::prelude::*;

use super::classical::ClassicalStepper;
use super::*;
use crate::fespace::FEFunction;
use crate::linsolve::fingerprint;
use crate::mesh::tags;
use crate::testutil::{random_vector, square_space};

/// Curl of `scale (x(1-x)y(1-y))^2 (a + b x + c y)`; vanishes on the unit square boundary.
fn bubble(a: f64, b: f64, c: f64, scale: f64) -> impl Fn([f64; 2]) -> [f64; 2] {
    move |p| {
        let (x, y) = (p[0], p[1]);
        let bb = x * (1.0 - x) * y * (1.0 - y);
        let bx = (1.0 - 2.0 * x) * y * (1.0 - y);
        let by = x * (1.0 - x) * (1.0 - 2.0 * y);
        let q = a + b * x + c * y;
        [
            scale * (2.0 * bb * by * q + bb * bb * c),
            -scale * (2.0 * bb * bx * q + bb * bb * b),
        ]
    }
}

fn bubbles(space: &Arc<TaylorHoodSpace>, j: usize, seed: u64) -> Vec<Vec<f64>> {
    let ops = assemble_core(space);
    (0..j)
        .map(|k| {
            let r = random_vector(3, seed + k as u64);
            divergence_free_interpolant(space, &ops, bubble(1.0 + 0.3 * r[0], r[1], r[2], 150.0)).unwrap()
        })
        .collect()
}

fn config(alg: Algorithm, nu: Vec<f64>, dt: f64, steps: usize) -> EnsembleConfig {
    let mut c = EnsembleConfig::new(alg, nu, dt, dt * steps as f64);
    c.l = 0.05;
    if alg.is_second_order() {
        c.gamma = 1.2;
    }
    c
}

fn open_space(n: usize) -> Arc<TaylorHoodSpace> {
    square_space(n, &[tags::RIGHT])
}

fn space_for(alg: Algorithm, n: usize) -> Arc<TaylorHoodSpace> {
    if alg.dirichlet_only() {
        square_space(n, &[])
    } else {
        open_space(n)
    }
}

#[test]
fn zero_data_stays_zero() {
    for alg in Algorithm::ALL {
        let space = space_for(alg, 3);
        let cfg = config(alg, vec![1.0, 0.5], 0.1, 3);
        let mut e = Ensemble::new(space.clone(), cfg, vec![], InitialData::at_rest(&space, 2)).unwrap();
        let s = e.run().unwrap();
        assert_eq!(s.steps, 3);
        for r in &s.reports {
            for m in &r.members {
                assert_eq!(m.energy, 0.0, "{alg}");
                assert!(m.margins.iter().all(|x| x.1 == 0.0));
            }
        }
        assert!(e.state().u.iter().flatten().all(|v| *v == 0.0));
    }
}

#[test]
fn open_boundary_is_rejected_for_dirichlet_schemes() {
    let space = open_space(2);
    for alg in [Algorithm::A1, Algorithm::A4, Algorithm::Baseline] {
        let r = Ensemble::new(space.clone(), config(alg, vec![1.0], 0.1, 1), vec![], InitialData::at_rest(&space, 1));
        assert!(matches!(r, Err(EnsembleError::OpenBoundaryNotAllowed(_))));
    }
}

#[test]
fn initial_data_shape_is_checked() {
    let space = square_space(2, &[]);
    let r = Ensemble::new(space.clone(), config(Algorithm::A1, vec![1.0, 2.0], 0.1, 1), vec![], InitialData::at_rest(&space, 1));
    assert!(matches!(r, Err(EnsembleError::InitialData(_))));
}

#[test]
fn matrix_is_shared_by_all_members() {
    for alg in Algorithm::ALL {
        let space = space_for(alg, 3);
        let j = 3;
        let u0: Vec<Vec<f64>> = (0..j).map(|k| random_vector(space.n_velocity(), 10 + k as u64)).collect();
        let mut init = InitialData::new(u0);
        if alg.is_second_order() {
            init.u_prev = Some((0..j).map(|k| random_vector(space.n_velocity(), 20 + k as u64)).collect());
        }
        let e = Ensemble::new(space, config(alg, vec![1.0, 0.7, 0.4], 0.01, 1), vec![], init).unwrap();
        let f0 = fingerprint(e.member_system(0).matrix());
        for m in 1..j {
            assert_eq!(fingerprint(e.member_system(m).matrix()), f0, "{alg}");
        }
    }
}

#[test]
fn one_factorization_and_j_solves_per_step() {
    for j in [1, 3] {
        let space = open_space(3);
        let nu: Vec<f64> = (0..j).map(|k| 1.0 + 0.1 * k as f64).collect();
        let mut cfg = config(Algorithm::A5, nu, 0.01, 4);
        cfg.policy = CflPolicy::disabled();
        let init = InitialData::new((0..j).map(|k| random_vector(space.n_velocity(), k as u64)).collect());
        let mut e = Ensemble::new(space, cfg, vec![], init).unwrap();
        let s = e.run().unwrap();
        assert_eq!(s.steps, 4);
        assert_eq!(s.counters.factorizations, 4);
        assert_eq!(s.counters.solves, 4 * j);
        assert_eq!(s.reports[0].scheme, Algorithm::A2);
        assert!(s.reports[1..].iter().all(|r| r.scheme == Algorithm::A5));
    }
}

#[test]
fn single_member_first_order_matches_classical_backward_euler() {
    let space = square_space(4, &[]);
    let u0 = bubbles(&space, 1, 3).remove(0);
    let nu = 0.05;
    let dt = 0.02;
    let mut cfg = config(Algorithm::A1, vec![nu], dt, 5);
    cfg.policy = CflPolicy::disabled();
    let mut e = Ensemble::new(space.clone(), cfg, vec![], InitialData::new(vec![u0.clone()])).unwrap();
    let mut c = ClassicalStepper::new(space, nu, dt, u0, MemberData::default());
    for _ in 0..5 {
        e.step().unwrap();
        c.step_backward_euler().unwrap();
        let d = e.state().u[0].iter().zip(&c.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-12, "{d}");
    }
}

#[test]
fn single_member_bdf2_matches_classical() {
    for gamma in [0.0, 1.2] {
        let space = square_space(4, &[]);
        let u0 = bubbles(&space, 1, 5).remove(0);
        let (nu, dt) = (0.05, 0.02);
        let mut cfg = config(Algorithm::A4, vec![nu], dt, 5);
        cfg.gamma = gamma;
        cfg.policy = CflPolicy::disabled();
        let mut e = Ensemble::new(space.clone(), cfg, vec![], InitialData::new(vec![u0.clone()])).unwrap();
        let mut c = ClassicalStepper::new(space, nu, dt, u0, MemberData::default()).with_gamma(gamma);
        for _ in 0..5 {
            e.step().unwrap();
            c.step_bdf2().unwrap();
            let d = e.state().u[0].iter().zip(&c.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d < 1e-12, "gamma {gamma}: {d}");
        }
    }
}

#[test]
fn dirichlet_schemes_dissipate_energy() {
    for alg in [Algorithm::A1, Algorithm::A4] {
        let space = square_space(4, &[]);
        let u0 = bubbles(&space, 3, 11);
        let mut cfg = config(alg, vec![0.02, 0.03, 0.05], 0.01, 20);
        if alg == Algorithm::A4 {
            cfg.gamma = select_gamma(&cfg.nu).gamma;
        }
        let mut e = Ensemble::new(space, cfg, vec![], InitialData::new(u0)).unwrap();
        let s = e.run().unwrap();
        let e0 = s.reports[0].members.iter().map(|m| m.energy_before).fold(0.0, f64::max);
        for r in &s.reports {
            for m in &r.members {
                assert!(m.max_margin() <= 1.0);
                assert!(m.energy <= m.energy_before + 1e-10 * e0, "{alg} step {}", r.step);
            }
        }
    }
}

#[test]
fn relaxed_open_boundary_ledger_holds() {
    for alg in [Algorithm::A2, Algorithm::A5] {
        let space = open_space(4);
        let ops = assemble_core(&space);
        let u0: Vec<Vec<f64>> = [0.8, 1.0, 1.2]
            .iter()
            .map(|a| {
                project_divergence_free(
                    &space,
                    &ops,
                    FEFunction::interpolate_velocity(&space, |x| [a * x[1] * (1.0 - x[1]), 0.0]).values(),
                )
                .unwrap()
            })
            .collect();
        let mut cfg = config(alg, vec![0.05, 0.08, 0.1], 0.01, 10);
        if alg == Algorithm::A5 {
            cfg.gamma = select_gamma(&cfg.nu).gamma;
        }
        let mut e = Ensemble::new(space, cfg, vec![], InitialData::new(u0)).unwrap();
        let s = e.run().unwrap();
        for r in &s.reports {
            for m in &r.members {
                assert!(m.ledger_excess(r.dt) <= 1e-10 * m.energy_before, "{alg} {}", m.ledger_excess(r.dt));
            }
        }
    }
}

#[test]
fn violated_margin_halves_once() {
    let space = square_space(3, &[]);
    let u0 = bubbles(&space, 2, 1);
    let probe = Ensemble::new(space.clone(), config(Algorithm::A1, vec![1e-3, 2e-3], 1.0, 1), vec![], InitialData::new(u0.clone())).unwrap();
    let m = probe.margins().unwrap().iter().flatten().map(|x| x.1).fold(0.0, f64::max);
    assert!(m > 0.0);
    // margin is proportional to dt: pick dt0 so the first check sees 1.5
    let dt0 = 1.5 / m;
    let mut e = Ensemble::new(space, config(Algorithm::A1, vec![1e-3, 2e-3], dt0, 1), vec![], InitialData::new(u0)).unwrap();
    let r = e.checked_step().unwrap();
    assert_eq!(r.halvings.len(), 1);
    assert!((r.halvings[0].worst_margin - 1.5).abs() < 1e-9);
    assert_eq!(r.dt, dt0 / 2.0);
    assert!(r.members.iter().all(|m| m.max_margin() <= 1.0));
}

#[test]
fn halving_interpolates_history() {
    let space = square_space(2, &[]);
    let n = space.n_velocity();
    let u = random_vector(n, 1);
    let prev = random_vector(n, 2);
    let mut init = InitialData::new(vec![u.clone()]);
    init.u_prev = Some(vec![prev.clone()]);
    let mut e = Ensemble::new(space, config(Algorithm::A4, vec![1.0], 0.2, 1), vec![], init).unwrap();
    let ev = e.halve(3.0).unwrap();
    assert_eq!((ev.old_dt, ev.new_dt), (0.2, 0.1));
    let h = &e.state().u_prev.as_ref().unwrap()[0];
    for i in 0..n {
        assert!((h[i] - 0.5 * (u[i] + prev[i])).abs() < 1e-15);
    }
}

#[test]
fn timestep_floor_aborts() {
    let space = square_space(3, &[]);
    let u0 = bubbles(&space, 2, 4);
    let mut cfg = config(Algorithm::A1, vec![1e-9, 1e-3], 1.0, 1);
    cfg.policy.dt_floor = 1e-3;
    let mut e = Ensemble::new(space, cfg, vec![], InitialData::new(u0)).unwrap();
    assert!(matches!(e.checked_step(), Err(EnsembleError::TimestepUnderflow { .. })));
}

#[test]
fn energy_examples() {
    let space = square_space(4, &[]);
    let u = FEFunction::interpolate_velocity(&space, |x| [x[0], -x[1]]);
    let e = Ensemble::new(space.clone(), config(Algorithm::A1, vec![1.0], 0.1, 1), vec![], InitialData::new(vec![u.values().to_vec()])).unwrap();
    assert!((e.energy(0) - (1.0 / 3.0 + 0.1)).abs() < 1e-13);
}

#[test]
fn dirichlet_data_is_imposed() {
    let space = square_space(3, &[]);
    let g: DirichletData = Arc::new(|x, t, _| [t * x[1], 0.0]);
    let member = MemberData {
        forcing: None,
        dirichlet: Some(g),
    };
    let mut cfg = config(Algorithm::A1, vec![1.0], 0.5, 1);
    cfg.policy = CflPolicy::disabled();
    let mut e = Ensemble::new(space.clone(), cfg, vec![member], InitialData::at_rest(&space, 1)).unwrap();
    e.step().unwrap();
    for &i in space.dirichlet_scalar_dofs() {
        let x = space.dof_coords()[i];
        assert!((e.state().u[0][i] - 0.5 * x[1]).abs() < 1e-14);
    }
}

#[test]
fn dof_tags_prefer_smallest_tag() {
    let space = square_space(2, &[]);
    let t = dirichlet_dof_tags(&space);
    // corner (0,0) touches LEFT (1) and BOTTOM (3)
    let k = space.dof_coords().iter().position(|x| *x == [0.0, 0.0]).unwrap();
    assert_eq!(t[k], tags::LEFT);
}

#[test]
fn leray_projection_is_discretely_solenoidal() {
    let space = open_space(4);
    let ops = assemble_core(&space);
    let u = project_divergence_free(&space, &ops, &random_vector(space.n_velocity(), 9)).unwrap();
    let div = ops.divergence(&u);
    assert!(div.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-12);
}

#[test]
fn baseline_warns_when_restriction_fails() {
    let space = square_space(2, &[]);
    let e = Ensemble::new(space.clone(), config(Algorithm::Baseline, vec![1.0, 1.0, 10.0], 0.1, 1), vec![], InitialData::at_rest(&space, 3)).unwrap();
    assert_eq!(e.warnings().len(), 1);
    let e = Ensemble::new(space.clone(), config(Algorithm::Baseline, vec![1.0, 1.2], 0.1, 1), vec![], InitialData::at_rest(&space, 2)).unwrap();
    assert!(e.warnings().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fluctuations_sum_to_zero(seed in 0u64..10_000, j in 1usize..6) {
        let fields: Vec<Vec<f64>> = (0..j).map(|k| random_vector(40, seed * 7 + k as u64)).collect();
        let m = mean_field(&fields);
        let f = fluctuations(&fields, &m);
        let scale = fields.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..40 {
            let s: f64 = f.iter().map(|v| v[i]).sum();
            prop_assert!(s.abs() <= 1e-12 * scale);
        }
    }
}
