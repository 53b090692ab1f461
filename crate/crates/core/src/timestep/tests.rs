use super::*;
use crate::functionals::csv_header;
use crate::model::{Nonlinearity, Profile};
use crate::spatial::{discrete_laplacian, helmholtz_solve};
use proptest::prelude::*;
use std::f64::consts::PI;

const STEPPERS: [StepperKind; 3] = [StepperKind::ExplicitRk, StepperKind::Imex1, StepperKind::FullyImplicit];
const VARIANTS: [Variant; 2] = [Variant::ParabolicParabolic, Variant::ParabolicElliptic];

fn smooth_scenario(stepper: StepperKind, variant: Variant) -> Scenario {
    let mut s = Scenario::critical_bump(1.0, 32, 0.1);
    s.initial_u = Profile::Cosine { mass: 1.0, amplitude: 0.5 };
    s.initial_v = Some(Profile::Constant { mass: 1.0 });
    s.stepper = stepper;
    s.variant = variant;
    s
}

fn fixed_dt(mut s: Scenario, dt: f64) -> Scenario {
    s.dt_initial = dt;
    s.dt_max = dt;
    s.dt_min = dt * 1e-6;
    s.output_interval = Some(s.t_end);
    s
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn rhs_u_examples() {
    let g = Grid::new(16).unwrap();
    let crit = Nonlinearity::critical();
    for scheme in [AdvectionScheme::Upwind, AdvectionScheme::Central] {
        let s = State::new(0.0, vec![3.0; 16], vec![-2.0; 16]);
        assert!(rhs_u(&g, &s, &crit, scheme).unwrap().iter().all(|&r| r == 0.0));
        let s = State::new(0.0, vec![3.0; 16], vec![3.0; 16]);
        assert!(rhs_u(&g, &s, &crit, scheme).unwrap().iter().all(|&r| r == 0.0));
    }
    let m = 2.5;
    let v: Vec<f64> = g.centers().iter().map(|x| (3.0 * x).sin() + x * x).collect();
    let s = State::new(0.0, vec![m; 16], v.clone());
    let rate = rhs_u(&g, &s, &crit, AdvectionScheme::Central).unwrap();
    let lap = discrete_laplacian(&g, &v);
    for (r, l) in rate.iter().zip(&lap) {
        assert!((r + m * l).abs() < 1e-11 * (1.0 + l.abs()));
    }
    assert!(g.integrate(&rate).abs() < 1e-12);
}

#[test]
fn rhs_v_examples() {
    let g = Grid::new(8).unwrap();
    let steady = State::new(0.0, vec![4.0; 8], vec![4.0; 8]);
    assert!(rhs_v(&g, &steady).iter().all(|&r| r == 0.0));
    let u: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
    assert_eq!(rhs_v(&g, &State::new(0.0, u.clone(), vec![0.0; 8])), u);
    assert!(rhs_v(&g, &State::new(0.0, vec![0.0; 8], vec![1.5; 8])).iter().all(|&r| r == -1.5));
}

#[test]
fn step_control_grows_and_halves() {
    let mut c = StepControl::new(1e-3);
    for _ in 0..4 {
        c.on_accept(1.0);
        assert_eq!(c.dt, 1e-3);
    }
    c.on_accept(1.0);
    assert!((c.dt - 1.2e-3).abs() < 1e-18);
    c.on_reject(1e-3);
    assert_eq!(c.dt, 5e-4);
    assert_eq!(c.rejected_in_a_row, 1);
    let mut c = StepControl::new(0.9);
    for _ in 0..5 {
        c.on_accept(1.0);
    }
    assert_eq!(c.dt, 1.0);
}

#[test]
fn steady_pair_is_fixed_point_of_every_stepper() {
    let g = Grid::new(64).unwrap();
    for stepper in STEPPERS {
        for variant in VARIANTS {
            for m in [1.0, 7.5] {
                let mut s = Scenario::steady(m, 64, 1.0);
                s.stepper = stepper;
                s.variant = variant;
                let state = initial_state(&g, &s);
                let control = StepControl::new(1e-4);
                let next = step(&g, &state, &s, &control).unwrap();
                assert!(max_diff(&next.u, &state.u) <= 1e-12 * m, "{stepper:?} {variant:?}");
                assert!(max_diff(&next.v, &state.v) <= 1e-12 * m, "{stepper:?} {variant:?}");
            }
        }
    }
}

#[test]
fn stepping_conserves_mass() {
    let g = Grid::new(48).unwrap();
    for stepper in STEPPERS {
        for variant in VARIANTS {
            let mut s = Scenario::critical_bump(20.0, 48, 1.0);
            s.stepper = stepper;
            s.variant = variant;
            let mut state = initial_state(&g, &s);
            let m0 = g.integrate(&state.u);
            let mut control = StepControl::new(1e-5);
            for _ in 0..20 {
                control.dt = 1e-5f64.min(stable_dt(&g, &state, &s, &control));
                state = step(&g, &state, &s, &control).unwrap();
                assert!((g.integrate(&state.u) - m0).abs() <= 1e-12 * m0, "{stepper:?} {variant:?}");
            }
        }
    }
}

#[test]
fn overshooting_explicit_step_is_rejected() {
    let g = Grid::new(32).unwrap();
    let mut s = Scenario::critical_bump(20.0, 32, 1.0);
    s.stepper = StepperKind::ExplicitRk;
    let state = initial_state(&g, &s);
    let control = StepControl::new(1.0);
    assert!(matches!(step(&g, &state, &s, &control), Err(Rejection::Positivity { .. })));
}

#[test]
fn elliptic_variant_keeps_v_slaved() {
    let g = Grid::new(32).unwrap();
    for stepper in STEPPERS {
        let s = smooth_scenario(stepper, Variant::ParabolicElliptic);
        let state = initial_state(&g, &s);
        let next = step(&g, &state, &s, &StepControl::new(1e-4)).unwrap();
        let reference = helmholtz_solve(&g, &next.u);
        assert!(max_diff(&next.v, &reference) < 1e-12, "{stepper:?}");
    }
}

#[test]
fn zero_horizon_gives_single_sample() {
    let s = Scenario::critical_bump(5.0, 32, 0.0);
    let r = run(&s).unwrap();
    assert_eq!(r.samples.len(), 1);
    assert_eq!(r.samples[0].t, 0.0);
    assert_eq!(r.status, TerminationStatus::Completed);
    assert_eq!(r.steps_accepted, 0);
}

#[test]
fn steady_run_repeats_first_sample() {
    for stepper in STEPPERS {
        let mut s = Scenario::steady(1.0, 64, 1.0);
        s.stepper = stepper;
        let r = run(&s).unwrap();
        assert!(r.status.is_completed());
        let first = r.samples[0].csv_values();
        for smp in &r.samples[1..] {
            let row = smp.csv_values();
            // every column except t and dt_used
            for k in 1..row.len() - 1 {
                assert!((row[k] - first[k]).abs() <= 1e-12 * (1.0 + first[k].abs()), "{stepper:?} column {k}");
            }
        }
        assert!(r.samples.iter().all(|s| s.identity_residual.abs() <= 1e-12));
    }
}

#[test]
fn samples_are_strictly_increasing_and_land_on_cadence() {
    let mut s = smooth_scenario(StepperKind::Imex1, Variant::ParabolicParabolic);
    s.output_interval = Some(0.01);
    let r = run(&s).unwrap();
    assert_eq!(r.samples.len(), 11);
    for (k, smp) in r.samples.iter().enumerate() {
        assert_eq!(smp.t, (k as f64 * 0.01).min(0.1));
    }
    assert!(r.samples.windows(2).all(|p| p[1].t > p[0].t));
    assert!(r.samples_csv().starts_with(&csv_header()));
}

#[test]
fn invalid_scenario_is_an_error() {
    let mut s = Scenario::critical_bump(5.0, 32, 1.0);
    s.dt_min = 10.0;
    assert!(run(&s).is_err());
}

#[test]
fn threshold_crossing_reports_blowup() {
    let mut s = Scenario::critical_bump(20.0, 64, 1.0);
    s.blowup_threshold = 100.0;
    let r = run(&s).unwrap();
    match r.status {
        TerminationStatus::BlowupSuspected { t_stop, sup_u } => {
            assert!(sup_u >= 100.0);
            assert_eq!(r.samples.last().unwrap().t, t_stop);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn dense_monitoring_records_every_step() {
    let s = smooth_scenario(StepperKind::Imex1, Variant::ParabolicParabolic);
    let r = run_with(
        &s,
        &RunOptions {
            monitor: MonitorLevel::Steps,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.steps.len(), r.steps_accepted);
    let total: f64 = r.steps.iter().map(|s| s.dt).sum();
    assert!((total - s.t_end).abs() < 1e-12);
    assert!(r.steps.iter().all(|s| s.cross_term_residual <= 1e-10 * s.cross_term_scale));
}

#[test]
fn explicit_and_imex_trajectories_agree() {
    let mut diffs = vec![];
    for dt in [4e-4, 2e-4] {
        let rk = run(&fixed_dt(smooth_scenario(StepperKind::ExplicitRk, Variant::ParabolicParabolic), dt)).unwrap();
        let imex = run(&fixed_dt(smooth_scenario(StepperKind::Imex1, Variant::ParabolicParabolic), dt)).unwrap();
        diffs.push(max_diff(&rk.final_state.u, &imex.final_state.u));
    }
    assert!(diffs[0] < 1e-2, "{diffs:?}");
    let order = (diffs[0] / diffs[1]).log2();
    assert!(order > 0.9, "{diffs:?}");
}

fn temporal_order(stepper: StepperKind, variant: Variant, dts: &[f64], reference_dt: f64) -> f64 {
    let reference = run(&fixed_dt(smooth_scenario(stepper, variant), reference_dt)).unwrap();
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let r = run(&fixed_dt(smooth_scenario(stepper, variant), dt)).unwrap();
            assert!(r.status.is_completed());
            max_diff(&r.final_state.u, &reference.final_state.u)
        })
        .collect();
    (errs[0] / errs[errs.len() - 1]).log2() / (errs.len() - 1) as f64
}

#[test]
fn temporal_orders() {
    for variant in VARIANTS {
        let imex = temporal_order(StepperKind::Imex1, variant, &[2e-3, 1e-3, 5e-4], 1e-6);
        assert!(imex >= 0.9, "IMEX {variant:?}: {imex}");
        let implicit = temporal_order(StepperKind::FullyImplicit, variant, &[2e-3, 1e-3, 5e-4], 1e-6);
        assert!(implicit >= 0.9, "implicit {variant:?}: {implicit}");
        let rk = temporal_order(StepperKind::ExplicitRk, variant, &[2e-4, 1e-4, 5e-5], 1e-6);
        assert!(rk >= 1.8, "RK {variant:?}: {rk}");
    }
}

#[test]
fn implicit_and_imex_agree_on_smooth_data() {
    let a = run(&fixed_dt(smooth_scenario(StepperKind::Imex1, Variant::ParabolicParabolic), 1e-5)).unwrap();
    let b = run(&fixed_dt(smooth_scenario(StepperKind::FullyImplicit, Variant::ParabolicParabolic), 1e-5)).unwrap();
    assert!(max_diff(&a.final_state.u, &b.final_state.u) < 1e-4);
    assert!(max_diff(&a.final_state.v, &b.final_state.v) < 1e-4);
}

#[test]
fn manufactured_forcing_enters_as_rates() {
    struct Uniform;
    impl Forcing for Uniform {
        fn rates(&self, grid: &Grid, _t: f64) -> (Vec<f64>, Vec<f64>) {
            (vec![0.0; grid.cells()], vec![1.0; grid.cells()])
        }
    }
    // from the steady pair, ∂t v = 1 exactly and u stays put
    let g = Grid::new(16).unwrap();
    let s = Scenario::steady(2.0, 16, 1.0);
    let state = initial_state(&g, &s);
    for stepper in STEPPERS {
        let mut sc = s.clone();
        sc.stepper = stepper;
        let next = step_forced(&g, &state, &sc, &StepControl::new(1e-3), Some(&Uniform)).unwrap();
        assert!(max_diff(&next.u, &state.u) < 1e-6, "{stepper:?}");
        assert!(next.v.iter().all(|v| (v - 2.0 - 1e-3).abs() < 1e-5), "{stepper:?}");
    }
}

#[test]
fn supercritical_bump_is_flagged() {
    let mut s = Scenario::critical_bump(20.0, 256, 50.0);
    s.nonlinearity = Nonlinearity::power(2.0);
    let r = run(&s).unwrap();
    assert!(
        matches!(r.status, TerminationStatus::BlowupSuspected { .. }),
        "{} with sup u {:.4e}",
        r.status,
        r.final_state.max_u()
    );
}

#[test]
fn cosine_profile_matches_formula() {
    let g = Grid::new(16).unwrap();
    let s = Scenario::critical_bump(3.0, 16, 1.0);
    let st = initial_state(&g, &s);
    for (x, u) in g.centers().iter().zip(&st.u) {
        assert!((u - 3.0 * (1.0 + (2.0 * PI * x).cos())).abs() < 1e-13);
    }
    assert_eq!(st.u, st.v);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accepted_steps_conserve_mass_and_positivity(
        u in prop::collection::vec(0.05f64..30.0, 8..40),
        seed_v in prop::collection::vec(0.0f64..30.0, 40),
        which in 0usize..3,
        elliptic in any::<bool>(),
        central in any::<bool>(),
    ) {
        let n = u.len();
        let g = Grid::new(n).unwrap();
        let mut s = Scenario::steady(1.0, n, 1.0);
        s.stepper = STEPPERS[which];
        s.variant = if elliptic { Variant::ParabolicElliptic } else { Variant::ParabolicParabolic };
        s.advection_scheme = if central { AdvectionScheme::Central } else { AdvectionScheme::Upwind };
        let v = if elliptic { helmholtz_solve(&g, &u) } else { seed_v[..n].to_vec() };
        let state = State::new(0.0, u.clone(), v);
        let m0 = g.integrate(&u);
        let mut control = StepControl::new(1e-3);
        control.dt = 1e-3f64.min(stable_dt(&g, &state, &s, &control));
        if let Ok(next) = step(&g, &state, &s, &control) {
            prop_assert!((g.integrate(&next.u) - m0).abs() <= 1e-12 * m0);
            prop_assert!(next.min_u() >= s.positivity_floor);
        }
    }
}
