//! Restricted gap, theorem monitors, and trace output.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use pdpiag::analysis::{
    averaged_iterates, default_boxes, empirical_rate, monitor_boundedness, monitor_gap, monitor_linear_rate,
    partial_gap, saddle_residual, BoxSet, GapOracle, TRACE_COLUMNS,
};
use pdpiag::certificates::{auto_stepsize, compute_a_omega, compute_c, ProblemConstants, Theorem};
use pdpiag::problem::{
    quadratic_quadratic, ConjugateTerm, LinearMap, Quadratic, QuadraticParams, SaddleProblem, SmoothComponent,
};
use pdpiag::solver::{run, DelaySchedule, ExtrapolationRule, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

#[test]
fn gap_matches_grid_brute_force_in_one_dimension() {
    // L(x, y) = x^2 - 0.5 x + 1.5 x y - h*(y) on [-1, 2] x [-1, 1].
    let f: Arc<dyn SmoothComponent> = Arc::new(Quadratic::diagonal(v(&[2.0]), v(&[0.5])).unwrap());
    for h in [
        ConjugateTerm::quadratic(0.7).unwrap(),
        ConjugateTerm::box_indicator(0.5).unwrap(),
        ConjugateTerm::Zero,
    ] {
        let p = SaddleProblem::new(
            vec![f.clone()],
            h,
            LinearMap::new(DMatrix::from_element(1, 1, 1.5)).unwrap(),
        )
        .unwrap();
        let b1 = BoxSet::new(v(&[-1.0]), v(&[2.0])).unwrap();
        let b2 = BoxSet::new(v(&[-1.0]), v(&[1.0])).unwrap();
        let (x, y) = (v(&[0.3]), v(&[-0.2]));
        let lag = |a: f64, b: f64| p.eval_lagrangian(&v(&[a]), &v(&[b])).unwrap();
        let grid = |lo: f64, hi: f64| (0..=30_000).map(move |i| lo + (hi - lo) * i as f64 / 30_000.0);
        let max_term = grid(-1.0, 1.0).map(|t| lag(x[0], t)).fold(f64::NEG_INFINITY, f64::max);
        let min_term = grid(-1.0, 2.0).map(|t| lag(t, y[0])).fold(f64::INFINITY, f64::min);
        for oracle in [GapOracle::SeparableExact, GapOracle::DEFAULT_PG] {
            let g = partial_gap(&p, &b1, &b2, &x, &y, oracle).unwrap();
            assert!((g.max_term - max_term).abs() <= 1e-7, "{h:?} {oracle:?}");
            assert!((g.min_term - min_term).abs() <= 1e-7, "{h:?} {oracle:?}");
        }
    }
}

#[test]
fn gap_is_nonnegative_and_oracles_agree() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    for diagonal in [true, false] {
        let inst = quadratic_quadratic(&QuadraticParams {
            diagonal,
            ..Default::default()
        })
        .unwrap();
        let sad = inst.saddle.unwrap();
        let p = &inst.problem;
        let (b1, b2) = default_boxes(&sad.x_hat, &sad.y_hat, &DVector::zeros(10), &DVector::zeros(10)).unwrap();
        let at_saddle = partial_gap(p, &b1, &b2, &sad.x_hat, &sad.y_hat, GapOracle::DEFAULT_PG).unwrap();
        assert!(at_saddle.value.abs() <= 1e-7, "{}", at_saddle.value);
        for _ in 0..20 {
            let x = b1.project(&(&sad.x_hat + DVector::from_fn(10, |_, _| r.random_range(-3.0..3.0))));
            let y = b2.project(&(&sad.y_hat + DVector::from_fn(10, |_, _| r.random_range(-3.0..3.0))));
            let pg = partial_gap(p, &b1, &b2, &x, &y, GapOracle::DEFAULT_PG).unwrap();
            assert!(pg.exact);
            assert!(pg.value >= -1e-8);
            if diagonal {
                let ex = partial_gap(p, &b1, &b2, &x, &y, GapOracle::SeparableExact).unwrap();
                assert!((ex.value - pg.value).abs() <= 1e-6, "{} vs {}", ex.value, pg.value);
            }
        }
    }
}

#[test]
fn separable_oracle_rejects_dense_problems() {
    let inst = quadratic_quadratic(&QuadraticParams {
        diagonal: false,
        ..Default::default()
    })
    .unwrap();
    let b = BoxSet::centered(&DVector::zeros(10), 1.0).unwrap();
    let z = DVector::zeros(10);
    assert!(partial_gap(&inst.problem, &b, &b, &z, &z, GapOracle::SeparableExact).is_err());
    assert_eq!(GapOracle::for_problem(&inst.problem), GapOracle::DEFAULT_PG);
}

#[test]
fn catalog_saddle_has_small_residual() {
    let inst = quadratic_quadratic(&QuadraticParams::default()).unwrap();
    let sad = inst.saddle.unwrap();
    assert!(sad.certified());
    let (rp, rd) = saddle_residual(&inst.problem, &sad.x_hat, &sad.y_hat, 1.0).unwrap();
    assert!(rp <= 1e-10 && rd <= 1e-10);
}

#[test]
fn certified_pdhg_run_satisfies_boundedness_and_gap_bounds() {
    let inst = quadratic_quadratic(&QuadraticParams::default()).unwrap();
    let sad = inst.saddle.unwrap();
    let p = &inst.problem;
    let consts = ProblemConstants::of(p);
    let schedule = DelaySchedule::Cyclic;
    let auto = auto_stepsize(&consts, schedule.max_delay(5), Theorem::Thm1, 1.0).unwrap();
    let config = RunConfig::new(auto.steps, ExtrapolationRule::Pdhg, schedule, 2000)
        .with_reference(sad.x_hat.clone(), sad.y_hat.clone());
    let (x0, y0) = (DVector::from_element(10, 1.0), DVector::zeros(10));
    let trace = run(p, &x0, &y0, &config, &mut []).unwrap();
    let c = compute_c(auto.steps.sigma, auto.steps.tau, consts.k_norm).unwrap();
    let report = monitor_boundedness(&trace, c, &sad.x_hat, &sad.y_hat, auto.steps);
    assert!(report.passed, "{report:?}");
    let (b1, b2) = default_boxes(&sad.x_hat, &sad.y_hat, &x0, &y0).unwrap();
    let gaps = monitor_gap(&trace, p, &b1, &b2, GapOracle::SeparableExact, &x0, &y0, auto.steps, &[10, 100, 1000])
        .unwrap();
    assert!(gaps.passed && !gaps.inexact);
    assert!(gaps.points.iter().all(|g| g.gap >= -1e-8));
}

#[test]
fn certified_theta_run_contracts_linearly() {
    let inst = quadratic_quadratic(&QuadraticParams::default()).unwrap();
    let sad = inst.saddle.unwrap();
    let p = &inst.problem;
    let consts = ProblemConstants::of(p);
    let schedule = DelaySchedule::Cyclic;
    let auto = auto_stepsize(&consts, schedule.max_delay(5), Theorem::Thm2, 1.0).unwrap();
    let theta = auto.theta.unwrap();
    let rc = compute_a_omega(theta, auto.steps.sigma, auto.steps.tau, consts.strong_convexity, consts.gamma, consts.k_norm)
        .unwrap();
    let config = RunConfig::new(auto.steps, ExtrapolationRule::Theta { theta }, schedule, 3000)
        .with_reference(sad.x_hat.clone(), sad.y_hat.clone());
    let trace = run(p, &DVector::from_element(10, 1.0), &DVector::zeros(10), &config, &mut []).unwrap();
    let report = monitor_linear_rate(&trace, rc.omega, &sad.x_hat, &sad.y_hat, auto.steps, consts.k_norm);
    assert!(report.passed, "worst {}", report.worst_violation);
    let slope = empirical_rate(&trace, 1e-20).unwrap().unwrap();
    assert!(slope <= rc.omega.ln() + 0.05);
}

#[test]
fn averaging_excludes_the_initial_point() {
    let f: Arc<dyn SmoothComponent> = Arc::new(Quadratic::diagonal(v(&[1.0]), v(&[0.0])).unwrap());
    let p = SaddleProblem::new(vec![f], ConjugateTerm::Zero, LinearMap::zero(1, 1).unwrap()).unwrap();
    let config = RunConfig::new(
        pdpiag::solver::StepSizes::new(0.5, 0.5).unwrap(),
        ExtrapolationRule::Pdhg,
        DelaySchedule::Cyclic,
        3,
    );
    let trace = run(&p, &v(&[8.0]), &v(&[0.0]), &config, &mut []).unwrap();
    // x_k = 8 / 2^k, so the mean of x_1..x_3 is (4 + 2 + 1) / 3.
    let (xb, _) = averaged_iterates(&trace, 3).unwrap();
    assert!((xb[0] - 7.0 / 3.0).abs() < 1e-15);
    assert!(averaged_iterates(&trace, 4).is_err());
    assert!(averaged_iterates(&trace, 0).is_err());
}

#[test]
fn csv_layout() {
    let inst = quadratic_quadratic(&QuadraticParams::default()).unwrap();
    let sad = inst.saddle.unwrap();
    let config = RunConfig::new(
        pdpiag::solver::StepSizes::new(0.01, 0.01).unwrap(),
        ExtrapolationRule::ArrowHurwicz,
        DelaySchedule::Cyclic,
        5,
    )
    .with_reference(sad.x_hat, sad.y_hat);
    let trace = run(&inst.problem, &DVector::zeros(10), &DVector::zeros(10), &config, &mut []).unwrap();
    let csv = trace.to_csv_string();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), TRACE_COLUMNS.join(","));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 6);
    for (k, row) in rows.iter().enumerate() {
        let fields: Vec<_> = row.split(',').collect();
        assert_eq!(fields.len(), TRACE_COLUMNS.len());
        assert_eq!(fields[0], k.to_string());
        assert!(fields[3].parse::<f64>().unwrap() >= 0.0);
        assert_eq!(fields[7], "");
    }
}
