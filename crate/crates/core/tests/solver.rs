//! Solver behavior against independent reference iterations and hand-computed
//! values.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use pdpiag::analysis::Termination;
use pdpiag::problem::{
    quadratic_quadratic, ConjugateTerm, LinearMap, Quadratic, QuadraticParams, SaddleProblem, SmoothComponent,
};
use pdpiag::solver::{
    init_state, pd_piag_step, piag_step, run, AggregateUpdate, DelaySchedule, ExtrapolationRule, Monitor, PiagState,
    RunConfig, Signal, SolverState, StepSizes,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// Random SPD matrices `A_i`, vectors `b_i`, and a coupling `K`, kept in raw
/// form so reference iterations can be written without the library.
struct RawQuadratic {
    a: Vec<DMatrix<f64>>,
    b: Vec<DVector<f64>>,
    k: DMatrix<f64>,
    gamma: f64,
}

impl RawQuadratic {
    fn new(seed: u64, d1: usize, d2: usize, n: usize, gamma: f64) -> Self {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..n {
            let m = DMatrix::from_fn(d1, d1, |_, _| r.random_range(-1.0..1.0));
            a.push(&m * m.transpose() / d1 as f64 + DMatrix::identity(d1, d1) * 0.1);
            b.push(DVector::from_fn(d1, |_, _| r.random_range(-1.0..1.0)));
        }
        let k = DMatrix::from_fn(d2, d1, |_, _| r.random_range(-1.0..1.0)) / (d1 as f64).sqrt();
        Self { a, b, k, gamma }
    }

    fn problem(&self) -> SaddleProblem {
        let comps: Vec<Arc<dyn SmoothComponent>> = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| Arc::new(Quadratic::new(a.clone(), b.clone()).unwrap()) as Arc<dyn SmoothComponent>)
            .collect();
        SaddleProblem::new(
            comps,
            ConjugateTerm::quadratic(self.gamma).unwrap(),
            LinearMap::new(self.k.clone()).unwrap(),
        )
        .unwrap()
    }

    fn full_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(x.len());
        for (a, b) in self.a.iter().zip(&self.b) {
            g += a * x - b;
        }
        g
    }
}

#[test]
fn zero_delay_arrow_hurwicz_matches_reference() {
    let raw = RawQuadratic::new(1, 6, 4, 3, 0.5);
    let p = raw.problem();
    let (sigma, tau) = (0.05, 0.08);
    let steps = StepSizes::new(sigma, tau).unwrap();
    let schedule = DelaySchedule::Constant { max_delay: 0 };
    let x0 = DVector::from_element(6, 1.0);
    let y0 = DVector::from_element(4, -0.5);
    let mut state = init_state(&p, &x0, &y0).unwrap();
    let (mut x, mut y) = (x0.clone(), y0.clone());
    for _ in 0..100 {
        state = pd_piag_step(&state, &p, steps, ExtrapolationRule::ArrowHurwicz, &schedule).unwrap();
        x = &x - raw.full_gradient(&x) * sigma - raw.k.transpose() * &y * sigma;
        y = (&y + &raw.k * &x * tau) / (1.0 + tau * raw.gamma);
        assert!((state.x() - &x).amax() <= 1e-12);
        assert!((state.y() - &y).amax() <= 1e-12);
        assert!(state.delays().iter().all(|&d| d == 0));
    }
}

#[test]
fn pdhg_with_zero_delay_matches_reference() {
    let raw = RawQuadratic::new(2, 5, 5, 2, 1.0);
    let p = raw.problem();
    let (sigma, tau) = (0.04, 0.04);
    let steps = StepSizes::new(sigma, tau).unwrap();
    let schedule = DelaySchedule::RandomBounded {
        max_delay: 0,
        p: 0.3,
        seed: 9,
    };
    let mut state = init_state(&p, &DVector::zeros(5), &DVector::from_element(5, 1.0)).unwrap();
    let (mut x, mut y, mut yp) = (DVector::zeros(5), DVector::from_element(5, 1.0), DVector::from_element(5, 1.0));
    for _ in 0..100 {
        state = pd_piag_step(&state, &p, steps, ExtrapolationRule::Pdhg, &schedule).unwrap();
        let ybar = &y * 2.0 - &yp;
        x = &x - raw.full_gradient(&x) * sigma - raw.k.transpose() * ybar * sigma;
        yp = y.clone();
        y = (&y + &raw.k * &x * tau) / (1.0 + tau * raw.gamma);
        assert!((state.x() - &x).amax() <= 1e-12);
        assert!((state.y() - &y).amax() <= 1e-12);
    }
}

#[test]
fn zero_indicator_reduces_to_piag() {
    let raw = RawQuadratic::new(3, 4, 4, 4, 1.0);
    let comps: Vec<Arc<dyn SmoothComponent>> = raw
        .a
        .iter()
        .zip(&raw.b)
        .map(|(a, b)| Arc::new(Quadratic::new(a.clone(), b.clone()).unwrap()) as Arc<dyn SmoothComponent>)
        .collect();
    let p = SaddleProblem::new(comps, ConjugateTerm::ZeroIndicator, LinearMap::identity(4).unwrap()).unwrap();
    let x0 = v(&[1.0, -2.0, 0.5, 3.0]);
    let sigma = 0.05;
    for schedule in [
        DelaySchedule::Cyclic,
        DelaySchedule::RandomBounded {
            max_delay: 2,
            p: 0.4,
            seed: 1,
        },
    ] {
        let mut dual = init_state(&p, &x0, &DVector::zeros(4)).unwrap();
        let mut primal = PiagState::new(&p, &x0).unwrap();
        for _ in 0..100 {
            dual = pd_piag_step(&dual, &p, StepSizes::new(sigma, 0.3).unwrap(), ExtrapolationRule::Pdhg, &schedule)
                .unwrap();
            primal = piag_step(&p, &primal, sigma, &schedule).unwrap();
            assert_eq!(dual.x(), &primal.x);
            assert_eq!(dual.y(), &DVector::zeros(4));
            assert_eq!(dual.memory(), &primal.memory);
        }
    }
}

#[test]
fn piag_hand_replay() {
    // f_1 = x^2/2, f_2 = x^2, cyclic schedule, sigma = 0.1, x0 = 1, h = 0.
    let f1: Arc<dyn SmoothComponent> = Arc::new(Quadratic::diagonal(v(&[1.0]), v(&[0.0])).unwrap());
    let f2: Arc<dyn SmoothComponent> = Arc::new(Quadratic::diagonal(v(&[2.0]), v(&[0.0])).unwrap());
    let p = SaddleProblem::new(vec![f1, f2], ConjugateTerm::ZeroIndicator, LinearMap::identity(1).unwrap()).unwrap();
    let mut s = PiagState::new(&p, &v(&[1.0])).unwrap();
    // g_0 = 1 + 2 = 3, x_1 = 0.7; refresh component 0 at x_1.
    s = piag_step(&p, &s, 0.1, &DelaySchedule::Cyclic).unwrap();
    assert!((s.x[0] - 0.7).abs() < 1e-15);
    assert_eq!(s.memory.stamps(), &[1, 0]);
    // g_1 = 0.7 + 2 = 2.7, x_2 = 0.43; refresh component 1 at x_2.
    s = piag_step(&p, &s, 0.1, &DelaySchedule::Cyclic).unwrap();
    assert!((s.x[0] - 0.43).abs() < 1e-15);
    assert_eq!(s.memory.stamps(), &[1, 2]);
    // g_2 = 0.7 + 0.86 = 1.56, x_3 = 0.274.
    s = piag_step(&p, &s, 0.1, &DelaySchedule::Cyclic).unwrap();
    assert!((s.x[0] - 0.274).abs() < 1e-15);
}

#[test]
fn one_step_hand_values() {
    // f = x^2/2, K = 1, h* = y^2/2, x0 = 1, y0 = 1, sigma = tau = 0.5, pdhg.
    let f: Arc<dyn SmoothComponent> = Arc::new(Quadratic::diagonal(v(&[1.0]), v(&[0.0])).unwrap());
    let p = SaddleProblem::new(vec![f], ConjugateTerm::quadratic(1.0).unwrap(), LinearMap::identity(1).unwrap())
        .unwrap();
    let s0 = init_state(&p, &v(&[1.0]), &v(&[1.0])).unwrap();
    let steps = StepSizes::new(0.5, 0.5).unwrap();
    let s1 = pd_piag_step(&s0, &p, steps, ExtrapolationRule::Pdhg, &DelaySchedule::Cyclic).unwrap();
    // ybar = 1, x1 = 1 - 0.5 - 0.5 = 0, y1 = (1 + 0) / 1.5.
    assert_eq!(s1.x()[0], 0.0);
    assert!((s1.y()[0] - 2.0 / 3.0).abs() < 1e-15);
    let s2 = pd_piag_step(&s1, &p, steps, ExtrapolationRule::Pdhg, &DelaySchedule::Cyclic).unwrap();
    // ybar = 4/3 - 1 = 1/3, g = 0, x2 = -1/6, y2 = (2/3 - 1/12) / 1.5 = 7/18.
    assert!((s2.x()[0] + 1.0 / 6.0).abs() < 1e-15);
    assert!((s2.y()[0] - 7.0 / 18.0).abs() < 1e-15);
    // The input states are untouched.
    assert_eq!(s0.k(), 0);
    assert_eq!(s1.k(), 1);
}

#[test]
fn saddle_point_is_a_fixed_point() {
    let inst = quadratic_quadratic(&QuadraticParams::default()).unwrap();
    let sad = inst.saddle.unwrap();
    let steps = StepSizes::new(0.01, 0.01).unwrap();
    for rule in [
        ExtrapolationRule::Pdhg,
        ExtrapolationRule::ArrowHurwicz,
        ExtrapolationRule::Theta { theta: 0.7 },
    ] {
        let mut s = init_state(&inst.problem, &sad.x_hat, &sad.y_hat).unwrap();
        for _ in 0..50 {
            s = pd_piag_step(&s, &inst.problem, steps, rule, &DelaySchedule::Cyclic).unwrap();
        }
        assert!((s.x() - &sad.x_hat).norm() <= 1e-10);
        assert!((s.y() - &sad.y_hat).norm() <= 1e-10);
    }
}

#[test]
fn replay_matches_stored_aggregate_and_delays_are_bounded() {
    let inst = quadratic_quadratic(&QuadraticParams::default()).unwrap();
    let p = &inst.problem;
    let schedule = DelaySchedule::RandomBounded {
        max_delay: 4,
        p: 0.3,
        seed: 17,
    };
    let steps = StepSizes::new(0.01, 0.01).unwrap();
    let mut s = init_state(p, &DVector::zeros(10), &DVector::zeros(10))
        .unwrap()
        .with_history_depth(4);
    let mut worst = 0;
    for _ in 0..2000 {
        assert_eq!(&s.replay_aggregate(p).unwrap(), s.aggregate());
        worst = worst.max(*s.delays().iter().max().unwrap());
        s = pd_piag_step(&s, p, steps, ExtrapolationRule::Pdhg, &schedule).unwrap();
    }
    assert_eq!(&s.replay_aggregate(p).unwrap(), s.aggregate());
    assert_eq!(worst, 4);
}

#[test]
fn incremental_aggregate_tracks_resum() {
    let inst = quadratic_quadratic(&QuadraticParams::default()).unwrap();
    let p = &inst.problem;
    let steps = StepSizes::new(0.01, 0.01).unwrap();
    let schedule = DelaySchedule::Cyclic;
    let mut a = init_state(p, &DVector::zeros(10), &DVector::zeros(10)).unwrap();
    let mut b = a.clone().with_aggregate_update(AggregateUpdate::Incremental);
    for _ in 0..500 {
        a = pd_piag_step(&a, p, steps, ExtrapolationRule::Pdhg, &schedule).unwrap();
        b = pd_piag_step(&b, p, steps, ExtrapolationRule::Pdhg, &schedule).unwrap();
        assert!((b.aggregate() - b.memory().recomputed_sum()).amax() <= 1e-12);
        assert!((a.x() - b.x()).amax() <= 1e-10);
    }
}

struct Counter {
    seen: usize,
    stop_at: Option<usize>,
}

impl Monitor for Counter {
    fn name(&self) -> &str {
        "counter"
    }

    fn observe(&mut self, state: &SolverState) -> Signal {
        self.seen += 1;
        match self.stop_at {
            Some(k) if state.k() == k => Signal::Stop(format!("reached {k}")),
            _ => Signal::Continue,
        }
    }
}

fn default_config(max_iters: usize) -> (SaddleProblem, RunConfig, DVector<f64>, DVector<f64>) {
    let inst = quadratic_quadratic(&QuadraticParams::default()).unwrap();
    let sad = inst.saddle.unwrap();
    let config = RunConfig::new(
        StepSizes::new(0.02, 0.02).unwrap(),
        ExtrapolationRule::Pdhg,
        DelaySchedule::RandomBounded {
            max_delay: 3,
            p: 0.5,
            seed: 4,
        },
        max_iters,
    )
    .with_reference(sad.x_hat, sad.y_hat);
    (inst.problem, config, DVector::from_element(10, 1.0), DVector::zeros(10))
}

#[test]
fn runs_are_deterministic() {
    let (p, config, x0, y0) = default_config(300);
    let a = run(&p, &x0, &y0, &config, &mut []).unwrap();
    let b = run(&p, &x0, &y0, &config, &mut []).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    assert_eq!(a.records(), b.records());
}

#[test]
fn monitors_do_not_perturb_the_run() {
    let (p, config, x0, y0) = default_config(300);
    let plain = run(&p, &x0, &y0, &config, &mut []).unwrap();
    let mut c = Counter { seen: 0, stop_at: None };
    let watched = run(&p, &x0, &y0, &config, &mut [&mut c]).unwrap();
    assert_eq!(plain.records(), watched.records());
    assert_eq!(c.seen, 301);
}

#[test]
fn monitor_can_stop_a_run() {
    let (p, config, x0, y0) = default_config(300);
    let mut c = Counter {
        seen: 0,
        stop_at: Some(40),
    };
    let t = run(&p, &x0, &y0, &config, &mut [&mut c]).unwrap();
    assert_eq!(t.completed_iterations(), 40);
    assert!(matches!(t.termination(), Termination::Stopped { k: 40, .. }));
}

#[test]
fn oversized_steps_diverge_cleanly() {
    let (p, mut config, x0, y0) = default_config(5000);
    config.steps = StepSizes::new(50.0, 50.0).unwrap();
    let t = run(&p, &x0, &y0, &config, &mut []).unwrap();
    match t.termination() {
        Termination::Diverged { k } => {
            assert_eq!(*k, t.completed_iterations() + 1);
            assert!(t.records().iter().all(|r| r.x.iter().all(|v| v.is_finite())));
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn one_dimensional_quadratic_converges() {
    // f = x^2/2 - x, K = 1, h* = y^2/2: saddle at x = y = 1/2.
    let f: Arc<dyn SmoothComponent> = Arc::new(Quadratic::diagonal(v(&[1.0]), v(&[1.0])).unwrap());
    let p = SaddleProblem::new(vec![f], ConjugateTerm::quadratic(1.0).unwrap(), LinearMap::identity(1).unwrap())
        .unwrap();
    let config = RunConfig::new(
        StepSizes::new(0.3, 0.3).unwrap(),
        ExtrapolationRule::Pdhg,
        DelaySchedule::Cyclic,
        10_000,
    );
    let t = run(&p, &v(&[5.0]), &v(&[-3.0]), &config, &mut []).unwrap();
    let last = t.last();
    assert!((last.x[0] - 0.5).abs() <= 1e-6);
    assert!((last.y[0] - 0.5).abs() <= 1e-6);
}

#[test]
fn run_rejects_bad_inputs() {
    let (p, mut config, x0, y0) = default_config(10);
    assert!(run(&p, &DVector::zeros(3), &y0, &config, &mut []).is_err());
    config.max_iters = 0;
    assert!(run(&p, &x0, &y0, &config, &mut []).is_err());
    assert!(StepSizes::new(0.0, 1.0).is_err());
    assert!(StepSizes::new(1.0, f64::NAN).is_err());
}
