//! The PD-PIAG iteration
//!
//! ```text
//! g_k     = sum_i grad f_i(x_{k - tau_k^i})
//! x_{k+1} = x_k - sigma g_k - sigma K^T ybar
//! y_{k+1} = prox_{tau h*}(y_k + tau K x_{k+1})
//! ```
//!
//! with the delayed aggregate realized by a gradient memory table, plus the
//! forward-backward and PIAG baselines.

mod baseline;
mod memory;
mod schedule;

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::{ConvergenceTrace, Termination, TraceHeader, TraceRecord};
use crate::error::{check_dim, invalid, Error, Result};
use crate::problem::SaddleProblem;

pub use baseline::{fbs_step, piag_step, PiagState};
pub use memory::{refresh_memory, AggregateUpdate, GradientMemory};
pub use schedule::DelaySchedule;

/// Choice of the dual point `ybar` used in the primal update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtrapolationRule {
    /// `ybar = 2 y_k - y_{k-1}`.
    Pdhg,
    /// `ybar = y_k + theta (y_k - y_{k-1})`.
    Theta { theta: f64 },
    /// `ybar = y_k`.
    ArrowHurwicz,
}

impl ExtrapolationRule {
    pub fn extrapolate(&self, y: &DVector<f64>, y_prev: &DVector<f64>) -> DVector<f64> {
        match *self {
            Self::Pdhg => y.zip_map(y_prev, |a, b| 2.0 * a - b),
            Self::Theta { theta } => y.zip_map(y_prev, |a, b| a + theta * (a - b)),
            Self::ArrowHurwicz => y.clone(),
        }
    }
}

/// Step sizes: `sigma` (primal) and `tau` (dual).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    pub sigma: f64,
    pub tau: f64,
}

impl StepSizes {
    pub fn new(sigma: f64, tau: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return invalid(format!("sigma must be positive, got {sigma}"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid(format!("tau must be positive, got {tau}"));
        }
        Ok(Self { sigma, tau })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    k: usize,
    x: DVector<f64>,
    y: DVector<f64>,
    y_prev: DVector<f64>,
    memory: GradientMemory,
    /// `x_{k-T}, ..., x_k`, padded with `x_0` before iteration `T`.
    history: VecDeque<DVector<f64>>,
}

/// Initial state: memory at `x0`, `y_{-1} = y0`, `k = 0`.
pub fn init_state(problem: &SaddleProblem, x0: &DVector<f64>, y0: &DVector<f64>) -> Result<SolverState> {
    check_dim("x0", x0.len(), problem.d1())?;
    check_dim("y0", y0.len(), problem.d2())?;
    Ok(SolverState {
        k: 0,
        x: x0.clone(),
        y: y0.clone(),
        y_prev: y0.clone(),
        memory: GradientMemory::new(problem, x0)?,
        history: VecDeque::from(vec![x0.clone()]),
    })
}

impl SolverState {
    /// Keeps the last `max_delay + 1` iterates for replay checks.
    pub fn with_history_depth(mut self, max_delay: usize) -> Self {
        let front = self.history.front().cloned().unwrap_or_else(|| self.x.clone());
        while self.history.len() < max_delay + 1 {
            self.history.push_front(front.clone());
        }
        while self.history.len() > max_delay + 1 {
            self.history.pop_front();
        }
        self
    }

    pub fn with_aggregate_update(mut self, update: AggregateUpdate) -> Self {
        self.memory = self.memory.with_update(update);
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn y_prev(&self) -> &DVector<f64> {
        &self.y_prev
    }

    pub fn memory(&self) -> &GradientMemory {
        &self.memory
    }

    /// Current aggregate `g_k`.
    pub fn aggregate(&self) -> &DVector<f64> {
        self.memory.aggregate()
    }

    /// Delays `tau_k^i = k - s_i`.
    pub fn delays(&self) -> Vec<usize> {
        self.memory.delays(self.k)
    }

    pub fn history(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.history.iter()
    }

    /// `x_j` from the history window, for `k - T <= j <= k`; indices before 0
    /// clamp to `x_0`.
    pub fn iterate_at(&self, j: usize) -> Option<&DVector<f64>> {
        if j > self.k {
            return None;
        }
        let back = self.k - j;
        let len = self.history.len();
        if back >= len {
            return None;
        }
        self.history.get(len - 1 - back)
    }

    /// Recomputes `sum_i grad f_i(x_{s_i})` from the history window.
    pub fn replay_aggregate(&self, problem: &SaddleProblem) -> Result<DVector<f64>> {
        let grads = self
            .memory
            .stamps()
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let x = self.iterate_at(s).ok_or_else(|| {
                    Error::Internal(format!("iterate {s} for component {i} left the history window"))
                })?;
                problem.component_gradient(i, x)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(memory::ordered_sum(&grads))
    }

    fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    /// One PD-PIAG step in place.
    fn advance(
        &mut self,
        problem: &SaddleProblem,
        steps: StepSizes,
        rule: ExtrapolationRule,
        schedule: &DelaySchedule,
    ) -> Result<()> {
        let StepSizes { sigma, tau } = steps;
        let ybar = rule.extrapolate(&self.y, &self.y_prev);
        let kty = problem.coupling().adjoint(&ybar)?;
        let g = self.memory.aggregate();
        let x_new = DVector::from_fn(self.x.len(), |j, _| self.x[j] - sigma * g[j] - sigma * kty[j]);
        let kx = problem.coupling().forward(&x_new)?;
        let y_new = problem.conjugate().prox(tau, &self.y.zip_map(&kx, |a, b| a + tau * b))?;

        if !(x_new.iter().chain(y_new.iter()).all(|v| v.is_finite())) {
            return Err(Error::Diverged {
                k: self.k + 1,
                last_finite: Box::new(self.clone()),
            });
        }

        let refresh = schedule.refresh_set(self.k, self.memory.stamps());
        self.memory.refresh(&refresh, &x_new, self.k + 1, problem)?;
        self.y_prev = std::mem::replace(&mut self.y, y_new);
        self.x = x_new;
        self.k += 1;
        if !self.history.is_empty() {
            self.history.pop_front();
        }
        self.history.push_back(self.x.clone());
        Ok(())
    }
}

/// One PD-PIAG step. Pure: the input state is left untouched.
pub fn pd_piag_step(
    state: &SolverState,
    problem: &SaddleProblem,
    steps: StepSizes,
    rule: ExtrapolationRule,
    schedule: &DelaySchedule,
) -> Result<SolverState> {
    check_dim("state x", state.x.len(), problem.d1())?;
    check_dim("state y", state.y.len(), problem.d2())?;
    check_dim("memory", state.memory.len(), problem.num_components())?;
    let mut next = state.clone();
    next.advance(problem, steps, rule, schedule)?;
    Ok(next)
}

/// Verdict of a monitor callback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Signal {
    Continue,
    Stop(String),
}

/// Read-only observer invoked after initialization and after every step.
pub trait Monitor {
    fn name(&self) -> &str;
    fn observe(&mut self, state: &SolverState) -> Signal;
}

/// Parameters of a [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub steps: StepSizes,
    pub rule: ExtrapolationRule,
    pub schedule: DelaySchedule,
    pub max_iters: usize,
    /// Reference saddle point for distances and `V_k`.
    #[serde(skip)]
    pub reference: Option<(DVector<f64>, DVector<f64>)>,
    /// Record wall-clock time per iteration. Off by default so traces are
    /// reproducible byte for byte.
    pub timing: bool,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(steps: StepSizes, rule: ExtrapolationRule, schedule: DelaySchedule, max_iters: usize) -> Self {
        Self {
            steps,
            rule,
            schedule,
            max_iters,
            reference: None,
            timing: false,
            seed: None,
        }
    }

    pub fn with_reference(mut self, x_hat: DVector<f64>, y_hat: DVector<f64>) -> Self {
        self.reference = Some((x_hat, y_hat));
        self
    }
}

fn record(state: &SolverState, config: &RunConfig, start: Option<&Instant>) -> TraceRecord {
    let (dist_x, dist_y, lyapunov) = match &config.reference {
        Some((xh, yh)) => {
            let dx = (state.x() - xh).norm();
            let dy = (state.y() - yh).norm();
            let v = dx * dx / (2.0 * config.steps.sigma) + dy * dy / (2.0 * config.steps.tau);
            (Some(dx), Some(dy), Some(v))
        }
        None => (None, None, None),
    };
    TraceRecord {
        k: state.k(),
        x: state.x().clone(),
        y: state.y().clone(),
        aggregate: state.aggregate().clone(),
        delays: state.delays(),
        dist_x,
        dist_y,
        lyapunov,
        wall_ms: start.map(|t| t.elapsed().as_secs_f64() * 1e3),
    }
}

/// Runs up to `max_iters` steps and records every iterate.
///
/// Divergence and monitor stops end the run early and are recorded as the
/// trace's termination reason rather than returned as errors.
pub fn run(
    problem: &SaddleProblem,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    config: &RunConfig,
    monitors: &mut [&mut dyn Monitor],
) -> Result<ConvergenceTrace> {
    if config.max_iters == 0 {
        return invalid("max_iters must be at least 1");
    }
    config.schedule.validate()?;
    if let Some((xh, yh)) = &config.reference {
        check_dim("reference x", xh.len(), problem.d1())?;
        check_dim("reference y", yh.len(), problem.d2())?;
    }
    let max_delay = config.schedule.max_delay(problem.num_components());
    let mut state = init_state(problem, x0, y0)?.with_history_depth(max_delay);
    let start = config.timing.then(Instant::now);

    let header = TraceHeader {
        sigma: config.steps.sigma,
        tau: config.steps.tau,
        rule: config.rule,
        schedule: config.schedule,
        max_iters: config.max_iters,
        max_delay,
        n: problem.num_components(),
        d1: problem.d1(),
        d2: problem.d2(),
        seed: config.seed,
    };
    let mut records = Vec::with_capacity(config.max_iters + 1);
    records.push(record(&state, config, start.as_ref()));

    let mut termination = Termination::Completed;
    let stop = |state: &SolverState, monitors: &mut [&mut dyn Monitor]| {
        monitors.iter_mut().find_map(|m| match m.observe(state) {
            Signal::Continue => None,
            Signal::Stop(reason) => Some(Termination::Stopped {
                k: state.k(),
                monitor: m.name().to_string(),
                reason,
            }),
        })
    };
    if let Some(t) = stop(&state, monitors) {
        return Ok(ConvergenceTrace::new(header, records, t));
    }
    for _ in 0..config.max_iters {
        match state.advance(problem, config.steps, config.rule, &config.schedule) {
            Ok(()) => {}
            Err(Error::Diverged { k, .. }) => {
                termination = Termination::Diverged { k };
                break;
            }
            Err(e) => return Err(e),
        }
        records.push(record(&state, config, start.as_ref()));
        if let Some(t) = stop(&state, monitors) {
            termination = t;
            break;
        }
    }
    debug_assert!(termination != Termination::Completed || state.is_finite());
    Ok(ConvergenceTrace::new(header, records, termination))
}
