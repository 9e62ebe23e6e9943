//! Sampling-based validators for the declared problem constants.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SaddleProblem;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub num_samples: usize,
    pub seed: u64,
    /// Radius of the ball the sample points are drawn from.
    pub radius: f64,
    /// Relative slack granted to each inequality before it counts as violated.
    pub rel_tol: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            num_samples: 1000,
            seed: 0,
            radius: 1.0,
            rel_tol: 1e-10,
        }
    }
}

/// Outcome of one sampled inequality family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub passed: bool,
    /// Largest amount by which an inequality was violated beyond tolerance;
    /// zero when every sample passed.
    pub worst_violation: f64,
    pub samples: usize,
}

impl AssumptionCheck {
    fn new() -> Self {
        Self {
            passed: true,
            worst_violation: 0.0,
            samples: 0,
        }
    }

    /// Records the inequality `lhs <= rhs` checked with absolute slack `tol`.
    fn record(&mut self, lhs: f64, rhs: f64, tol: f64) {
        self.samples += 1;
        let excess = lhs - rhs - tol;
        if excess > 0.0 || excess.is_nan() {
            self.passed = false;
            self.worst_violation = self.worst_violation.max(if excess.is_nan() { f64::INFINITY } else { excess });
        }
    }

    fn merge(&mut self, other: &AssumptionCheck) {
        self.passed &= other.passed;
        self.worst_violation = self.worst_violation.max(other.worst_violation);
        self.samples += other.samples;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub smoothness: AssumptionCheck,
    pub strong_convexity: AssumptionCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `|f_i(y) - f_i(x) - <grad f_i(x), y - x>| <= L_i/2 ||y - x||^2`.
    pub smoothness: AssumptionCheck,
    /// `f_i(y) >= f_i(x) + <grad f_i(x), y - x> + delta_i/2 ||y - x||^2`.
    pub strong_convexity: AssumptionCheck,
    /// `h*(u) >= h*(p) + <s, u - p> + gamma/2 ||u - p||^2` for `s` in the
    /// subdifferential at `p`.
    pub conjugate_strong_convexity: AssumptionCheck,
    pub per_component: Vec<ComponentReport>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.smoothness.passed && self.strong_convexity.passed && self.conjugate_strong_convexity.passed
    }
}

fn sample_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> DVector<f64> {
    let dir = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = dir.norm();
    if n == 0.0 {
        return DVector::zeros(dim);
    }
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    dir * (r / n)
}

pub(super) fn validate(problem: &SaddleProblem, opts: &ValidationOptions) -> Result<AssumptionReport> {
    if opts.num_samples == 0 {
        return invalid("num_samples must be at least 1");
    }
    if !(opts.radius > 0.0) {
        return invalid("sampling radius must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let d1 = problem.d1();
    let mut per_component = Vec::with_capacity(problem.num_components());
    let mut smoothness = AssumptionCheck::new();
    let mut strong = AssumptionCheck::new();

    for comp in problem.components() {
        let mut a1 = AssumptionCheck::new();
        let mut b1 = AssumptionCheck::new();
        for _ in 0..opts.num_samples {
            let x = sample_ball(&mut rng, d1, opts.radius);
            let y = sample_ball(&mut rng, d1, opts.radius);
            let fx = comp.value(&x);
            let fy = comp.value(&y);
            let diff = &y - &x;
            let lin = comp.gradient(&x).dot(&diff);
            let sq = diff.norm_squared();
            let tol = opts.rel_tol * (1.0 + fx.abs() + fy.abs() + lin.abs());
            let bregman = fy - fx - lin;
            a1.record(bregman.abs(), 0.5 * comp.smoothness() * sq, tol);
            b1.record(0.5 * comp.strong_convexity() * sq, bregman, tol);
        }
        smoothness.merge(&a1);
        strong.merge(&b1);
        per_component.push(ComponentReport {
            smoothness: a1,
            strong_convexity: b1,
        });
    }

    let h = problem.conjugate();
    let gamma = h.gamma();
    let d2 = problem.d2();
    let mut b2 = AssumptionCheck::new();
    for _ in 0..opts.num_samples {
        // prox(1, w) = p implies w - p is a subgradient of h* at p.
        let w = sample_ball(&mut rng, d2, 2.0 * opts.radius);
        let p = h.prox(1.0, &w)?;
        let s = &w - &p;
        let u = sample_ball(&mut rng, d2, opts.radius);
        let hu = h.value(&u);
        if hu == f64::INFINITY {
            b2.samples += 1;
            continue;
        }
        let hp = h.value(&p);
        let diff = &u - &p;
        let lower = hp + s.dot(&diff) + 0.5 * gamma * diff.norm_squared();
        let tol = opts.rel_tol * (1.0 + hu.abs() + lower.abs());
        b2.record(lower, hu, tol);
    }

    Ok(AssumptionReport {
        smoothness,
        strong_convexity: strong,
        conjugate_strong_convexity: b2,
        per_component,
    })
}
