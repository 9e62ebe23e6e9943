//! Post-hoc bound monitors. Each is a pure function of a stored trace and
//! the run constants, so re-running one on the same trace is deterministic.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{averaged_iterates, partial_gap, BoxSet, ConvergenceTrace, GapOracle};
use crate::error::{invalid, Result};
use crate::problem::SaddleProblem;
use crate::solver::StepSizes;

/// Absolute slack granted to every bound: `1e-9 + 1e-9 |bound|`.
pub fn bound_tolerance(bound: f64) -> f64 {
    1e-9 + 1e-9 * bound.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub k: usize,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub name: String,
    pub checks: Vec<BoundCheck>,
    pub passed: bool,
    /// Largest `value - bound` over failed checks, zero if none failed.
    pub worst_violation: f64,
    pub violations: usize,
}

impl MonitorReport {
    fn from_checks(name: &str, checks: Vec<BoundCheck>) -> Self {
        let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
        let worst_violation = failed.iter().map(|c| c.value - c.bound).fold(0.0, f64::max);
        Self {
            name: name.to_string(),
            passed: failed.is_empty(),
            violations: failed.len(),
            worst_violation,
            checks,
        }
    }

    /// Per-iteration pass/fail series.
    pub fn series(&self) -> Vec<bool> {
        self.checks.iter().map(|c| c.passed).collect()
    }
}

fn check(k: usize, value: f64, bound: f64) -> BoundCheck {
    BoundCheck {
        k,
        value,
        bound,
        passed: value <= bound + bound_tolerance(bound),
    }
}

/// `||x - x^||^2 / (2 sigma) + ||y - y^||^2 / (2 tau)`.
pub fn lyapunov(
    x: &DVector<f64>,
    y: &DVector<f64>,
    x_hat: &DVector<f64>,
    y_hat: &DVector<f64>,
    steps: StepSizes,
) -> f64 {
    (x - x_hat).norm_squared() / (2.0 * steps.sigma) + (y - y_hat).norm_squared() / (2.0 * steps.tau)
}

/// Checks `V_k <= C V_0` at every recorded iterate.
pub fn monitor_boundedness(
    trace: &ConvergenceTrace,
    c_const: f64,
    x_hat: &DVector<f64>,
    y_hat: &DVector<f64>,
    steps: StepSizes,
) -> MonitorReport {
    let r0 = &trace.records()[0];
    let bound = c_const * lyapunov(&r0.x, &r0.y, x_hat, y_hat, steps);
    let checks = trace
        .records()
        .iter()
        .map(|r| check(r.k, lyapunov(&r.x, &r.y, x_hat, y_hat, steps), bound))
        .collect();
    MonitorReport::from_checks("boundedness", checks)
}

/// Checks `||y_k - y^||^2/(2 tau) + (1 - sigma tau ||K||^2) ||x_k - x^||^2/(2 sigma) <= omega^k V_0`.
pub fn monitor_linear_rate(
    trace: &ConvergenceTrace,
    omega: f64,
    x_hat: &DVector<f64>,
    y_hat: &DVector<f64>,
    steps: StepSizes,
    k_norm: f64,
) -> MonitorReport {
    let StepSizes { sigma, tau } = steps;
    let coupling = 1.0 - sigma * tau * k_norm * k_norm;
    let r0 = &trace.records()[0];
    let v0 = lyapunov(&r0.x, &r0.y, x_hat, y_hat, steps);
    let checks = trace
        .records()
        .iter()
        .map(|r| {
            let value = (&r.y - y_hat).norm_squared() / (2.0 * tau) + coupling * (&r.x - x_hat).norm_squared() / (2.0 * sigma);
            check(r.k, value, omega.powi(r.k as i32) * v0)
        })
        .collect();
    MonitorReport::from_checks("linear_rate", checks)
}

/// `max_{(x, y) in B1 x B2} ||x - x0||^2/(2 sigma) + ||y - y0||^2/(2 tau)`.
pub fn box_radius_term(b1: &BoxSet, b2: &BoxSet, x0: &DVector<f64>, y0: &DVector<f64>, steps: StepSizes) -> f64 {
    b1.max_dist_sq(x0) / (2.0 * steps.sigma) + b2.max_dist_sq(y0) / (2.0 * steps.tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub m: usize,
    pub gap: f64,
    pub bound: f64,
    /// `gap <= bound + tol`.
    pub passed: bool,
    /// Oracle met its tolerance.
    pub exact: bool,
    pub achieved_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSeries {
    pub points: Vec<GapPoint>,
    pub passed: bool,
    /// Some checkpoint was evaluated inexactly.
    pub inexact: bool,
}

/// Restricted gap of the averaged iterates against `(1/M) max_box_term` at
/// each checkpoint `M`.
#[allow(clippy::too_many_arguments)]
pub fn monitor_gap(
    trace: &ConvergenceTrace,
    problem: &SaddleProblem,
    b1: &BoxSet,
    b2: &BoxSet,
    oracle: GapOracle,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    steps: StepSizes,
    checkpoints: &[usize],
) -> Result<GapSeries> {
    let radius = box_radius_term(b1, b2, x0, y0, steps);
    let mut points = Vec::with_capacity(checkpoints.len());
    for &m in checkpoints {
        let (xb, yb) = averaged_iterates(trace, m)?;
        let eval = partial_gap(problem, b1, b2, &xb, &yb, oracle)?;
        let bound = radius / m as f64;
        points.push(GapPoint {
            m,
            gap: eval.value,
            bound,
            passed: eval.value <= bound + bound_tolerance(bound) + eval.achieved_tol,
            exact: eval.exact,
            achieved_tol: eval.achieved_tol,
        });
    }
    Ok(GapSeries {
        passed: points.iter().all(|p| p.passed),
        inexact: points.iter().any(|p| !p.exact),
        points,
    })
}

/// Least-squares slope of `ln V_k` against `k`, over records whose `V_k` is
/// positive and above `floor * V_0`.
pub fn empirical_rate(trace: &ConvergenceTrace, floor: f64) -> Result<Option<f64>> {
    let v0 = match trace.records()[0].lyapunov {
        Some(v) => v,
        None => return invalid("trace carries no Lyapunov values (no reference saddle)"),
    };
    let pts: Vec<(f64, f64)> = trace
        .records()
        .iter()
        .filter_map(|r| r.lyapunov.map(|v| (r.k as f64, v)))
        .filter(|&(_, v)| v > 0.0 && v > floor * v0)
        .map(|(k, v)| (k, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(None);
    }
    let n = pts.len() as f64;
    let mk = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mk) * (p.1 - mv)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mk) * (p.0 - mk)).sum();
    Ok((sxx > 0.0).then(|| sxy / sxx))
}

/// `sup_k ||x_k - x^||` over the trace.
pub fn sup_primal_distance(trace: &ConvergenceTrace, x_hat: &DVector<f64>) -> f64 {
    trace.records().iter().map(|r| (&r.x - x_hat).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn farthest_corner_bound() {
        let b1 = BoxSet::centered(&DVector::zeros(1), 1.0).unwrap();
        let b2 = BoxSet::centered(&DVector::zeros(1), 0.0).unwrap();
        let steps = StepSizes::new(0.5, 1.0).unwrap();
        let r = box_radius_term(&b1, &b2, &DVector::zeros(1), &DVector::zeros(1), steps);
        assert_eq!(r, 1.0);
        assert_eq!(r / 10.0, 0.1);
    }

    #[test]
    fn tolerance_shape() {
        assert_eq!(bound_tolerance(0.0), 1e-9);
        assert!((bound_tolerance(-2.0) - 3e-9).abs() < 1e-24);
    }
}
