//! Optimality measurement: restricted primal-dual gap on boxes, analytic
//! saddle points, averaged iterates, and bound monitors.

mod monitors;
mod trace;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::problem::{ConjugateTerm, SaddleProblem};

pub use monitors::{
    box_radius_term, empirical_rate, lyapunov, monitor_boundedness, monitor_gap, monitor_linear_rate, sup_primal_distance,
    BoundCheck, GapPoint, GapSeries, MonitorReport,
};
pub use trace::{ConvergenceTrace, GapAnnotation, Termination, TraceHeader, TraceRecord, TRACE_COLUMNS};

/// Axis-aligned box `{ z : lower <= z <= upper }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxSet {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        check_dim("box upper", upper.len(), lower.len())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return invalid("box requires lower <= upper componentwise");
        }
        Ok(Self { lower, upper })
    }

    /// Cube of the given half-width around `center`.
    pub fn centered(center: &DVector<f64>, half_width: f64) -> Result<Self> {
        if !(half_width >= 0.0) {
            return invalid("box half-width must be nonnegative");
        }
        Self::new(center.add_scalar(-half_width), center.add_scalar(half_width))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.len() == self.dim() && z.iter().zip(self.lower.iter().zip(self.upper.iter())).all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn project(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(z.len(), |j, _| z[j].clamp(self.lower[j], self.upper[j]))
    }

    pub fn diameter(&self) -> f64 {
        (&self.upper - &self.lower).norm()
    }

    /// `max_{z in box} ||z - p||^2`, attained at the farther endpoint per axis.
    pub fn max_dist_sq(&self, p: &DVector<f64>) -> f64 {
        (0..self.dim())
            .map(|j| {
                let a = p[j] - self.lower[j];
                let b = self.upper[j] - p[j];
                let far = a.abs().max(b.abs());
                far * far
            })
            .sum()
    }
}

/// Boxes centered at the saddle with half-width
/// `4 max(||x0 - x^||, ||y0 - y^||, 1)`.
pub fn default_boxes(
    x_hat: &DVector<f64>,
    y_hat: &DVector<f64>,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
) -> Result<(BoxSet, BoxSet)> {
    let r = 4.0 * (x0 - x_hat).norm().max((y0 - y_hat).norm()).max(1.0);
    Ok((BoxSet::centered(x_hat, r)?, BoxSet::centered(y_hat, r)?))
}

/// Strategy for the inner problems of the restricted gap.
///
/// The dual inner maximization is always closed form since every conjugate
/// term is separable; the strategy selects how the primal inner minimization
/// is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GapOracle {
    /// Coordinatewise closed form; needs a diagonal-quadratic `f`.
    SeparableExact,
    /// Accelerated projected gradient on the primal box.
    ProjectedGradient { tol: f64, max_iters: usize },
}

impl GapOracle {
    pub const DEFAULT_PG: GapOracle = GapOracle::ProjectedGradient {
        tol: 1e-8,
        max_iters: 100_000,
    };

    /// The exact strategy when the problem admits it, else projected gradient.
    pub fn for_problem(problem: &SaddleProblem) -> Self {
        if problem.diagonal_quadratic().is_some() {
            Self::SeparableExact
        } else {
            Self::DEFAULT_PG
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEvaluation {
    pub value: f64,
    /// `max_{y' in B2} L(x, y')`.
    pub max_term: f64,
    /// `min_{x' in B1} L(x', y)`.
    pub min_term: f64,
    /// Bound on the error of `value`.
    pub achieved_tol: f64,
    /// False when the oracle missed its tolerance.
    pub exact: bool,
    /// Whether `(x, y)` lies in `B1 x B2`; nonnegativity is only guaranteed then.
    pub inside_boxes: bool,
}

fn dual_max(problem: &SaddleProblem, x: &DVector<f64>, b2: &BoxSet) -> Result<f64> {
    let kx = problem.coupling().forward(x)?;
    let h: &ConjugateTerm = problem.conjugate();
    let mut y_star = DVector::zeros(b2.dim());
    for j in 0..b2.dim() {
        let (t, _) = h
            .maximize_linear_scalar(kx[j], b2.lower()[j], b2.upper()[j])
            .ok_or_else(|| Error::InvalidArgument("dual box does not meet the domain of h*".into()))?;
        y_star[j] = t;
    }
    problem.eval_lagrangian(x, &y_star)
}

fn primal_min_exact(problem: &SaddleProblem, kty: &DVector<f64>, b1: &BoxSet) -> Result<DVector<f64>> {
    let dq = problem
        .diagonal_quadratic()
        .ok_or_else(|| Error::InvalidArgument("separable_exact oracle needs a diagonal quadratic f".into()))?;
    Ok(DVector::from_fn(b1.dim(), |j, _| {
        let (lo, hi) = (b1.lower()[j], b1.upper()[j]);
        let (d, lin) = (dq.diag[j], kty[j] - dq.linear[j]);
        // min 1/2 d t^2 + lin t on [lo, hi]
        if d > 0.0 {
            (-lin / d).clamp(lo, hi)
        } else if lin > 0.0 {
            lo
        } else if lin < 0.0 {
            hi
        } else {
            0.0_f64.clamp(lo, hi)
        }
    }))
}

/// FISTA with adaptive restart on `f(x) + <x, K^T y>` over `B1`.
/// Returns the final point and `||G|| diam(B1)`, where `G` is the gradient
/// mapping at the last iterate.
fn primal_min_pg(
    problem: &SaddleProblem,
    kty: &DVector<f64>,
    b1: &BoxSet,
    tol: f64,
    max_iters: usize,
) -> Result<(DVector<f64>, f64)> {
    let lip = problem.smoothness();
    let grad = |z: &DVector<f64>| -> Result<DVector<f64>> { Ok(problem.grad_full(z)? + kty) };
    let diam = b1.diameter().max(f64::MIN_POSITIVE);
    let mut x = b1.project(&((b1.lower() + b1.upper()) * 0.5));
    let mut z = x.clone();
    let mut t = 1.0_f64;
    let mut achieved = f64::INFINITY;
    for _ in 0..max_iters {
        let x_next = b1.project(&(&z - grad(&z)? / lip));
        let mapping = (&z - &x_next).norm() * lip;
        achieved = mapping * diam;
        if achieved <= tol {
            x = x_next;
            break;
        }
        if (&z - &x_next).dot(&(&x_next - &x)) > 0.0 {
            // Restart momentum.
            t = 1.0;
            z = x_next.clone();
            x = x_next;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        x = x_next;
        t = t_next;
    }
    Ok((x, achieved))
}

/// `G(x, y) = max_{y' in B2} L(x, y') - min_{x' in B1} L(x', y)`.
pub fn partial_gap(
    problem: &SaddleProblem,
    b1: &BoxSet,
    b2: &BoxSet,
    x: &DVector<f64>,
    y: &DVector<f64>,
    oracle: GapOracle,
) -> Result<GapEvaluation> {
    check_dim("B1", b1.dim(), problem.d1())?;
    check_dim("B2", b2.dim(), problem.d2())?;
    check_dim("x", x.len(), problem.d1())?;
    check_dim("y", y.len(), problem.d2())?;
    let inside_boxes = b1.contains(x) && b2.contains(y);
    let max_term = dual_max(problem, x, b2)?;
    let kty = problem.coupling().adjoint(y)?;
    let (x_star, achieved_tol, exact) = match oracle {
        GapOracle::SeparableExact => (primal_min_exact(problem, &kty, b1)?, 0.0, true),
        GapOracle::ProjectedGradient { tol, max_iters } => {
            let (xs, ach) = primal_min_pg(problem, &kty, b1, tol, max_iters)?;
            (xs, ach, ach <= tol)
        }
    };
    let min_term = problem.eval_lagrangian(&x_star, y)?;
    Ok(GapEvaluation {
        value: max_term - min_term,
        max_term,
        min_term,
        achieved_tol,
        exact,
        inside_boxes,
    })
}

/// Means of iterates `1..=m` of a trace (the initial point is excluded).
pub fn averaged_iterates(trace: &ConvergenceTrace, m: usize) -> Result<(DVector<f64>, DVector<f64>)> {
    if m == 0 {
        return invalid("averaging window M must be at least 1");
    }
    if m > trace.completed_iterations() {
        return invalid(format!(
            "averaging window M = {m} exceeds {} recorded iterations",
            trace.completed_iterations()
        ));
    }
    let recs = &trace.records()[1..=m];
    let mut sx = recs[0].x.clone();
    let mut sy = recs[0].y.clone();
    for r in &recs[1..] {
        sx += &r.x;
        sy += &r.y;
    }
    let inv = 1.0 / m as f64;
    Ok((sx * inv, sy * inv))
}

/// Saddle point with its optimality residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleCertificate {
    pub x_hat: DVector<f64>,
    pub y_hat: DVector<f64>,
    /// `||grad f(x^) + K^T y^||`.
    pub primal_residual: f64,
    /// `||y^ - prox_{h*}(y^ + K x^)||`.
    pub dual_residual: f64,
}

impl SaddleCertificate {
    pub const TOL: f64 = 1e-8;

    pub fn certified(&self) -> bool {
        self.primal_residual <= Self::TOL && self.dual_residual <= Self::TOL
    }
}

/// Saddle point of `1/2 x^T A x - b^T x + <Kx, y> - gamma/2 ||y||^2`:
/// `x^ = (A + K^T K / gamma)^{-1} b`, `y^ = K x^ / gamma`.
pub fn saddle_quadratic(a: &DMatrix<f64>, b: &DVector<f64>, k: &DMatrix<f64>, gamma: f64) -> Result<SaddleCertificate> {
    if !a.is_square() {
        return invalid("A must be square");
    }
    check_dim("b", b.len(), a.nrows())?;
    check_dim("K columns", k.ncols(), a.nrows())?;
    if !(gamma > 0.0) {
        return invalid("gamma must be positive");
    }
    let system = a + k.transpose() * k / gamma;
    let lu = system.clone().lu();
    let mut x = lu
        .solve(b)
        .ok_or_else(|| Error::InvalidArgument("saddle system is singular".into()))?;
    if !x.iter().all(|v| v.is_finite()) {
        return invalid("saddle system is singular");
    }
    // Iterative refinement.
    for _ in 0..3 {
        let r = b - &system * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    let y = k * &x / gamma;
    let primal_residual = (a * &x - b + k.transpose() * &y).norm();
    let dual_residual = (&y - (&y + k * &x) / (1.0 + gamma)).norm();
    Ok(SaddleCertificate {
        x_hat: x,
        y_hat: y,
        primal_residual,
        dual_residual,
    })
}

/// `(||grad f(x) + K^T y||, ||y - prox_{tau h*}(y + tau K x)||)`.
pub fn saddle_residual(problem: &SaddleProblem, x: &DVector<f64>, y: &DVector<f64>, tau_ref: f64) -> Result<(f64, f64)> {
    if !(tau_ref > 0.0) {
        return invalid("reference tau must be positive");
    }
    let primal = (problem.grad_full(x)? + problem.coupling().adjoint(y)?).norm();
    let kx = problem.coupling().forward(x)?;
    let p = problem.conjugate().prox(tau_ref, &(y + kx * tau_ref))?;
    Ok((primal, (y - p).norm()))
}
