//! Step-size admissibility checks and rate constants for the three
//! extrapolation variants, and a verifier for the delayed-sequence lemma
//! behind the linear rate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problem::SaddleProblem;
use crate::solver::{ExtrapolationRule, StepSizes};

/// Which convergence result a parameter set is certified against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// `ybar = 2 y_k - y_{k-1}`: bounded iterates and `O(1/M)` ergodic gap.
    Thm1,
    /// `ybar = y_k + theta (y_k - y_{k-1})`: linear rate under strong convexity.
    Thm2,
    /// `ybar = y_k` (Arrow-Hurwicz): `O(1/M)` ergodic gap.
    Thm3,
}

impl Theorem {
    pub fn rule(&self, theta: Option<f64>) -> ExtrapolationRule {
        match self {
            Self::Thm1 => ExtrapolationRule::Pdhg,
            Self::Thm2 => ExtrapolationRule::Theta { theta: theta.unwrap_or(1.0) },
            Self::Thm3 => ExtrapolationRule::ArrowHurwicz,
        }
    }
}

/// Constants of a problem that enter the step-size conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub k_norm: f64,
    /// `L = sum L_i`.
    pub smoothness: f64,
    /// `delta = sum delta_i`.
    pub strong_convexity: f64,
    pub gamma: f64,
}

impl ProblemConstants {
    pub fn of(problem: &SaddleProblem) -> Self {
        Self {
            k_norm: problem.k_norm(),
            smoothness: problem.smoothness(),
            strong_convexity: problem.strong_convexity(),
            gamma: problem.gamma(),
        }
    }
}

/// One inequality `lhs < rhs` (strict) or `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub satisfied: bool,
    /// `rhs - lhs`.
    pub slack: f64,
}

impl ConditionCheck {
    fn new(name: &str, lhs: f64, rhs: f64, strict: bool) -> Self {
        let slack = rhs - lhs;
        let satisfied = if strict { slack > 0.0 } else { slack >= 0.0 };
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            strict,
            satisfied,
            slack,
        }
    }
}

/// A step-size certificate together with the exact inputs it was evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSizeCertificate {
    pub theorem: Theorem,
    pub sigma: f64,
    pub tau: f64,
    pub theta: Option<f64>,
    pub max_delay: usize,
    pub k_norm: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub gamma: f64,
    pub checks: Vec<ConditionCheck>,
}

impl StepSizeCertificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn check(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }

    pub fn min_slack(&self) -> f64 {
        self.checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min)
    }
}

fn base_certificate(
    theorem: Theorem,
    sigma: f64,
    tau: f64,
    theta: Option<f64>,
    max_delay: usize,
    k: &ProblemConstants,
) -> StepSizeCertificate {
    StepSizeCertificate {
        theorem,
        sigma,
        tau,
        theta,
        max_delay,
        k_norm: k.k_norm,
        smoothness: k.smoothness,
        strong_convexity: k.strong_convexity,
        gamma: k.gamma,
        checks: Vec::new(),
    }
}

fn sq(t: f64) -> f64 {
    t * t
}

/// `sqrt(tau sigma) ||K|| + sigma L (T + 1)^2 < 1` and `tau sigma ||K||^2 < 1`.
pub fn certify_thm1(sigma: f64, tau: f64, k_norm: f64, smoothness: f64, max_delay: usize) -> StepSizeCertificate {
    let consts = ProblemConstants {
        k_norm,
        smoothness,
        strong_convexity: f64::NAN,
        gamma: f64::NAN,
    };
    let mut cert = base_certificate(Theorem::Thm1, sigma, tau, None, max_delay, &consts);
    let t1 = (max_delay + 1) as f64;
    cert.checks.push(ConditionCheck::new(
        "step_condition",
        (tau * sigma).sqrt() * k_norm + sigma * smoothness * t1 * t1,
        1.0,
        true,
    ));
    cert.checks.push(ConditionCheck::new("coupling_contraction", tau * sigma * sq(k_norm), 1.0, true));
    cert
}

/// `C = (1 - tau sigma ||K||^2)^{-1}`.
pub fn compute_c(sigma: f64, tau: f64, k_norm: f64) -> Result<f64> {
    let p = tau * sigma * sq(k_norm);
    if !(p < 1.0) {
        return invalid(format!("tau sigma ||K||^2 = {p} >= 1: constant C undefined"));
    }
    Ok(1.0 / (1.0 - p))
}

fn strong_min(sigma: f64, tau: f64, delta: f64, gamma: f64) -> f64 {
    (1.5 * delta * sigma).min(2.0 * gamma * tau)
}

/// `[theta_min, 1]` with `theta_min = (min{3 delta sigma / 2, 2 gamma tau} + 1)^{-1}`.
pub fn theta_range(sigma: f64, tau: f64, delta: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) || !(gamma > 0.0) {
        return invalid(format!(
            "linear rate needs delta > 0 and gamma > 0 (got delta = {delta}, gamma = {gamma})"
        ));
    }
    Ok((1.0 / (strong_min(sigma, tau, delta, gamma) + 1.0), 1.0))
}

/// Rate constants of the linear-convergence result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    /// `a = min{1 + 3 delta sigma / 2, 1 + 2 gamma tau}^{-1}`.
    pub a: f64,
    /// `omega = a (1 + theta sigma ||K||) / (1 + a sigma ||K||)`.
    pub omega: f64,
    pub theta_min: f64,
}

/// Computes `a` and `omega` and checks `a <= omega <= theta`.
pub fn compute_a_omega(theta: f64, sigma: f64, tau: f64, delta: f64, gamma: f64, k_norm: f64) -> Result<RateConstants> {
    let (theta_min, _) = theta_range(sigma, tau, delta, gamma)?;
    let a = 1.0 / (1.0 + strong_min(sigma, tau, delta, gamma));
    let sk = sigma * k_norm;
    let omega = a * (1.0 + theta * sk) / (1.0 + a * sk);
    let slack = 4.0 * f64::EPSILON;
    if !(a <= omega * (1.0 + slack) && omega <= theta * (1.0 + slack)) {
        return Err(Error::Internal(format!(
            "rate constants out of order: a = {a}, omega = {omega}, theta = {theta}"
        )));
    }
    Ok(RateConstants { a, omega, theta_min })
}

/// `C1 = (L + delta)(T + 1)`.
pub fn compute_c1(smoothness: f64, delta: f64, max_delay: usize) -> f64 {
    (smoothness + delta) * (max_delay + 1) as f64
}

/// Conditions of the linear-rate result:
/// * `theta_range`: `theta_min <= theta <= 1`;
/// * `delay_condition`: `sigma (L + delta)(T + 1) a^{-T} + sigma ||K|| <= 1`;
/// * `coupling_contraction`: `sigma tau ||K||^2 < 1`;
/// * `extrapolation_condition`: `theta tau ||K|| <= 1`.
#[allow(clippy::too_many_arguments)]
pub fn certify_thm2(
    sigma: f64,
    tau: f64,
    theta: f64,
    delta: f64,
    gamma: f64,
    smoothness: f64,
    max_delay: usize,
    k_norm: f64,
) -> StepSizeCertificate {
    let consts = ProblemConstants {
        k_norm,
        smoothness,
        strong_convexity: delta,
        gamma,
    };
    let mut cert = base_certificate(Theorem::Thm2, sigma, tau, Some(theta), max_delay, &consts);
    cert.checks.push(ConditionCheck::new("strong_convexity_delta", 0.0, delta, true));
    cert.checks.push(ConditionCheck::new("strong_convexity_gamma", 0.0, gamma, true));
    if delta > 0.0 && gamma > 0.0 {
        let theta_min = 1.0 / (1.0 + strong_min(sigma, tau, delta, gamma));
        cert.checks.push(ConditionCheck::new("theta_lower", theta_min, theta, false));
        cert.checks.push(ConditionCheck::new("theta_upper", theta, 1.0, false));
        let inv_a_pow = (1.0 + strong_min(sigma, tau, delta, gamma)).powi(max_delay as i32);
        let lhs = sigma * compute_c1(smoothness, delta, max_delay) * inv_a_pow + sigma * k_norm;
        cert.checks.push(ConditionCheck::new("delay_condition", lhs, 1.0, false));
    }
    cert.checks.push(ConditionCheck::new("coupling_contraction", sigma * tau * sq(k_norm), 1.0, true));
    cert.checks.push(ConditionCheck::new("extrapolation_condition", theta * tau * k_norm, 1.0, false));
    cert
}

/// Conditions of the Arrow-Hurwicz result:
/// * `descent_condition`: `1 - sigma L (T + 1)^2 > 0`;
/// * `coupling_condition`: `||K||^2 tau <= delta`.
pub fn certify_thm3(sigma: f64, tau: f64, smoothness: f64, max_delay: usize, k_norm: f64, delta: f64) -> StepSizeCertificate {
    let consts = ProblemConstants {
        k_norm,
        smoothness,
        strong_convexity: delta,
        gamma: f64::NAN,
    };
    let mut cert = base_certificate(Theorem::Thm3, sigma, tau, None, max_delay, &consts);
    let t1 = (max_delay + 1) as f64;
    cert.checks.push(ConditionCheck::new("descent_condition", sigma * smoothness * t1 * t1, 1.0, true));
    cert.checks.push(ConditionCheck::new("coupling_condition", sq(k_norm) * tau, delta, false));
    cert
}

/// Certifies `(sigma, tau, theta)` for `theorem` on a problem.
pub fn certify(
    theorem: Theorem,
    steps: StepSizes,
    theta: Option<f64>,
    consts: &ProblemConstants,
    max_delay: usize,
) -> StepSizeCertificate {
    let StepSizes { sigma, tau } = steps;
    let mut cert = match theorem {
        Theorem::Thm1 => certify_thm1(sigma, tau, consts.k_norm, consts.smoothness, max_delay),
        Theorem::Thm2 => certify_thm2(
            sigma,
            tau,
            theta.unwrap_or(1.0),
            consts.strong_convexity,
            consts.gamma,
            consts.smoothness,
            max_delay,
            consts.k_norm,
        ),
        Theorem::Thm3 => certify_thm3(sigma, tau, consts.smoothness, max_delay, consts.k_norm, consts.strong_convexity),
    };
    cert.strong_convexity = consts.strong_convexity;
    cert.gamma = consts.gamma;
    cert
}

/// Result of [`auto_stepsize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoStep {
    pub steps: StepSizes,
    pub theta: Option<f64>,
    pub certificate: StepSizeCertificate,
}

/// Maximum number of halvings tried by [`auto_stepsize`].
pub const AUTO_HALVINGS: usize = 60;

/// Halves a common scale `s` from `1 / (L + ||K|| + 1)` until the certificate
/// of `theorem` passes with `sigma = s`, `tau = ratio * s`. For the linear
/// rate, `theta` is the midpoint of `[theta_min, 1]`.
pub fn auto_stepsize(consts: &ProblemConstants, max_delay: usize, theorem: Theorem, ratio: f64) -> Result<AutoStep> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return invalid(format!("tau/sigma ratio must be positive, got {ratio}"));
    }
    if theorem == Theorem::Thm2 && !(consts.strong_convexity > 0.0 && consts.gamma > 0.0) {
        return Err(Error::Infeasible(format!(
            "linear rate needs delta > 0 and gamma > 0 (delta = {}, gamma = {})",
            consts.strong_convexity, consts.gamma
        )));
    }
    let mut s = 1.0 / (consts.smoothness + consts.k_norm + 1.0);
    for _ in 0..=AUTO_HALVINGS {
        let steps = StepSizes {
            sigma: s,
            tau: ratio * s,
        };
        let theta = (theorem == Theorem::Thm2).then(|| {
            let (lo, hi) = theta_range(steps.sigma, steps.tau, consts.strong_convexity, consts.gamma)
                .expect("strong convexity checked above");
            0.5 * (lo + hi)
        });
        let certificate = certify(theorem, steps, theta, consts, max_delay);
        if certificate.passed() {
            return Ok(AutoStep {
                steps,
                theta,
                certificate,
            });
        }
        s *= 0.5;
    }
    Err(Error::Infeasible(format!(
        "no certified step sizes for {theorem:?} with T = {max_delay} after {AUTO_HALVINGS} halvings"
    )))
}

/// Verdict of [`lemma1_verify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceVerdict {
    /// `V_k >= V_{k+1} / a + b w_k - c sum_{j=k-k0}^{k} w_j` for every `k`.
    pub hypothesis_ok: bool,
    /// `c / (1 - a) * (1 - a^{k0+1}) / a^{k0} <= b`.
    pub condition_ok: bool,
    /// `V_k <= a^k V_0` for every `k`.
    pub conclusion_ok: bool,
}

/// Left side of the lemma's condition on `(a, c, k0)`.
pub fn lemma1_condition_lhs(a: f64, c: f64, k0: usize) -> f64 {
    c / (1.0 - a) * (1.0 - a.powi(k0 as i32 + 1)) / a.powi(k0 as i32)
}

/// Checks hypothesis, condition, and conclusion of the delayed-sequence
/// lemma on concrete sequences. Terms `w_j` with `j < 0` are zero.
pub fn lemma1_verify(v: &[f64], w: &[f64], a: f64, b: f64, c: f64, k0: usize) -> Result<SequenceVerdict> {
    if v.len() != w.len() {
        return invalid(format!("sequence lengths differ: {} vs {}", v.len(), w.len()));
    }
    if v.is_empty() {
        return invalid("sequences must be nonempty");
    }
    if !(a > 0.0 && a < 1.0) {
        return invalid(format!("a must lie in (0, 1), got {a}"));
    }
    if !(b >= 0.0) || !(c >= 0.0) {
        return invalid("b and c must be nonnegative");
    }
    if k0 < 1 {
        return invalid("k0 must be a positive integer");
    }
    if w.iter().any(|&x| !(x >= 0.0)) {
        return invalid("the w sequence must be nonnegative");
    }

    let mut hypothesis_ok = true;
    for k in 0..v.len() - 1 {
        let window: f64 = w[k.saturating_sub(k0)..=k].iter().sum();
        let rhs = v[k + 1] / a + b * w[k] - c * window;
        let tol = 1e-12 * (v[k].abs() + (v[k + 1] / a).abs() + b * w[k] + c * window);
        if v[k] < rhs - tol {
            hypothesis_ok = false;
            break;
        }
    }
    let condition_ok = lemma1_condition_lhs(a, c, k0) <= b;
    let conclusion_ok = v.iter().enumerate().all(|(k, &vk)| {
        let bound = a.powi(k as i32) * v[0];
        vk <= bound + 1e-9 * (bound.abs() + vk.abs())
    });
    Ok(SequenceVerdict {
        hypothesis_ok,
        condition_ok,
        conclusion_ok,
    })
}
