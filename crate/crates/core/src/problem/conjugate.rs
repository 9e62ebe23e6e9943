//! The conjugate regularizer `h*` and its proximal map.
//!
//! Every term here is separable, `h*(y) = sum_j phi(y_j)`, which the gap
//! oracle relies on for its closed-form inner maximization.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConjugateTerm {
    /// `h* = 0`, the conjugate of the indicator of `{0}`.
    Zero,
    /// `h*(y) = gamma/2 ||y||^2`, the conjugate of `||.||^2 / (2 gamma)`.
    Quadratic { gamma: f64 },
    /// Indicator of `[-lambda, lambda]^{d2}`, the conjugate of `lambda ||.||_1`.
    BoxIndicator { lambda: f64 },
    /// Indicator of `{0}`, the conjugate of `h = 0`.
    ZeroIndicator,
}

impl ConjugateTerm {
    pub fn quadratic(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return invalid(format!("gamma must be finite and nonnegative, got {gamma}"));
        }
        Ok(Self::Quadratic { gamma })
    }

    pub fn box_indicator(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return invalid(format!("lambda must be finite and nonnegative, got {lambda}"));
        }
        Ok(Self::BoxIndicator { lambda })
    }

    /// Strong-convexity modulus `gamma` (0 when merely convex).
    pub fn gamma(&self) -> f64 {
        match *self {
            Self::Quadratic { gamma } => gamma,
            _ => 0.0,
        }
    }

    pub fn scalar_value(&self, t: f64) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Quadratic { gamma } => 0.5 * gamma * t * t,
            Self::BoxIndicator { lambda } => {
                if t.abs() <= lambda {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Self::ZeroIndicator => {
                if t == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `h*(y)`, possibly `+inf`.
    pub fn value(&self, y: &DVector<f64>) -> f64 {
        y.iter().map(|&t| self.scalar_value(t)).sum()
    }

    fn scalar_prox(&self, tau: f64, v: f64) -> f64 {
        match *self {
            Self::Zero => v,
            Self::Quadratic { gamma } => v / (1.0 + tau * gamma),
            Self::BoxIndicator { lambda } => v.clamp(-lambda, lambda),
            Self::ZeroIndicator => 0.0,
        }
    }

    /// `argmin_u h*(u) + ||u - v||^2 / (2 tau)`.
    pub fn prox(&self, tau: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        if !(tau > 0.0) {
            return invalid(format!("prox parameter tau must be positive, got {tau}"));
        }
        Ok(v.map(|t| self.scalar_prox(tau, t)))
    }

    /// `prox_{sigma h}(v)` of the primal function `h`, via the Moreau identity
    /// `prox_{sigma h}(v) = v - sigma prox_{h*/sigma}(v / sigma)`.
    pub fn primal_prox(&self, sigma: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        if !(sigma > 0.0) {
            return invalid(format!("prox parameter sigma must be positive, got {sigma}"));
        }
        let inner = self.prox(1.0 / sigma, &(v / sigma))?;
        Ok(v.zip_map(&inner, |a, b| a - sigma * b))
    }

    /// Maximizes `c t - phi(t)` over `t in [lo, hi]`. Returns the maximizer and
    /// the maximal value, or `None` when `[lo, hi]` misses the domain of `phi`.
    pub fn maximize_linear_scalar(&self, c: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let linear_argmax = |lo: f64, hi: f64| {
            if c > 0.0 {
                hi
            } else if c < 0.0 {
                lo
            } else {
                0.0_f64.clamp(lo, hi)
            }
        };
        let t = match *self {
            Self::Zero => linear_argmax(lo, hi),
            Self::Quadratic { gamma } if gamma > 0.0 => (c / gamma).clamp(lo, hi),
            Self::Quadratic { .. } => linear_argmax(lo, hi),
            Self::BoxIndicator { lambda } => {
                let (a, b) = (lo.max(-lambda), hi.min(lambda));
                if a > b {
                    return None;
                }
                linear_argmax(a, b)
            }
            Self::ZeroIndicator => {
                if lo > 0.0 || hi < 0.0 {
                    return None;
                }
                0.0
            }
        };
        Some((t, c * t - self.scalar_value(t)))
    }
}
