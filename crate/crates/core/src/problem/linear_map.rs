//! The coupling operator `K` and its spectral norm.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};

/// Relative tolerance used for the cached norm estimate.
pub const NORM_TOL: f64 = 1e-9;
/// Seed of the power-iteration start vector.
pub const NORM_SEED: u64 = 0x5eed_0f4e;
/// Lower bound on the power-iteration budget.
pub const NORM_MIN_ITERS: usize = 1000;

/// Result of a power-iteration norm estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Relative change of the estimate over the final iteration.
    pub achieved_tol: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Dense linear map `K : R^{d1} -> R^{d2}`.
#[derive(Debug, Clone)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    identity: bool,
    norm: NormEstimate,
}

impl LinearMap {
    /// Wraps a `d2 x d1` matrix and caches `||K||`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return invalid("linear map dimensions must be positive");
        }
        let max_iters = (10 * matrix.nrows().max(matrix.ncols())).max(NORM_MIN_ITERS);
        let norm = power_iteration(&matrix, NORM_TOL, max_iters, NORM_SEED);
        Ok(Self {
            matrix,
            identity: false,
            norm,
        })
    }

    pub fn identity(d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("linear map dimensions must be positive");
        }
        Ok(Self {
            matrix: DMatrix::identity(d, d),
            identity: true,
            norm: NormEstimate {
                value: 1.0,
                achieved_tol: 0.0,
                converged: true,
                iterations: 0,
            },
        })
    }

    pub fn zero(d2: usize, d1: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(d2, d1))
    }

    pub fn d1(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn d2(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `K x`.
    pub fn forward(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("K x", x.len(), self.d1())?;
        Ok(&self.matrix * x)
    }

    /// `K^T y`.
    pub fn adjoint(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("K^T y", y.len(), self.d2())?;
        Ok(self.matrix.tr_mul(y))
    }

    /// Cached `||K||`.
    pub fn norm(&self) -> f64 {
        self.norm.value
    }

    pub fn norm_estimate(&self) -> NormEstimate {
        self.norm
    }
}

/// Estimates `||K||` to relative tolerance `tol`.
pub fn operator_norm(map: &LinearMap, tol: f64) -> Result<NormEstimate> {
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    let max_iters = (10 * map.d1().max(map.d2())).max(NORM_MIN_ITERS);
    Ok(power_iteration(map.matrix(), tol, max_iters, NORM_SEED))
}

/// Power iteration on `K^T K` from a seeded Gaussian start vector.
///
/// Stops when the relative change of `sqrt(lambda)` drops to `tol`. On
/// budget exhaustion the best estimate is returned with `converged = false`.
pub fn power_iteration(k: &DMatrix<f64>, tol: f64, max_iters: usize, seed: u64) -> NormEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(k.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut estimate = 0.0_f64;
    let mut change = f64::INFINITY;
    for it in 1..=max_iters {
        let nv = v.norm();
        if nv == 0.0 {
            // K^T K v vanished: K is zero on the current Krylov space.
            return NormEstimate {
                value: estimate,
                achieved_tol: 0.0,
                converged: true,
                iterations: it,
            };
        }
        v /= nv;
        let kv = k * &v;
        let next = kv.norm();
        change = if next > 0.0 {
            (next - estimate).abs() / next
        } else {
            0.0
        };
        estimate = next;
        if change <= tol {
            return NormEstimate {
                value: estimate,
                achieved_tol: change,
                converged: true,
                iterations: it,
            };
        }
        v = k.tr_mul(&kv);
    }
    NormEstimate {
        value: estimate,
        achieved_tol: change,
        converged: false,
        iterations: max_iters,
    }
}
