//! Smooth components `f_i` of the primal objective.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, invalid, Result};

/// A smooth convex summand `f_i : R^{d1} -> R` together with its declared
/// smoothness constant `L_i` and strong-convexity modulus `delta_i`.
///
/// `delta_i` may be negative; only `delta_i <= L_i` is required.
pub trait SmoothComponent: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Declared `L_i`.
    fn smoothness(&self) -> f64;

    /// Declared `delta_i`.
    fn strong_convexity(&self) -> f64;

    /// Exposes `f_i(x) = 1/2 sum_j d_j x_j^2 - sum_j b_j x_j + const` when the
    /// component has that form. Enables the closed-form gap oracle.
    fn diagonal_quadratic(&self) -> Option<DiagonalQuadratic> {
        None
    }
}

/// Coefficients of a separable quadratic `1/2 sum d_j x_j^2 - sum b_j x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalQuadratic {
    pub diag: DVector<f64>,
    pub linear: DVector<f64>,
}

impl DiagonalQuadratic {
    pub fn accumulate(&mut self, other: &DiagonalQuadratic) {
        self.diag += &other.diag;
        self.linear += &other.linear;
    }
}

/// Extreme eigenvalues of a symmetric matrix, `(min, max)`.
pub(crate) fn symmetric_spectrum(a: &DMatrix<f64>) -> (f64, f64) {
    if a.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = a.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    a.iter().enumerate().all(|(idx, &v)| {
        let (r, c) = (idx % a.nrows(), idx / a.nrows());
        r == c || v == 0.0
    })
}

/// `f(x) = 1/2 x^T A x - b^T x` with `A` symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    smoothness: f64,
    strong_convexity: f64,
}

impl Quadratic {
    /// Builds the component and derives `L_i = lambda_max(A)`,
    /// `delta_i = lambda_min(A)`.
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        Self::validate(&hessian, &linear)?;
        let (lo, hi) = symmetric_spectrum(&hessian);
        Ok(Self {
            hessian,
            linear,
            smoothness: hi.max(0.0),
            strong_convexity: lo,
        })
    }

    /// Builds the component with caller-declared constants. The constants are
    /// not checked against `A`; use the assumption validators for that.
    pub fn with_constants(
        hessian: DMatrix<f64>,
        linear: DVector<f64>,
        smoothness: f64,
        strong_convexity: f64,
    ) -> Result<Self> {
        Self::validate(&hessian, &linear)?;
        if strong_convexity > smoothness {
            return invalid(format!(
                "delta_i = {strong_convexity} exceeds L_i = {smoothness}"
            ));
        }
        Ok(Self {
            hessian,
            linear,
            smoothness,
            strong_convexity,
        })
    }

    /// Diagonal quadratic `1/2 sum d_j x_j^2 - b^T x`.
    pub fn diagonal(diag: DVector<f64>, linear: DVector<f64>) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&diag), linear)
    }

    /// Linear function `<c, x>`, i.e. `A = 0`, `b = -c`.
    pub fn linear(c: DVector<f64>) -> Self {
        let d = c.len();
        Self {
            hessian: DMatrix::zeros(d, d),
            linear: -c,
            smoothness: 0.0,
            strong_convexity: 0.0,
        }
    }

    fn validate(hessian: &DMatrix<f64>, linear: &DVector<f64>) -> Result<()> {
        if !hessian.is_square() {
            return invalid("quadratic hessian must be square");
        }
        check_dim("quadratic linear term", linear.len(), hessian.nrows())?;
        let asym = (hessian - hessian.transpose()).amax();
        if asym > 1e-12 * hessian.amax().max(1.0) {
            return invalid("quadratic hessian must be symmetric");
        }
        Ok(())
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.linear
    }
}

impl SmoothComponent for Quadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) - self.linear.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.hessian * x - &self.linear
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    fn diagonal_quadratic(&self) -> Option<DiagonalQuadratic> {
        is_diagonal(&self.hessian).then(|| DiagonalQuadratic {
            diag: self.hessian.diagonal(),
            linear: self.linear.clone(),
        })
    }
}

/// Least squares over a block of rows: `f(x) = 1/2 ||M x - r||^2`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    rows: DMatrix<f64>,
    target: DVector<f64>,
    smoothness: f64,
    strong_convexity: f64,
}

impl LeastSquares {
    pub fn new(rows: DMatrix<f64>, target: DVector<f64>) -> Result<Self> {
        check_dim("least-squares target", target.len(), rows.nrows())?;
        let gram = rows.transpose() * &rows;
        let (lo, hi) = symmetric_spectrum(&gram);
        Ok(Self {
            rows,
            target,
            smoothness: hi.max(0.0),
            strong_convexity: lo.max(0.0),
        })
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }
}

impl SmoothComponent for LeastSquares {
    fn dim(&self) -> usize {
        self.rows.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.rows * x - &self.target).norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.rows.tr_mul(&(&self.rows * x - &self.target))
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }
}

type ValueFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// Black-box component given by closures and declared constants.
pub struct FnComponent {
    dim: usize,
    value: Box<ValueFn>,
    gradient: Box<GradientFn>,
    smoothness: f64,
    strong_convexity: f64,
}

impl FnComponent {
    pub fn new(
        dim: usize,
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        smoothness: f64,
        strong_convexity: f64,
    ) -> Result<Self> {
        if strong_convexity > smoothness {
            return invalid(format!(
                "delta_i = {strong_convexity} exceeds L_i = {smoothness}"
            ));
        }
        Ok(Self {
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
            smoothness,
            strong_convexity,
        })
    }
}

impl fmt::Debug for FnComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnComponent")
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .field("strong_convexity", &self.strong_convexity)
            .finish_non_exhaustive()
    }
}

impl SmoothComponent for FnComponent {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }
}
