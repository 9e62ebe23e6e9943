//! Built-in problem families with known structure.
//!
//! * `quadratic-quadratic`: `f_i(x) = 1/2 x^T A_i x - b_i^T x`,
//!   `h*(y) = gamma/2 ||y||^2`. The saddle point solves a linear system.
//! * `lasso-dual`: `f_i(x) = 1/2 ||M_i x - r_i||^2` over a block of rows,
//!   `h*` the indicator of `[-lambda, lambda]^{d2}`, i.e. `h = lambda ||.||_1`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ConjugateTerm, LeastSquares, LinearMap, Quadratic, SaddleProblem, SmoothComponent};
use crate::analysis::{saddle_quadratic, SaddleCertificate};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Gaussian entries scaled by `k_scale / sqrt(d1)`.
    Random,
    /// `K = I`; requires `d1 = d2`.
    Identity,
    /// `K = 0`, decoupling primal and dual.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticParams {
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub seed: u64,
    pub gamma: f64,
    /// Ratio between the largest and smallest eigenvalue of `sum_i A_i`
    /// targeted by the generator.
    pub conditioning: f64,
    pub coupling: Coupling,
    pub k_scale: f64,
    /// Diagonal `A_i` (enables the closed-form gap oracle) or dense PSD.
    pub diagonal: bool,
}

impl Default for QuadraticParams {
    fn default() -> Self {
        Self {
            d1: 10,
            d2: 10,
            n: 5,
            seed: 0,
            gamma: 1.0,
            conditioning: 10.0,
            coupling: Coupling::Random,
            k_scale: 1.0,
            diagonal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoDualParams {
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub seed: u64,
    pub lambda: f64,
    pub rows_per_component: usize,
    pub coupling: Coupling,
    pub k_scale: f64,
}

impl Default for LassoDualParams {
    fn default() -> Self {
        Self {
            d1: 10,
            d2: 10,
            n: 5,
            seed: 0,
            lambda: 1.0,
            rows_per_component: 4,
            coupling: Coupling::Identity,
            k_scale: 1.0,
        }
    }
}

/// A generated problem, with its analytic saddle point when the family has one.
#[derive(Debug, Clone)]
pub struct CatalogInstance {
    pub problem: SaddleProblem,
    pub saddle: Option<SaddleCertificate>,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn build_coupling(rng: &mut ChaCha8Rng, kind: Coupling, d1: usize, d2: usize, scale: f64) -> Result<LinearMap> {
    match kind {
        Coupling::Random => {
            let k = gaussian_matrix(rng, d2, d1) * (scale / (d1 as f64).sqrt());
            LinearMap::new(k)
        }
        Coupling::Identity => {
            if d1 != d2 {
                return invalid("identity coupling requires d1 = d2");
            }
            LinearMap::identity(d1)
        }
        Coupling::Zero => LinearMap::zero(d2, d1),
    }
}

fn check_sizes(d1: usize, d2: usize, n: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 {
        return invalid("dimensions d1, d2 must be positive");
    }
    if n == 0 {
        return invalid("number of components N must be positive");
    }
    Ok(())
}

/// Generates a quadratic-quadratic instance and its saddle point.
pub fn quadratic_quadratic(params: &QuadraticParams) -> Result<CatalogInstance> {
    let QuadraticParams {
        d1,
        d2,
        n,
        seed,
        gamma,
        conditioning,
        coupling,
        k_scale,
        diagonal,
    } = *params;
    check_sizes(d1, d2, n)?;
    if !(gamma > 0.0) {
        return invalid("quadratic-quadratic requires gamma > 0");
    }
    if !(conditioning >= 1.0) {
        return invalid("conditioning must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coupling = build_coupling(&mut rng, coupling, d1, d2, k_scale)?;

    let mut components: Vec<Arc<dyn SmoothComponent>> = Vec::with_capacity(n);
    let mut hessian = DMatrix::zeros(d1, d1);
    let mut linear = DVector::zeros(d1);
    for _ in 0..n {
        // Each A_i contributes eigenvalues in [1, conditioning] / n.
        let eig = DVector::from_fn(d1, |_, _| (1.0 + (conditioning - 1.0) * rng.random::<f64>()) / n as f64);
        let b = gaussian_vector(&mut rng, d1);
        let a = if diagonal {
            DMatrix::from_diagonal(&eig)
        } else {
            let q = gaussian_matrix(&mut rng, d1, d1).qr().q();
            let a = &q * DMatrix::from_diagonal(&eig) * q.transpose();
            (&a + a.transpose()) * 0.5
        };
        hessian += &a;
        linear += &b;
        let comp = if diagonal {
            Quadratic::new(a, b)?
        } else {
            Quadratic::with_constants(a, b, eig.max(), eig.min())?
        };
        components.push(Arc::new(comp));
    }

    let problem = SaddleProblem::new(components, ConjugateTerm::quadratic(gamma)?, coupling)?;
    let saddle = saddle_quadratic(&hessian, &linear, problem.coupling().matrix(), gamma)?;
    Ok(CatalogInstance {
        problem,
        saddle: Some(saddle),
    })
}

/// Generates a lasso-dual instance. No analytic saddle is attached.
pub fn lasso_dual(params: &LassoDualParams) -> Result<CatalogInstance> {
    let LassoDualParams {
        d1,
        d2,
        n,
        seed,
        lambda,
        rows_per_component,
        coupling,
        k_scale,
    } = *params;
    check_sizes(d1, d2, n)?;
    if rows_per_component == 0 {
        return invalid("rows_per_component must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coupling = build_coupling(&mut rng, coupling, d1, d2, k_scale)?;
    let total_rows = (n * rows_per_component) as f64;
    let mut components: Vec<Arc<dyn SmoothComponent>> = Vec::with_capacity(n);
    for _ in 0..n {
        let rows = gaussian_matrix(&mut rng, rows_per_component, d1) / total_rows.sqrt();
        let target = gaussian_vector(&mut rng, rows_per_component);
        components.push(Arc::new(LeastSquares::new(rows, target)?));
    }
    let problem = SaddleProblem::new(components, ConjugateTerm::box_indicator(lambda)?, coupling)?;
    Ok(CatalogInstance { problem, saddle: None })
}
