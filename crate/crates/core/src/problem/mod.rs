//! Problem data model for `min_x max_y f(x) + <Kx, y> - h*(y)` with
//! `f = sum_i f_i`.

mod catalog;
mod component;
mod conjugate;
mod linear_map;
mod validate;

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{check_dim, invalid, Result};

pub use catalog::{lasso_dual, quadratic_quadratic, CatalogInstance, Coupling, LassoDualParams, QuadraticParams};
pub use component::{DiagonalQuadratic, FnComponent, LeastSquares, Quadratic, SmoothComponent};
pub use conjugate::ConjugateTerm;
pub use linear_map::{operator_norm, power_iteration, LinearMap, NormEstimate, NORM_TOL};
pub use validate::{AssumptionCheck, AssumptionReport, ComponentReport, ValidationOptions};

/// A convex-concave saddle-point problem. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SaddleProblem {
    components: Vec<Arc<dyn SmoothComponent>>,
    conjugate: ConjugateTerm,
    coupling: LinearMap,
    smoothness: f64,
    strong_convexity: f64,
}

impl SaddleProblem {
    pub fn new(
        components: Vec<Arc<dyn SmoothComponent>>,
        conjugate: ConjugateTerm,
        coupling: LinearMap,
    ) -> Result<Self> {
        if components.is_empty() {
            return invalid("a problem needs at least one smooth component");
        }
        for (i, c) in components.iter().enumerate() {
            check_dim(&format!("component {i}"), c.dim(), coupling.d1())?;
            if c.strong_convexity() > c.smoothness() {
                return invalid(format!("component {i}: delta_i exceeds L_i"));
            }
        }
        let smoothness: f64 = components.iter().map(|c| c.smoothness()).sum();
        let strong_convexity: f64 = components.iter().map(|c| c.strong_convexity()).sum();
        if !(smoothness > 0.0) {
            return invalid("total smoothness L = sum L_i must be positive");
        }
        Ok(Self {
            components,
            conjugate,
            coupling,
            smoothness,
            strong_convexity,
        })
    }

    pub fn d1(&self) -> usize {
        self.coupling.d1()
    }

    pub fn d2(&self) -> usize {
        self.coupling.d2()
    }

    /// Number of components `N`.
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Arc<dyn SmoothComponent>] {
        &self.components
    }

    pub fn conjugate(&self) -> &ConjugateTerm {
        &self.conjugate
    }

    pub fn coupling(&self) -> &LinearMap {
        &self.coupling
    }

    /// `L = sum_i L_i`.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// `delta = sum_i delta_i`.
    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    pub fn gamma(&self) -> f64 {
        self.conjugate.gamma()
    }

    pub fn k_norm(&self) -> f64 {
        self.coupling.norm()
    }

    /// `f(x) = sum_i f_i(x)`.
    pub fn primal_value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim("x", x.len(), self.d1())?;
        Ok(self.components.iter().map(|c| c.value(x)).sum())
    }

    /// `L(x, y) = f(x) + <Kx, y> - h*(y)`; `-inf` when `h*(y) = +inf`.
    pub fn eval_lagrangian(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        check_dim("x", x.len(), self.d1())?;
        check_dim("y", y.len(), self.d2())?;
        let h = self.conjugate.value(y);
        if h == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let f = self.primal_value(x)?;
        Ok(f + self.coupling.forward(x)?.dot(y) - h)
    }

    pub fn component_gradient(&self, i: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        let c = self
            .components
            .get(i)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("component index {i} out of range")))?;
        check_dim("x", x.len(), self.d1())?;
        Ok(c.gradient(x))
    }

    /// `sum_i grad f_i(x)`, accumulated in ascending component order.
    pub fn grad_full(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("x", x.len(), self.d1())?;
        let mut g = self.components[0].gradient(x);
        for c in &self.components[1..] {
            g += c.gradient(x);
        }
        Ok(g)
    }

    /// Aggregated diagonal-quadratic form of `f` when every component has one.
    pub fn diagonal_quadratic(&self) -> Option<DiagonalQuadratic> {
        let mut iter = self.components.iter();
        let mut acc = iter.next()?.diagonal_quadratic()?;
        for c in iter {
            acc.accumulate(&c.diagonal_quadratic()?);
        }
        Some(acc)
    }

    /// Sampling-based check of the smoothness, strong-convexity, and
    /// conjugate strong-convexity declarations.
    pub fn validate_assumptions(&self, options: &ValidationOptions) -> Result<AssumptionReport> {
        validate::validate(self, options)
    }
}
