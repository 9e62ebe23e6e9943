//! Primal-dual proximal incremental aggregated gradient (PD-PIAG) methods for
//! convex-concave saddle-point problems
//!
//! ```text
//! min_x max_y  sum_i f_i(x) + <K x, y> - h*(y)
//! ```
//!
//! The crate is organized as
//! * [`problem`]: smooth components, conjugate terms, the coupling operator,
//!   and a catalog of generated instances;
//! * [`solver`]: the delayed-gradient iteration with its memory table, delay
//!   schedules, extrapolation rules, and the FBS/PIAG baselines;
//! * [`certificates`]: step-size admissibility checks and rate constants;
//! * [`analysis`]: restricted gaps, analytic saddle points, traces, and
//!   bound monitors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod certificates;
mod error;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
