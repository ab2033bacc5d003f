//! Conditional survival curves under censoring and truncation from pooled
//! binary regressions ("global survival stacking"), plus the discrete-hazard
//! comparator, evaluation metrics, and synthetic benchmark scenarios.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod estimator;
pub mod eval;
pub mod error;
pub mod grids;
pub mod learners;
pub mod rng;
pub mod simulate;
pub mod stacking;

pub use error::{Error, Result};
