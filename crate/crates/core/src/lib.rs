//! Elasticity of substitution and graph-hypersurface curvature of
//! production functions, with numerical classification of quasi-sum
//! production functions that have constant elasticity of substitution.

// `!(x > 0.0)` deliberately rejects NaN; the jet product rule adds.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::suspicious_arithmetic_impl, clippy::needless_range_loop)]

pub mod autodiff;
pub mod classify;
pub mod cli;
pub mod domain;
pub mod elasticity;
pub mod error;
pub mod geometry;
pub mod prodfun;
pub mod tolerance;

pub use error::{Error, Result};
