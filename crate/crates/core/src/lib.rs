//! Matrix-free stochastic trace estimation.
//!
//! The crate is organised bottom-up:
//!
//! - [`operator`]: symmetric PSD operators (dense storage, synthetic
//!   generators, Matrix Market ingestion, a Jacobi eigen-oracle).
//! - [`sampler`]: counter-based Rademacher probe vectors keyed by `(seed, index)`.
//! - [`estimator`]: the one-shot quadratic form `zᵀAz` and the n-sample
//!   average with a thread-count independent reduction.
//! - [`bounds`]: closed-form accuracy bounds, sub-gamma calculus and
//!   sample-size planners.
//! - [`oracle`]: exhaustive enumeration over the sign cube for small `m`.
//! - [`audit`]: checks every bound against the oracle and Monte Carlo runs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod bounds;
mod error;
pub mod estimator;
mod numeric;
pub mod operator;
pub mod oracle;
pub mod sampler;

pub use error::{Error, ErrorKind, Result};
pub use estimator::{estimate_trace, quadratic_form, relative_error, ErrorMeasurement, TraceEstimate};
pub use operator::{DenseSymmetric, FnOperator, SymmetricOperator};

/// Version tag carried by every JSON document this crate emits.
pub const SCHEMA_VERSION: u32 = 1;
