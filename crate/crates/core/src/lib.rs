//! Bayesian online changepoint detection with generalised posteriors built
//! from diffusion score matching, alongside a standard conjugate baseline.
//!
//! The pieces, bottom-up:
//!
//! * [`model`]: natural exponential families described by derivatives of
//!   their sufficient statistics.
//! * [`diffusion`]: diagonal diffusion matrices and the per-observation loss
//!   summaries Λ(x), ν(x).
//! * [`posterior`]: the conjugate (truncated) normal posterior with exact
//!   rank-d online updates, and [`calibrate`] for choosing its learning rate.
//! * [`baseline`]: standard conjugate posteriors.
//! * [`bocd`]: the pruned run-length filter and MAP segmentation.
//! * [`io`] and [`detector`]: CSV ingestion, configs, generators, outputs,
//!   and the benchmark harness.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod bocd;
pub mod calibrate;
pub mod detector;
pub mod diffusion;
pub mod error;
pub mod io;
pub mod model;
pub mod posterior;
pub mod sampling;
pub mod series;
pub mod special;

pub use error::{Error, Result};
pub use series::Series;
