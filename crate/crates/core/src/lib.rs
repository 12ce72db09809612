//! Probe stimuli, harmonic jitter, mixtures, separators and metrics for
//! measuring how much a speech separator relies on harmonicity.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod eval;
pub mod metrics;
pub mod mixture;
pub mod render;
pub mod separate;
pub mod signal;
pub mod speech;
pub mod sweep;
pub mod tone;
pub mod toy;

pub use error::{Error, Result};

/// Toolkit version recorded in manifests and sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
