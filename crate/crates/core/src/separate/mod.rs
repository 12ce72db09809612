//! Reference separators and the interface external separators plug into.

pub mod comb;
mod external;
mod irm;
mod precomputed;

use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::Waveform;

pub use comb::{CombConfig, CombFrame, HarmonicComb, ToothScale};
pub use external::ExternalSeparator;
pub use irm::{apply_mask, OracleIrm, DEFAULT_ADDITIVITY_TOL, QUANTIZED_ADDITIVITY_TOL};
pub use precomputed::Precomputed;

/// Everything a separator may use for one mixture.
#[derive(Debug, Clone, Copy)]
pub struct SeparationInput<'a> {
    pub id: &'a str,
    pub mixture: &'a Waveform,
    /// The mixture's file, when it already exists on disk.
    pub mixture_path: Option<&'a Path>,
    /// Ground truth; only oracle separators look at it.
    pub references: Option<(&'a Waveform, &'a Waveform)>,
}

impl<'a> SeparationInput<'a> {
    pub fn new(id: &'a str, mixture: &'a Waveform) -> Self {
        SeparationInput {
            id,
            mixture,
            mixture_path: None,
            references: None,
        }
    }
}

/// A two-source separator. Estimates come back in no particular order.
pub trait Separator: Send + Sync {
    fn name(&self) -> String;
    fn separate(&self, input: &SeparationInput<'_>) -> Result<[Waveform; 2]>;
}

/// Built-in separators by name: `oracle-irm` and `harmonic-comb` (alias `comb`).
/// References loaded from 16-bit files need the looser additivity tolerance, so
/// the oracle built here uses it.
pub fn builtin(name: &str) -> Result<Box<dyn Separator>> {
    match name {
        "oracle-irm" | "irm" => Ok(Box::new(OracleIrm::quantized())),
        "harmonic-comb" | "comb" => Ok(Box::new(HarmonicComb::default())),
        _ => Err(Error::Config(format!(
            "unknown separator '{name}' (expected oracle-irm or harmonic-comb)"
        ))),
    }
}
