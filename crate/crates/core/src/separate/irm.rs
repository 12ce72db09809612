use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::separate::{SeparationInput, Separator};
use crate::signal::{ComplexStft, StftConfig, Waveform};

/// Largest RMS of `mixture - (a + b)` accepted for float references.
pub const DEFAULT_ADDITIVITY_TOL: f64 = 1e-6;
/// The same for references read back from 16-bit files: two quantization steps.
pub const QUANTIZED_ADDITIVITY_TOL: f64 = 2.0 / 32768.0;

/// Ideal ratio mask computed from the true sources: the ceiling a masking
/// separator with this STFT could reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleIrm {
    pub stft: StftConfig,
    pub additivity_tol: f64,
}

impl Default for OracleIrm {
    fn default() -> Self {
        OracleIrm {
            stft: StftConfig::default(),
            additivity_tol: DEFAULT_ADDITIVITY_TOL,
        }
    }
}

impl OracleIrm {
    pub fn quantized() -> Self {
        OracleIrm {
            additivity_tol: QUANTIZED_ADDITIVITY_TOL,
            ..OracleIrm::default()
        }
    }

    pub fn separate_with(&self, mixture: &Waveform, a: &Waveform, b: &Waveform) -> Result<[Waveform; 2]> {
        mixture.check_same_shape(a)?;
        mixture.check_same_shape(b)?;
        let residual = mixture.sub(&a.add(b)?)?.rms();
        if residual > self.additivity_tol {
            return Err(Error::NotAdditive(residual));
        }
        let sx = ComplexStft::analyze(mixture, self.stft)?;
        let sa = ComplexStft::analyze(a, self.stft)?;
        let sb = ComplexStft::analyze(b, self.stft)?;
        let mut fa = Vec::with_capacity(sx.frames.len());
        let mut fb = Vec::with_capacity(sx.frames.len());
        for ((x, pa), pb) in sx.frames.iter().zip(&sa.frames).zip(&sb.frames) {
            let mut ra = Vec::with_capacity(x.len());
            let mut rb = Vec::with_capacity(x.len());
            for ((xv, av), bv) in x.iter().zip(pa).zip(pb) {
                let (ea, eb) = (av.norm_sqr(), bv.norm_sqr());
                let m = if ea + eb > 0.0 { ea / (ea + eb) } else { 0.5 };
                ra.push(xv * m);
                rb.push(xv * (1.0 - m));
            }
            fa.push(ra);
            fb.push(rb);
        }
        Ok([sx.with_frames(fa).synthesize(), sx.with_frames(fb).synthesize()])
    }
}

impl Separator for OracleIrm {
    fn name(&self) -> String {
        "oracle-irm".into()
    }

    fn separate(&self, input: &SeparationInput<'_>) -> Result<[Waveform; 2]> {
        let (a, b) = input
            .references
            .ok_or_else(|| Error::invalid("the oracle mask needs the reference sources"))?;
        self.separate_with(input.mixture, a, b)
    }
}

/// Applies a real mask (`mask[frame][bin]`, share of source 1) to a mixture
/// STFT and returns both estimates. They sum to the mixture.
pub fn apply_mask(spec: &ComplexStft, mask: &[Vec<f64>]) -> [Waveform; 2] {
    let split = |own: bool| -> Vec<Vec<Complex64>> {
        spec.frames
            .iter()
            .zip(mask)
            .map(|(f, m)| {
                f.iter()
                    .zip(m)
                    .map(|(x, &g)| x * if own { g } else { 1.0 - g })
                    .collect()
            })
            .collect()
    };
    [
        spec.with_frames(split(true)).synthesize(),
        spec.with_frames(split(false)).synthesize(),
    ]
}
