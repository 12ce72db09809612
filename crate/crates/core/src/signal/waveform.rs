use crate::error::{Error, Result};

/// Canonical internal sample rate. Everything read from disk is resampled to it.
pub const CANONICAL_RATE: u32 = 16_000;

/// Mono sample buffer at a fixed rate. Samples are nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Waveform { samples, sample_rate })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self> {
        Waveform::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            (self.energy() / self.samples.len() as f64).sqrt()
        }
    }

    pub fn scaled(&self, gain: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|x| x * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn scale(&mut self, gain: f64) {
        self.samples.iter_mut().for_each(|x| *x *= gain);
    }

    /// Scales so the peak magnitude equals `target`. Returns the applied gain
    /// (1.0 for an all-zero buffer, which is left untouched).
    pub fn normalize_peak(&mut self, target: f64) -> f64 {
        let peak = self.peak();
        if peak == 0.0 {
            return 1.0;
        }
        let gain = target / peak;
        self.scale(gain);
        gain
    }

    /// Zero-pads (or truncates) to exactly `len` samples.
    pub fn resized(&self, len: usize) -> Waveform {
        let mut samples = self.samples.clone();
        samples.resize(len, 0.0);
        Waveform {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    pub fn check_same_rate(&self, other: &Waveform) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::SampleRateMismatch(self.sample_rate, other.sample_rate));
        }
        Ok(())
    }

    pub fn check_same_shape(&self, other: &Waveform) -> Result<()> {
        self.check_same_rate(other)?;
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(())
    }

    /// Sample-wise sum. Both inputs must have the same rate and length.
    pub fn add(&self, other: &Waveform) -> Result<Waveform> {
        self.check_same_shape(other)?;
        Ok(Waveform {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            sample_rate: self.sample_rate,
        })
    }

    pub fn sub(&self, other: &Waveform) -> Result<Waveform> {
        self.check_same_shape(other)?;
        Ok(Waveform {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
            sample_rate: self.sample_rate,
        })
    }
}
