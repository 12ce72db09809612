use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::tone::JitterProfile;

/// Raised-cosine onset/offset ramp length.
pub const RAMP_SECS: f64 = 0.005;
/// Default harmonic count cap.
pub const DEFAULT_MAX_HARMONICS: usize = 10;
/// Default harmonic frequency ceiling.
pub const DEFAULT_MAX_FREQ: f64 = 4000.0;

/// `min(10, floor(4000 / f0))`, at least one.
pub fn default_num_harmonics(f0: f64) -> usize {
    ((DEFAULT_MAX_FREQ / f0).floor() as usize).clamp(1, DEFAULT_MAX_HARMONICS)
}

/// One sinusoidal component of a tone complex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partial {
    /// Harmonic number (1-based) or position in the explicit partial list.
    pub index: usize,
    pub frequency: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneComplexSpec {
    pub f0: f64,
    pub num_harmonics: usize,
    /// Per-harmonic gains, indexed by harmonic number - 1. Equal when absent.
    pub amplitudes: Option<Vec<f64>>,
    pub jitter: JitterProfile,
    /// Restrict synthesis to these harmonic numbers (missing-fundamental stimuli).
    pub included_harmonics: Option<Vec<usize>>,
    /// Raw partial frequencies in Hz; overrides the harmonic series entirely.
    pub explicit_partials: Option<Vec<f64>>,
    pub onset: f64,
    pub duration: f64,
}

impl ToneComplexSpec {
    /// Equal-amplitude harmonic complex with the default harmonic count.
    pub fn harmonic(f0: f64, onset: f64, duration: f64) -> Self {
        let n = default_num_harmonics(f0);
        ToneComplexSpec {
            f0,
            num_harmonics: n,
            amplitudes: None,
            jitter: JitterProfile::none(n),
            included_harmonics: None,
            explicit_partials: None,
            onset,
            duration,
        }
    }

    pub fn explicit(partials: Vec<f64>, onset: f64, duration: f64) -> Self {
        ToneComplexSpec {
            f0: 0.0,
            num_harmonics: partials.len(),
            amplitudes: None,
            jitter: JitterProfile::none(0),
            included_harmonics: None,
            explicit_partials: Some(partials),
            onset,
            duration,
        }
    }

    pub fn with_jitter(mut self, jitter: JitterProfile) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn with_included(mut self, harmonics: Vec<usize>) -> Self {
        self.included_harmonics = Some(harmonics);
        self
    }

    fn amplitude(&self, index: usize) -> f64 {
        self.amplitudes
            .as_ref()
            .and_then(|a| a.get(index - 1).copied())
            .unwrap_or(1.0)
    }

    /// Resolves the component list, validating everything against `sample_rate`.
    pub fn partials(&self, sample_rate: u32) -> Result<Vec<Partial>> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.duration > 0.0) || !(self.onset >= 0.0) {
            return Err(Error::invalid(format!(
                "need onset >= 0 and duration > 0, got onset={} duration={}",
                self.onset, self.duration
            )));
        }
        if let Some(explicit) = &self.explicit_partials {
            if explicit.is_empty() {
                return Err(Error::invalid("explicit partial list is empty"));
            }
            return explicit
                .iter()
                .enumerate()
                .map(|(i, &f)| {
                    if !(f > 0.0) {
                        return Err(Error::invalid(format!("partial {} has frequency {f}", i + 1)));
                    }
                    if f >= nyquist {
                        return Err(Error::AboveNyquist {
                            index: i + 1,
                            frequency: f,
                            nyquist,
                        });
                    }
                    Ok(Partial {
                        index: i + 1,
                        frequency: f,
                        amplitude: self.amplitude(i + 1),
                    })
                })
                .collect();
        }
        if !(self.f0 > 0.0 && self.f0 < nyquist) {
            return Err(Error::invalid(format!(
                "f0 must lie in (0, {nyquist}), got {}",
                self.f0
            )));
        }
        if self.num_harmonics == 0 {
            return Err(Error::invalid("num_harmonics must be at least 1"));
        }
        if !self.jitter.is_harmonic() && self.jitter.len() < self.num_harmonics {
            return Err(Error::invalid(format!(
                "jitter profile has {} offsets for {} harmonics",
                self.jitter.len(),
                self.num_harmonics
            )));
        }
        let indices: Vec<usize> = match &self.included_harmonics {
            Some(set) => {
                if let Some(&bad) = set.iter().find(|&&n| n == 0 || n > self.num_harmonics) {
                    return Err(Error::invalid(format!(
                        "included harmonic {bad} outside 1..={}",
                        self.num_harmonics
                    )));
                }
                let mut v = set.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
            None => (1..=self.num_harmonics).collect(),
        };
        if indices.is_empty() {
            return Err(Error::invalid("no harmonics selected"));
        }
        indices
            .into_iter()
            .map(|n| {
                let frequency = n as f64 * self.f0 + self.jitter.offset(n) * self.f0;
                if frequency >= nyquist {
                    return Err(Error::AboveNyquist {
                        index: n,
                        frequency,
                        nyquist,
                    });
                }
                Ok(Partial {
                    index: n,
                    frequency,
                    amplitude: self.amplitude(n),
                })
            })
            .collect()
    }
}

fn ramp_gain(t: f64, duration: f64) -> f64 {
    let ramp = RAMP_SECS.min(duration / 2.0);
    if ramp <= 0.0 {
        return 1.0;
    }
    let edge = t.min(duration - t);
    if edge >= ramp {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge.max(0.0) / ramp).cos()
    }
}

/// Renders `sum_k A_k sin(2 pi f_k (t - onset))` over `[onset, onset + duration)`,
/// zero elsewhere, with raised-cosine ramps, peak-normalized to 1.
///
/// The output spans `ceil((onset + duration) * sample_rate)` samples.
pub fn synth_tone_complex(spec: &ToneComplexSpec, sample_rate: u32) -> Result<Waveform> {
    let partials = spec.partials(sample_rate)?;
    let sr = sample_rate as f64;
    let len = ((spec.onset + spec.duration) * sr).ceil() as usize;
    let start = (spec.onset * sr).ceil() as usize;
    let mut samples = vec![0.0; len];
    for (i, s) in samples.iter_mut().enumerate().skip(start) {
        let t = i as f64 / sr - spec.onset;
        if t >= spec.duration {
            break;
        }
        let v: f64 = partials
            .iter()
            .map(|p| p.amplitude * (2.0 * PI * p.frequency * t).sin())
            .sum();
        *s = v * ramp_gain(t, spec.duration);
    }
    let mut wav = Waveform::new(samples, sample_rate)?;
    wav.normalize_peak(1.0);
    Ok(wav)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{stft, Seed};
    use crate::tone::sample_jitter;

    fn peak_bins(frame: &[f64], rel: f64) -> Vec<usize> {
        let max = frame.iter().cloned().fold(0.0, f64::max);
        (1..frame.len() - 1)
            .filter(|&k| frame[k] > frame[k - 1] && frame[k] >= frame[k + 1] && frame[k] > rel * max)
            .collect()
    }

    #[test]
    fn default_harmonic_count() {
        assert_eq!(default_num_harmonics(110.0), 10);
        assert_eq!(default_num_harmonics(500.0), 8);
        assert_eq!(default_num_harmonics(5000.0), 1);
    }

    #[test]
    fn harmonic_110_has_peaks_at_multiples() {
        let spec = ToneComplexSpec::harmonic(110.0, 0.0, 1.0);
        let w = synth_tone_complex(&spec, 16_000).unwrap();
        // 0.25 s window: 4 Hz bins, 110 Hz multiples land within half a bin.
        let s = stft(&w, 0.25, 0.125).unwrap();
        let mid = &s.magnitudes[s.num_frames() / 2];
        let bins = peak_bins(mid, 0.1);
        let freqs: Vec<f64> = bins.iter().map(|&b| s.bin_freq(b)).collect();
        assert_eq!(freqs.len(), 10, "{freqs:?}");
        for (k, f) in freqs.iter().enumerate() {
            assert!((f - 110.0 * (k + 1) as f64).abs() <= s.freq_resolution / 2.0);
        }
    }

    #[test]
    fn explicit_partials_give_two_lines() {
        let spec = ToneComplexSpec::explicit(vec![200.0, 600.0], 0.0, 0.5);
        let w = synth_tone_complex(&spec, 16_000).unwrap();
        let s = stft(&w, 0.032, 0.008).unwrap();
        let mid = &s.magnitudes[s.num_frames() / 2];
        let bins = peak_bins(mid, 0.1);
        assert_eq!(bins, vec![s.bin_of(200.0), s.bin_of(600.0)]);
    }

    #[test]
    fn missing_fundamental_has_no_low_energy() {
        let spec = ToneComplexSpec {
            num_harmonics: 6,
            jitter: JitterProfile::none(6),
            ..ToneComplexSpec::harmonic(100.0, 0.0, 1.0)
        }
        .with_included(vec![3, 4, 5, 6]);
        let w = synth_tone_complex(&spec, 16_000).unwrap();
        let s = stft(&w, 0.064, 0.016).unwrap();
        let mid = &s.magnitudes[s.num_frames() / 2];
        let kept = [300.0, 400.0, 500.0, 600.0]
            .iter()
            .map(|&f| mid[s.bin_of(f)])
            .fold(f64::INFINITY, f64::min);
        for f in [100.0, 200.0] {
            let db = 20.0 * (mid[s.bin_of(f)] / kept).log10();
            assert!(db < -40.0, "{f} Hz at {db:.1} dB");
        }
    }

    #[test]
    fn jitter_zero_is_bit_identical_to_harmonic() {
        let plain = ToneComplexSpec::harmonic(130.0, 0.1, 0.4);
        let jittered = plain
            .clone()
            .with_jitter(sample_jitter(0.0, plain.num_harmonics, Seed(42)).unwrap());
        let a = synth_tone_complex(&plain, 16_000).unwrap();
        let b = synth_tone_complex(&jittered, 16_000).unwrap();
        assert_eq!(a.samples(), b.samples());
    }

    #[test]
    fn above_nyquist_names_the_harmonic() {
        let spec = ToneComplexSpec {
            num_harmonics: 12,
            jitter: JitterProfile::none(12),
            ..ToneComplexSpec::harmonic(700.0, 0.0, 0.1)
        };
        match synth_tone_complex(&spec, 16_000) {
            Err(Error::AboveNyquist { index, .. }) => assert_eq!(index, 12),
            other => panic!("expected AboveNyquist, got {other:?}"),
        }
    }

    #[test]
    fn silent_outside_window_and_peak_one() {
        let spec = ToneComplexSpec::harmonic(200.0, 0.25, 0.25);
        let w = synth_tone_complex(&spec, 16_000).unwrap();
        assert_eq!(w.len(), 8000);
        assert!(w.samples()[..4000].iter().all(|&x| x == 0.0));
        assert!((w.peak() - 1.0).abs() < 1e-12);
        // ramps start and end near zero
        assert!(w.samples()[4000].abs() < 1e-3);
        assert!(w.samples()[7999].abs() < 0.05);
    }

    #[test]
    fn bad_specs_rejected() {
        let mut s = ToneComplexSpec::harmonic(100.0, 0.0, 0.1);
        s.included_harmonics = Some(vec![0]);
        assert!(s.partials(16_000).is_err());
        let s = ToneComplexSpec::harmonic(9000.0, 0.0, 0.1);
        assert!(s.partials(16_000).is_err());
        let s = ToneComplexSpec::harmonic(100.0, 0.0, 0.0);
        assert!(s.partials(16_000).is_err());
        let s = ToneComplexSpec::explicit(vec![8000.0], 0.0, 0.1);
        assert!(matches!(s.partials(16_000), Err(Error::AboveNyquist { .. })));
    }
}
