//! Short-time Fourier analysis.
//!
//! Two flavours live here. [`stft`] is the plain magnitude spectrogram used for
//! rendering and measurement: frames start at sample 0 and only full frames are
//! kept. [`ComplexStft`] pads both ends so that every sample is covered and can
//! be inverted exactly by weighted overlap-add, which is what the masking
//! separators need.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

/// Magnitude spectrogram, `magnitudes[frame][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<Vec<f64>>,
    /// Seconds between frame starts.
    pub frame_hop: f64,
    /// Seconds per analysis window.
    pub window_len: f64,
    /// Hz per bin.
    pub freq_resolution: f64,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn num_bins(&self) -> usize {
        self.magnitudes.first().map_or(0, Vec::len)
    }

    pub fn bin_of(&self, freq: f64) -> usize {
        (freq / self.freq_resolution).round() as usize
    }

    pub fn bin_freq(&self, bin: usize) -> f64 {
        bin as f64 * self.freq_resolution
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitudes.iter().flatten().fold(0.0_f64, |m, &x| m.max(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    /// Window length in seconds.
    pub window_len: f64,
    /// Hop in seconds.
    pub hop: f64,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_len: 0.032,
            hop: 0.008,
        }
    }
}

impl StftConfig {
    pub fn new(window_len: f64, hop: f64) -> Result<Self> {
        if !(hop > 0.0) || !(window_len >= hop) {
            return Err(Error::invalid(format!(
                "need window_len >= hop > 0, got window_len={window_len}, hop={hop}"
            )));
        }
        Ok(StftConfig { window_len, hop })
    }

    pub(crate) fn samples(&self, sample_rate: u32) -> Result<(usize, usize)> {
        let cfg = StftConfig::new(self.window_len, self.hop)?;
        let win = (cfg.window_len * sample_rate as f64).round() as usize;
        let hop = (cfg.hop * sample_rate as f64).round() as usize;
        if hop == 0 || win < 2 {
            return Err(Error::invalid("window or hop shorter than one sample"));
        }
        Ok((win, hop))
    }
}

/// Magnitude spectrogram with a Hann window. The FFT size equals the window
/// length, so `freq_resolution = sample_rate / window_samples`.
pub fn stft(wav: &Waveform, window_len: f64, hop: f64) -> Result<Spectrogram> {
    let sr = wav.sample_rate();
    let (win, hop_n) = StftConfig::new(window_len, hop)?.samples(sr)?;
    if wav.len() < win {
        return Err(Error::SignalTooShort {
            len: wav.len(),
            needed: win,
        });
    }
    let window = hann(win);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(win);
    let frames = 1 + (wav.len() - win) / hop_n;
    let bins = win / 2 + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); win];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let x = wav.samples();
    let magnitudes = (0..frames)
        .map(|f| {
            let start = f * hop_n;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(x[start + i] * window[i], 0.0);
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            buf[..bins].iter().map(|c| c.norm()).collect()
        })
        .collect();
    Ok(Spectrogram {
        magnitudes,
        frame_hop: hop_n as f64 / sr as f64,
        window_len: win as f64 / sr as f64,
        freq_resolution: sr as f64 / win as f64,
        sample_rate: sr,
    })
}

/// Invertible complex STFT (Hann analysis, least-squares overlap-add synthesis).
#[derive(Clone)]
pub struct ComplexStft {
    /// `frames[frame][bin]`, bins `0..=win/2`.
    pub frames: Vec<Vec<Complex64>>,
    pub win: usize,
    pub hop: usize,
    pub sample_rate: u32,
    signal_len: usize,
    window: Vec<f64>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ComplexStft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComplexStft")
            .field("frames", &self.frames.len())
            .field("win", &self.win)
            .field("hop", &self.hop)
            .field("signal_len", &self.signal_len)
            .finish()
    }
}

impl ComplexStft {
    pub fn analyze(wav: &Waveform, config: StftConfig) -> Result<Self> {
        let sr = wav.sample_rate();
        let (win, hop) = config.samples(sr)?;
        let window = hann(win);
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(win);
        let inverse = planner.plan_fft_inverse(win);
        let x = wav.samples();
        // Frame f covers samples [f*hop - win, f*hop), so the first and last
        // frames hang fully off the ends and every sample sees full window weight.
        let frames_n = (x.len() + win).div_ceil(hop) + 1;
        let bins = win / 2 + 1;
        let mut buf = vec![Complex64::new(0.0, 0.0); win];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fwd.get_inplace_scratch_len()];
        let mut frames = Vec::with_capacity(frames_n);
        for f in 0..frames_n {
            let start = (f * hop) as isize - win as isize;
            for (i, b) in buf.iter_mut().enumerate() {
                let idx = start + i as isize;
                let v = if idx >= 0 && (idx as usize) < x.len() {
                    x[idx as usize]
                } else {
                    0.0
                };
                *b = Complex64::new(v * window[i], 0.0);
            }
            fwd.process_with_scratch(&mut buf, &mut scratch);
            frames.push(buf[..bins].to_vec());
        }
        Ok(ComplexStft {
            frames,
            win,
            hop,
            sample_rate: sr,
            signal_len: x.len(),
            window,
            inverse,
        })
    }

    pub fn num_bins(&self) -> usize {
        self.win / 2 + 1
    }

    pub fn freq_resolution(&self) -> f64 {
        self.sample_rate as f64 / self.win as f64
    }

    /// Centre time (seconds) of a frame relative to the start of the signal.
    pub fn frame_center(&self, frame: usize) -> f64 {
        (frame as f64 * self.hop as f64 - self.win as f64 / 2.0) / self.sample_rate as f64
    }

    /// Same frame layout with new spectra (e.g. masked copies).
    pub fn with_frames(&self, frames: Vec<Vec<Complex64>>) -> ComplexStft {
        ComplexStft { frames, ..self.clone() }
    }

    /// Weighted overlap-add inverse. Exact for unmodified spectra.
    pub fn synthesize(&self) -> Waveform {
        let win = self.win;
        let bins = self.num_bins();
        let mut out = vec![0.0; self.signal_len];
        let mut norm = vec![0.0; self.signal_len];
        let mut buf = vec![Complex64::new(0.0, 0.0); win];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        for (f, spec) in self.frames.iter().enumerate() {
            buf[..bins].copy_from_slice(spec);
            for k in bins..win {
                buf[k] = spec[win - k].conj();
            }
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = (f * self.hop) as isize - win as isize;
            for i in 0..win {
                let idx = start + i as isize;
                if idx < 0 || idx as usize >= self.signal_len {
                    continue;
                }
                let w = self.window[i];
                out[idx as usize] += buf[i].re / win as f64 * w;
                norm[idx as usize] += w * w;
            }
        }
        for (o, n) in out.iter_mut().zip(&norm) {
            if *n > 1e-12 {
                *o /= n;
            }
        }
        Waveform::new(out, self.sample_rate).expect("rate already validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, secs: f64, sr: u32) -> Waveform {
        let n = (secs * sr as f64) as usize;
        let s = (0..n).map(|i| (2.0 * PI * freq * i as f64 / sr as f64).sin()).collect();
        Waveform::new(s, sr).unwrap()
    }

    #[test]
    fn single_tone_peak_bin() {
        let spec = stft(&sine(1000.0, 0.5, 16_000), 0.032, 0.008).unwrap();
        let expected = (1000.0 / spec.freq_resolution).round() as usize;
        for frame in &spec.magnitudes {
            let argmax = frame.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(argmax, expected);
        }
    }

    #[test]
    fn silence_is_zero() {
        let spec = stft(&Waveform::silence(4000, 16_000).unwrap(), 0.032, 0.008).unwrap();
        assert!(spec.magnitudes.iter().flatten().all(|&m| m == 0.0));
    }

    #[test]
    fn too_short() {
        let err = stft(&Waveform::silence(100, 16_000).unwrap(), 0.032, 0.008).unwrap_err();
        assert!(err.to_string().contains("signal too short"));
    }

    #[test]
    fn bad_window_rejected() {
        let w = sine(100.0, 0.5, 16_000);
        assert!(stft(&w, 0.008, 0.032).is_err());
        assert!(stft(&w, 0.032, 0.0).is_err());
    }

    #[test]
    fn complex_roundtrip_is_exact() {
        let w = sine(333.0, 0.3, 16_000);
        let s = ComplexStft::analyze(&w, StftConfig::default()).unwrap();
        let back = s.synthesize();
        let err = w
            .samples()
            .iter()
            .zip(back.samples())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12, "max err {err}");
    }

    #[test]
    fn frame_count_matches_grid() {
        let spec = stft(&sine(440.0, 1.0, 16_000), 0.032, 0.008).unwrap();
        assert_eq!(spec.num_frames(), 1 + (16_000 - 512) / 128);
        assert_eq!(spec.num_bins(), 257);
    }
}
