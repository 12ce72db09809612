//! Frame-wise F0 estimation with the YIN cumulative-mean-normalized difference
//! function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct F0Config {
    /// Integration window, seconds.
    pub frame_len: f64,
    /// Frame hop, seconds.
    pub hop: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    /// Absolute dip threshold for picking the first CMNDF minimum.
    pub dip_threshold: f64,
    /// Frames with periodicity (1 - CMNDF at the chosen lag) at or above this are voiced.
    pub voicing_threshold: f64,
}

impl Default for F0Config {
    fn default() -> Self {
        F0Config {
            frame_len: 0.025,
            hop: 0.005,
            f0_min: 60.0,
            f0_max: 400.0,
            dip_threshold: 0.15,
            voicing_threshold: 0.5,
        }
    }
}

impl F0Config {
    fn validate(&self) -> Result<()> {
        if !(self.hop > 0.0 && self.frame_len > 0.0) {
            return Err(Error::invalid("f0 frame_len and hop must be positive"));
        }
        if !(self.f0_min > 0.0 && self.f0_max > self.f0_min) {
            return Err(Error::invalid("need 0 < f0_min < f0_max"));
        }
        Ok(())
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ((self.hop * sample_rate as f64).round() as usize).max(1)
    }
}

/// Frame-wise F0 with voicing. Frame `k` is centred on sample `k * hop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Track {
    pub frame_times: Vec<f64>,
    /// Hz; exactly 0 on unvoiced frames.
    pub f0: Vec<f64>,
    pub voiced: Vec<bool>,
    /// Confidence in [0, 1].
    pub periodicity: Vec<f64>,
    pub hop: f64,
    pub sample_rate: u32,
}

impl F0Track {
    /// Number of frames a track for `len` samples at this hop must have.
    pub fn expected_frames(len: usize, hop_samples: usize) -> usize {
        len / hop_samples + 1
    }

    /// A fully voiced constant track, e.g. a known-correct track for synthetic input.
    pub fn constant(f0: f64, wav: &Waveform, hop: f64) -> F0Track {
        let sr = wav.sample_rate();
        let hop_n = ((hop * sr as f64).round() as usize).max(1);
        let n = F0Track::expected_frames(wav.len(), hop_n);
        F0Track {
            frame_times: (0..n).map(|k| (k * hop_n) as f64 / sr as f64).collect(),
            f0: vec![f0; n],
            voiced: vec![true; n],
            periodicity: vec![1.0; n],
            hop: hop_n as f64 / sr as f64,
            sample_rate: sr,
        }
    }

    /// An all-unvoiced track.
    pub fn unvoiced(wav: &Waveform, hop: f64) -> F0Track {
        let mut t = F0Track::constant(0.0, wav, hop);
        t.voiced.iter_mut().for_each(|v| *v = false);
        t.periodicity.iter_mut().for_each(|p| *p = 0.0);
        t
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn hop_samples(&self) -> usize {
        ((self.hop * self.sample_rate as f64).round() as usize).max(1)
    }

    pub fn num_voiced(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.num_voiced() as f64 / self.len() as f64
        }
    }

    pub fn median_voiced_f0(&self) -> Option<f64> {
        let mut v: Vec<f64> = self
            .f0
            .iter()
            .zip(&self.voiced)
            .filter(|(_, &on)| on)
            .map(|(&f, _)| f)
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        })
    }
}

/// YIN F0 track: one estimate per hop, search range `[f0_min, f0_max]`.
/// Pure silence yields an all-unvoiced track.
pub fn track_f0(wav: &Waveform, config: &F0Config) -> Result<F0Track> {
    config.validate()?;
    let sr = wav.sample_rate();
    let hop_n = config.hop_samples(sr);
    let w = ((config.frame_len * sr as f64).round() as usize).max(2);
    let tau_min = ((sr as f64 / config.f0_max).floor() as usize).max(2);
    let tau_max = (sr as f64 / config.f0_min).ceil() as usize;
    let n_frames = F0Track::expected_frames(wav.len(), hop_n);
    let x = wav.samples();
    let span = w + tau_max + 1;

    let mut seg = vec![0.0; span];
    let mut diff = vec![0.0; tau_max + 2];
    let mut track = F0Track {
        frame_times: Vec::with_capacity(n_frames),
        f0: Vec::with_capacity(n_frames),
        voiced: Vec::with_capacity(n_frames),
        periodicity: Vec::with_capacity(n_frames),
        hop: hop_n as f64 / sr as f64,
        sample_rate: sr,
    };

    for k in 0..n_frames {
        let center = (k * hop_n) as isize;
        let start = center - (span / 2) as isize;
        for (j, s) in seg.iter_mut().enumerate() {
            let idx = start + j as isize;
            *s = if idx >= 0 && (idx as usize) < x.len() {
                x[idx as usize]
            } else {
                0.0
            };
        }
        track.frame_times.push(center as f64 / sr as f64);
        let (f0, periodicity) = yin_frame(&seg, w, tau_min, tau_max, config, sr, &mut diff);
        let voiced = f0 > 0.0 && periodicity >= config.voicing_threshold;
        track.f0.push(if voiced { f0 } else { 0.0 });
        track.voiced.push(voiced);
        track.periodicity.push(periodicity);
    }
    Ok(track)
}

/// Returns (f0, periodicity); f0 is 0 when no lag could be chosen.
fn yin_frame(
    seg: &[f64],
    w: usize,
    tau_min: usize,
    tau_max: usize,
    config: &F0Config,
    sr: u32,
    diff: &mut [f64],
) -> (f64, f64) {
    let energy: f64 = seg[..w].iter().map(|v| v * v).sum();
    if energy <= 1e-10 * w as f64 {
        return (0.0, 0.0);
    }
    // Difference function d(tau) for tau in 0..=tau_max+1.
    diff[0] = 0.0;
    for tau in 1..diff.len() {
        let mut acc = 0.0;
        for j in 0..w {
            let d = seg[j] - seg[j + tau];
            acc += d * d;
        }
        diff[tau] = acc;
    }
    // Cumulative mean normalization, in place.
    let mut running = 0.0;
    diff[0] = 1.0;
    for tau in 1..diff.len() {
        running += diff[tau];
        diff[tau] = if running > 0.0 {
            diff[tau] * tau as f64 / running
        } else {
            1.0
        };
    }
    let cmndf = &diff[..];
    let mut best = None;
    for tau in tau_min..=tau_max {
        if cmndf[tau] < config.dip_threshold {
            let mut t = tau;
            while t < tau_max && cmndf[t + 1] < cmndf[t] {
                t += 1;
            }
            best = Some(t);
            break;
        }
    }
    let tau = best.unwrap_or_else(|| {
        (tau_min..=tau_max)
            .min_by(|&a, &b| cmndf[a].total_cmp(&cmndf[b]))
            .expect("non-empty lag range")
    });
    let periodicity = (1.0 - cmndf[tau]).clamp(0.0, 1.0);
    // Parabolic refinement around the chosen lag.
    let (a, b, c) = (cmndf[tau - 1], cmndf[tau], cmndf[tau + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-12 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let f0 = sr as f64 / (tau as f64 + shift);
    let f0 = f0.clamp(config.f0_min, config.f0_max);
    (f0, periodicity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Seed;
    use crate::speech::synth::{synthetic_vowel, Vowel};
    use rand::Rng;

    #[test]
    fn silence_is_unvoiced() {
        let w = Waveform::silence(8000, 16_000).unwrap();
        let t = track_f0(&w, &F0Config::default()).unwrap();
        assert_eq!(t.len(), 8000 / 80 + 1);
        assert!(t.voiced.iter().all(|v| !v));
        assert!(t.f0.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn vowel_at_120_hz() {
        let w = synthetic_vowel(120.0, 1.0, Vowel::A, 16_000, Seed(1));
        let t = track_f0(&w, &F0Config::default()).unwrap();
        let median = t.median_voiced_f0().unwrap();
        assert!((median - 120.0).abs() <= 2.0, "median {median}");
        assert!(t.voiced_fraction() > 0.95, "voiced {}", t.voiced_fraction());
    }

    #[test]
    fn white_noise_mostly_unvoiced() {
        let mut rng = Seed(9).rng();
        let s: Vec<f64> = (0..16_000).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let t = track_f0(&Waveform::new(s, 16_000).unwrap(), &F0Config::default()).unwrap();
        assert!(t.voiced_fraction() < 0.10, "voiced {}", t.voiced_fraction());
    }

    #[test]
    fn voiced_frames_in_range_and_times_regular() {
        let w = synthetic_vowel(230.0, 0.5, Vowel::I, 16_000, Seed(2));
        let cfg = F0Config::default();
        let t = track_f0(&w, &cfg).unwrap();
        for (f, v) in t.f0.iter().zip(&t.voiced) {
            if *v {
                assert!(*f >= cfg.f0_min && *f <= cfg.f0_max);
            } else {
                assert_eq!(*f, 0.0);
            }
        }
        for pair in t.frame_times.windows(2) {
            assert!((pair[1] - pair[0] - t.hop).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_config_rejected() {
        let w = Waveform::silence(100, 16_000).unwrap();
        let cfg = F0Config {
            f0_min: 300.0,
            f0_max: 200.0,
            ..F0Config::default()
        };
        assert!(track_f0(&w, &cfg).is_err());
    }
}
