//! Spectral peak tracking of partial frequencies relative to `n * f0`.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::speech::f0::F0Track;

const PERIODS: f64 = 8.0;
const FLOOR_DB: f64 = -40.0;
const FRAME_STRIDE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicDeviation {
    /// Median of `(f_peak - n * f0) / f0` over analysed frames, per harmonic
    /// (index `n - 1`). `None` when the harmonic was never found.
    pub per_harmonic: Vec<Option<f64>>,
    /// Mean of `|per_harmonic|` over the harmonics that were found.
    pub mean_abs: f64,
    pub max_abs: f64,
    pub frames: usize,
}

/// Measures where the partials of voiced frames sit relative to the harmonic
/// grid of `track`. Only frames whose F0 is steady (within 3%) across an
/// eight-period window are used.
pub fn measure_harmonic_deviation(wav: &Waveform, track: &F0Track, max_harmonic: usize) -> Result<HarmonicDeviation> {
    if track.sample_rate != wav.sample_rate() {
        return Err(Error::SampleRateMismatch(track.sample_rate, wav.sample_rate()));
    }
    let sr = wav.sample_rate() as f64;
    let hop = track.hop_samples();
    let x = wav.samples();
    let mut planner = FftPlanner::<f64>::new();
    let mut found: Vec<Vec<f64>> = vec![Vec::new(); max_harmonic];
    let mut frames = 0;

    for k in (0..track.len()).step_by(FRAME_STRIDE) {
        if !track.voiced[k] {
            continue;
        }
        let f0 = track.f0[k];
        let len = (PERIODS * sr / f0).round() as usize;
        let center = k * hop;
        if center < len / 2 || center + len / 2 >= x.len() {
            continue;
        }
        let half_frames = len / 2 / hop + 1;
        let lo = k.saturating_sub(half_frames);
        let hi = (k + half_frames).min(track.len() - 1);
        let steady = (lo..=hi).all(|j| track.voiced[j] && (track.f0[j] / f0 - 1.0).abs() < 0.03);
        if !steady {
            continue;
        }
        let nfft = (16 * len).next_power_of_two();
        let mut buf = vec![Complex::new(0.0, 0.0); nfft];
        let start = center - len / 2;
        for i in 0..len {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / len as f64).cos();
            buf[i].re = w * x[start + i];
        }
        planner.plan_fft_forward(nfft).process(&mut buf);
        let bins = nfft / 2 + 1;
        let mag: Vec<f64> = buf[..bins].iter().map(|c| c.norm()).collect();
        let res = sr / nfft as f64;
        let frame_max = mag.iter().copied().fold(0.0, f64::max);
        if frame_max <= 0.0 {
            continue;
        }
        let floor = frame_max * 10f64.powf(FLOOR_DB / 20.0);
        frames += 1;
        for n in 1..=max_harmonic {
            let lo_f = (n as f64 - 0.45) * f0;
            let hi_f = (n as f64 + 0.45) * f0;
            if hi_f >= sr / 2.0 {
                break;
            }
            let (b0, b1) = ((lo_f / res).ceil() as usize, (hi_f / res).floor() as usize);
            let b = (b0..=b1)
                .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
                .expect("non-empty search band");
            if b == b0 || b == b1 || mag[b] < floor {
                continue;
            }
            let (a, m, c) = (mag[b - 1].ln(), mag[b].ln(), mag[b + 1].ln());
            let denom = a - 2.0 * m + c;
            let shift = if denom.abs() > 1e-12 {
                0.5 * (a - c) / denom
            } else {
                0.0
            };
            let f = (b as f64 + shift) * res;
            found[n - 1].push((f - n as f64 * f0) / f0);
        }
    }

    let per_harmonic: Vec<Option<f64>> = found
        .into_iter()
        .map(|mut v| {
            if v.is_empty() {
                return None;
            }
            v.sort_by(f64::total_cmp);
            Some(v[v.len() / 2])
        })
        .collect();
    let abs: Vec<f64> = per_harmonic.iter().flatten().map(|d| d.abs()).collect();
    let mean_abs = if abs.is_empty() {
        0.0
    } else {
        abs.iter().sum::<f64>() / abs.len() as f64
    };
    let max_abs = abs.iter().copied().fold(0.0, f64::max);
    Ok(HarmonicDeviation {
        per_harmonic,
        mean_abs,
        max_abs,
        frames,
    })
}
