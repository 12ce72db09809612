//! Harmonic-plus-residual model of voiced speech.
//!
//! Harmonic `n` of frame `k` is measured by demodulating the signal against the
//! carrier `n * phi0(t)`, where `phi0` integrates the (interpolated) F0 contour.
//! Amplitude and phase offset are interpolated linearly between frame centres
//! for resynthesis. Whatever the harmonic part does not explain is kept as the
//! residual, so resynthesis with a zero jitter profile returns the input.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::speech::f0::F0Track;
use crate::tone::JitterProfile;

pub const DEFAULT_HARMONIC_CAP: usize = 60;

/// Resynthesized output is scaled down only if its peak would exceed this.
pub const CLIP_GUARD: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarmonicConfig {
    /// Upper bound on modelled harmonics; the model also stops one harmonic
    /// below Nyquist at the median F0.
    pub max_harmonics: usize,
    /// Analysis window length in pitch periods.
    pub periods_per_window: f64,
    /// Refine each voiced frame's F0 by maximizing harmonic energy.
    pub refine_f0: bool,
    /// Half-width of the refinement search, relative to the input F0.
    pub refine_range: f64,
}

impl Default for HarmonicConfig {
    fn default() -> Self {
        HarmonicConfig {
            max_harmonics: DEFAULT_HARMONIC_CAP,
            periods_per_window: 3.0,
            refine_f0: true,
            refine_range: 0.02,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarmonicModel {
    /// The track used for analysis, after refinement.
    pub f0_track: F0Track,
    /// `[frame][n - 1]`, zero for unvoiced frames and harmonics at or above Nyquist.
    pub harmonic_amps: Vec<Vec<f64>>,
    /// `[frame][n - 1]`, phase of harmonic `n` relative to the carrier
    /// `n * phi0(t)`, unwrapped across frames.
    pub harmonic_phases: Vec<Vec<f64>>,
    pub residual: Waveform,
    pub max_harmonics: usize,
    input_peak: f64,
    carrier: Vec<f64>,
}

struct Demod {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Demod {
    fn new(n: usize) -> Self {
        Demod {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    fn clear(&mut self) {
        self.re.iter_mut().for_each(|v| *v = 0.0);
        self.im.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Accumulates `wx * exp(-i n theta)` for n = 1..=len.
    #[inline]
    fn push(&mut self, wx: f64, theta: f64) {
        let (s, c) = theta.sin_cos();
        let (zr, zi) = (c, -s);
        let (mut pr, mut pi) = (wx, 0.0);
        for (re, im) in self.re.iter_mut().zip(self.im.iter_mut()) {
            let r = pr * zr - pi * zi;
            pi = pr * zi + pi * zr;
            pr = r;
            *re += pr;
            *im += pi;
        }
    }

    fn energy(&self) -> f64 {
        self.re.iter().zip(&self.im).map(|(r, i)| r * r + i * i).sum()
    }
}

/// Symmetric Hann window without zero end points, odd length, centred on `center`.
fn frame_window(center: usize, f0: f64, periods: f64, sr: u32) -> (isize, Vec<f64>) {
    let mut len = (periods * sr as f64 / f0).round() as usize;
    if len % 2 == 0 {
        len += 1;
    }
    let w = (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * (i + 1) as f64 / (len + 1) as f64).cos())
        .collect();
    (center as isize - (len / 2) as isize, w)
}

fn refine_frame_f0(x: &[f64], center: usize, f0: f64, cfg: &HarmonicConfig, sr: u32) -> f64 {
    let n_h = ((4000.0 / f0).floor() as usize).clamp(1, 20);
    let (start, w) = frame_window(center, f0, cfg.periods_per_window, sr);
    let mut demod = Demod::new(n_h);
    let mut objective = |f: f64| {
        demod.clear();
        let step = 2.0 * PI * f / sr as f64;
        for (j, &wj) in w.iter().enumerate() {
            let idx = start + j as isize;
            if idx < 0 || idx as usize >= x.len() {
                continue;
            }
            demod.push(wj * x[idx as usize], step * (idx - center as isize) as f64);
        }
        demod.energy()
    };
    let lo = f0 * (1.0 - cfg.refine_range);
    let hi = f0 * (1.0 + cfg.refine_range);
    const GRID: usize = 16;
    let grid_step = (hi - lo) / GRID as f64;
    let mut best = (f0, objective(f0));
    for g in 0..=GRID {
        let f = lo + grid_step * g as f64;
        let e = objective(f);
        if e > best.1 {
            best = (f, e);
        }
    }
    // Golden-section search within one grid step of the best grid point.
    let (mut a, mut b) = (best.0 - grid_step, best.0 + grid_step);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..20 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d);
        }
    }
    let (f, e) = if fc > fd { (c, fc) } else { (d, fd) };
    if e >= best.1 {
        f
    } else {
        best.0
    }
}

/// Per-sample F0: linear between voiced frame centres, held before the first
/// and after the last voiced frame. `None` when nothing is voiced.
fn sample_contour(track: &F0Track, len: usize) -> Option<Vec<f64>> {
    let hop = track.hop_samples();
    let anchors: Vec<(usize, f64)> = track
        .voiced
        .iter()
        .enumerate()
        .filter(|(_, &v)| v)
        .map(|(k, _)| (k * hop, track.f0[k]))
        .collect();
    let first = *anchors.first()?;
    let last = *anchors.last()?;
    let mut out = vec![0.0; len];
    let mut seg = 0;
    for (i, o) in out.iter_mut().enumerate() {
        *o = if i <= first.0 {
            first.1
        } else if i >= last.0 {
            last.1
        } else {
            while anchors[seg + 1].0 < i {
                seg += 1;
            }
            let (t0, f0) = anchors[seg];
            let (t1, f1) = anchors[seg + 1];
            f0 + (f1 - f0) * (i - t0) as f64 / (t1 - t0) as f64
        };
    }
    Some(out)
}

/// Analyzes `wav` given an F0 track with one frame per hop (see
/// [`F0Track::expected_frames`]).
pub fn analyze_harmonics(wav: &Waveform, track: &F0Track, cfg: &HarmonicConfig) -> Result<HarmonicModel> {
    if wav.is_empty() {
        return Err(Error::SignalTooShort { len: 0, needed: 1 });
    }
    if track.sample_rate != wav.sample_rate() {
        return Err(Error::SampleRateMismatch(track.sample_rate, wav.sample_rate()));
    }
    let hop = track.hop_samples();
    let expected = F0Track::expected_frames(wav.len(), hop);
    if track.len() != expected || track.voiced.len() != expected {
        return Err(Error::TrackMismatch {
            track: track.len(),
            expected,
        });
    }
    if !(cfg.periods_per_window >= 2.0) {
        return Err(Error::invalid("periods_per_window must be at least 2"));
    }
    let sr = wav.sample_rate();
    let nyq = wav.nyquist();
    let x = wav.samples();
    let n_frames = track.len();

    let mut track = track.clone();
    if cfg.refine_f0 {
        for k in 0..n_frames {
            if track.voiced[k] {
                track.f0[k] = refine_frame_f0(x, k * hop, track.f0[k], cfg, sr);
            }
        }
    }

    let Some(contour) = sample_contour(&track, wav.len()) else {
        return Ok(HarmonicModel {
            f0_track: track,
            harmonic_amps: vec![Vec::new(); n_frames],
            harmonic_phases: vec![Vec::new(); n_frames],
            residual: wav.clone(),
            max_harmonics: 0,
            input_peak: wav.peak(),
            carrier: vec![0.0; wav.len()],
        });
    };
    let mut carrier = Vec::with_capacity(wav.len());
    let mut phi = 0.0;
    for &f in &contour {
        carrier.push(phi);
        phi += 2.0 * PI * f / sr as f64;
    }

    let median = track.median_voiced_f0().expect("voiced frames exist");
    let max_h = ((nyq / median).floor() as usize)
        .saturating_sub(1)
        .clamp(1, cfg.max_harmonics.max(1));

    let mut amps = vec![vec![0.0; max_h]; n_frames];
    let mut raw_phase: Vec<Vec<Option<f64>>> = vec![vec![None; max_h]; n_frames];
    let mut demod = Demod::new(max_h);
    for k in 0..n_frames {
        if !track.voiced[k] {
            continue;
        }
        let f0 = track.f0[k];
        let (start, w) = frame_window(k * hop, f0, cfg.periods_per_window, sr);
        demod.clear();
        let mut wsum = 0.0;
        for (j, &wj) in w.iter().enumerate() {
            wsum += wj;
            let idx = start + j as isize;
            if idx < 0 || idx as usize >= x.len() {
                continue;
            }
            let i = idx as usize;
            demod.push(wj * x[i], carrier[i]);
        }
        for n in 1..=max_h {
            if n as f64 * f0 >= nyq {
                break;
            }
            let (re, im) = (demod.re[n - 1], demod.im[n - 1]);
            amps[k][n - 1] = 2.0 * re.hypot(im) / wsum;
            raw_phase[k][n - 1] = Some(im.atan2(re));
        }
    }

    let mut phases = vec![vec![0.0; max_h]; n_frames];
    for n in 0..max_h {
        let mut prev: Option<f64> = None;
        let mut first: Option<f64> = None;
        for k in 0..n_frames {
            if let Some(raw) = raw_phase[k][n] {
                let v = match prev {
                    Some(p) => raw + 2.0 * PI * ((p - raw) / (2.0 * PI)).round(),
                    None => raw,
                };
                prev = Some(v);
                first.get_or_insert(v);
                phases[k][n] = v;
            } else {
                phases[k][n] = prev.unwrap_or(f64::NAN);
            }
        }
        let lead = first.unwrap_or(0.0);
        for row in phases.iter_mut() {
            if row[n].is_nan() {
                row[n] = lead;
            }
        }
    }

    let mut model = HarmonicModel {
        f0_track: track,
        harmonic_amps: amps,
        harmonic_phases: phases,
        residual: wav.clone(),
        max_harmonics: max_h,
        input_peak: wav.peak(),
        carrier,
    };
    let recon = model.reconstruction();
    model.residual = wav.sub(&recon)?;
    Ok(model)
}

impl HarmonicModel {
    pub fn sample_rate(&self) -> u32 {
        self.residual.sample_rate()
    }

    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }

    /// Peak absolute value of the analyzed input.
    pub fn input_peak(&self) -> f64 {
        self.input_peak
    }

    /// Carrier phase `phi0` per sample (radians).
    pub fn carrier(&self) -> &[f64] {
        &self.carrier
    }

    /// Adds harmonic `n` rendered at `multiplier * phi0(t)` into `out`.
    /// Frames where `multiplier * f0` reaches Nyquist get zero amplitude;
    /// returns how many voiced frames that silenced.
    pub fn render_harmonic_into(&self, n: usize, multiplier: f64, out: &mut [f64]) -> usize {
        if n == 0 || n > self.max_harmonics {
            return 0;
        }
        let hop = self.f0_track.hop_samples();
        let nyq = self.residual.nyquist();
        let n_frames = self.f0_track.len();
        let mut dropped = 0;
        let amp_at = |k: usize| -> f64 {
            let a = self.harmonic_amps[k][n - 1];
            if a > 0.0 && multiplier * self.f0_track.f0[k] >= nyq {
                0.0
            } else {
                a
            }
        };
        for k in 0..n_frames {
            if self.harmonic_amps[k][n - 1] > 0.0 && amp_at(k) == 0.0 {
                dropped += 1;
            }
            let start = k * hop;
            if start >= out.len() {
                break;
            }
            let end = ((k + 1) * hop).min(out.len());
            let k1 = (k + 1).min(n_frames - 1);
            let (a0, a1) = (amp_at(k), amp_at(k1));
            if a0 == 0.0 && a1 == 0.0 {
                continue;
            }
            let (p0, p1) = (self.harmonic_phases[k][n - 1], self.harmonic_phases[k1][n - 1]);
            for i in start..end {
                let frac = (i - start) as f64 / hop as f64;
                let a = a0 + (a1 - a0) * frac;
                let p = p0 + (p1 - p0) * frac;
                out[i] += a * (multiplier * self.carrier[i] + p).cos();
            }
        }
        dropped
    }

    /// Harmonic `n` alone at `multiplier * phi0(t)`.
    pub fn render_harmonic(&self, n: usize, multiplier: f64) -> Waveform {
        let mut out = vec![0.0; self.len()];
        self.render_harmonic_into(n, multiplier, &mut out);
        Waveform::new(out, self.sample_rate()).expect("valid rate")
    }

    /// Sum of all modelled harmonics at their measured frequencies.
    pub fn reconstruction(&self) -> Waveform {
        let mut out = vec![0.0; self.len()];
        for n in 1..=self.max_harmonics {
            self.render_harmonic_into(n, n as f64, &mut out);
        }
        Waveform::new(out, self.sample_rate()).expect("valid rate")
    }

    /// Residual plus harmonics moved to `(n + J_n) * phi0(t)`.
    ///
    /// Returns the output and the number of (harmonic, frame) pairs zeroed
    /// because their jittered frequency reached Nyquist. Level is left alone
    /// (jitter preserves per-harmonic power) unless the peak would exceed
    /// [`CLIP_GUARD`].
    pub fn resynthesize(&self, profile: &JitterProfile) -> Result<(Waveform, usize)> {
        if profile.len() < self.max_harmonics {
            return Err(Error::invalid(format!(
                "jitter profile has {} offsets, model has {} harmonics",
                profile.len(),
                self.max_harmonics
            )));
        }
        let mut out = self.residual.samples().to_vec();
        let mut dropped = 0;
        for n in 1..=self.max_harmonics {
            dropped += self.render_harmonic_into(n, profile.multiplier(n), &mut out);
        }
        let mut wav = Waveform::new(out, self.sample_rate())?;
        let peak = wav.peak();
        if peak > CLIP_GUARD {
            wav.scale(CLIP_GUARD / peak);
        }
        Ok((wav, dropped))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Seed;
    use crate::speech::synth::{synthetic_vowel, Vowel};

    fn vowel_model(f0: f64) -> (Waveform, HarmonicModel) {
        let w = synthetic_vowel(f0, 0.6, Vowel::A, 16_000, Seed(3));
        let track = F0Track::constant(f0, &w, 0.005);
        let m = analyze_harmonics(&w, &track, &HarmonicConfig::default()).unwrap();
        (w, m)
    }

    #[test]
    fn harmonic_count_respects_nyquist() {
        let (_, m) = vowel_model(150.0);
        assert_eq!(m.max_harmonics, 52);
        let (_, m) = vowel_model(100.0);
        assert_eq!(m.max_harmonics, 60);
    }

    #[test]
    fn harmonic_part_explains_a_steady_vowel() {
        let (w, m) = vowel_model(120.0);
        let recon = m.reconstruction();
        // Skip the onset/offset ramps.
        let inner = 1600..w.len() - 1600;
        let err: f64 = inner
            .clone()
            .map(|i| (w.samples()[i] - recon.samples()[i]).powi(2))
            .sum();
        let sig: f64 = inner.map(|i| w.samples()[i].powi(2)).sum();
        let snr = 10.0 * (sig / err).log10();
        assert!(snr > 30.0, "snr {snr}");
    }

    #[test]
    fn zero_profile_is_near_identity() {
        let (w, m) = vowel_model(180.0);
        let (out, dropped) = m.resynthesize(&JitterProfile::none(m.max_harmonics)).unwrap();
        assert_eq!(dropped, 0);
        for (a, b) in out.samples().iter().zip(w.samples()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn short_profile_rejected() {
        let (_, m) = vowel_model(200.0);
        assert!(m.resynthesize(&JitterProfile::none(3)).is_err());
    }

    #[test]
    fn track_length_checked() {
        let w = synthetic_vowel(120.0, 0.2, Vowel::O, 16_000, Seed(0));
        let mut track = F0Track::constant(120.0, &w, 0.005);
        track.f0.pop();
        track.voiced.pop();
        track.periodicity.pop();
        track.frame_times.pop();
        assert!(matches!(
            analyze_harmonics(&w, &track, &HarmonicConfig::default()),
            Err(Error::TrackMismatch { .. })
        ));
    }

    #[test]
    fn unvoiced_input_passes_through() {
        let w = Waveform::new(
            (0..800).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect(),
            16_000,
        )
        .unwrap();
        let m = analyze_harmonics(&w, &F0Track::unvoiced(&w, 0.005), &HarmonicConfig::default()).unwrap();
        assert_eq!(m.max_harmonics, 0);
        let (out, _) = m.resynthesize(&JitterProfile::none(0)).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn partials_pushed_past_nyquist_are_silenced() {
        let (_, m) = vowel_model(300.0);
        let mut out = vec![0.0; m.len()];
        let dropped = m.render_harmonic_into(1, 28.0, &mut out);
        assert!(dropped > 0);
        assert!(out.iter().all(|&v| v == 0.0));
    }
}
