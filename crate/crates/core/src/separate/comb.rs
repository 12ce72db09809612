//! Two-talker separation by harmonic comb masking.
//!
//! Each STFT frame is explained by zero, one or two pitches. A pitch claims the
//! spectral peaks lying within a fixed tolerance of its harmonic grid. Pitch
//! hypotheses are smoothed over time with a Viterbi pass, pitches are linked
//! into two tracks by proximity, and each track's claimed peak regions form
//! its binary mask. Nothing here looks at anything but harmonic structure, so
//! the separator degrades when partials leave the grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::separate::irm::apply_mask;
use crate::separate::{SeparationInput, Separator};
use crate::signal::{ComplexStft, StftConfig, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombConfig {
    pub stft: StftConfig,
    pub f0_min: f64,
    pub f0_max: f64,
    pub f0_step: f64,
    /// Half-width of each comb tooth, as a fraction of `tooth_scale`.
    pub tooth_tolerance: f64,
    pub tooth_scale: ToothScale,
    /// Penalty per unit fraction of empty teeth below the highest matched one.
    pub empty_penalty: f64,
    /// Cost of each pitch in a hypothesis.
    pub pitch_penalty: f64,
    /// Single-pitch candidates kept per frame.
    pub max_candidates: usize,
    /// Cost of a full pitch jump between frames.
    pub jump_cost: f64,
    /// Cost of a pitch appearing or disappearing.
    pub birth_cost: f64,
    /// Peaks weaker than this relative to the frame maximum are ignored.
    pub peak_floor_db: f64,
    /// Frames quieter than this relative to the loudest frame are left unvoiced.
    pub silence_db: f64,
    /// Upper edge of the analysed band, Hz.
    pub band_max: f64,
}

/// What the tooth tolerance is relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToothScale {
    /// Same absolute width for every harmonic. Jittered partials fall off the
    /// comb at every harmonic number.
    #[default]
    F0,
    /// Width grows with the harmonic number, so upper partials of a jittered
    /// source still land on teeth.
    Harmonic,
}

impl Default for CombConfig {
    fn default() -> Self {
        CombConfig {
            stft: StftConfig {
                window_len: 0.064,
                hop: 0.016,
            },
            f0_min: 60.0,
            f0_max: 400.0,
            f0_step: 1.0,
            tooth_tolerance: 0.03,
            tooth_scale: ToothScale::F0,
            empty_penalty: 0.3,
            pitch_penalty: 0.1,
            max_candidates: 6,
            jump_cost: 0.3,
            birth_cost: 0.15,
            peak_floor_db: -40.0,
            silence_db: -60.0,
            band_max: 5000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HarmonicComb {
    pub config: CombConfig,
}

#[derive(Debug, Clone, Copy)]
struct Peak {
    freq: f64,
    energy: f64,
    lo: usize,
    hi: usize,
}

#[derive(Debug, Clone)]
struct Hypothesis {
    pitches: Vec<f64>,
    score: f64,
}

/// Per-frame outcome of the pitch analysis, exposed for inspection and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombFrame {
    /// `(f0, track)` pairs, track 0 or 1.
    pub pitches: Vec<(f64, usize)>,
}

fn find_peaks(power: &[f64], res: f64, cfg: &CombConfig) -> Vec<Peak> {
    let top = ((cfg.band_max / res).floor() as usize).min(power.len() - 1);
    let max = power[1..top].iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let floor = max * 10f64.powf(cfg.peak_floor_db / 10.0);
    let mut peaks = Vec::new();
    for k in 1..top {
        if power[k] < floor || power[k] <= power[k - 1] || power[k] < power[k + 1] {
            continue;
        }
        let mut lo = k;
        while lo > 1 && power[lo - 1] < power[lo] {
            lo -= 1;
        }
        let mut hi = k;
        while hi + 1 < top && power[hi + 1] < power[hi] {
            hi += 1;
        }
        let (a, b, c) = (
            power[k - 1].max(1e-300).ln(),
            power[k].ln(),
            power[k + 1].max(1e-300).ln(),
        );
        let denom = a - 2.0 * b + c;
        let shift = if denom.abs() > 1e-12 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        peaks.push(Peak {
            freq: (k as f64 + shift) * res,
            energy: power[lo..=hi].iter().sum(),
            lo,
            hi,
        });
    }
    peaks
}

/// Tooth index and normalized distance from the tooth centre if `freq` is on
/// the comb.
fn tooth(freq: f64, f0: f64, cfg: &CombConfig) -> Option<(usize, f64)> {
    let h = (freq / f0).round();
    if h < 1.0 {
        return None;
    }
    let unit = match cfg.tooth_scale {
        ToothScale::F0 => f0,
        ToothScale::Harmonic => h * f0,
    };
    let d = (freq - h * f0).abs() / unit;
    (d <= cfg.tooth_tolerance).then_some((h as usize, d))
}

struct PitchFit {
    covered: Vec<bool>,
    empty_fraction: f64,
}

fn fit_pitch(f0: f64, peaks: &[Peak], cfg: &CombConfig) -> PitchFit {
    let mut covered = vec![false; peaks.len()];
    let mut matched = Vec::new();
    for (i, p) in peaks.iter().enumerate() {
        if let Some((h, _)) = tooth(p.freq, f0, cfg) {
            covered[i] = true;
            matched.push(h);
        }
    }
    let h_max = matched.iter().copied().max().unwrap_or(0);
    let empty_fraction = if h_max == 0 {
        1.0
    } else {
        matched.sort_unstable();
        matched.dedup();
        (h_max - matched.len()) as f64 / h_max as f64
    };
    PitchFit {
        covered,
        empty_fraction,
    }
}

/// Least-squares F0 from the peaks a pitch covers, weighted by energy.
fn refine_pitch(f0: f64, peaks: &[Peak], cfg: &CombConfig) -> f64 {
    let mut f = f0;
    for _ in 0..3 {
        let (mut num, mut den) = (0.0, 0.0);
        for p in peaks {
            if let Some((h, _)) = tooth(p.freq, f, cfg) {
                let h = h as f64;
                num += p.energy * h * p.freq;
                den += p.energy * h * h;
            }
        }
        if den <= 0.0 {
            break;
        }
        let next = num / den;
        if (next - f).abs() < 1e-6 {
            f = next;
            break;
        }
        f = next;
    }
    if (f / f0 - 1.0).abs() <= cfg.tooth_tolerance {
        f
    } else {
        f0
    }
}

fn frame_hypotheses(peaks: &[Peak], cfg: &CombConfig) -> Vec<Hypothesis> {
    let mut hyps = vec![Hypothesis {
        pitches: Vec::new(),
        score: 0.0,
    }];
    let total: f64 = peaks.iter().map(|p| p.energy).sum();
    if peaks.is_empty() || total <= 0.0 {
        return hyps;
    }
    let grid: Vec<f64> = {
        let n = ((cfg.f0_max - cfg.f0_min) / cfg.f0_step).floor() as usize;
        (0..=n).map(|i| cfg.f0_min + i as f64 * cfg.f0_step).collect()
    };
    let score_of = |fit: &PitchFit| -> f64 {
        let covered: f64 = peaks
            .iter()
            .zip(&fit.covered)
            .filter(|(_, &c)| c)
            .map(|(p, _)| p.energy)
            .sum();
        covered / total - cfg.empty_penalty * fit.empty_fraction
    };
    let coarse: Vec<f64> = grid.iter().map(|&f| score_of(&fit_pitch(f, peaks, cfg))).collect();
    let mut local: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let left = i == 0 || coarse[i] >= coarse[i - 1];
            let right = i + 1 == grid.len() || coarse[i] > coarse[i + 1];
            left && right && coarse[i] > 0.0
        })
        .collect();
    local.sort_by(|&a, &b| coarse[b].total_cmp(&coarse[a]));
    local.truncate(cfg.max_candidates);

    let mut singles: Vec<(f64, PitchFit)> = Vec::new();
    for i in local {
        let f = refine_pitch(grid[i], peaks, cfg);
        if singles.iter().any(|(g, _)| (f / g - 1.0).abs() < 0.02) {
            continue;
        }
        singles.push((f, fit_pitch(f, peaks, cfg)));
    }
    for (f, fit) in &singles {
        hyps.push(Hypothesis {
            pitches: vec![*f],
            score: score_of(fit) - cfg.pitch_penalty,
        });
    }
    for i in 0..singles.len() {
        for j in i + 1..singles.len() {
            let (fi, a) = &singles[i];
            let (fj, b) = &singles[j];
            let covered: f64 = peaks
                .iter()
                .enumerate()
                .filter(|(k, _)| a.covered[*k] || b.covered[*k])
                .map(|(_, p)| p.energy)
                .sum();
            let score =
                covered / total - cfg.empty_penalty * (a.empty_fraction + b.empty_fraction) - 2.0 * cfg.pitch_penalty;
            let mut pitches = vec![*fi, *fj];
            pitches.sort_by(f64::total_cmp);
            hyps.push(Hypothesis { pitches, score });
        }
    }
    hyps
}

fn transition_cost(prev: &[f64], next: &[f64], cfg: &CombConfig) -> f64 {
    let jump = |a: f64, b: f64| cfg.jump_cost * ((a - b).abs() - 5.0).clamp(0.0, 20.0) / 20.0;
    match (prev.len(), next.len()) {
        (0, n) | (n, 0) => cfg.birth_cost * n as f64,
        (1, 1) => jump(prev[0], next[0]),
        (1, 2) => jump(prev[0], next[0]).min(jump(prev[0], next[1])) + cfg.birth_cost,
        (2, 1) => jump(prev[0], next[0]).min(jump(prev[1], next[0])) + cfg.birth_cost,
        _ => {
            let straight = jump(prev[0], next[0]) + jump(prev[1], next[1]);
            let crossed = jump(prev[0], next[1]) + jump(prev[1], next[0]);
            straight.min(crossed)
        }
    }
}

fn viterbi(frames: &[Vec<Hypothesis>], cfg: &CombConfig) -> Vec<usize> {
    if frames.is_empty() {
        return Vec::new();
    }
    let mut value: Vec<f64> = frames[0].iter().map(|h| h.score).collect();
    let mut back: Vec<Vec<usize>> = vec![vec![0; frames[0].len()]];
    for t in 1..frames.len() {
        let mut next_value = Vec::with_capacity(frames[t].len());
        let mut next_back = Vec::with_capacity(frames[t].len());
        for h in &frames[t] {
            let (arg, best) = frames[t - 1]
                .iter()
                .enumerate()
                .map(|(i, p)| (i, value[i] - transition_cost(&p.pitches, &h.pitches, cfg)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least the empty hypothesis");
            next_value.push(best + h.score);
            next_back.push(arg);
        }
        value = next_value;
        back.push(next_back);
    }
    let mut path = vec![0; frames.len()];
    let mut s = (0..value.len())
        .max_by(|&a, &b| value[a].total_cmp(&value[b]))
        .expect("non-empty");
    for t in (0..frames.len()).rev() {
        path[t] = s;
        s = back[t][s];
    }
    path
}

/// Distance (octaves) beyond which a pitch starts the unused track rather
/// than continuing the nearest one.
const NEW_TRACK_OCTAVES: f64 = 0.25;

fn assign_tracks(pitch_path: &[Vec<f64>]) -> Vec<Vec<(f64, usize)>> {
    let mut last: [Option<f64>; 2] = [None, None];
    let dist = |last: Option<f64>, f: f64| match last {
        Some(l) => (f / l).log2().abs(),
        None => NEW_TRACK_OCTAVES,
    };
    pitch_path
        .iter()
        .map(|pitches| {
            let out: Vec<(f64, usize)> = match pitches.as_slice() {
                [] => Vec::new(),
                [f] => {
                    let t = if dist(last[0], *f) <= dist(last[1], *f) { 0 } else { 1 };
                    vec![(*f, t)]
                }
                [f, g, ..] => {
                    let straight = dist(last[0], *f) + dist(last[1], *g);
                    let crossed = dist(last[0], *g) + dist(last[1], *f);
                    if straight <= crossed {
                        vec![(*f, 0), (*g, 1)]
                    } else {
                        vec![(*f, 1), (*g, 0)]
                    }
                }
            };
            for &(f, t) in &out {
                last[t] = Some(f);
            }
            out
        })
        .collect()
}

impl HarmonicComb {
    pub fn new(config: CombConfig) -> Self {
        HarmonicComb { config }
    }

    /// Pitch analysis and masks: returns the per-frame pitches and the mask
    /// (share of track 0) for every STFT bin.
    pub fn analyze(&self, spec: &ComplexStft) -> (Vec<CombFrame>, Vec<Vec<f64>>) {
        let cfg = &self.config;
        let res = spec.freq_resolution();
        let powers: Vec<Vec<f64>> = spec
            .frames
            .iter()
            .map(|f| f.iter().map(|c| c.norm_sqr()).collect())
            .collect();
        let frame_energy: Vec<f64> = powers.iter().map(|p| p.iter().sum()).collect();
        let loudest = frame_energy.iter().copied().fold(0.0, f64::max);
        let gate = loudest * 10f64.powf(cfg.silence_db / 10.0);
        let peaks: Vec<Vec<Peak>> = powers
            .iter()
            .zip(&frame_energy)
            .map(|(p, &e)| {
                if e > gate && e > 0.0 {
                    find_peaks(p, res, cfg)
                } else {
                    Vec::new()
                }
            })
            .collect();
        let hyps: Vec<Vec<Hypothesis>> = peaks.iter().map(|p| frame_hypotheses(p, cfg)).collect();
        let path = viterbi(&hyps, cfg);
        let pitch_path: Vec<Vec<f64>> = path.iter().zip(&hyps).map(|(&s, h)| h[s].pitches.clone()).collect();
        let tracks = assign_tracks(&pitch_path);

        let bins = spec.num_bins();
        let mut mask = vec![vec![0.5; bins]; spec.frames.len()];
        for ((m, frame_peaks), pitches) in mask.iter_mut().zip(&peaks).zip(&tracks) {
            for p in frame_peaks {
                let owner = pitches
                    .iter()
                    .filter_map(|&(f0, t)| tooth(p.freq, f0, cfg).map(|(_, d)| (d, t)))
                    .min_by(|a, b| a.0.total_cmp(&b.0));
                if let Some((_, t)) = owner {
                    let g = if t == 0 { 1.0 } else { 0.0 };
                    m[p.lo..=p.hi].iter_mut().for_each(|v| *v = g);
                }
            }
        }
        let frames = tracks.into_iter().map(|pitches| CombFrame { pitches }).collect();
        (frames, mask)
    }

    pub fn separate_mixture(&self, mixture: &Waveform) -> Result<[Waveform; 2]> {
        if mixture.is_empty() {
            return Err(Error::SignalTooShort { len: 0, needed: 1 });
        }
        let spec = ComplexStft::analyze(mixture, self.config.stft)?;
        let (_, mask) = self.analyze(&spec);
        Ok(apply_mask(&spec, &mask))
    }
}

impl Separator for HarmonicComb {
    fn name(&self) -> String {
        "harmonic-comb".into()
    }

    fn separate(&self, input: &SeparationInput<'_>) -> Result<[Waveform; 2]> {
        self.separate_mixture(input.mixture)
    }
}
