//! Two-source probe stimuli.
//!
//! Every scenario returns two ground-truth sources and their sample-wise sum.
//! Burst timing is shared: source A bursts start at `k * 2 * burst`, source B
//! bursts start `(1 - overlap) * burst` later (or at the same time for
//! [`ScenarioKind::Synchronous`]), for `k` in `0..alternations`.
//!
//! | kind | sources | defaults |
//! |---|---|---|
//! | `alternating` | two complexes, non-overlapping bursts, both jittered by `jitter` | F0 110 / 210 Hz |
//! | `speech-plus-tone` | supplied speech (A) + continuous complex (B, jittered) | tone F0 200 Hz |
//! | `overlap` | bursts overlapping by 50%; `inharmonic` mode uses partials {200, 600} and {100, 300, 500} Hz | control F0 100 / 190 Hz |
//! | `missing-fundamental` | as alternating, B drops harmonics 1 and 2 in `inharmonic` mode | F0 110 / 210 Hz |
//! | `synchronous` | both complexes share onsets and offsets | F0 110 / 210 Hz |

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{resample, Seed, Waveform, CANONICAL_RATE};
use crate::tone::{default_num_harmonics, sample_jitter, synth_tone_complex, JitterProfile, ToneComplexSpec};

/// Peak of every scenario mixture after the shared renormalization.
pub const SCENARIO_PEAK: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[serde(alias = "alternating-complexes")]
    Alternating,
    SpeechPlusTone,
    #[serde(alias = "overlap-emergent")]
    Overlap,
    MissingFundamental,
    Synchronous,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Alternating,
        ScenarioKind::SpeechPlusTone,
        ScenarioKind::Overlap,
        ScenarioKind::MissingFundamental,
        ScenarioKind::Synchronous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Alternating => "alternating",
            ScenarioKind::SpeechPlusTone => "speech-plus-tone",
            ScenarioKind::Overlap => "overlap",
            ScenarioKind::MissingFundamental => "missing-fundamental",
            ScenarioKind::Synchronous => "synchronous",
        }
    }

    fn default_f0(self) -> [f64; 2] {
        match self {
            ScenarioKind::Overlap => [100.0, 190.0],
            ScenarioKind::SpeechPlusTone => [0.0, 200.0],
            _ => [110.0, 210.0],
        }
    }

    fn default_overlap(self) -> f64 {
        match self {
            ScenarioKind::Overlap => 0.5,
            _ => 0.0,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .or(match s {
                "alternating-complexes" => Some(ScenarioKind::Alternating),
                "overlap-emergent" => Some(ScenarioKind::Overlap),
                _ => None,
            })
            .ok_or_else(|| Error::invalid(format!("unknown scenario kind '{s}'")))
    }
}

/// Control (harmonic, complete) or probe (inharmonic / missing-fundamental) variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[serde(alias = "control", alias = "full")]
    Harmonic,
    #[default]
    #[serde(alias = "probe", alias = "missing")]
    Inharmonic,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" | "control" | "full" => Ok(Mode::Harmonic),
            "inharmonic" | "probe" | "missing" => Ok(Mode::Inharmonic),
            _ => Err(Error::invalid(format!("unknown mode '{s}'"))),
        }
    }
}

/// Scenario recipe. Everything except `kind` has a per-kind default, so a
/// checked-in config only needs the fields it changes.
///
/// ```toml
/// kind = "overlap"
/// mode = "inharmonic"
/// burst = 0.5
/// alternations = 4
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub kind: ScenarioKind,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
    /// F0 of source A and B. For `speech-plus-tone` only the second entry is used.
    #[serde(default)]
    pub f0: Option<[f64; 2]>,
    /// Jitter bound J applied to the complexes (both for alternating and
    /// synchronous, the tone for speech-plus-tone).
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub num_harmonics: Option<usize>,
    /// Explicit partial lists, overriding the defaults of `overlap` in inharmonic mode.
    #[serde(default)]
    pub partials_a: Option<Vec<f64>>,
    #[serde(default)]
    pub partials_b: Option<Vec<f64>>,
    /// Burst length in seconds.
    #[serde(default = "default_burst")]
    pub burst: f64,
    /// Number of A/B burst pairs.
    #[serde(default = "default_alternations")]
    pub alternations: usize,
    /// Fraction of each burst overlapped by the other source.
    #[serde(default)]
    pub overlap: Option<f64>,
    /// Harmonics removed from source B in missing-fundamental probe mode.
    #[serde(default = "default_missing")]
    pub missing_harmonics: Vec<usize>,
    /// Tone level relative to the speech RMS, speech-plus-tone only.
    #[serde(default)]
    pub tone_to_speech_db: f64,
}

fn default_rate() -> u32 {
    CANONICAL_RATE
}
fn default_burst() -> f64 {
    0.5
}
fn default_alternations() -> usize {
    4
}
fn default_missing() -> Vec<usize> {
    vec![1, 2]
}

impl ScenarioParams {
    pub fn new(kind: ScenarioKind) -> Self {
        ScenarioParams {
            kind,
            sample_rate: default_rate(),
            f0: None,
            jitter: 0.0,
            mode: Mode::default(),
            num_harmonics: None,
            partials_a: None,
            partials_b: None,
            burst: default_burst(),
            alternations: default_alternations(),
            overlap: None,
            missing_harmonics: default_missing(),
            tone_to_speech_db: 0.0,
        }
    }

    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_f0(mut self, a: f64, b: f64) -> Self {
        self.f0 = Some([a, b]);
        self
    }

    pub fn f0s(&self) -> [f64; 2] {
        self.f0.unwrap_or_else(|| self.kind.default_f0())
    }

    pub fn overlap_fraction(&self) -> f64 {
        self.overlap.unwrap_or_else(|| self.kind.default_overlap())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario params always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.alternations == 0 {
            return Err(Error::invalid("alternations must be at least 1"));
        }
        if !(self.burst > 0.0) {
            return Err(Error::invalid("burst must be positive"));
        }
        let o = self.overlap_fraction();
        if !(0.0..1.0).contains(&o) {
            return Err(Error::invalid(format!("overlap must lie in [0, 1), got {o}")));
        }
        Ok(())
    }
}

/// What was actually rendered, for metadata files and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInfo {
    pub kind: ScenarioKind,
    pub mode: Mode,
    pub partials_a: Vec<f64>,
    pub partials_b: Vec<f64>,
    pub onsets_a: Vec<f64>,
    pub onsets_b: Vec<f64>,
    pub burst: f64,
    /// Time intervals (seconds) where both sources are active.
    pub overlap_intervals: Vec<(f64, f64)>,
    pub jitter_a: Option<JitterProfile>,
    pub jitter_b: Option<JitterProfile>,
    /// Scalar applied identically to both sources and the mixture.
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub source_a: Waveform,
    pub source_b: Waveform,
    pub mixture: Waveform,
    pub info: ScenarioInfo,
}

struct SideRecipe {
    spec: ToneComplexSpec,
    onsets: Vec<f64>,
}

fn render_bursts(spec: &ToneComplexSpec, onsets: &[f64], len: usize, sr: u32) -> Result<Waveform> {
    // Render once at onset 0 and place copies; every burst is identical.
    let burst = synth_tone_complex(
        &ToneComplexSpec {
            onset: 0.0,
            ..spec.clone()
        },
        sr,
    )?;
    let mut out = vec![0.0; len];
    for &onset in onsets {
        let start = (onset * sr as f64).round() as usize;
        for (o, &b) in out[start.min(len)..].iter_mut().zip(burst.samples()) {
            *o += b;
        }
    }
    Waveform::new(out, sr)
}

fn complex_side(
    f0: f64,
    params: &ScenarioParams,
    jitter: f64,
    seed: Seed,
) -> Result<(ToneComplexSpec, Option<JitterProfile>)> {
    let n = params.num_harmonics.unwrap_or_else(|| default_num_harmonics(f0));
    let mut spec = ToneComplexSpec {
        num_harmonics: n,
        jitter: JitterProfile::none(n),
        ..ToneComplexSpec::harmonic(f0, 0.0, params.burst)
    };
    let profile = if jitter > 0.0 {
        let p = sample_jitter(jitter, n, seed)?;
        spec.jitter = p.clone();
        Some(p)
    } else {
        None
    };
    Ok((spec, profile))
}

/// Builds a scenario. `speech` is required for [`ScenarioKind::SpeechPlusTone`]
/// and resampled to the scenario rate if needed.
pub fn build_scenario(params: &ScenarioParams, seed: Seed, speech: Option<&Waveform>) -> Result<Scenario> {
    params.validate()?;
    let sr = params.sample_rate;
    let [f0_a, f0_b] = params.f0s();
    let t = params.burst;
    let seed_a = seed.derive("source_a");
    let seed_b = seed.derive("source_b");

    if params.kind == ScenarioKind::SpeechPlusTone {
        return speech_plus_tone(params, seed_b, speech, f0_b);
    }

    let overlap = params.overlap_fraction();
    let offset_b = match params.kind {
        ScenarioKind::Synchronous => 0.0,
        _ => (1.0 - overlap) * t,
    };
    let onsets_a: Vec<f64> = (0..params.alternations).map(|k| 2.0 * t * k as f64).collect();
    let onsets_b: Vec<f64> = onsets_a.iter().map(|o| o + offset_b).collect();

    let (a, b, jitter_a, jitter_b) = match params.kind {
        ScenarioKind::Alternating | ScenarioKind::Synchronous => {
            let (a, ja) = complex_side(f0_a, params, params.jitter, seed_a)?;
            let (b, jb) = complex_side(f0_b, params, params.jitter, seed_b)?;
            (a, b, ja, jb)
        }
        ScenarioKind::Overlap => match params.mode {
            Mode::Harmonic => {
                let (a, ja) = complex_side(f0_a, params, params.jitter, seed_a)?;
                let (b, jb) = complex_side(f0_b, params, params.jitter, seed_b)?;
                (a, b, ja, jb)
            }
            Mode::Inharmonic => {
                let pa = params.partials_a.clone().unwrap_or_else(|| vec![200.0, 600.0]);
                let pb = params.partials_b.clone().unwrap_or_else(|| vec![100.0, 300.0, 500.0]);
                (
                    ToneComplexSpec::explicit(pa, 0.0, t),
                    ToneComplexSpec::explicit(pb, 0.0, t),
                    None,
                    None,
                )
            }
        },
        ScenarioKind::MissingFundamental => {
            let (a, ja) = complex_side(f0_a, params, params.jitter, seed_a)?;
            let (mut b, jb) = complex_side(f0_b, params, params.jitter, seed_b)?;
            if params.mode == Mode::Inharmonic {
                let kept: Vec<usize> = (1..=b.num_harmonics)
                    .filter(|n| !params.missing_harmonics.contains(n))
                    .collect();
                b = b.with_included(kept);
            }
            (a, b, ja, jb)
        }
        ScenarioKind::SpeechPlusTone => unreachable!(),
    };

    let sides = [
        SideRecipe {
            spec: a,
            onsets: onsets_a,
        },
        SideRecipe {
            spec: b,
            onsets: onsets_b,
        },
    ];
    let end = sides
        .iter()
        .flat_map(|s| s.onsets.iter().map(|o| o + t))
        .fold(0.0, f64::max);
    let len = (end * sr as f64).ceil() as usize;
    let source_a = render_bursts(&sides[0].spec, &sides[0].onsets, len, sr)?;
    let source_b = render_bursts(&sides[1].spec, &sides[1].onsets, len, sr)?;

    let overlap_intervals = match params.kind {
        ScenarioKind::Synchronous => sides[0].onsets.iter().map(|&o| (o, o + t)).collect(),
        _ if overlap > 0.0 => sides[1].onsets.iter().map(|&o| (o, o + overlap * t)).collect(),
        _ => Vec::new(),
    };

    let partials_a = sides[0].spec.partials(sr)?.iter().map(|p| p.frequency).collect();
    let partials_b = sides[1].spec.partials(sr)?.iter().map(|p| p.frequency).collect();
    let [SideRecipe { onsets: onsets_a, .. }, SideRecipe { onsets: onsets_b, .. }] = sides;
    finish(
        source_a,
        source_b,
        ScenarioInfo {
            kind: params.kind,
            mode: params.mode,
            partials_a,
            partials_b,
            onsets_a,
            onsets_b,
            burst: t,
            overlap_intervals,
            jitter_a,
            jitter_b,
            scale: 1.0,
        },
    )
}

fn speech_plus_tone(
    params: &ScenarioParams,
    seed_b: Seed,
    speech: Option<&Waveform>,
    f0_tone: f64,
) -> Result<Scenario> {
    let sr = params.sample_rate;
    let speech = speech.ok_or_else(|| Error::invalid("speech-plus-tone requires a speech waveform"))?;
    let speech = resample(speech, sr)?;
    if speech.is_empty() || speech.rms() == 0.0 {
        return Err(Error::invalid("speech waveform is empty or silent"));
    }
    let duration = speech.duration();
    let n = params.num_harmonics.unwrap_or_else(|| default_num_harmonics(f0_tone));
    let mut spec = ToneComplexSpec {
        num_harmonics: n,
        jitter: JitterProfile::none(n),
        ..ToneComplexSpec::harmonic(f0_tone, 0.0, duration)
    };
    let jitter_b = if params.jitter > 0.0 {
        let p = sample_jitter(params.jitter, n, seed_b)?;
        spec.jitter = p.clone();
        Some(p)
    } else {
        None
    };
    let mut tone = synth_tone_complex(&spec, sr)?.resized(speech.len());
    let target = speech.rms() * 10f64.powf(params.tone_to_speech_db / 20.0);
    tone.scale(target / tone.rms());
    let partials_b = spec.partials(sr)?.iter().map(|p| p.frequency).collect();
    finish(
        speech,
        tone,
        ScenarioInfo {
            kind: params.kind,
            mode: params.mode,
            partials_a: Vec::new(),
            partials_b,
            onsets_a: vec![0.0],
            onsets_b: vec![0.0],
            burst: duration,
            overlap_intervals: vec![(0.0, duration)],
            jitter_a: None,
            jitter_b,
            scale: 1.0,
        },
    )
}

fn finish(mut a: Waveform, mut b: Waveform, mut info: ScenarioInfo) -> Result<Scenario> {
    let mut mixture = a.add(&b)?;
    let peak = mixture.peak();
    let scale = if peak > 0.0 { SCENARIO_PEAK / peak } else { 1.0 };
    for w in [&mut a, &mut b, &mut mixture] {
        w.scale(scale);
    }
    info.scale = scale;
    Ok(Scenario {
        source_a: a,
        source_b: b,
        mixture,
        info,
    })
}
