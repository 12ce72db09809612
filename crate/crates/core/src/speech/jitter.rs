//! Jittering the harmonics of recorded speech, singly or for a directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{read_wav, write_wav, Seed, Waveform};
use crate::speech::f0::{track_f0, F0Config};
use crate::speech::harmonic::{analyze_harmonics, HarmonicConfig};
use crate::tone::{sample_jitter, JitterProfile};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeechJitterConfig {
    pub f0: F0Config,
    pub harmonic: HarmonicConfig,
}

#[derive(Debug, Clone)]
pub struct JitteredSpeech {
    pub output: Waveform,
    /// One offset per modelled harmonic.
    pub profile: JitterProfile,
    pub max_harmonics: usize,
    pub median_f0: Option<f64>,
    pub voiced_fraction: f64,
    /// (harmonic, frame) pairs silenced because they were pushed past Nyquist.
    pub nyquist_dropped: usize,
}

/// Moves each harmonic `n` of the voiced parts of `wav` to `(n + J_n) * f0(t)`,
/// with `J_n` drawn once per call from `[-bound, bound]`. Unvoiced samples are
/// returned unchanged.
pub fn jitter_speech(wav: &Waveform, bound: f64, seed: Seed) -> Result<Waveform> {
    jitter_speech_with(wav, bound, seed, &SpeechJitterConfig::default()).map(|j| j.output)
}

pub fn jitter_speech_with(wav: &Waveform, bound: f64, seed: Seed, cfg: &SpeechJitterConfig) -> Result<JitteredSpeech> {
    if wav.is_empty() {
        return Err(Error::SignalTooShort { len: 0, needed: 1 });
    }
    // Validate the bound before the (comparatively slow) analysis.
    sample_jitter(bound, 0, seed)?;
    let track = track_f0(wav, &cfg.f0)?;
    let model = analyze_harmonics(wav, &track, &cfg.harmonic)?;
    let profile = sample_jitter(bound, model.max_harmonics, seed)?;
    let (output, dropped) = model.resynthesize(&profile)?;
    if dropped > 0 {
        log::debug!("{dropped} harmonic frames above Nyquist after jitter were zeroed");
    }
    Ok(JitteredSpeech {
        output,
        profile,
        max_harmonics: model.max_harmonics,
        median_f0: model.f0_track.median_voiced_f0(),
        voiced_fraction: model.f0_track.voiced_fraction(),
        nyquist_dropped: dropped,
    })
}

/// Sidecar written next to each jittered file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterSidecar {
    pub source: String,
    pub bound: f64,
    /// Seed the batch was run with.
    pub base_seed: Seed,
    /// Seed of this utterance, derived from `base_seed` and `source`.
    pub seed: Seed,
    pub offsets: Vec<f64>,
    pub median_f0: Option<f64>,
    pub voiced_fraction: f64,
    pub nyquist_dropped: usize,
    pub toolkit_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub source: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub written: Vec<String>,
    pub failed: Vec<BatchFailure>,
}

/// Sorted relative paths of all `.wav` files under `dir`.
pub fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
                out.push(path.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

/// Per-utterance seed: stable under reordering or subsetting of the corpus.
pub fn utterance_seed(base: Seed, relative: &Path) -> Seed {
    base.derive(&relative.to_string_lossy().replace('\\', "/"))
}

/// Jitters every `.wav` under `input` into the same relative path under
/// `output`, plus a `.jitter.json` sidecar. Unreadable or unanalyzable files
/// are reported, not fatal.
pub fn jitter_directory(
    input: &Path,
    output: &Path,
    bound: f64,
    seed: Seed,
    cfg: &SpeechJitterConfig,
) -> Result<BatchReport> {
    sample_jitter(bound, 0, seed)?;
    let files = list_wavs(input)?;
    let results: Vec<std::result::Result<String, BatchFailure>> = files
        .par_iter()
        .map(|rel| {
            let name = rel.to_string_lossy().replace('\\', "/");
            let fail = |e: Error| BatchFailure {
                source: name.clone(),
                error: e.to_string(),
            };
            let wav = read_wav(input.join(rel)).map_err(fail)?;
            let useed = utterance_seed(seed, rel);
            let j = jitter_speech_with(&wav, bound, useed, cfg).map_err(fail)?;
            let out_path = output.join(rel);
            write_wav(&out_path, &j.output).map_err(fail)?;
            let sidecar = JitterSidecar {
                source: name.clone(),
                bound,
                base_seed: seed,
                seed: useed,
                offsets: j.profile.offsets,
                median_f0: j.median_f0,
                voiced_fraction: j.voiced_fraction,
                nyquist_dropped: j.nyquist_dropped,
                toolkit_version: crate::VERSION.to_string(),
            };
            let side_path = out_path.with_extension("jitter.json");
            let text = serde_json::to_string_pretty(&sidecar).map_err(|e| fail(e.into()))?;
            std::fs::write(&side_path, text).map_err(|e| fail(Error::io(&side_path, e)))?;
            Ok(name)
        })
        .collect();
    let mut report = BatchReport::default();
    for r in results {
        match r {
            Ok(name) => report.written.push(name),
            Err(f) => {
                log::warn!("skipping {}: {}", f.source, f.error);
                report.failed.push(f);
            }
        }
    }
    Ok(report)
}
