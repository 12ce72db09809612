//! Small synthetic corpora for demos, tests and smoke runs.
//!
//! Files are laid out flat as `spkNN_uttMM.wav`, so the default speaker rule
//! (prefix before the first `_`) recovers the talker.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{write_wav, Seed, Waveform, CANONICAL_RATE};
use crate::speech::synth::{synthetic_utterance, SpeakerProfile};
use crate::tone::{default_num_harmonics, synth_tone_complex, ToneComplexSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToyKind {
    /// Formant-shaped voiced syllables with moving F0, fricatives and pauses.
    Speech,
    /// Steady harmonic complexes, one F0 per utterance near the talker's F0.
    Tones,
}

impl FromStr for ToyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "speech" => Ok(ToyKind::Speech),
            "tones" => Ok(ToyKind::Tones),
            _ => Err(Error::invalid(format!("unknown toy corpus kind '{s}'"))),
        }
    }
}

/// Utterance `utt` of talker `speaker`.
pub fn toy_utterance(kind: ToyKind, speaker: usize, utt: usize, seed: Seed) -> Waveform {
    let profile = SpeakerProfile::nth(speaker, seed);
    let useed = seed.derive(&format!("{}/{utt}", profile.id));
    match kind {
        ToyKind::Speech => synthetic_utterance(&profile, CANONICAL_RATE, useed),
        ToyKind::Tones => {
            let mut rng = useed.rng();
            let f0 = profile.f0 * rng.gen_range(0.95..1.05);
            let duration = rng.gen_range(1.2..2.0);
            let spec = ToneComplexSpec {
                num_harmonics: default_num_harmonics(f0),
                ..ToneComplexSpec::harmonic(f0, 0.1, duration)
            };
            let mut w = synth_tone_complex(&spec, CANONICAL_RATE).expect("toy tone parameters are valid");
            let len = w.len() + (0.1 * CANONICAL_RATE as f64) as usize;
            w = w.resized(len);
            w.scale(0.5);
            w
        }
    }
}

/// Writes `speakers * per_speaker` files into `dir` and returns their paths.
pub fn write_toy_corpus(
    dir: &Path,
    kind: ToyKind,
    speakers: usize,
    per_speaker: usize,
    seed: Seed,
) -> Result<Vec<PathBuf>> {
    if speakers < 2 || per_speaker == 0 {
        return Err(Error::invalid(
            "a toy corpus needs at least two speakers and one utterance each",
        ));
    }
    let mut out = Vec::with_capacity(speakers * per_speaker);
    for s in 0..speakers {
        for u in 0..per_speaker {
            let path = dir.join(format!("spk{s:02}_utt{u:02}.wav"));
            write_wav(&path, &toy_utterance(kind, s, u, seed))?;
            out.push(path);
        }
    }
    Ok(out)
}
