//! F0 tracking, harmonic analysis/resynthesis and harmonic jitter for speech.

pub mod f0;
pub mod harmonic;
mod jitter;
mod measure;
pub mod synth;

pub use f0::{track_f0, F0Config, F0Track};
pub use harmonic::{analyze_harmonics, HarmonicConfig, HarmonicModel};
pub use jitter::{
    jitter_directory, jitter_speech, jitter_speech_with, list_wavs, utterance_seed, BatchFailure, BatchReport,
    JitterSidecar, JitteredSpeech, SpeechJitterConfig,
};
pub use measure::{measure_harmonic_deviation, HarmonicDeviation};
