//! Harmonic and jittered tone complexes and the two-source probe scenarios.

mod complex;
mod jitter;
pub mod scenario;

pub use complex::{
    default_num_harmonics, synth_tone_complex, Partial, ToneComplexSpec, DEFAULT_MAX_FREQ, DEFAULT_MAX_HARMONICS,
    RAMP_SECS,
};
pub use jitter::{sample_jitter, JitterProfile, MAX_JITTER_ATTEMPTS};
pub use scenario::{build_scenario, Mode, Scenario, ScenarioInfo, ScenarioKind, ScenarioParams};
