//! Separation quality metrics.

mod score;

pub use score::{
    pit, pit_si_snr, score_separation, sdr, sdri, si_snr, PitResult, SeparationScore, MAX_PIT_SOURCES, SCORE_CAP_DB,
};
