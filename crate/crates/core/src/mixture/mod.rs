//! Two-source mixing and reproducible dataset construction.

pub mod corpus;
mod dataset;
pub mod manifest;
mod mix;

pub use corpus::{speaker_of, Corpus, CorpusEntry};
pub use dataset::{build_dataset, plan_dataset, plan_pairs, DatasetConfig, PairPlan, DEFAULT_TARGET_RMS};
pub use manifest::{Condition, CorpusInfo, DatasetCondition, Manifest, ManifestHeader, ManifestRecord, MANIFEST_FILE};
pub use mix::{db_to_gain, mix, LengthPolicy, Mixture, MIX_PEAK_LIMIT};
