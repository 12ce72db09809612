//! Two-talker dataset construction.
//!
//! Pairing, gains and the jittered side come only from `pairing_seed`, so
//! datasets built at different jitter bounds from the same corpus contain the
//! same utterance pairs at the same gains. Each utterance's jitter profile
//! comes from `jitter_seed` and its relative path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::corpus::{Corpus, CorpusEntry};
use crate::mixture::manifest::{
    Condition, CorpusInfo, DatasetCondition, Manifest, ManifestHeader, ManifestRecord, MANIFEST_FILE, MANIFEST_SCHEMA,
    MANIFEST_VERSION,
};
use crate::mixture::mix::{mix, LengthPolicy};
use crate::signal::{read_wav_canonical, write_wav, Seed, Waveform, CANONICAL_RATE};
use crate::speech::{jitter_speech_with, utterance_seed, SpeechJitterConfig};

/// RMS every source is normalized to before gains are applied.
pub const DEFAULT_TARGET_RMS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub jitter: f64,
    #[serde(default = "default_condition")]
    pub condition: DatasetCondition,
    #[serde(default = "default_num")]
    pub num_mixtures: usize,
    #[serde(default)]
    pub pairing_seed: Seed,
    #[serde(default)]
    pub jitter_seed: Seed,
    /// Source A gets `g` dB and source B `-g` dB, `g` uniform in `[-range, range]`.
    #[serde(default = "default_gain_range")]
    pub gain_range_db: f64,
    #[serde(default)]
    pub length: LengthPolicy,
    #[serde(default = "default_rms")]
    pub target_rms: f64,
    /// Regex whose first capture group is the speaker id.
    #[serde(default)]
    pub speaker_pattern: Option<String>,
    #[serde(default)]
    pub jitter_config: SpeechJitterConfig,
}

fn default_condition() -> DatasetCondition {
    DatasetCondition::II
}
fn default_num() -> usize {
    100
}
fn default_gain_range() -> f64 {
    2.5
}
fn default_rms() -> f64 {
    DEFAULT_TARGET_RMS
}

impl DatasetConfig {
    pub fn new(corpus: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        DatasetConfig {
            corpus: corpus.into(),
            out_dir: out_dir.into(),
            jitter: 0.0,
            condition: default_condition(),
            num_mixtures: default_num(),
            pairing_seed: Seed::default(),
            jitter_seed: Seed::default(),
            gain_range_db: default_gain_range(),
            length: LengthPolicy::default(),
            target_rms: default_rms(),
            speaker_pattern: None,
            jitter_config: SpeechJitterConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        if self.num_mixtures == 0 {
            return Err(Error::invalid("num_mixtures must be positive"));
        }
        if !(self.gain_range_db >= 0.0) {
            return Err(Error::invalid("gain_range_db must be non-negative"));
        }
        if !(self.target_rms > 0.0) {
            return Err(Error::invalid("target_rms must be positive"));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::invalid(format!(
                "jitter bound must lie in [0, 1), got {}",
                self.jitter
            )));
        }
        Ok(())
    }

    fn effective_jitter(&self) -> f64 {
        if self.condition == DatasetCondition::HH {
            0.0
        } else {
            self.jitter
        }
    }
}

/// One planned mixture before any audio is touched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPlan {
    pub id: String,
    pub a: CorpusEntry,
    pub b: CorpusEntry,
    pub gain_a_db: f64,
    pub gain_b_db: f64,
    pub condition: Condition,
}

/// Draws pairs of utterances from different speakers. Every draw (including
/// the jittered side, needed only for `HI`) is made for every condition so the
/// random stream, and hence pairing and gains, never depend on the condition.
pub fn plan_pairs(corpus: &Corpus, cfg: &DatasetConfig) -> Result<Vec<PairPlan>> {
    cfg.validate()?;
    let mut rng = cfg.pairing_seed.rng();
    let entries = &corpus.entries;
    let mut plans = Vec::with_capacity(cfg.num_mixtures);
    for i in 0..cfg.num_mixtures {
        let a = &entries[rng.gen_range(0..entries.len())];
        let others: Vec<&CorpusEntry> = entries.iter().filter(|e| e.speaker != a.speaker).collect();
        let b = others[rng.gen_range(0..others.len())];
        let g: f64 = if cfg.gain_range_db > 0.0 {
            rng.gen_range(-cfg.gain_range_db..=cfg.gain_range_db)
        } else {
            0.0
        };
        let jitter_first: bool = rng.gen();
        let condition = match cfg.condition {
            DatasetCondition::HH => Condition::HH,
            DatasetCondition::II => Condition::II,
            DatasetCondition::HI => {
                if jitter_first {
                    Condition::IH
                } else {
                    Condition::HI
                }
            }
        };
        plans.push(PairPlan {
            id: format!("mix{i:05}"),
            a: a.clone(),
            b: b.clone(),
            gain_a_db: g,
            gain_b_db: -g,
            condition,
        });
    }
    Ok(plans)
}

struct Prepared {
    wav: Waveform,
    seed: Option<Seed>,
    offsets: Option<Vec<f64>>,
}

fn prepare(corpus: &Corpus, entry: &CorpusEntry, jittered: bool, cfg: &DatasetConfig) -> Result<Prepared> {
    let wav = read_wav_canonical(corpus.path_of(entry))?;
    let (mut wav, seed, offsets) = if jittered {
        let seed = utterance_seed(cfg.jitter_seed, Path::new(&entry.path));
        let j = jitter_speech_with(&wav, cfg.effective_jitter(), seed, &cfg.jitter_config)?;
        (j.output, Some(seed), Some(j.profile.offsets))
    } else {
        (wav, None, None)
    };
    let rms = wav.rms();
    if rms == 0.0 {
        return Err(Error::Corpus(format!("{} is silent", entry.path)));
    }
    wav.scale(cfg.target_rms / rms);
    Ok(Prepared { wav, seed, offsets })
}

fn manifest_for(corpus: &Corpus, cfg: &DatasetConfig, records: Vec<ManifestRecord>) -> Manifest {
    Manifest {
        header: ManifestHeader {
            schema: MANIFEST_SCHEMA.into(),
            schema_version: MANIFEST_VERSION,
            toolkit_version: crate::VERSION.into(),
            jitter: cfg.effective_jitter(),
            condition: cfg.condition,
            pairing_seed: cfg.pairing_seed,
            jitter_seed: cfg.jitter_seed,
            sample_rate: CANONICAL_RATE,
            num_mixtures: records.len(),
            corpus: CorpusInfo {
                root: corpus.root.to_string_lossy().into_owned(),
                fingerprint: corpus.fingerprint.clone(),
                num_files: corpus.entries.len(),
                num_speakers: corpus.num_speakers(),
            },
        },
        records,
        base_dir: cfg.out_dir.clone(),
    }
}

fn record_for(plan: &PairPlan, jitter: f64) -> ManifestRecord {
    ManifestRecord {
        id: plan.id.clone(),
        mixture: format!("wav/mix/{}.wav", plan.id),
        ref_a: format!("wav/ref_a/{}.wav", plan.id),
        ref_b: format!("wav/ref_b/{}.wav", plan.id),
        source_a: plan.a.path.clone(),
        source_b: plan.b.path.clone(),
        speaker_a: plan.a.speaker.clone(),
        speaker_b: plan.b.speaker.clone(),
        gain_a_db: plan.gain_a_db,
        gain_b_db: plan.gain_b_db,
        condition: plan.condition,
        jitter,
        jitter_seed_a: None,
        jitter_seed_b: None,
        offsets_a: None,
        offsets_b: None,
        length: 0,
        scale: 1.0,
    }
}

/// The manifest `build_dataset` would write, without reading or writing audio.
pub fn plan_dataset(cfg: &DatasetConfig) -> Result<Manifest> {
    let corpus = Corpus::scan(&cfg.corpus, cfg.speaker_pattern.as_deref())?;
    let plans = plan_pairs(&corpus, cfg)?;
    let records = plans.iter().map(|p| record_for(p, cfg.effective_jitter())).collect();
    Ok(manifest_for(&corpus, cfg, records))
}

/// Builds the dataset under `cfg.out_dir`:
/// `wav/{mix,ref_a,ref_b}/<id>.wav` plus `manifest.jsonl`.
///
/// Per source: load, jitter (if its side is jittered), normalize RMS, apply
/// gain; then pad or truncate and sum. Each utterance is jittered at most once
/// and reused across the mixtures it appears in.
pub fn build_dataset(cfg: &DatasetConfig) -> Result<Manifest> {
    let corpus = Corpus::scan(&cfg.corpus, cfg.speaker_pattern.as_deref())?;
    let plans = plan_pairs(&corpus, cfg)?;

    let mut needed: BTreeMap<(String, bool), CorpusEntry> = BTreeMap::new();
    for p in &plans {
        needed.insert((p.a.path.clone(), p.condition.jitters_a()), p.a.clone());
        needed.insert((p.b.path.clone(), p.condition.jitters_b()), p.b.clone());
    }
    let prepared: BTreeMap<(String, bool), Prepared> = needed
        .into_par_iter()
        .map(|(key, entry)| prepare(&corpus, &entry, key.1, cfg).map(|p| (key, p)))
        .collect::<Result<_>>()?;

    let records = plans
        .par_iter()
        .map(|plan| {
            let a = &prepared[&(plan.a.path.clone(), plan.condition.jitters_a())];
            let b = &prepared[&(plan.b.path.clone(), plan.condition.jitters_b())];
            let m = mix(&a.wav, &b.wav, plan.gain_a_db, plan.gain_b_db, cfg.length)?;
            let mut rec = record_for(plan, cfg.effective_jitter());
            write_wav(cfg.out_dir.join(&rec.mixture), &m.mixture)?;
            write_wav(cfg.out_dir.join(&rec.ref_a), &m.ref_a)?;
            write_wav(cfg.out_dir.join(&rec.ref_b), &m.ref_b)?;
            rec.jitter_seed_a = a.seed;
            rec.jitter_seed_b = b.seed;
            rec.offsets_a = a.offsets.clone();
            rec.offsets_b = b.offsets.clone();
            rec.length = m.mixture.len();
            rec.scale = m.scale;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = manifest_for(&corpus, cfg, records);
    manifest.write(&cfg.out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n_speakers: usize, per: usize) -> Corpus {
        let entries = (0..n_speakers)
            .flat_map(|s| {
                (0..per).map(move |u| CorpusEntry {
                    path: format!("spk{s:02}_utt{u:02}.wav"),
                    speaker: format!("spk{s:02}"),
                })
            })
            .collect();
        Corpus {
            root: PathBuf::from("/nonexistent"),
            entries,
            fingerprint: String::new(),
            skipped: Vec::new(),
        }
    }

    #[test]
    fn pairs_cross_speakers_and_gains_in_range() {
        let c = corpus(3, 4);
        let mut cfg = DatasetConfig::new("/c", "/o");
        cfg.num_mixtures = 200;
        for p in plan_pairs(&c, &cfg).unwrap() {
            assert_ne!(p.a.speaker, p.b.speaker);
            assert!(p.gain_a_db.abs() <= 2.5);
            assert_eq!(p.gain_a_db, -p.gain_b_db);
        }
    }

    #[test]
    fn pairing_independent_of_condition_and_bound() {
        let c = corpus(4, 3);
        let mut cfg = DatasetConfig::new("/c", "/o");
        cfg.pairing_seed = Seed(42);
        let base = plan_pairs(&c, &cfg).unwrap();
        for cond in DatasetCondition::ALL {
            for j in [0.05, 0.1] {
                let mut other = cfg.clone();
                other.condition = cond;
                other.jitter = j;
                other.jitter_seed = Seed(7);
                let plans = plan_pairs(&c, &other).unwrap();
                for (x, y) in base.iter().zip(&plans) {
                    assert_eq!((&x.a, &x.b, x.gain_a_db), (&y.a, &y.b, y.gain_a_db));
                }
            }
        }
    }

    #[test]
    fn hi_condition_uses_both_orders() {
        let c = corpus(2, 2);
        let mut cfg = DatasetConfig::new("/c", "/o");
        cfg.condition = DatasetCondition::HI;
        let plans = plan_pairs(&c, &cfg).unwrap();
        assert!(plans.iter().any(|p| p.condition == Condition::HI));
        assert!(plans.iter().any(|p| p.condition == Condition::IH));
    }

    #[test]
    fn config_from_toml() {
        let cfg =
            DatasetConfig::from_toml("corpus = \"c\"\nout_dir = \"o\"\njitter = 0.1\ncondition = \"HI\"\n").unwrap();
        assert_eq!(cfg.condition, DatasetCondition::HI);
        assert_eq!(cfg.num_mixtures, 100);
        assert!(DatasetConfig::from_toml("corpus = \"c\"").is_err());
    }
}
