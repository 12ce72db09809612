//! Separation performance as a function of the jitter bound.
//!
//! Every bound gets its own dataset built from the same corpus with the same
//! pairing seed, so the points differ only in how inharmonic the sources are.
//! Datasets are cached under `work_dir/datasets/<key>` where the key hashes
//! the corpus contents and every dataset parameter.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{evaluate_manifest, EvalOptions, Stats};
use crate::mixture::{build_dataset, Corpus, DatasetCondition, DatasetConfig, LengthPolicy, Manifest, MANIFEST_FILE};
use crate::separate::Separator;
use crate::signal::Seed;
use crate::speech::SpeechJitterConfig;

pub const SWEEP_SCHEMA: &str = "inharmonic-probe/sweep";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub corpus: PathBuf,
    pub work_dir: PathBuf,
    #[serde(default = "default_jitters")]
    pub jitters: Vec<f64>,
    #[serde(default = "default_conditions")]
    pub conditions: Vec<DatasetCondition>,
    #[serde(default = "default_num")]
    pub num_mixtures: usize,
    #[serde(default)]
    pub pairing_seed: Seed,
    #[serde(default)]
    pub jitter_seed: Seed,
    #[serde(default = "default_gain_range")]
    pub gain_range_db: f64,
    #[serde(default)]
    pub length: LengthPolicy,
    #[serde(default)]
    pub speaker_pattern: Option<String>,
    #[serde(default)]
    pub jitter_config: SpeechJitterConfig,
}

fn default_jitters() -> Vec<f64> {
    vec![0.0, 0.05, 0.1, 0.2, 0.3]
}
fn default_conditions() -> Vec<DatasetCondition> {
    vec![DatasetCondition::II]
}
fn default_num() -> usize {
    100
}
fn default_gain_range() -> f64 {
    2.5
}

impl SweepConfig {
    pub fn new(corpus: impl Into<PathBuf>, work_dir: impl Into<PathBuf>) -> Self {
        SweepConfig {
            corpus: corpus.into(),
            work_dir: work_dir.into(),
            jitters: default_jitters(),
            conditions: default_conditions(),
            num_mixtures: default_num(),
            pairing_seed: Seed::default(),
            jitter_seed: Seed::default(),
            gain_range_db: default_gain_range(),
            length: LengthPolicy::default(),
            speaker_pattern: None,
            jitter_config: SpeechJitterConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// (J, condition) cells in report order, duplicates removed.
    pub fn cells(&self) -> Result<Vec<(f64, DatasetCondition)>> {
        if self.jitters.is_empty() || self.conditions.is_empty() {
            return Err(Error::Config(
                "sweep needs at least one jitter bound and one condition".into(),
            ));
        }
        if let Some(j) = self.jitters.iter().find(|j| !(0.0..1.0).contains(*j)) {
            return Err(Error::Config(format!("jitter bound {j} outside [0, 1)")));
        }
        let mut jitters = self.jitters.clone();
        jitters.sort_by(f64::total_cmp);
        jitters.dedup();
        let mut conditions = self.conditions.clone();
        conditions.sort_by_key(|c| c.to_string());
        conditions.dedup();
        Ok(jitters
            .iter()
            .flat_map(|&j| conditions.iter().map(move |&c| (j, c)))
            .collect())
    }

    /// Dataset parameters for one cell; `out_dir` is filled in by the cache.
    pub fn dataset_config(&self, jitter: f64, condition: DatasetCondition) -> DatasetConfig {
        DatasetConfig {
            jitter,
            condition,
            num_mixtures: self.num_mixtures,
            pairing_seed: self.pairing_seed,
            jitter_seed: self.jitter_seed,
            gain_range_db: self.gain_range_db,
            length: self.length,
            speaker_pattern: self.speaker_pattern.clone(),
            jitter_config: self.jitter_config,
            ..DatasetConfig::new(&self.corpus, PathBuf::new())
        }
    }
}

/// Cache key: corpus fingerprint plus every parameter except the paths. HH
/// datasets ignore the bound, so all of them share one key.
pub fn dataset_key(cfg: &DatasetConfig, corpus_fingerprint: &str) -> String {
    let mut keyed = cfg.clone();
    keyed.corpus = PathBuf::new();
    keyed.out_dir = PathBuf::new();
    if keyed.condition == DatasetCondition::HH {
        keyed.jitter = 0.0;
    }
    let mut h = Sha256::new();
    h.update(corpus_fingerprint.as_bytes());
    h.update(serde_json::to_vec(&keyed).expect("serializes"));
    hex::encode(&h.finalize()[..8])
}

/// Builds the dataset unless an identical one is already cached. Returns the
/// manifest path and whether the cache was used.
pub fn cached_dataset(cfg: &DatasetConfig, fingerprint: &str, work_dir: &Path) -> Result<(PathBuf, bool)> {
    let dir = work_dir.join("datasets").join(dataset_key(cfg, fingerprint));
    let manifest_path = dir.join(MANIFEST_FILE);
    if let Ok(m) = Manifest::load(&manifest_path) {
        if m.header.corpus.fingerprint == fingerprint && m.records.len() == cfg.num_mixtures {
            return Ok((manifest_path, true));
        }
    }
    let mut cfg = cfg.clone();
    cfg.out_dir = dir;
    build_dataset(&cfg)?;
    Ok((manifest_path, false))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub jitter: f64,
    pub condition: DatasetCondition,
    pub manifest: String,
    pub report: String,
    pub total: usize,
    pub failed: usize,
    /// False when any mixture of this cell could not be scored.
    pub complete: bool,
    pub sdri: Option<Stats>,
    pub si_snri: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: String,
    pub toolkit_version: String,
    pub separator: String,
    pub corpus_fingerprint: String,
    pub config: SweepConfig,
    /// Sorted by jitter bound, then condition.
    pub points: Vec<SweepPoint>,
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn run_sweep(cfg: &SweepConfig, sep: &dyn Separator, jobs: Option<usize>) -> Result<SweepReport> {
    let cells = cfg.cells()?;
    let corpus = Corpus::scan(&cfg.corpus, cfg.speaker_pattern.as_deref())?;
    let mut points = Vec::with_capacity(cells.len());
    for (j, condition) in cells {
        let dcfg = cfg.dataset_config(j, condition);
        let (manifest_path, hit) = cached_dataset(&dcfg, &corpus.fingerprint, &cfg.work_dir)?;
        log::info!(
            "J = {j} {condition}: dataset {} ({})",
            manifest_path.display(),
            if hit { "cached" } else { "built" }
        );
        let manifest = Manifest::load(&manifest_path)?;
        let report = evaluate_manifest(
            &manifest,
            &manifest_path,
            sep,
            &EvalOptions {
                jobs,
                estimates_dir: None,
            },
        )?;
        let report_path = cfg
            .work_dir
            .join("reports")
            .join(format!("{}_{condition}_J{j:.3}.jsonl", file_safe(&sep.name())));
        report.write(&report_path)?;
        points.push(SweepPoint {
            jitter: j,
            condition,
            manifest: manifest_path.to_string_lossy().into_owned(),
            report: report_path.to_string_lossy().into_owned(),
            total: report.summary.total,
            failed: report.summary.failed,
            complete: report.summary.failed == 0,
            sdri: report.summary.sdri,
            si_snri: report.summary.si_snri,
        });
    }
    Ok(SweepReport {
        schema: SWEEP_SCHEMA.into(),
        toolkit_version: crate::VERSION.into(),
        separator: sep.name(),
        corpus_fingerprint: corpus.fingerprint,
        config: cfg.clone(),
        points,
    })
}

impl SweepReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "separator: {}\n{:>6} {:>4} {:>6} {:>10} {:>11} {:>8} {:>7}\n",
            self.separator, "J", "cond", "n", "mean SDRi", "mean SI-SNRi", "std", "failed"
        );
        for p in &self.points {
            match (&p.sdri, &p.si_snri) {
                (Some(s), Some(si)) => out.push_str(&format!(
                    "{:>6.3} {:>4} {:>6} {:>10.2} {:>11.2} {:>8.2} {:>7}\n",
                    p.jitter, p.condition, s.count, s.mean, si.mean, s.std, p.failed
                )),
                _ => out.push_str(&format!(
                    "{:>6.3} {:>4} {:>6} {:>10} {:>11} {:>8} {:>7}\n",
                    p.jitter, p.condition, 0, "-", "-", "-", p.failed
                )),
            }
        }
        out
    }

    /// (jitter, mean SDRi) of one condition, for cells with a score.
    pub fn curve(&self, condition: DatasetCondition) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.condition == condition)
            .filter_map(|p| p.sdri.map(|s| (p.jitter, s.mean)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_ignores_paths_but_not_parameters() {
        let a = DatasetConfig::new("/a", "/x");
        let b = DatasetConfig::new("/b", "/y");
        assert_eq!(dataset_key(&a, "f"), dataset_key(&b, "f"));
        assert_ne!(dataset_key(&a, "f"), dataset_key(&a, "g"));
        let c = DatasetConfig {
            jitter: 0.1,
            ..a.clone()
        };
        assert_ne!(dataset_key(&a, "f"), dataset_key(&c, "f"));
        let hh = |jitter| DatasetConfig {
            jitter,
            condition: DatasetCondition::HH,
            ..a.clone()
        };
        assert_eq!(dataset_key(&hh(0.0), "f"), dataset_key(&hh(0.2), "f"));
    }

    #[test]
    fn sweep_toml_defaults() {
        let cfg = SweepConfig::from_toml("corpus = \"c\"\nwork_dir = \"w\"\njitters = [0.3, 0.0]\n").unwrap();
        assert_eq!(cfg.jitters, vec![0.3, 0.0]);
        assert_eq!(
            cfg.cells().unwrap(),
            vec![(0.0, DatasetCondition::II), (0.3, DatasetCondition::II)]
        );
        assert_eq!(cfg.num_mixtures, 100);
        assert!(SweepConfig::from_toml("corpus = \"c\"\nwork_dir = \"w\"\nbogus = 1\n").is_err());
    }
}
