//! Runs a separator over a dataset manifest and scores every mixture.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::score_separation;
use crate::mixture::{Condition, DatasetCondition, Manifest, ManifestRecord};
use crate::separate::{SeparationInput, Separator};
use crate::signal::{read_wav, write_wav, Waveform};

pub const REPORT_SCHEMA: &str = "inharmonic-probe/eval";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Write `<id>_src1.wav` / `<id>_src2.wav` estimates here.
    pub estimates_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalHeader {
    pub schema: String,
    pub schema_version: u32,
    pub toolkit_version: String,
    pub separator: String,
    pub manifest: String,
    pub jitter: f64,
    pub condition: DatasetCondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub condition: Condition,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub si_snr: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub si_snri: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sdri: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_si_snri: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_sdri: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub permutation: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// The failure came from the environment (files, processes), not the data.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub environmental: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Stats {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[m]
        } else {
            0.5 * (sorted[m - 1] + sorted[m])
        };
        Some(Stats {
            count: values.len(),
            mean,
            median,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub total: usize,
    pub failed: usize,
    pub sdri: Option<Stats>,
    pub si_snri: Option<Stats>,
    /// SDRi statistics per mixture condition.
    pub by_condition: BTreeMap<String, Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub header: EvalHeader,
    pub records: Vec<EvalRecord>,
    pub summary: EvalSummary,
}

fn summarize(records: &[EvalRecord]) -> EvalSummary {
    let ok: Vec<&EvalRecord> = records.iter().filter(|r| r.mean_sdri.is_some()).collect();
    let all: Vec<f64> = ok.iter().filter_map(|r| r.mean_sdri).collect();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &ok {
        groups
            .entry(r.condition.to_string())
            .or_default()
            .push(r.mean_sdri.expect("filtered"));
    }
    EvalSummary {
        total: records.len(),
        failed: records.len() - ok.len(),
        sdri: Stats::of(&all),
        si_snri: Stats::of(&ok.iter().filter_map(|r| r.mean_si_snri).collect::<Vec<_>>()),
        by_condition: groups
            .into_iter()
            .filter_map(|(k, v)| Stats::of(&v).map(|s| (k, s)))
            .collect(),
    }
}

fn load_checked(manifest: &Manifest, rel: &str, rate: u32) -> Result<Waveform> {
    let w = read_wav(manifest.resolve(rel))?;
    if w.sample_rate() != rate {
        return Err(Error::SampleRateMismatch(rate, w.sample_rate()));
    }
    Ok(w)
}

fn eval_one(manifest: &Manifest, rec: &ManifestRecord, sep: &dyn Separator, opts: &EvalOptions) -> Result<EvalRecord> {
    let rate = manifest.header.sample_rate;
    let mixture = load_checked(manifest, &rec.mixture, rate)?;
    let ref_a = load_checked(manifest, &rec.ref_a, rate)?;
    let ref_b = load_checked(manifest, &rec.ref_b, rate)?;
    let mix_path = manifest.resolve(&rec.mixture);
    let input = SeparationInput {
        id: &rec.id,
        mixture: &mixture,
        mixture_path: Some(&mix_path),
        references: Some((&ref_a, &ref_b)),
    };
    let estimates = sep.separate(&input)?;
    for e in &estimates {
        if e.len() != mixture.len() {
            return Err(Error::LengthMismatch(mixture.len(), e.len()));
        }
    }
    if let Some(dir) = &opts.estimates_dir {
        for (k, e) in estimates.iter().enumerate() {
            write_wav(dir.join(format!("{}_src{}.wav", rec.id, k + 1)), e)?;
        }
    }
    let score = score_separation(&estimates, &[ref_a, ref_b], &mixture)?;
    Ok(EvalRecord {
        id: rec.id.clone(),
        condition: rec.condition,
        si_snr: score.si_snr,
        si_snri: score.si_snri,
        sdri: score.sdri,
        mean_si_snri: Some(score.mean_si_snri),
        mean_sdri: Some(score.mean_sdri),
        permutation: score.permutation,
        error: None,
        environmental: false,
    })
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f)),
        None => Ok(f()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationOutcome {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Separates every mixture of a manifest into `out_dir/<id>_src{1,2}.wav`.
/// References are passed along, so oracle separators work here too.
pub fn separate_manifest(
    manifest: &Manifest,
    sep: &dyn Separator,
    out_dir: &Path,
    jobs: Option<usize>,
) -> Result<Vec<SeparationOutcome>> {
    let rate = manifest.header.sample_rate;
    let one = |rec: &ManifestRecord| -> Result<()> {
        let mixture = load_checked(manifest, &rec.mixture, rate)?;
        let refs = match (
            load_checked(manifest, &rec.ref_a, rate),
            load_checked(manifest, &rec.ref_b, rate),
        ) {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => None,
        };
        let mix_path = manifest.resolve(&rec.mixture);
        let input = SeparationInput {
            id: &rec.id,
            mixture: &mixture,
            mixture_path: Some(&mix_path),
            references: refs.as_ref().map(|(a, b)| (a, b)),
        };
        for (k, e) in sep.separate(&input)?.iter().enumerate() {
            write_wav(out_dir.join(format!("{}_src{}.wav", rec.id, k + 1)), e)?;
        }
        Ok(())
    };
    with_jobs(jobs, || {
        manifest
            .records
            .par_iter()
            .map(|rec| SeparationOutcome {
                id: rec.id.clone(),
                error: one(rec).err().map(|e| {
                    log::warn!("{}: {e}", rec.id);
                    e.to_string()
                }),
            })
            .collect()
    })
}

/// Scores every record. A failing record becomes an entry with `error` set;
/// it never aborts the run.
pub fn evaluate_manifest(
    manifest: &Manifest,
    manifest_path: &Path,
    sep: &dyn Separator,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let run = || -> Vec<EvalRecord> {
        manifest
            .records
            .par_iter()
            .map(|rec| {
                eval_one(manifest, rec, sep, opts).unwrap_or_else(|e| {
                    log::warn!("{}: {e}", rec.id);
                    EvalRecord {
                        id: rec.id.clone(),
                        condition: rec.condition,
                        si_snr: Vec::new(),
                        si_snri: Vec::new(),
                        sdri: Vec::new(),
                        mean_si_snri: None,
                        mean_sdri: None,
                        permutation: Vec::new(),
                        error: Some(e.to_string()),
                        environmental: e.is_environmental(),
                    }
                })
            })
            .collect()
    };
    let records = with_jobs(opts.jobs, run)?;
    let summary = summarize(&records);
    Ok(EvalReport {
        header: EvalHeader {
            schema: REPORT_SCHEMA.into(),
            schema_version: REPORT_VERSION,
            toolkit_version: crate::VERSION.into(),
            separator: sep.name(),
            manifest: manifest_path.to_string_lossy().into_owned(),
            jitter: manifest.header.jitter,
            condition: manifest.header.condition,
        },
        records,
        summary,
    })
}

impl EvalReport {
    /// Header line, one line per record, then the summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        out.push_str(&serde_json::to_string(&self.header).expect("serializes"));
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("serializes"));
        out.push('\n');
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Human-readable summary table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "separator: {}  J = {}  condition: {}\n{:<10} {:>6} {:>10} {:>10} {:>8}\n",
            self.header.separator,
            self.header.jitter,
            self.header.condition,
            "group",
            "n",
            "mean SDRi",
            "median",
            "std"
        );
        let mut row = |name: &str, s: &Stats| {
            out.push_str(&format!(
                "{:<10} {:>6} {:>10.2} {:>10.2} {:>8.2}\n",
                name, s.count, s.mean, s.median, s.std
            ));
        };
        for (k, s) in &self.summary.by_condition {
            row(k, s);
        }
        if let Some(s) = &self.summary.sdri {
            row("all", s);
        }
        if self.summary.failed > 0 {
            out.push_str(&format!(
                "{} of {} mixtures failed\n",
                self.summary.failed, self.summary.total
            ));
        }
        out
    }
}
