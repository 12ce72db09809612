//! JSON-lines dataset manifest: one header line, then one line per mixture.
//! Paths are relative to the manifest's directory.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Seed;

pub const MANIFEST_SCHEMA: &str = "inharmonic-probe/manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Which side(s) of every mixture a dataset jitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetCondition {
    /// Neither source.
    HH,
    /// One source, chosen at random per mixture.
    HI,
    /// Both sources.
    II,
}

impl DatasetCondition {
    pub const ALL: [DatasetCondition; 3] = [DatasetCondition::HH, DatasetCondition::HI, DatasetCondition::II];
}

impl fmt::Display for DatasetCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetCondition::HH => "HH",
            DatasetCondition::HI => "HI",
            DatasetCondition::II => "II",
        })
    }
}

impl FromStr for DatasetCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "HH" => Ok(DatasetCondition::HH),
            "HI" | "IH" => Ok(DatasetCondition::HI),
            "II" => Ok(DatasetCondition::II),
            _ => Err(Error::invalid(format!(
                "unknown condition '{s}' (expected HH, HI or II)"
            ))),
        }
    }
}

/// Harmonicity of (source A, source B) in one mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    HH,
    HI,
    IH,
    II,
}

impl Condition {
    pub fn from_sides(jitter_a: bool, jitter_b: bool) -> Condition {
        match (jitter_a, jitter_b) {
            (false, false) => Condition::HH,
            (false, true) => Condition::HI,
            (true, false) => Condition::IH,
            (true, true) => Condition::II,
        }
    }

    pub fn jitters_a(self) -> bool {
        matches!(self, Condition::IH | Condition::II)
    }

    pub fn jitters_b(self) -> bool {
        matches!(self, Condition::HI | Condition::II)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub root: String,
    pub fingerprint: String,
    pub num_files: usize,
    pub num_speakers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema: String,
    pub schema_version: u32,
    pub toolkit_version: String,
    pub jitter: f64,
    pub condition: DatasetCondition,
    pub pairing_seed: Seed,
    pub jitter_seed: Seed,
    pub sample_rate: u32,
    pub num_mixtures: usize,
    pub corpus: CorpusInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub mixture: String,
    pub ref_a: String,
    pub ref_b: String,
    pub source_a: String,
    pub source_b: String,
    pub speaker_a: String,
    pub speaker_b: String,
    pub gain_a_db: f64,
    pub gain_b_db: f64,
    pub condition: Condition,
    pub jitter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter_seed_a: Option<Seed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter_seed_b: Option<Seed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets_a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets_b: Option<Vec<f64>>,
    #[serde(default)]
    pub length: usize,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub records: Vec<ManifestRecord>,
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Manifest::parse(&text, base_dir)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Manifest> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| Error::Manifest("empty manifest".into()))?;
        let header: ManifestHeader =
            serde_json::from_str(first).map_err(|e| Error::Manifest(format!("line 1: {e}")))?;
        if header.schema != MANIFEST_SCHEMA {
            return Err(Error::Manifest(format!("unknown schema '{}'", header.schema)));
        }
        if header.schema_version > MANIFEST_VERSION {
            return Err(Error::Manifest(format!(
                "schema version {} is newer than supported {}",
                header.schema_version, MANIFEST_VERSION
            )));
        }
        let records = lines
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Manifest(format!("line {}: {e}", i + 1))))
            .collect::<Result<Vec<ManifestRecord>>>()?;
        Ok(Manifest {
            header,
            records,
            base_dir,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }
}
