use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::speech::list_wavs;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    /// Path relative to the corpus root, `/`-separated.
    pub path: String,
    pub speaker: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub root: PathBuf,
    pub entries: Vec<CorpusEntry>,
    /// SHA-256 over the sorted relative paths and file contents.
    pub fingerprint: String,
    /// Files that were skipped, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Speaker of a relative path: the regex's first capture group (or whole
/// match) if a pattern is given; otherwise the first directory component, or
/// for flat layouts the file-name prefix before the first `_` or `-`.
pub fn speaker_of(relative: &str, pattern: Option<&Regex>) -> Option<String> {
    if let Some(re) = pattern {
        let caps = re.captures(relative)?;
        let m = caps.get(1).or_else(|| caps.get(0))?;
        return Some(m.as_str().to_string());
    }
    if let Some((dir, _)) = relative.split_once('/') {
        return Some(dir.to_string());
    }
    let stem = relative
        .strip_suffix(".wav")
        .or_else(|| relative.strip_suffix(".WAV"))
        .unwrap_or(relative);
    let cut = stem.find(['_', '-']).unwrap_or(stem.len());
    Some(stem[..cut].to_string())
}

impl Corpus {
    /// Scans `root` for WAV files. Unreadable files are skipped with a warning.
    pub fn scan(root: &Path, speaker_pattern: Option<&str>) -> Result<Corpus> {
        if !root.is_dir() {
            return Err(Error::Corpus(format!("{} is not a directory", root.display())));
        }
        let pattern = speaker_pattern
            .map(Regex::new)
            .transpose()
            .map_err(|e| Error::Config(format!("bad speaker pattern: {e}")))?;
        let mut hasher = Sha256::new();
        let mut entries = Vec::new();
        let mut skipped = Vec::new();
        for rel in list_wavs(root)? {
            let name = rel.to_string_lossy().replace('\\', "/");
            let bytes = match std::fs::read(root.join(&rel)) {
                Ok(b) => b,
                Err(e) => {
                    log::warn!("skipping {name}: {e}");
                    skipped.push((name, e.to_string()));
                    continue;
                }
            };
            if let Err(e) = hound::WavReader::new(std::io::Cursor::new(&bytes)) {
                log::warn!("skipping {name}: {e}");
                skipped.push((name, e.to_string()));
                continue;
            }
            let Some(speaker) = speaker_of(&name, pattern.as_ref()) else {
                log::warn!("skipping {name}: no speaker match");
                skipped.push((name, "speaker pattern did not match".into()));
                continue;
            };
            hasher.update((name.len() as u64).to_le_bytes());
            hasher.update(name.as_bytes());
            hasher.update(Sha256::digest(&bytes));
            entries.push(CorpusEntry { path: name, speaker });
        }
        let corpus = Corpus {
            root: root.to_path_buf(),
            entries,
            fingerprint: hex::encode(hasher.finalize()),
            skipped,
        };
        if corpus.num_speakers() < 2 {
            return Err(Error::Corpus(format!(
                "need at least two speakers, found {} in {}",
                corpus.num_speakers(),
                root.display()
            )));
        }
        Ok(corpus)
    }

    pub fn num_speakers(&self) -> usize {
        self.entries.iter().map(|e| &e.speaker).collect::<BTreeSet<_>>().len()
    }

    pub fn path_of(&self, entry: &CorpusEntry) -> PathBuf {
        self.root.join(&entry.path)
    }
}
