//! Estimates that already exist on disk, for scoring a separator run elsewhere.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::separate::{SeparationInput, Separator};
use crate::signal::{read_wav, Waveform};

/// Reads `<dir>/<id>_src1.wav` and `<dir>/<id>_src2.wav`. A directory holding
/// the mixtures themselves (`<id>.wav`) is accepted too; both estimates are
/// then the mixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Precomputed {
    pub dir: PathBuf,
}

impl Precomputed {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Precomputed { dir: dir.into() }
    }
}

impl Separator for Precomputed {
    fn name(&self) -> String {
        let leaf = self.dir.file_name().map(|n| n.to_string_lossy().into_owned());
        format!("precomputed-{}", leaf.unwrap_or_else(|| "estimates".into()))
    }

    fn separate(&self, input: &SeparationInput<'_>) -> Result<[Waveform; 2]> {
        let src = |k: usize| self.dir.join(format!("{}_src{k}.wav", input.id));
        let (p1, p2) = (src(1), src(2));
        let [a, b] = if p1.exists() || p2.exists() {
            [read_wav(&p1)?, read_wav(&p2)?]
        } else {
            let whole = self.dir.join(format!("{}.wav", input.id));
            if !whole.exists() {
                return Err(Error::io(&p1, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
            let w = read_wav(&whole)?;
            [w.clone(), w]
        };
        for w in [&a, &b] {
            if w.sample_rate() != input.mixture.sample_rate() {
                return Err(Error::SampleRateMismatch(input.mixture.sample_rate(), w.sample_rate()));
            }
        }
        Ok([a, b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::write_wav;

    #[test]
    fn reads_estimates_or_mixtures() {
        let dir = tempfile::tempdir().unwrap();
        let mix = Waveform::new(vec![0.25; 100], 16_000).unwrap();
        let sep = Precomputed::new(dir.path());
        assert!(sep.separate(&SeparationInput::new("m", &mix)).is_err());
        write_wav(dir.path().join("m.wav"), &mix).unwrap();
        let [a, b] = sep.separate(&SeparationInput::new("m", &mix)).unwrap();
        assert_eq!(a, b);
        write_wav(dir.path().join("m_src1.wav"), &mix.scaled(0.5)).unwrap();
        assert!(sep.separate(&SeparationInput::new("m", &mix)).is_err());
        write_wav(dir.path().join("m_src2.wav"), &mix.scaled(0.5)).unwrap();
        let [a, _] = sep.separate(&SeparationInput::new("m", &mix)).unwrap();
        assert_eq!(a.samples()[0], 0.125);
    }
}
