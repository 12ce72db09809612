//! Runs an arbitrary separator executable once per mixture.
//!
//! The command template is split like a shell would (no shell is invoked) and
//! `{input_wav}` / `{output_dir}` are substituted in every argument. The
//! command must write `<stem>_src1.wav` and `<stem>_src2.wav` into the output
//! directory, where `<stem>` is the input file name without extension, at the
//! canonical rate and with the mixture's length.

use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::{Error, Result};
use crate::separate::{SeparationInput, Separator};
use crate::signal::{read_wav, write_wav, Waveform, CANONICAL_RATE};

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSeparator {
    pub name: String,
    program: String,
    args: Vec<String>,
    /// Scratch space; one subdirectory per mixture.
    pub work_dir: PathBuf,
}

impl ExternalSeparator {
    pub fn new(template: &str, work_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut parts =
            shell_words::split(template).map_err(|e| Error::Config(format!("bad separator command: {e}")))?;
        if parts.is_empty() {
            return Err(Error::Config("empty separator command".into()));
        }
        let program = parts.remove(0);
        let name = Path::new(&program)
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| program.clone());
        Ok(ExternalSeparator {
            name,
            program,
            args: parts,
            work_dir: work_dir.into(),
        })
    }

    /// The argument vector for one invocation.
    pub fn command_line(&self, input: &Path, output_dir: &Path) -> Vec<String> {
        let sub = |s: &str| {
            s.replace("{input_wav}", &input.to_string_lossy())
                .replace("{output_dir}", &output_dir.to_string_lossy())
        };
        std::iter::once(sub(&self.program))
            .chain(self.args.iter().map(|a| sub(a)))
            .collect()
    }

    /// Runs on a mixture file and returns the two estimates.
    pub fn run(&self, input: &Path, output_dir: &Path, expected_len: usize) -> Result<[Waveform; 2]> {
        std::fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
        let argv = self.command_line(input, output_dir);
        let out = Command::new(&argv[0])
            .args(&argv[1..])
            .output()
            .map_err(|e| Error::External(format!("could not start '{}': {e}", argv[0])))?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            let tail: String = stderr
                .lines()
                .rev()
                .take(5)
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .collect::<Vec<_>>()
                .join("\n");
            return Err(Error::External(format!(
                "'{}' exited with {}: {tail}",
                argv[0], out.status
            )));
        }
        let stem = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let load = |k: usize| -> Result<Waveform> {
            let path = output_dir.join(format!("{stem}_src{k}.wav"));
            if !path.exists() {
                return Err(Error::External(format!("separator did not write {}", path.display())));
            }
            let w = read_wav(&path)?;
            if w.sample_rate() != CANONICAL_RATE {
                return Err(Error::External(format!(
                    "{} is at {} Hz, expected {CANONICAL_RATE}",
                    path.display(),
                    w.sample_rate()
                )));
            }
            if w.len() != expected_len {
                return Err(Error::External(format!(
                    "{} has {} samples, mixture has {expected_len}",
                    path.display(),
                    w.len()
                )));
            }
            Ok(w)
        };
        Ok([load(1)?, load(2)?])
    }
}

impl Separator for ExternalSeparator {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn separate(&self, input: &SeparationInput<'_>) -> Result<[Waveform; 2]> {
        let dir = self.work_dir.join(input.id);
        let path = match input.mixture_path {
            Some(p) => p.to_path_buf(),
            None => {
                let p = dir.join("input").join(format!("{}.wav", input.id));
                write_wav(&p, input.mixture)?;
                p
            }
        };
        self.run(&path, &dir.join("out"), input.mixture.len())
    }
}
