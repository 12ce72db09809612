//! RIFF/WAV I/O. Reads 16-bit PCM and 32-bit float, mono or multi-channel
//! (downmixed by averaging). Writes 16-bit PCM mono.

use std::fs;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::signal::{resample, Waveform, CANONICAL_RATE};

const I16_SCALE: f64 = 32768.0;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn hound_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => format_err(path, other.to_string()),
    }
}

/// Reads a WAV file at its native rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.len() == 0 {
        return Err(format_err(path, "empty file"));
    }
    let reader = WavReader::open(path).map_err(|e| hound_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(format_err(path, "zero channels"));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / I16_SCALE))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| hound_err(path, e))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| hound_err(path, e))?,
        (fmt, bits) => {
            return Err(format_err(
                path,
                format!("{bits}-bit {fmt:?} samples (need 16-bit PCM or 32-bit float)"),
            ))
        }
    };
    if interleaved.is_empty() {
        return Err(format_err(path, "no samples"));
    }
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Waveform::new(samples, spec.sample_rate)
}

/// Reads a WAV file and resamples it to `rate`.
pub fn read_wav_at(path: impl AsRef<Path>, rate: u32) -> Result<Waveform> {
    let wav = read_wav(path)?;
    resample(&wav, rate)
}

/// Reads a WAV file at the canonical 16 kHz rate.
pub fn read_wav_canonical(path: impl AsRef<Path>) -> Result<Waveform> {
    read_wav_at(path, CANONICAL_RATE)
}

/// Quantizes one sample to 16-bit PCM the way [`write_wav`] does.
pub fn quantize_i16(x: f64) -> i16 {
    (x * I16_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Writes 16-bit PCM mono. Values outside [-1, 1) are clipped.
pub fn write_wav(path: impl AsRef<Path>, wav: &Waveform) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: wav.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| hound_err(path, e))?;
    for &x in wav.samples() {
        writer.write_sample(quantize_i16(x)).map_err(|e| hound_err(path, e))?;
    }
    writer.finalize().map_err(|e| hound_err(path, e))
}

/// Writes 32-bit float mono, for intermediate files that must not be quantized.
pub fn write_wav_f32(path: impl AsRef<Path>, wav: &Waveform) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: wav.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| hound_err(path, e))?;
    for &x in wav.samples() {
        writer.write_sample(x as f32).map_err(|e| hound_err(path, e))?;
    }
    writer.finalize().map_err(|e| hound_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(sr: u32) -> Waveform {
        let s = (0..sr as usize)
            .map(|i| 0.8 * (2.0 * PI * 440.0 * i as f64 / sr as f64).sin())
            .collect();
        Waveform::new(s, sr).unwrap()
    }

    #[test]
    fn roundtrip_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let w = sine(16_000);
        write_wav(&p, &w).unwrap();
        let r = read_wav(&p).unwrap();
        assert_eq!(r.sample_rate(), 16_000);
        assert_eq!(r.len(), w.len());
        let dev = w
            .samples()
            .iter()
            .zip(r.samples())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(dev <= 2f64.powi(-15), "deviation {dev}");
    }

    #[test]
    fn full_scale_clips_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let w = Waveform::new(vec![1.0, -1.0, 0.5], 16_000).unwrap();
        write_wav(&p, &w).unwrap();
        let r = read_wav(&p).unwrap();
        for (a, b) in w.samples().iter().zip(r.samples()) {
            assert!((a - b).abs() <= 2f64.powi(-15));
        }
    }

    #[test]
    fn empty_file_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.wav");
        fs::write(&p, b"").unwrap();
        assert!(matches!(read_wav(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn corrupt_header_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.wav");
        fs::write(&p, b"RIFF\x10\x00\x00\x00NOPEfmt ").unwrap();
        assert!(matches!(read_wav(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn unsupported_bit_depth() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a24.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 24,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(1000i32).unwrap();
        w.finalize().unwrap();
        let err = read_wav(&p).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        for _ in 0..10 {
            w.write_sample(0.5f32).unwrap();
            w.write_sample(-0.25f32).unwrap();
        }
        w.finalize().unwrap();
        let r = read_wav(&p).unwrap();
        assert_eq!(r.len(), 10);
        assert!(r.samples().iter().all(|&x| (x - 0.125).abs() < 1e-7));
    }

    #[test]
    fn canonical_read_resamples() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("8k.wav");
        write_wav(&p, &sine(8_000)).unwrap();
        let r = read_wav_canonical(&p).unwrap();
        assert_eq!(r.sample_rate(), CANONICAL_RATE);
        assert!((r.len() as i64 - 16_000).abs() <= 1);
    }
}
