//! Signal types, spectral analysis, WAV I/O and seeding shared by every module.

mod resample;
mod seed;
pub mod stft;
pub mod wav;
mod waveform;

pub use resample::resample;
pub use seed::Seed;
pub use stft::{hann, stft, ComplexStft, Spectrogram, StftConfig};
pub use wav::{read_wav, read_wav_at, read_wav_canonical, write_wav, write_wav_f32};
pub use waveform::{Waveform, CANONICAL_RATE};
