//! Synthetic voiced speech: formant-shaped harmonic sources with known F0.
//!
//! Used for tests and for the toy corpora. The F0 contour is exact, which makes
//! these signals handy oracles for the analysis and jitter code.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::signal::{Seed, Waveform};

const VOICED_RAMP: f64 = 0.02;
const HARMONIC_CEILING: f64 = 7000.0;
const CEILING_TAPER: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vowel {
    A,
    E,
    I,
    O,
    U,
}

impl Vowel {
    pub const ALL: [Vowel; 5] = [Vowel::A, Vowel::E, Vowel::I, Vowel::O, Vowel::U];

    /// (frequency, bandwidth) of the first three formants, adult male values.
    fn formants(self) -> [(f64, f64); 3] {
        match self {
            Vowel::A => [(730.0, 90.0), (1090.0, 110.0), (2440.0, 160.0)],
            Vowel::E => [(530.0, 80.0), (1840.0, 110.0), (2480.0, 160.0)],
            Vowel::I => [(270.0, 60.0), (2290.0, 110.0), (3010.0, 170.0)],
            Vowel::O => [(570.0, 80.0), (840.0, 100.0), (2410.0, 160.0)],
            Vowel::U => [(300.0, 60.0), (870.0, 100.0), (2240.0, 150.0)],
        }
    }

    /// Spectral envelope at `freq`: cascaded two-pole resonances times a
    /// -6 dB/octave source tilt (relative to 100 Hz).
    pub fn envelope(self, freq: f64, formant_scale: f64) -> f64 {
        let mut g = 100.0 / freq.max(100.0);
        for (f, b) in self.formants() {
            let f = f * formant_scale;
            let b = b * formant_scale;
            let num = f * f;
            g *= num / ((num - freq * freq).powi(2) + (b * freq).powi(2)).sqrt();
        }
        g
    }
}

/// Renders a voiced segment with a per-sample F0 contour. Harmonic phases are
/// drawn from `rng`; harmonics fade out between 6.5 and 7 kHz (or below Nyquist).
fn render_voiced(f0: &[f64], vowel: Vowel, formant_scale: f64, sr: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let f_min = f0.iter().copied().fold(f64::INFINITY, f64::min);
    if f0.is_empty() || f_min <= 0.0 {
        return vec![0.0; f0.len()];
    }
    let ceiling = HARMONIC_CEILING.min(0.45 * sr as f64);
    let n_max = (ceiling / f_min).floor() as usize;
    let phases: Vec<f64> = (0..n_max).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let mut out = vec![0.0; f0.len()];
    let mut phi = 0.0;
    for (o, &f) in out.iter_mut().zip(f0) {
        let mut acc = 0.0;
        for (i, ph) in phases.iter().enumerate() {
            let n = (i + 1) as f64;
            let freq = n * f;
            if freq >= ceiling {
                break;
            }
            let taper = if freq > ceiling - CEILING_TAPER {
                0.5 * (1.0 + (PI * (freq - ceiling + CEILING_TAPER) / CEILING_TAPER).cos())
            } else {
                1.0
            };
            acc += taper * vowel.envelope(freq, formant_scale) * (n * phi + ph).sin();
        }
        *o = acc;
        phi += 2.0 * PI * f / sr as f64;
        if phi > 2.0 * PI * 1e6 {
            phi -= 2.0 * PI * 1e6;
        }
    }
    out
}

fn apply_ramps(x: &mut [f64], ramp: usize) {
    let ramp = ramp.min(x.len() / 2);
    let n = x.len();
    for i in 0..ramp {
        let g = 0.5 * (1.0 - (PI * i as f64 / ramp as f64).cos());
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
}

fn peak_normalize(x: &mut [f64], target: f64) {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= target / peak);
    }
}

/// Steady vowel at constant `f0`, 20 ms ramps, peak 0.5.
pub fn synthetic_vowel(f0: f64, duration: f64, vowel: Vowel, sr: u32, seed: Seed) -> Waveform {
    let len = (duration * sr as f64).round() as usize;
    let contour = vec![f0; len];
    let mut x = render_voiced(&contour, vowel, 1.0, sr, &mut seed.rng());
    apply_ramps(&mut x, (VOICED_RAMP * sr as f64) as usize);
    peak_normalize(&mut x, 0.5);
    Waveform::new(x, sr).expect("valid rate")
}

/// Mean F0 and vocal-tract scaling of a synthetic talker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerProfile {
    pub id: String,
    pub f0: f64,
    pub formant_scale: f64,
}

impl SpeakerProfile {
    /// Deterministic talker `index`: even indices low-pitched, odd high-pitched.
    pub fn nth(index: usize, seed: Seed) -> SpeakerProfile {
        let mut rng = seed.derive(&format!("speaker{index}")).rng();
        let (f0, scale) = if index % 2 == 0 {
            (rng.gen_range(95.0..135.0), rng.gen_range(0.95..1.05))
        } else {
            (rng.gen_range(180.0..240.0), rng.gen_range(1.10..1.20))
        };
        SpeakerProfile {
            id: format!("spk{index:02}"),
            f0,
            formant_scale: scale,
        }
    }
}

/// A short "utterance": syllables of voiced vowels with moving F0, separated by
/// fricative noise and pauses. Peak 0.5. Also returns the per-sample F0 (0 when
/// unvoiced).
pub fn synthetic_utterance_with_f0(speaker: &SpeakerProfile, sr: u32, seed: Seed) -> (Waveform, Vec<f64>) {
    let mut rng = seed.rng();
    let n_syll = rng.gen_range(4..=7);
    let secs = |s: f64| (s * sr as f64).round() as usize;
    let mut x = vec![0.0; secs(0.1)];
    let mut f0_out = vec![0.0; x.len()];
    let mut fric = Vec::new();
    for s in 0..n_syll {
        if rng.gen_bool(0.4) {
            let len = secs(rng.gen_range(0.05..0.10));
            let mut prev = 0.0;
            let mut seg: Vec<f64> = (0..len)
                .map(|_| {
                    let w: f64 = rng.gen_range(-1.0..1.0);
                    let v = w - prev;
                    prev = w;
                    v
                })
                .collect();
            apply_ramps(&mut seg, secs(0.01));
            fric.push((x.len(), seg.len()));
            x.extend(seg);
            f0_out.resize(x.len(), 0.0);
        }
        let len = secs(rng.gen_range(0.15..0.28));
        let accent = rng.gen_range(-0.10..0.12);
        let declination = 1.0 - 0.12 * s as f64 / n_syll as f64;
        let vib_phase = rng.gen_range(0.0..2.0 * PI);
        let contour: Vec<f64> = (0..len)
            .map(|i| {
                let u = i as f64 / len as f64;
                let t = i as f64 / sr as f64;
                speaker.f0
                    * declination
                    * (1.0 + accent * (PI * u).sin())
                    * (1.0 + 0.005 * (2.0 * PI * 5.0 * t + vib_phase).sin())
            })
            .collect();
        let vowel = Vowel::ALL[rng.gen_range(0..Vowel::ALL.len())];
        let mut seg = render_voiced(&contour, vowel, speaker.formant_scale, sr, &mut rng);
        apply_ramps(&mut seg, secs(0.025));
        // Normalize each syllable so loudness varies only by the drawn gain.
        peak_normalize(&mut seg, rng.gen_range(0.6..1.0));
        x.extend(seg);
        f0_out.extend(contour);
        let gap = secs(rng.gen_range(0.03..0.08));
        x.resize(x.len() + gap, 0.0);
        f0_out.resize(x.len(), 0.0);
    }
    x.resize(x.len() + secs(0.1), 0.0);
    f0_out.resize(x.len(), 0.0);
    // Fricatives were generated at unit scale; bring them down relative to vowels.
    for (start, len) in fric {
        x[start..start + len].iter_mut().for_each(|v| *v *= 0.08);
    }
    peak_normalize(&mut x, 0.5);
    (Waveform::new(x, sr).expect("valid rate"), f0_out)
}

pub fn synthetic_utterance(speaker: &SpeakerProfile, sr: u32, seed: Seed) -> Waveform {
    synthetic_utterance_with_f0(speaker, sr, seed).0
}
