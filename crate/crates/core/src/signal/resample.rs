//! Band-limited resampling with a Blackman-windowed sinc kernel.

use std::f64::consts::PI;

use crate::error::Result;
use crate::signal::Waveform;

// Zero crossings of the kernel on each side, at the lower of the two rates.
const HALF_TAPS: f64 = 32.0;

fn blackman(x: f64) -> f64 {
    // x in [-1, 1]
    0.42 + 0.5 * (PI * x).cos() + 0.08 * (2.0 * PI * x).cos()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Resamples to `target_rate`. Output length is `round(len * target / source)`.
pub fn resample(wav: &Waveform, target_rate: u32) -> Result<Waveform> {
    let src_rate = wav.sample_rate();
    if src_rate == target_rate {
        return Ok(wav.clone());
    }
    let ratio = target_rate as f64 / src_rate as f64;
    let out_len = (wav.len() as f64 * ratio).round() as usize;
    // Cut off at the lower Nyquist, slightly inside it.
    let cutoff = ratio.min(1.0) * 0.97;
    let half_width = HALF_TAPS / cutoff;
    let x = wav.samples();
    let out = (0..out_len)
        .map(|j| {
            let t = j as f64 / ratio;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(x.len().saturating_sub(1));
            let mut acc = 0.0;
            for (i, &xi) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let d = i as f64 - t;
                acc += xi * cutoff * sinc(cutoff * d) * blackman(d / half_width);
            }
            acc
        })
        .collect();
    Waveform::new(out, target_rate)
}
