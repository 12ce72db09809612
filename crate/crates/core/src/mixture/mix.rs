use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::signal::Waveform;

/// Peak above which a mixture and its references are scaled down together.
pub const MIX_PEAK_LIMIT: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthPolicy {
    /// Zero-pad the shorter source to the longer one.
    #[default]
    Pad,
    /// Cut the longer source to the shorter one.
    Truncate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub mixture: Waveform,
    /// Source A exactly as it appears in the mixture.
    pub ref_a: Waveform,
    pub ref_b: Waveform,
    /// Common anti-clipping factor applied to all three (1 when none was needed).
    pub scale: f64,
}

pub fn db_to_gain(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Applies gains, equalizes lengths and sums. The references returned are the
/// gained, length-equalized sources, so `mixture == ref_a + ref_b`.
pub fn mix(a: &Waveform, b: &Waveform, gain_a_db: f64, gain_b_db: f64, policy: LengthPolicy) -> Result<Mixture> {
    a.check_same_rate(b)?;
    let len = match policy {
        LengthPolicy::Pad => a.len().max(b.len()),
        LengthPolicy::Truncate => a.len().min(b.len()),
    };
    let mut ref_a = a.resized(len).scaled(db_to_gain(gain_a_db));
    let mut ref_b = b.resized(len).scaled(db_to_gain(gain_b_db));
    let mut mixture = ref_a.add(&ref_b)?;
    let peak = mixture.peak();
    let scale = if peak > MIX_PEAK_LIMIT {
        MIX_PEAK_LIMIT / peak
    } else {
        1.0
    };
    if scale != 1.0 {
        for w in [&mut ref_a, &mut ref_b, &mut mixture] {
            w.scale(scale);
        }
    }
    Ok(Mixture {
        mixture,
        ref_a,
        ref_b,
        scale,
    })
}
