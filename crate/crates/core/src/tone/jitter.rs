use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Seed;

/// Redraw budget for order-preserving profiles.
pub const MAX_JITTER_ATTEMPTS: usize = 1000;

/// Per-harmonic frequency offsets in units of F0.
///
/// Harmonic `n` (1-based) sits at `(n + offsets[n-1]) * f0`, with every offset
/// inside `[-bound, bound]`. Offsets are fixed for the whole stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JitterProfile {
    pub bound: f64,
    pub offsets: Vec<f64>,
    pub seed: Seed,
}

impl JitterProfile {
    /// All-zero profile: the harmonic case.
    pub fn none(num_harmonics: usize) -> Self {
        JitterProfile {
            bound: 0.0,
            offsets: vec![0.0; num_harmonics],
            seed: Seed::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn is_harmonic(&self) -> bool {
        self.offsets.iter().all(|&j| j == 0.0)
    }

    /// Offset for harmonic `n` (1-based). Harmonics past the end are unjittered.
    pub fn offset(&self, n: usize) -> f64 {
        self.offsets.get(n.wrapping_sub(1)).copied().unwrap_or(0.0)
    }

    /// Relative frequency multiplier `n + J_n`.
    pub fn multiplier(&self, n: usize) -> f64 {
        n as f64 + self.offset(n)
    }

    fn is_order_preserving(&self) -> bool {
        self.offsets
            .windows(2)
            .enumerate()
            .all(|(i, w)| (i as f64 + 2.0 + w[1]) > (i as f64 + 1.0 + w[0]))
    }
}

/// Draws one offset per harmonic, independently and uniformly on `[-bound, bound]`.
///
/// Profiles whose jittered partials would not be strictly increasing in `n`
/// are redrawn (this can only happen for `bound >= 0.5`), up to
/// [`MAX_JITTER_ATTEMPTS`] times.
pub fn sample_jitter(bound: f64, num_harmonics: usize, seed: Seed) -> Result<JitterProfile> {
    if !(0.0..1.0).contains(&bound) {
        return Err(Error::invalid(format!("jitter bound must lie in [0, 1), got {bound}")));
    }
    if bound == 0.0 {
        return Ok(JitterProfile {
            seed,
            ..JitterProfile::none(num_harmonics)
        });
    }
    let mut rng = seed.rng();
    for _ in 0..MAX_JITTER_ATTEMPTS {
        // Drawing on [-1, 1] and scaling keeps profiles for different bounds
        // under one seed proportional to each other.
        let offsets = (0..num_harmonics).map(|_| bound * rng.gen_range(-1.0..=1.0)).collect();
        let profile = JitterProfile { bound, offsets, seed };
        if profile.is_order_preserving() {
            return Ok(profile);
        }
    }
    Err(Error::JitterRejected(MAX_JITTER_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_bound_gives_zero_offsets() {
        let p = sample_jitter(0.0, 10, Seed(99)).unwrap();
        assert_eq!(p.offsets, vec![0.0; 10]);
        assert!(p.is_harmonic());
    }

    #[test]
    fn bound_one_or_more_rejected() {
        assert!(sample_jitter(1.0, 4, Seed(1)).is_err());
        assert!(sample_jitter(-0.1, 4, Seed(1)).is_err());
        assert!(sample_jitter(f64::NAN, 4, Seed(1)).is_err());
    }

    #[test]
    fn large_bounds_stay_ordered() {
        for s in 0..200 {
            let p = sample_jitter(0.9, 12, Seed(s)).unwrap();
            assert!(p.is_order_preserving());
        }
    }

    #[test]
    fn long_profiles_at_large_bounds_exhaust_the_budget() {
        assert!(matches!(
            sample_jitter(0.95, 400, Seed(0)),
            Err(Error::JitterRejected(MAX_JITTER_ATTEMPTS))
        ));
    }

    #[test]
    fn scaling_across_bounds() {
        let a = sample_jitter(0.05, 8, Seed(5)).unwrap();
        let b = sample_jitter(0.10, 8, Seed(5)).unwrap();
        for (x, y) in a.offsets.iter().zip(&b.offsets) {
            assert!((2.0 * x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn offsets_past_end_are_zero() {
        let p = sample_jitter(0.2, 3, Seed(1)).unwrap();
        assert_eq!(p.offset(4), 0.0);
        assert_eq!(p.offset(0), 0.0);
        assert_eq!(p.multiplier(4), 4.0);
    }

    proptest! {
        #[test]
        fn offsets_respect_bound(bound in 0.0f64..0.5, n in 1usize..64, seed in any::<u64>()) {
            let p = sample_jitter(bound, n, Seed(seed)).unwrap();
            prop_assert_eq!(p.len(), n);
            prop_assert!(p.offsets.iter().all(|j| j.abs() <= bound));
        }
    }
}
