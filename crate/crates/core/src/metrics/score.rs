use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Scores are clamped to `[-SCORE_CAP_DB, SCORE_CAP_DB]` so perfect or
/// orthogonal estimates stay finite.
pub const SCORE_CAP_DB: f64 = 80.0;

/// Most sources a permutation search will consider (8! = 40320 orderings).
pub const MAX_PIT_SOURCES: usize = 8;

fn zero_mean(x: &[f64]) -> Vec<f64> {
    let m = x.iter().sum::<f64>() / x.len().max(1) as f64;
    x.iter().map(|v| v - m).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scale-invariant signal-to-noise ratio in dB, after removing the mean of
/// both signals.
pub fn si_snr(estimate: &Waveform, reference: &Waveform) -> Result<f64> {
    estimate.check_same_shape(reference)?;
    let r = zero_mean(reference.samples());
    let e = zero_mean(estimate.samples());
    let rr = dot(&r, &r);
    if rr <= 0.0 {
        return Err(Error::ZeroReference);
    }
    let alpha = dot(&e, &r) / rr;
    let mut target = 0.0;
    let mut noise = 0.0;
    for (ev, rv) in e.iter().zip(&r) {
        let t = alpha * rv;
        target += t * t;
        noise += (ev - t) * (ev - t);
    }
    let db = if target == 0.0 {
        -SCORE_CAP_DB
    } else if noise == 0.0 {
        SCORE_CAP_DB
    } else {
        10.0 * (target / noise).log10()
    };
    Ok(db.clamp(-SCORE_CAP_DB, SCORE_CAP_DB))
}

/// Signal-to-distortion ratio. Defined here as the scale-invariant SNR, so
/// `sdr` and `si_snr` (and their improvements) coincide.
pub fn sdr(estimate: &Waveform, reference: &Waveform) -> Result<f64> {
    si_snr(estimate, reference)
}

/// Outcome of a permutation-invariant evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitResult {
    /// `permutation[i]` is the estimate assigned to reference `i`.
    pub permutation: Vec<usize>,
    /// Score of each reference under that assignment.
    pub scores: Vec<f64>,
    pub mean: f64,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Exhaustive permutation search maximizing the mean of `metric`. Ties keep
/// the lexicographically first permutation.
pub fn pit<F>(estimates: &[Waveform], references: &[Waveform], metric: F) -> Result<PitResult>
where
    F: Fn(&Waveform, &Waveform) -> Result<f64>,
{
    if estimates.len() != references.len() || references.is_empty() {
        return Err(Error::CountMismatch {
            estimates: estimates.len(),
            references: references.len(),
        });
    }
    if references.len() > MAX_PIT_SOURCES {
        return Err(Error::invalid(format!(
            "permutation search supports at most {MAX_PIT_SOURCES} sources"
        )));
    }
    let n = references.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for (r, reference) in references.iter().enumerate() {
        for (e, estimate) in estimates.iter().enumerate() {
            matrix[r][e] = metric(estimate, reference)?;
        }
    }
    let mut best: Option<PitResult> = None;
    for perm in permutations(n) {
        let scores: Vec<f64> = perm.iter().enumerate().map(|(r, &e)| matrix[r][e]).collect();
        let mean = scores.iter().sum::<f64>() / n as f64;
        if best.as_ref().map_or(true, |b| mean > b.mean) {
            best = Some(PitResult {
                permutation: perm,
                scores,
                mean,
            });
        }
    }
    Ok(best.expect("at least one permutation"))
}

pub fn pit_si_snr(estimates: &[Waveform], references: &[Waveform]) -> Result<PitResult> {
    pit(estimates, references, si_snr)
}

/// Per-reference scores of a separation, with improvements over using the
/// mixture itself as every estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationScore {
    pub permutation: Vec<usize>,
    pub si_snr: Vec<f64>,
    pub sdr: Vec<f64>,
    pub si_snri: Vec<f64>,
    pub sdri: Vec<f64>,
    pub mean_si_snri: f64,
    pub mean_sdri: f64,
}

pub fn score_separation(
    estimates: &[Waveform],
    references: &[Waveform],
    mixture: &Waveform,
) -> Result<SeparationScore> {
    let best = pit_si_snr(estimates, references)?;
    let baseline = references
        .iter()
        .map(|r| si_snr(mixture, r))
        .collect::<Result<Vec<_>>>()?;
    let si_snri: Vec<f64> = best.scores.iter().zip(&baseline).map(|(s, b)| s - b).collect();
    let mean = si_snri.iter().sum::<f64>() / si_snri.len() as f64;
    Ok(SeparationScore {
        permutation: best.permutation,
        sdr: best.scores.clone(),
        si_snr: best.scores,
        sdri: si_snri.clone(),
        si_snri,
        mean_si_snri: mean,
        mean_sdri: mean,
    })
}

/// Mean SDR improvement of `estimates` over the unprocessed mixture.
pub fn sdri(estimates: &[Waveform], references: &[Waveform], mixture: &Waveform) -> Result<f64> {
    score_separation(estimates, references, mixture).map(|s| s.mean_sdri)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wav(v: Vec<f64>) -> Waveform {
        Waveform::new(v, 16_000).unwrap()
    }

    fn sine(f: f64, n: usize) -> Waveform {
        wav((0..n)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / 16_000.0).sin())
            .collect())
    }

    #[test]
    fn known_noise_ratio() {
        // Orthogonal sinusoids: target energy / noise energy = 1 / 0.01.
        let r = sine(500.0, 16_000);
        let noise = sine(1500.0, 16_000).scaled(0.1);
        let e = r.add(&noise).unwrap();
        assert!((si_snr(&e, &r).unwrap() - 20.0).abs() < 1e-6);
    }

    #[test]
    fn perfect_and_orthogonal_are_capped() {
        let r = sine(500.0, 1600);
        assert_eq!(si_snr(&r, &r).unwrap(), SCORE_CAP_DB);
        let zero = wav(vec![0.0; 1600]);
        assert_eq!(si_snr(&zero, &r).unwrap(), -SCORE_CAP_DB);
    }

    #[test]
    fn silent_reference_and_shape_errors() {
        let r = wav(vec![0.25; 100]);
        assert!(matches!(si_snr(&r, &r), Err(Error::ZeroReference)));
        assert!(si_snr(&wav(vec![0.0; 10]), &wav(vec![1.0; 11])).is_err());
        assert!(matches!(
            pit_si_snr(std::slice::from_ref(&r), &[r.clone(), r.clone()]),
            Err(Error::CountMismatch { .. })
        ));
    }

    #[test]
    fn pit_picks_swapped_order() {
        let a = sine(300.0, 4000);
        let b = sine(700.0, 4000);
        let res = pit_si_snr(&[b.clone(), a.clone()], &[a, b]).unwrap();
        assert_eq!(res.permutation, vec![1, 0]);
        assert_eq!(res.mean, SCORE_CAP_DB);
    }

    #[test]
    fn mixture_as_estimate_scores_zero_improvement() {
        let a = sine(300.0, 4000);
        let b = sine(700.0, 4000).scaled(0.5);
        let mix = a.add(&b).unwrap();
        let s = score_separation(&[mix.clone(), mix.clone()], &[a, b], &mix).unwrap();
        assert_eq!(s.mean_sdri, 0.0);
        assert_eq!(s.sdri, s.si_snri);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    proptest! {
        #[test]
        fn scale_invariant(c in 1e-3f64..1e3, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::signal::Seed(seed).rng();
            let r = wav((0..256).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let e = wav((0..256).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let base = si_snr(&e, &r).unwrap();
            prop_assert!((si_snr(&e.scaled(c), &r).unwrap() - base).abs() < 1e-9);
            prop_assert!((si_snr(&e, &r.scaled(c)).unwrap() - base).abs() < 1e-9);
        }
    }
}
