//! Library results checked against straightforward reimplementations.

use std::f64::consts::PI;

use inharmonic_probe::metrics::si_snr;
use inharmonic_probe::signal::{stft, Seed, Waveform};
use inharmonic_probe::tone::sample_jitter;
use rand::Rng;

/// Direct O(N^2) DFT magnitude of a Hann-windowed frame (periodic Hann).
fn naive_dft(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &x) in frame.iter().enumerate() {
                let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
                let ph = -2.0 * PI * (k * i) as f64 / n as f64;
                re += x * w * ph.cos();
                im += x * w * ph.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

#[test]
fn stft_matches_direct_dft_on_two_tones() {
    let sr = 16_000;
    let x: Vec<f64> = (0..4000)
        .map(|i| {
            let t = i as f64 / sr as f64;
            0.5 * (2.0 * PI * 440.0 * t).sin() + 0.25 * (2.0 * PI * 1250.0 * t + 0.3).sin()
        })
        .collect();
    let wav = Waveform::new(x.clone(), sr).unwrap();
    let spec = stft(&wav, 0.032, 0.008).unwrap();
    let win = 512;
    for frame in [0, 3, 17] {
        let start = frame * 128;
        let oracle = naive_dft(&x[start..start + win]);
        for (k, (&a, &b)) in spec.magnitudes[frame].iter().zip(&oracle).enumerate() {
            assert!((a - b).abs() < 1e-9 * (1.0 + b), "frame {frame} bin {k}: {a} vs {b}");
        }
    }
    // The strongest bin sits at the nearest bin to 440 Hz.
    let peak = (0..spec.num_bins())
        .max_by(|&i, &j| spec.magnitudes[5][i].total_cmp(&spec.magnitudes[5][j]))
        .unwrap();
    assert_eq!(peak, (440.0_f64 / 31.25).round() as usize);
}

#[test]
fn small_bound_offsets_are_uniform() {
    // Below J = 0.5 no draw can reorder partials, so nothing is rejected and
    // every offset should be U[-J, J]. One-sample Kolmogorov-Smirnov.
    let bound = 0.3;
    let mut u: Vec<f64> = (0..10_000u64)
        .flat_map(|s| sample_jitter(bound, 10, Seed(s)).unwrap().offsets)
        .map(|o| (o / bound + 1.0) / 2.0)
        .collect();
    assert_eq!(u.len(), 100_000);
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max);
    assert!(d < 0.01, "KS statistic {d}");
}

/// SI-SNR written out from its definition.
fn si_snr_oracle(est: &[f64], reference: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (me, mr) = (mean(est), mean(reference));
    let e: Vec<f64> = est.iter().map(|x| x - me).collect();
    let r: Vec<f64> = reference.iter().map(|x| x - mr).collect();
    let dot: f64 = e.iter().zip(&r).map(|(a, b)| a * b).sum();
    let rr: f64 = r.iter().map(|x| x * x).sum();
    let target: Vec<f64> = r.iter().map(|x| dot / rr * x).collect();
    let noise: f64 = e.iter().zip(&target).map(|(a, t)| (a - t).powi(2)).sum();
    let signal: f64 = target.iter().map(|x| x * x).sum();
    10.0 * (signal / noise).log10()
}

#[test]
fn si_snr_matches_definition() {
    let mut rng = Seed(9).rng();
    for _ in 0..50 {
        let r: Vec<f64> = (0..800).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e: Vec<f64> = r.iter().map(|x| 0.7 * x + rng.gen_range(-0.3..0.3) + 0.1).collect();
        let got = si_snr(
            &Waveform::new(e.clone(), 16_000).unwrap(),
            &Waveform::new(r.clone(), 16_000).unwrap(),
        )
        .unwrap();
        assert!((got - si_snr_oracle(&e, &r)).abs() < 1e-9);
    }
}
