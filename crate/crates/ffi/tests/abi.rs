use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use inharmonic_probe_ffi::*;

fn waveform(samples: &[f64], rate: u32) -> *mut IhpWaveform {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { ihp_waveform_new(samples.as_ptr(), samples.len(), rate, &mut out) },
        IhpStatus::Ok
    );
    out
}

fn samples<'a>(w: *const IhpWaveform) -> &'a [f64] {
    unsafe { std::slice::from_raw_parts(ihp_waveform_samples(w), ihp_waveform_len(w)) }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ihp_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn waveform_handles_round_trip_through_wav() {
    let data: Vec<f64> = (0..800).map(|i| (i as f64 * 0.1).sin() * 0.5).collect();
    let w = waveform(&data, 16_000);
    assert_eq!(unsafe { ihp_waveform_sample_rate(w) }, 16_000);
    assert_eq!(samples(w), &data[..]);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("x.wav").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ihp_wav_write(path.as_ptr(), w) }, IhpStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { ihp_wav_read(path.as_ptr(), &mut back) }, IhpStatus::Ok);
    let err = samples(back)
        .iter()
        .zip(&data)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1.0 / 32768.0, "{err}");

    let mut est = 0.0;
    assert_eq!(unsafe { ihp_si_snr(back, w, &mut est) }, IhpStatus::Ok);
    assert!(est > 60.0);
    unsafe {
        ihp_waveform_free(w);
        ihp_waveform_free(back);
        ihp_waveform_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut out = ptr::null_mut();
    let missing = CString::new("/nonexistent/dir/none.wav").unwrap();
    assert_eq!(unsafe { ihp_wav_read(missing.as_ptr(), &mut out) }, IhpStatus::Io);
    assert!(last_error().contains("none.wav"));
    assert!(out.is_null());

    assert_eq!(
        unsafe { ihp_waveform_new(ptr::null(), 4, 16_000, &mut out) },
        IhpStatus::NullPointer
    );
    assert_eq!(
        unsafe { ihp_tone_complex(-5.0, 0.0, 0, 0.1, 16_000, &mut out) },
        IhpStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { ihp_tone_complex(100.0, 0.0, 0, 0.1, 16_000, ptr::null_mut()) },
        IhpStatus::NullPointer
    );

    let a = waveform(&[0.1, 0.2, 0.3], 16_000);
    let b = waveform(&[0.1, 0.2], 16_000);
    let silent = waveform(&[0.0; 3], 16_000);
    let mut v = 0.0;
    assert_eq!(unsafe { ihp_si_snr(a, b, &mut v) }, IhpStatus::Signal);
    assert_eq!(unsafe { ihp_si_snr(a, silent, &mut v) }, IhpStatus::Signal);
    assert!(last_error().contains("zero"));
    unsafe {
        ihp_waveform_free(a);
        ihp_waveform_free(b);
        ihp_waveform_free(silent);
    }
}

#[test]
fn tone_mixtures_separate_through_the_interface() {
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(ihp_tone_complex(120.0, 0.0, 1, 0.4, 16_000, &mut a), IhpStatus::Ok);
        assert_eq!(ihp_tone_complex(190.0, 0.0, 2, 0.4, 16_000, &mut b), IhpStatus::Ok);
    }
    assert_eq!(unsafe { ihp_waveform_len(a) }, 6400);
    let (mut m, mut ra, mut rb) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
    assert_eq!(
        unsafe { ihp_mix(a, b, 0.0, -3.0, &mut m, &mut ra, &mut rb) },
        IhpStatus::Ok
    );
    let sum: Vec<f64> = samples(ra).iter().zip(samples(rb)).map(|(x, y)| x + y).collect();
    assert!(sum.iter().zip(samples(m)).all(|(x, y)| (x - y).abs() < 1e-12));

    let (mut e1, mut e2) = (ptr::null_mut(), ptr::null_mut());
    let mut irm = 0.0;
    let mut comb = 0.0;
    let mut baseline = 0.0;
    unsafe {
        assert_eq!(ihp_separate_oracle_irm(m, ra, rb, &mut e1, &mut e2), IhpStatus::Ok);
        assert_eq!(ihp_sdri(e1, e2, ra, rb, m, &mut irm), IhpStatus::Ok);
        ihp_waveform_free(e1);
        ihp_waveform_free(e2);
        assert_eq!(ihp_separate_comb(m, &mut e1, &mut e2), IhpStatus::Ok);
        assert_eq!(ihp_sdri(e1, e2, ra, rb, m, &mut comb), IhpStatus::Ok);
        assert_eq!(ihp_sdri(m, m, ra, rb, m, &mut baseline), IhpStatus::Ok);
    }
    assert!(irm > 6.0 && irm >= comb, "{irm} vs {comb}");
    assert!(comb > 3.0, "{comb}");
    assert!(baseline.abs() < 1e-9);
    for w in [a, b, m, ra, rb, e1, e2] {
        unsafe { ihp_waveform_free(w) };
    }
}

#[test]
fn zero_jitter_speech_resynthesis() {
    let rate = 16_000;
    // Glottal-like pulse train at 125 Hz through a one-pole smoother.
    let mut y = 0.0;
    let data: Vec<f64> = (0..rate as usize)
        .map(|i| {
            let x = if i % 128 == 0 { 1.0 } else { 0.0 };
            y = 0.9 * y + x;
            y * 0.2
        })
        .collect();
    let w = waveform(&data, rate);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ihp_jitter_speech(w, 0.0, 3, &mut out) }, IhpStatus::Ok);
    let mut v = 0.0;
    assert_eq!(unsafe { ihp_si_snr(out, w, &mut v) }, IhpStatus::Ok);
    assert!(v >= 15.0, "{v}");
    unsafe {
        ihp_waveform_free(w);
        ihp_waveform_free(out);
    }
}

fn profile_dir() -> PathBuf {
    // target/<profile>/deps/<this test binary>
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

#[test]
fn c_program_links_against_the_generated_header() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = profile_dir().join("libinharmonic_probe_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<String, ()> {
    let candidates = std::env::var("CC")
        .into_iter()
        .chain(["cc".to_string(), "gcc".into(), "clang".into()]);
    for c in candidates {
        if Command::new(&c)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(c);
        }
    }
    Err(())
}
