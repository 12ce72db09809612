//! C interface to the probe toolkit.
//!
//! Audio crosses the boundary as opaque `IhpWaveform` handles (mono, `f64`
//! samples). Every fallible call returns an `IhpStatus`; on failure the message
//! is available from `ihp_last_error` on the same thread until the next failing
//! call. Handles returned through out-pointers belong to the caller and are
//! released with `ihp_waveform_free`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use inharmonic_probe::metrics;
use inharmonic_probe::mixture::{mix, LengthPolicy};
use inharmonic_probe::separate::{HarmonicComb, OracleIrm};
use inharmonic_probe::signal::{read_wav, write_wav, Seed, Waveform};
use inharmonic_probe::speech::jitter_speech;
use inharmonic_probe::tone::{default_num_harmonics, sample_jitter, synth_tone_complex, ToneComplexSpec};
use inharmonic_probe::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IhpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Inputs were well-formed but unusable: mismatched rates or lengths, silent references.
    Signal = 3,
    Io = 4,
    Format = 5,
    Panic = 6,
}

/// Opaque mono waveform.
pub struct IhpWaveform(Waveform);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(IhpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameter(_) | Error::Config(_) => IhpStatus::InvalidArgument,
            Error::Io { .. } | Error::External(_) => IhpStatus::Io,
            Error::Format { .. } => IhpStatus::Format,
            _ => IhpStatus::Signal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(IhpStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic for `ihp_last_error`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IhpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IhpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            IhpStatus::Panic
        }
    }
}

unsafe fn wave<'a>(ptr: *const IhpWaveform, what: &str) -> Result<&'a Waveform, Failure> {
    ptr.as_ref().map(|w| &w.0).ok_or_else(|| null(what))
}

unsafe fn put(out: *mut *mut IhpWaveform, w: Waveform) {
    *out = Box::into_raw(Box::new(IhpWaveform(w)));
}

unsafe fn path(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(IhpStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn check_outs(outs: &[*mut *mut IhpWaveform]) -> Result<(), Failure> {
    if outs.iter().any(|o| o.is_null()) {
        return Err(null("output pointer"));
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ihp_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ihp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Copies `len` samples into a new waveform.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ihp_waveform_new(
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    out: *mut *mut IhpWaveform,
) -> IhpStatus {
    guard(|| {
        check_outs(&[out])?;
        if samples.is_null() && len > 0 {
            return Err(null("samples"));
        }
        let data = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(samples, len).to_vec()
        };
        put(out, Waveform::new(data, sample_rate)?);
        Ok(())
    })
}

/// # Safety
/// `wav` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ihp_waveform_free(wav: *mut IhpWaveform) {
    if !wav.is_null() {
        drop(Box::from_raw(wav));
    }
}

/// Number of samples, 0 for NULL.
///
/// # Safety
/// `wav` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ihp_waveform_len(wav: *const IhpWaveform) -> usize {
    wav.as_ref().map_or(0, |w| w.0.len())
}

/// Sample rate in Hz, 0 for NULL.
///
/// # Safety
/// `wav` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ihp_waveform_sample_rate(wav: *const IhpWaveform) -> u32 {
    wav.as_ref().map_or(0, |w| w.0.sample_rate())
}

/// Borrowed pointer to the samples, valid while the handle lives.
///
/// # Safety
/// `wav` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ihp_waveform_samples(wav: *const IhpWaveform) -> *const f64 {
    wav.as_ref().map_or(std::ptr::null(), |w| w.0.samples().as_ptr())
}

/// Reads a PCM or float WAV file, downmixing to mono.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ihp_wav_read(path_: *const c_char, out: *mut *mut IhpWaveform) -> IhpStatus {
    guard(|| {
        check_outs(&[out])?;
        put(out, read_wav(path(path_)?)?);
        Ok(())
    })
}

/// Writes 16-bit PCM.
///
/// # Safety
/// `path` must be a NUL-terminated string; `wav` a live handle.
#[no_mangle]
pub unsafe extern "C" fn ihp_wav_write(path_: *const c_char, wav: *const IhpWaveform) -> IhpStatus {
    guard(|| {
        write_wav(path(path_)?, wave(wav, "wav")?)?;
        Ok(())
    })
}

/// Harmonic complex on `f0` with every harmonic below the cutoff, each shifted
/// by a jitter offset drawn uniformly from `[-jitter, jitter]` (times `f0`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ihp_tone_complex(
    f0: f64,
    jitter: f64,
    seed: u64,
    duration: f64,
    sample_rate: u32,
    out: *mut *mut IhpWaveform,
) -> IhpStatus {
    guard(|| {
        check_outs(&[out])?;
        if !(f0 > 0.0) {
            return Err(Failure(
                IhpStatus::InvalidArgument,
                format!("f0 must be positive, got {f0}"),
            ));
        }
        let profile = sample_jitter(jitter, default_num_harmonics(f0), Seed(seed))?;
        let spec = ToneComplexSpec::harmonic(f0, 0.0, duration).with_jitter(profile);
        put(out, synth_tone_complex(&spec, sample_rate)?);
        Ok(())
    })
}

/// Resynthesizes speech with its harmonics jittered by up to `bound` (0 keeps them harmonic).
///
/// # Safety
/// `wav` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ihp_jitter_speech(
    wav: *const IhpWaveform,
    bound: f64,
    seed: u64,
    out: *mut *mut IhpWaveform,
) -> IhpStatus {
    guard(|| {
        check_outs(&[out])?;
        put(out, jitter_speech(wave(wav, "wav")?, bound, Seed(seed))?);
        Ok(())
    })
}

/// Scale-invariant SNR in dB.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ihp_si_snr(
    estimate: *const IhpWaveform,
    reference: *const IhpWaveform,
    out: *mut f64,
) -> IhpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = metrics::si_snr(wave(estimate, "estimate")?, wave(reference, "reference")?)?;
        Ok(())
    })
}

/// Permutation-invariant SDR improvement of two estimates over the mixture.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ihp_sdri(
    estimate_1: *const IhpWaveform,
    estimate_2: *const IhpWaveform,
    reference_a: *const IhpWaveform,
    reference_b: *const IhpWaveform,
    mixture: *const IhpWaveform,
    out: *mut f64,
) -> IhpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let est = [
            wave(estimate_1, "estimate_1")?.clone(),
            wave(estimate_2, "estimate_2")?.clone(),
        ];
        let refs = [
            wave(reference_a, "reference_a")?.clone(),
            wave(reference_b, "reference_b")?.clone(),
        ];
        *out = metrics::sdri(&est, &refs, wave(mixture, "mixture")?)?;
        Ok(())
    })
}

/// Mixes two sources at the given gains, zero-padding the shorter. The
/// references are the sources as they appear in the mixture.
///
/// # Safety
/// Handles must be live; all three out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn ihp_mix(
    a: *const IhpWaveform,
    b: *const IhpWaveform,
    gain_a_db: f64,
    gain_b_db: f64,
    out_mixture: *mut *mut IhpWaveform,
    out_ref_a: *mut *mut IhpWaveform,
    out_ref_b: *mut *mut IhpWaveform,
) -> IhpStatus {
    guard(|| {
        check_outs(&[out_mixture, out_ref_a, out_ref_b])?;
        let m = mix(wave(a, "a")?, wave(b, "b")?, gain_a_db, gain_b_db, LengthPolicy::Pad)?;
        put(out_mixture, m.mixture);
        put(out_ref_a, m.ref_a);
        put(out_ref_b, m.ref_b);
        Ok(())
    })
}

/// Ideal ratio mask separation from the true sources.
///
/// # Safety
/// Handles must be live; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn ihp_separate_oracle_irm(
    mixture: *const IhpWaveform,
    reference_a: *const IhpWaveform,
    reference_b: *const IhpWaveform,
    out_1: *mut *mut IhpWaveform,
    out_2: *mut *mut IhpWaveform,
) -> IhpStatus {
    guard(|| {
        check_outs(&[out_1, out_2])?;
        let [e1, e2] = OracleIrm::default().separate_with(
            wave(mixture, "mixture")?,
            wave(reference_a, "reference_a")?,
            wave(reference_b, "reference_b")?,
        )?;
        put(out_1, e1);
        put(out_2, e2);
        Ok(())
    })
}

/// Two-talker harmonic comb separation.
///
/// # Safety
/// `mixture` must be live; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn ihp_separate_comb(
    mixture: *const IhpWaveform,
    out_1: *mut *mut IhpWaveform,
    out_2: *mut *mut IhpWaveform,
) -> IhpStatus {
    guard(|| {
        check_outs(&[out_1, out_2])?;
        let [e1, e2] = HarmonicComb::default().separate_mixture(wave(mixture, "mixture")?)?;
        put(out_1, e1);
        put(out_2, e2);
        Ok(())
    })
}
