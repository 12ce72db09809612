#ifndef INHARMONIC_PROBE_H
#define INHARMONIC_PROBE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IhpStatus {
  IHP_STATUS_OK = 0,
  IHP_STATUS_NULL_POINTER = 1,
  IHP_STATUS_INVALID_ARGUMENT = 2,
  /*
   Inputs were well-formed but unusable: mismatched rates or lengths, silent references.
   */
  IHP_STATUS_SIGNAL = 3,
  IHP_STATUS_IO = 4,
  IHP_STATUS_FORMAT = 5,
  IHP_STATUS_PANIC = 6,
} IhpStatus;

/*
 Opaque mono waveform.
 */
typedef struct IhpWaveform IhpWaveform;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *ihp_version(void);

/*
 Message for the most recent failure on this thread, or NULL. Valid until the
 next failing call on the same thread.
 */
const char *ihp_last_error(void);

/*
 Copies `len` samples into a new waveform.

 # Safety
 `samples` must point to `len` readable doubles; `out` must be writable.
 */
enum IhpStatus ihp_waveform_new(const double *samples,
                                size_t len,
                                uint32_t sample_rate,
                                struct IhpWaveform **out);

/*
 # Safety
 `wav` must be NULL or a handle from this library that has not been freed.
 */
void ihp_waveform_free(struct IhpWaveform *wav);

/*
 Number of samples, 0 for NULL.

 # Safety
 `wav` must be NULL or a live handle.
 */
size_t ihp_waveform_len(const struct IhpWaveform *wav);

/*
 Sample rate in Hz, 0 for NULL.

 # Safety
 `wav` must be NULL or a live handle.
 */
uint32_t ihp_waveform_sample_rate(const struct IhpWaveform *wav);

/*
 Borrowed pointer to the samples, valid while the handle lives.

 # Safety
 `wav` must be NULL or a live handle.
 */
const double *ihp_waveform_samples(const struct IhpWaveform *wav);

/*
 Reads a PCM or float WAV file, downmixing to mono.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum IhpStatus ihp_wav_read(const char *path_, struct IhpWaveform **out);

/*
 Writes 16-bit PCM.

 # Safety
 `path` must be a NUL-terminated string; `wav` a live handle.
 */
enum IhpStatus ihp_wav_write(const char *path_, const struct IhpWaveform *wav);

/*
 Harmonic complex on `f0` with every harmonic below the cutoff, each shifted
 by a jitter offset drawn uniformly from `[-jitter, jitter]` (times `f0`).

 # Safety
 `out` must be writable.
 */
enum IhpStatus ihp_tone_complex(double f0,
                                double jitter,
                                uint64_t seed,
                                double duration,
                                uint32_t sample_rate,
                                struct IhpWaveform **out);

/*
 Resynthesizes speech with its harmonics jittered by up to `bound` (0 keeps them harmonic).

 # Safety
 `wav` must be a live handle; `out` writable.
 */
enum IhpStatus ihp_jitter_speech(const struct IhpWaveform *wav,
                                 double bound,
                                 uint64_t seed,
                                 struct IhpWaveform **out);

/*
 Scale-invariant SNR in dB.

 # Safety
 Handles must be live; `out` writable.
 */
enum IhpStatus ihp_si_snr(const struct IhpWaveform *estimate,
                          const struct IhpWaveform *reference,
                          double *out);

/*
 Permutation-invariant SDR improvement of two estimates over the mixture.

 # Safety
 Handles must be live; `out` writable.
 */
enum IhpStatus ihp_sdri(const struct IhpWaveform *estimate_1,
                        const struct IhpWaveform *estimate_2,
                        const struct IhpWaveform *reference_a,
                        const struct IhpWaveform *reference_b,
                        const struct IhpWaveform *mixture,
                        double *out);

/*
 Mixes two sources at the given gains, zero-padding the shorter. The
 references are the sources as they appear in the mixture.

 # Safety
 Handles must be live; all three out-pointers writable.
 */
enum IhpStatus ihp_mix(const struct IhpWaveform *a,
                       const struct IhpWaveform *b,
                       double gain_a_db,
                       double gain_b_db,
                       struct IhpWaveform **out_mixture,
                       struct IhpWaveform **out_ref_a,
                       struct IhpWaveform **out_ref_b);

/*
 Ideal ratio mask separation from the true sources.

 # Safety
 Handles must be live; out-pointers writable.
 */
enum IhpStatus ihp_separate_oracle_irm(const struct IhpWaveform *mixture,
                                       const struct IhpWaveform *reference_a,
                                       const struct IhpWaveform *reference_b,
                                       struct IhpWaveform **out_1,
                                       struct IhpWaveform **out_2);

/*
 Two-talker harmonic comb separation.

 # Safety
 `mixture` must be live; out-pointers writable.
 */
enum IhpStatus ihp_separate_comb(const struct IhpWaveform *mixture,
                                 struct IhpWaveform **out_1,
                                 struct IhpWaveform **out_2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INHARMONIC_PROBE_H */
