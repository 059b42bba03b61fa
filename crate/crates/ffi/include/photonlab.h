#ifndef PHOTONLAB_H
#define PHOTONLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum PhlStatus {
  PHL_STATUS_OK = 0,
  // A required pointer argument was null.
  PHL_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  PHL_STATUS_INVALID_UTF8 = 2,
  // A value violates its documented range.
  PHL_STATUS_INVALID_ARGUMENT = 3,
  // Malformed JSON or timestamp file.
  PHL_STATUS_PARSE_ERROR = 4,
  PHL_STATUS_IO = 5,
  // Not enough events or coincidences for the requested estimate.
  PHL_STATUS_INSUFFICIENT_DATA = 6,
  // Index past the end of a handle's data.
  PHL_STATUS_OUT_OF_BOUNDS = 7,
  // Internal error; the library state is unaffected but the call failed.
  PHL_STATUS_PANIC = 8,
} PhlStatus;

typedef enum PhlHistogramMode {
  PHL_HISTOGRAM_MODE_START_STOP = 0,
  PHL_HISTOGRAM_MODE_ALL_PAIRS = 1,
} PhlHistogramMode;

typedef struct PhlG2 PhlG2;

typedef struct PhlHistogram PhlHistogram;

// Photon or click timestamps, ps, sorted.
typedef struct PhlStream PhlStream;

typedef struct PhlDetector {
  double efficiency;
  double jitter_fwhm_ps;
  double dead_time_ps;
  // 1/s.
  double dark_rate;
} PhlDetector;

typedef struct PhlG2Bin {
  int64_t tau_ps;
  double g2;
  // Standard error of `g2`.
  double sigma;
  uint64_t counts;
} PhlG2Bin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or "" after a success.
// The pointer stays valid until the next call on the same thread.
const char *phl_last_error(void);

// Library version, a static string.
const char *phl_version(void);

// Build a stream from `len` sorted timestamps within `[0, duration_ps]`.
//
// # Safety
// `times` must point to `len` readable values (may be null when `len` is 0).
enum PhlStatus phl_stream_from_times(const uint64_t *times,
                                     size_t len,
                                     uint64_t duration_ps,
                                     struct PhlStream **out);

// Read a binary or CSV timestamp file. The duration is the last timestamp.
//
// # Safety
// `path` must be a NUL-terminated string.
enum PhlStatus phl_stream_read(const char *path, struct PhlStream **out);

// Write a stream in the binary timestamp format.
//
// # Safety
// `stream` must be a live handle and `path` a NUL-terminated string.
enum PhlStatus phl_stream_write_binary(const struct PhlStream *stream,
                                       const char *path,
                                       uint16_t channel);

// Number of events; 0 for a null handle.
//
// # Safety
// `stream` must be null or a live handle.
size_t phl_stream_len(const struct PhlStream *stream);

// # Safety
// `stream` must be null or a live handle.
uint64_t phl_stream_duration_ps(const struct PhlStream *stream);

// Copy up to `cap` timestamps into `buf`; the number copied goes to
// `written`.
//
// # Safety
// `stream` must be a live handle and `buf` must hold `cap` values.
enum PhlStatus phl_stream_copy_times(const struct PhlStream *stream,
                                     uint64_t *buf,
                                     size_t cap,
                                     size_t *written);

// # Safety
// `stream` must be null or a handle not yet freed.
void phl_stream_free(struct PhlStream *stream);

// Poisson photon stream of `rate` per second.
//
// # Safety
// `out` must be writable.
enum PhlStatus phl_gen_coherent(double rate,
                                double duration_s,
                                uint64_t seed,
                                struct PhlStream **out);

// Any emitter, described by the same JSON object as the `emitter` field of
// an experiment configuration, e.g. `{"kind": "fock", "n": 2}`.
//
// # Safety
// `emitter_json` must be a NUL-terminated string and `out` writable.
enum PhlStatus phl_generate(const char *emitter_json,
                            double duration_s,
                            uint64_t seed,
                            struct PhlStream **out);

// Route each event to `out_a` with probability `reflectance`, else `out_b`.
//
// # Safety
// `stream` must be a live handle; both outputs writable.
enum PhlStatus phl_beamsplitter(const struct PhlStream *stream,
                                double reflectance,
                                uint64_t seed,
                                struct PhlStream **out_a,
                                struct PhlStream **out_b);

// Detector clicks from incident photons.
//
// # Safety
// `stream` must be a live handle, `detector` readable and `out` writable.
enum PhlStatus phl_detect(const struct PhlStream *stream,
                          const struct PhlDetector *detector,
                          uint64_t seed,
                          struct PhlStream **out);

// Coincidence histogram of delays `t_b − t_a` over `[−range, +range]`.
//
// # Safety
// `a` and `b` must be live handles and `out` writable.
enum PhlStatus phl_histogram(const struct PhlStream *a,
                             const struct PhlStream *b,
                             uint64_t bin_width_ps,
                             uint64_t range_ps,
                             enum PhlHistogramMode mode,
                             struct PhlHistogram **out);

// Number of bins; 0 for a null handle.
//
// # Safety
// `h` must be null or a live handle.
size_t phl_histogram_len(const struct PhlHistogram *h);

// Delay at the center of bin `index` and its count.
//
// # Safety
// `h` must be a live handle; outputs writable.
enum PhlStatus phl_histogram_bin(const struct PhlHistogram *h,
                                 size_t index,
                                 int64_t *tau_ps,
                                 uint64_t *count);

// # Safety
// `h` must be null or a handle not yet freed.
void phl_histogram_free(struct PhlHistogram *h);

// Normalize by the accidental coincidences of independent channels.
//
// # Safety
// `h` must be a live handle and `out` writable.
enum PhlStatus phl_normalize_g2(const struct PhlHistogram *h, struct PhlG2 **out);

// # Safety
// `g` must be null or a live handle.
size_t phl_g2_len(const struct PhlG2 *g);

// # Safety
// `g` must be a live handle and `out` writable.
enum PhlStatus phl_g2_bin(const struct PhlG2 *g, size_t index, struct PhlG2Bin *out);

// Pooled g² over bins with `|τ| <= half_width_ps`.
//
// # Safety
// `g` must be a live handle; outputs writable.
enum PhlStatus phl_g2_window(const struct PhlG2 *g,
                             uint64_t half_width_ps,
                             double *value,
                             double *sigma);

// # Safety
// `g` must be null or a handle not yet freed.
void phl_g2_free(struct PhlG2 *g);

// g²(τ) of a model given as JSON, e.g.
// `{"model": "two_level_cw", "pump_rate": 1e8, "decay_rate": 1e8}`.
//
// # Safety
// `model_json` must be a NUL-terminated string and `out` writable.
enum PhlStatus phl_analytic_g2(const char *model_json, double tau_s, double *out);

// Central over side peak area for pulsed and Fock models.
//
// # Safety
// `model_json` must be a NUL-terminated string and `out` writable.
enum PhlStatus phl_pulse_integrated_g2(const char *model_json, double *out);

// Fringe visibility at delay τ of a line given as JSON, e.g.
// `{"center_wavelength_nm": 700, "shape": "lorentzian", "linewidth": 1e9}`.
//
// # Safety
// `line_json` must be a NUL-terminated string and `out` writable.
enum PhlStatus phl_visibility(const char *line_json, double tau_s, double *out);

// Run a complete experiment from a configuration document. When `out_dir`
// is non-null the result files are written there. When `summary_json` is
// non-null it receives the run summary, to be released with
// [`phl_string_free`].
//
// # Safety
// `config_json` must be a NUL-terminated string; `out_dir` null or a
// NUL-terminated string; `summary_json` null or writable.
enum PhlStatus phl_simulate_config_json(const char *config_json,
                                        const char *out_dir,
                                        char **summary_json);

// Release a string returned by this library.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void phl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHOTONLAB_H */
