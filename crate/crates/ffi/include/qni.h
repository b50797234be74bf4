#ifndef QNI_H
#define QNI_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QniStatus {
  QNI_STATUS_OK = 0,
  QNI_STATUS_NULL_POINTER = 1,
  QNI_STATUS_INVALID_ARGUMENT = 2,
  QNI_STATUS_INVALID_PARAMETER = 3,
  QNI_STATUS_DIMENSION_MISMATCH = 4,
  QNI_STATUS_EMPTY_LO = 5,
  QNI_STATUS_UNKNOWN_LETTER = 6,
  QNI_STATUS_BITMAP = 7,
  QNI_STATUS_INSUFFICIENT_DATA = 8,
  QNI_STATUS_DEGENERATE = 9,
  QNI_STATUS_INSENSITIVE = 10,
  QNI_STATUS_NON_MONOTONE = 11,
  QNI_STATUS_ALL_LETTERS_INVALID = 12,
  QNI_STATUS_UNACHIEVABLE = 13,
  QNI_STATUS_CONFIG = 14,
  QNI_STATUS_IO = 15,
  QNI_STATUS_SERIALIZE = 16,
  QNI_STATUS_PANIC = 17,
  QNI_STATUS_OTHER = 18,
} QniStatus;

typedef enum QniTechnique {
  QNI_TECHNIQUE_CLASSICAL = 0,
  QNI_TECHNIQUE_QUANTUM = 1,
} QniTechnique;

// Opaque binary image.
typedef struct QniBitmap QniBitmap;

// Opaque run configuration.
typedef struct QniConfig QniConfig;

// Source and detection parameters.
typedef struct QniParams {
  double r;
  double t_probe;
  double t_conj;
  double lock_noise;
  double electronic_floor;
} QniParams;

// Trace geometry for [`qni_simulate_measurement`].
typedef struct QniAcquisition {
  size_t points_per_trace;
  size_t segment_length;
  size_t samples_per_point;
  double point_correlation;
  uint64_t rng_seed;
} QniAcquisition;

typedef struct QniMeasurement {
  double n;
  double delta_n;
} QniMeasurement;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *qni_version(void);

// Message describing the last failure on this thread, or null. The pointer
// stays valid until the next qni call on the same thread.
const char *qni_last_error_message(void);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum QniStatus qni_bitmap_load(const char *path, struct QniBitmap **out);

// Parses plain PBM (`P1`) text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum QniStatus qni_bitmap_parse(const char *text, struct QniBitmap **out);

// Bow tie rasterized on a `size × size` grid; angles in radians.
//
// # Safety
// `out` must be a valid pointer.
enum QniStatus qni_bitmap_bowtie(size_t size,
                                 double rotation,
                                 double half_angle,
                                 double radius,
                                 struct QniBitmap **out);

// Bundled glyph for `letter`, scaled and centred in a `size × size` grid.
//
// # Safety
// `out` must be a valid pointer.
enum QniStatus qni_bitmap_glyph(char letter, size_t size, struct QniBitmap **out);

// # Safety
// `bitmap` must be null or a handle from this library, not yet freed.
void qni_bitmap_free(struct QniBitmap *bitmap);

// Width, height and number of lit pixels.
//
// # Safety
// `bitmap` must be a live handle; output pointers may be null.
enum QniStatus qni_bitmap_info(const struct QniBitmap *bitmap,
                               size_t *width,
                               size_t *height,
                               size_t *lit);

// Fraction of the LO's lit pixels that the mask transmits.
//
// # Safety
// `lo` and `mask` must be live handles and `out` a valid pointer.
enum QniStatus qni_overlap(const struct QniBitmap *lo, const struct QniBitmap *mask, double *out);

// Noise power in shot-noise units for the LO/mask pair on a square
// coherence grid of `cell_size` pixels.
//
// # Safety
// Handles must be live; `params` and `out` must be valid pointers.
enum QniStatus qni_noise(enum QniTechnique technique,
                         const struct QniBitmap *lo,
                         const struct QniBitmap *mask,
                         size_t cell_size,
                         const struct QniParams *params,
                         double *out);

// Squeezing parameter giving `db` of detected squeezing after the given
// transmissions and additive noise.
//
// # Safety
// `out_r` must be a valid pointer.
enum QniStatus qni_solve_squeezing(double db,
                                   double t_probe,
                                   double t_conj,
                                   double extra_noise,
                                   double *out_r);

// Default trace geometry.
struct QniAcquisition qni_acquisition_default(void);

// Simulates one trace of true power `n_true` and reduces it to `N` and `ΔN`.
//
// # Safety
// `acquisition` and `out` must be valid pointers.
enum QniStatus qni_simulate_measurement(double n_true,
                                        const struct QniAcquisition *acquisition,
                                        struct QniMeasurement *out);

// Configuration with every field at its default.
struct QniConfig *qni_config_default(void);

// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum QniStatus qni_config_load(const char *path, struct QniConfig **out);

// # Safety
// `config` must be a live handle.
enum QniStatus qni_config_set_seed(struct QniConfig *config, uint64_t seed);

// # Safety
// `config` must be null or a handle from this library, not yet freed.
void qni_config_free(struct QniConfig *config);

// Runs the bow-tie sweep and writes `sweep.csv`, `fits.json` and
// `summary.json` into `out_dir`. `enhancement` may be null.
//
// # Safety
// `config` must be a live handle and `out_dir` a NUL-terminated string.
enum QniStatus qni_run_sweep(const struct QniConfig *config,
                             const char *out_dir,
                             double *enhancement);

// Runs the alphabet test against a glyph mask and writes `alphabet.csv`
// and `ranking.json`. `best_quantum` may be null.
//
// # Safety
// `config` must be a live handle and `out_dir` a NUL-terminated string.
enum QniStatus qni_run_alphabet(const struct QniConfig *config,
                                char mask_letter,
                                const char *out_dir,
                                char *best_quantum);

// Calibrates the squeezing for `db` of detected squeezing and writes
// `calibrated.toml` and `calibration.json`.
//
// # Safety
// `config` must be a live handle, `out_dir` a NUL-terminated string and
// `out_r` null or valid.
enum QniStatus qni_run_calibrate(const struct QniConfig *config,
                                 double db,
                                 const char *out_dir,
                                 double *out_r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QNI_H */
