#ifndef QMEASURE_H
#define QMEASURE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Basis for [`qm_measure`].
 */
typedef enum QmBasis {
  QM_BASIS_COMPUTATIONAL = 0,
  QM_BASIS_Z = 1,
  QM_BASIS_X = 2,
  QM_BASIS_Y = 3,
} QmBasis;

/**
 * Status codes. `QM_STATUS_OK` is zero.
 */
typedef enum QmStatus {
  QM_STATUS_OK = 0,
  QM_STATUS_NULL_POINTER = 1,
  QM_STATUS_INVALID_ARGUMENT = 2,
  QM_STATUS_INVALID_UTF8 = 3,
  QM_STATUS_LAYOUT = 4,
  QM_STATUS_SHAPE = 5,
  QM_STATUS_NOT_NORMALIZED = 6,
  QM_STATUS_INVALID_OPERATOR = 7,
  QM_STATUS_OUT_OF_RANGE = 8,
  QM_STATUS_BUFFER_TOO_SMALL = 9,
  QM_STATUS_NUMERICAL = 10,
  QM_STATUS_PANIC = 11,
} QmStatus;

typedef struct QmDensity QmDensity;

typedef struct QmRng QmRng;

typedef struct QmState QmState;

/**
 * Result of one [`qm_measure`] call.
 */
typedef struct QmMeasurement {
  size_t outcome_index;
  double probability;
  double fidelity;
  uint64_t seed_used;
} QmMeasurement;

/**
 * Two-slit geometry in metres. `qm_slit_geometry_default` fills the
 * library defaults.
 */
typedef struct QmSlitGeometry {
  double slit_separation;
  double slit_width;
  double wavelength;
  double screen_distance;
  double x_min;
  double x_max;
  size_t n_points;
  double weight_first;
  double weight_second;
} QmSlitGeometry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or NULL when the last call succeeded.
 * The caller owns the returned string.
 */
char *qm_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void qm_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qm_version(void);

/**
 * Builds a normalized pure state over factors `labels[i]` of dimension
 * `dims[i]`. Amplitudes are given as `re`/`im` arrays of length
 * `n_amps` (the product of the dimensions); `im` may be NULL.
 *
 * # Safety
 * Array pointers must be valid for their stated lengths; `out` must be
 * writable.
 */
enum QmStatus qm_state_new(const char *const *labels,
                           const size_t *dims,
                           size_t n_factors,
                           const double *re,
                           const double *im,
                           size_t n_amps,
                           struct QmState **out);

/**
 * The Bell pair `(|00⟩ + |11⟩)/√2` on factors `first`, `second`.
 *
 * # Safety
 * Label pointers must be NUL-terminated strings; `out` must be writable.
 */
enum QmStatus qm_state_bell_phi(const char *first, const char *second, struct QmState **out);

/**
 * # Safety
 * `s` must come from this library and not have been freed; NULL is ignored.
 */
void qm_state_free(struct QmState *s);

/**
 * # Safety
 * `s` must be a live handle; `out` writable.
 */
enum QmStatus qm_state_dim(const struct QmState *s, size_t *out);

/**
 * Copies amplitude `i` into `re`, `im`.
 *
 * # Safety
 * `s` must be a live handle; `re` and `im` writable.
 */
enum QmStatus qm_state_amplitude(const struct QmState *s, size_t i, double *re, double *im);

/**
 * `a ⊗ b`; factor labels must be distinct.
 *
 * # Safety
 * `a`, `b` must be live handles; `out` writable.
 */
enum QmStatus qm_state_tensor(const struct QmState *a,
                              const struct QmState *b,
                              struct QmState **out);

/**
 * # Safety
 * `s` must be a live handle; `out` writable.
 */
enum QmStatus qm_state_to_density(const struct QmState *s, struct QmDensity **out);

/**
 * # Safety
 * `d` must come from this library and not have been freed; NULL is ignored.
 */
void qm_density_free(struct QmDensity *d);

/**
 * # Safety
 * `d` must be a live handle; `out` writable.
 */
enum QmStatus qm_density_dim(const struct QmDensity *d, size_t *out);

/**
 * Entry `(row, col)`.
 *
 * # Safety
 * `d` must be a live handle; `re`, `im` writable.
 */
enum QmStatus qm_density_entry(const struct QmDensity *d,
                               size_t row,
                               size_t col,
                               double *re,
                               double *im);

/**
 * Keeps the factors named in `keep` (in their original order) and traces
 * out the rest.
 *
 * # Safety
 * `d` must be a live handle; `keep` valid for `n_keep` strings; `out`
 * writable.
 */
enum QmStatus qm_density_partial_trace(const struct QmDensity *d,
                                       const char *const *keep,
                                       size_t n_keep,
                                       struct QmDensity **out);

/**
 * # Safety
 * `a`, `b` must be live handles; `out` writable.
 */
enum QmStatus qm_trace_distance(const struct QmDensity *a, const struct QmDensity *b, double *out);

struct QmRng *qm_rng_new(uint64_t seed);

/**
 * # Safety
 * `r` must come from [`qm_rng_new`] and not have been freed; NULL is ignored.
 */
void qm_rng_free(struct QmRng *r);

/**
 * Marks a single-factor state in `basis` and detects one outcome.
 *
 * # Safety
 * `s`, `rng` must be live handles; `out` writable.
 */
enum QmStatus qm_measure(const struct QmState *s,
                         enum QmBasis basis,
                         struct QmRng *rng,
                         struct QmMeasurement *out);

/**
 * Exact (upper, lower) path probabilities; `z_plus` selects a `z₊` input
 * instead of `y₊`.
 *
 * # Safety
 * `out` must be writable for two doubles.
 */
enum QmStatus qm_stern_gerlach(bool z_plus, double *out);

/**
 * Exact receiver probabilities.
 *
 * # Safety
 * `out` must be writable for two doubles.
 */
enum QmStatus qm_mach_zehnder(bool second_mirror, double phase, double *out);

/**
 * Exact CHSH value on the Bell pair.
 *
 * # Safety
 * `out` must be writable.
 */
enum QmStatus qm_chsh(double a, double a_prime, double b, double b_prime, double *out);

struct QmSlitGeometry qm_slit_geometry_default(void);

/**
 * Screen density on the geometry's grid. `x` and `density` must hold
 * `geometry.n_points` doubles each; `capacity` is their length.
 *
 * # Safety
 * `geometry` readable; `x` and `density` writable for `capacity` doubles.
 */
enum QmStatus qm_double_slit(const struct QmSlitGeometry *geometry,
                             bool open_first,
                             bool open_second,
                             double *x,
                             double *density,
                             size_t capacity);

/**
 * Runs a CLI command (`argv[0]` is the program name) and returns its JSON
 * report in `json_out` (caller frees with [`qm_string_free`]) and its exit
 * code in `exit_code`.
 *
 * # Safety
 * `argv` valid for `argc` strings; outputs writable.
 */
enum QmStatus qm_run_command(const char *const *argv,
                             size_t argc,
                             char **json_out,
                             int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMEASURE_H */
