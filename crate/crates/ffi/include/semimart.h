#ifndef SEMIMART_H
#define SEMIMART_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SemimartStatus {
  SEMIMART_STATUS_OK = 0,
  SEMIMART_STATUS_NULL_POINTER = 1,
  SEMIMART_STATUS_INVALID_UTF8 = 2,
  SEMIMART_STATUS_CONFIG = 3,
  SEMIMART_STATUS_INVALID_ARGUMENT = 4,
  SEMIMART_STATUS_INAPPLICABLE = 5,
  SEMIMART_STATUS_NUMERICAL = 6,
  SEMIMART_STATUS_IO = 7,
  SEMIMART_STATUS_BUFFER_TOO_SMALL = 8,
  SEMIMART_STATUS_PANIC = 9,
} SemimartStatus;

// Which series [`semimart_functional_terminal`] evaluates.
typedef enum SemimartSeries {
  SEMIMART_SERIES_VN = 0,
  SEMIMART_SERIES_V_PRIME = 1,
  SEMIMART_SERIES_D_JUMP = 2,
  SEMIMART_SERIES_D_ITO = 3,
  SEMIMART_SERIES_RHO_INTEGRAL = 4,
} SemimartSeries;

// A validated experiment file.
typedef struct SemimartConfig SemimartConfig;

// A test function from the catalog.
typedef struct SemimartFunction SemimartFunction;

// A simulated path.
typedef struct SemimartPath SemimartPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library from the same thread.
const char *semimart_last_error(void);

// Library version as a static NUL-terminated string.
const char *semimart_version(void);

// Parses an experiment document (TOML text).
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum SemimartStatus semimart_config_parse(const char *text, struct SemimartConfig **out);

// # Safety
// `config` must come from [`semimart_config_parse`] or be null.
void semimart_config_free(struct SemimartConfig *config);

// Replaces the master seed.
//
// # Safety
// `config` must be a live handle.
enum SemimartStatus semimart_config_set_seed(struct SemimartConfig *config, uint64_t seed);

// Bounds the worker threads used by [`semimart_run`]; 0 lets the library
// choose.
//
// # Safety
// `config` must be a live handle.
enum SemimartStatus semimart_config_set_workers(struct SemimartConfig *config, size_t workers);

// Runs the experiment, writing CSVs and `summary.txt` into `out_dir`.
// `failures`, when not null, receives the number of violated `[assert]`
// thresholds.
//
// # Safety
// `config` must be a live handle, `out_dir` a NUL-terminated string and
// `failures` null or valid.
enum SemimartStatus semimart_run(const struct SemimartConfig *config,
                                 const char *out_dir,
                                 size_t *failures);

// Simulates one path of the config's model on its grid.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum SemimartStatus semimart_path_simulate(const struct SemimartConfig *config,
                                           uint64_t seed,
                                           struct SemimartPath **out);

// # Safety
// `path` must come from [`semimart_path_simulate`] or be null.
void semimart_path_free(struct SemimartPath *path);

// Number of grid steps `n`; 0 for a null handle.
//
// # Safety
// `path` must be a live handle or null.
size_t semimart_path_steps(const struct SemimartPath *path);

// Dimension `d` of `X`; 0 for a null handle.
//
// # Safety
// `path` must be a live handle or null.
size_t semimart_path_dim(const struct SemimartPath *path);

// Number of recorded jumps of `X`; 0 for a null handle.
//
// # Safety
// `path` must be a live handle or null.
size_t semimart_path_jumps(const struct SemimartPath *path);

// Copies the node values `x[0..=n]` (`(n+1)·d` values, row-major) into
// `out`.
//
// # Safety
// `path` must be a live handle and `out` must have room for `len` values.
enum SemimartStatus semimart_path_x(const struct SemimartPath *path, double *out, size_t len);

// Builds a parameterless catalog function, or one whose only parameter is
// given in `param` (`r` for power functions, `k` for power_signed, `value`
// for constant); pass NaN when unused.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum SemimartStatus semimart_function_new(const char *name,
                                          size_t d,
                                          double param,
                                          struct SemimartFunction **out);

// The config's `[function]`, if it has one.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum SemimartStatus semimart_function_from_config(const struct SemimartConfig *config,
                                                  struct SemimartFunction **out);

// Output dimension `q`; 0 for a null handle.
//
// # Safety
// `f` must be a live handle or null.
size_t semimart_function_dim(const struct SemimartFunction *f);

// # Safety
// `f` must come from a `semimart_function_*` constructor or be null.
void semimart_function_free(struct SemimartFunction *f);

// Terminal value of a functional or limit series (`q` values) of `f` on
// `path`. [`SemimartSeries::RhoIntegral`] uses the default quadrature.
//
// # Safety
// Handles must be live and `out` must have room for `len` values.
enum SemimartStatus semimart_functional_terminal(const struct SemimartFunction *f,
                                                 const struct SemimartPath *path,
                                                 enum SemimartSeries series,
                                                 double *out,
                                                 size_t len);

// One-sample Kolmogorov–Smirnov test against N(0, 1).
//
// # Safety
// `samples` must point to `len` values; `statistic` and `p_value` must be
// valid pointers.
enum SemimartStatus semimart_ks_test(const double *samples,
                                     size_t len,
                                     double *statistic,
                                     double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMIMART_H */
