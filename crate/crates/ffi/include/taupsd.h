#ifndef TAUPSD_H
#define TAUPSD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes of the C API.
 */
typedef enum TaupsdStatus {
  TAUPSD_STATUS_OK = 0,
  TAUPSD_STATUS_NULL_POINTER = 1,
  /**
   * Out-of-domain argument, bad shape or dimension mismatch.
   */
  TAUPSD_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Unknown corpus reference.
   */
  TAUPSD_STATUS_LOOKUP = 3,
  /**
   * Invalid experiment config.
   */
  TAUPSD_STATUS_CONFIG = 4,
  /**
   * A resource guard refused the request.
   */
  TAUPSD_STATUS_RESOURCE = 5,
  /**
   * Numerical failure or a violated hypothesis.
   */
  TAUPSD_STATUS_NUMERICAL = 6,
  TAUPSD_STATUS_IO = 7,
  /**
   * The output buffer is too small; the needed size was written.
   */
  TAUPSD_STATUS_BUFFER_TOO_SMALL = 8,
  TAUPSD_STATUS_PANIC = 9,
} TaupsdStatus;

/**
 * Opaque grid handle.
 */
typedef struct TaupsdGrid TaupsdGrid;

/**
 * Opaque kernel matrix handle.
 */
typedef struct TaupsdKernel TaupsdKernel;

/**
 * Opaque phase-space symbol handle.
 */
typedef struct TaupsdPhaseSymbol TaupsdPhaseSymbol;

/**
 * Opaque experiment report handle.
 */
typedef struct TaupsdReport TaupsdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated library version. The string is static.
 */
const char *taupsd_version(void);

/**
 * Copies the calling thread's last error message into `buf`.
 *
 * `needed` (may be null) receives the size including the NUL. Returns
 * `BufferTooSmall` when `buf` cannot hold it.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes; `needed` null or writable.
 */
enum TaupsdStatus taupsd_last_error_message(char *buf, uintptr_t len, uintptr_t *needed);

/**
 * Creates the grid `x_k = -L + k h` with `N` points per axis in `dim` dimensions.
 *
 * # Safety
 * `out` must be writable.
 */
enum TaupsdStatus taupsd_grid_new(uintptr_t dim,
                                  uintptr_t points,
                                  double half_width,
                                  struct TaupsdGrid **out);

/**
 * Number of grid points, `N^dim`.
 *
 * # Safety
 * `grid` must be a live handle; `out` writable.
 */
enum TaupsdStatus taupsd_grid_len(const struct TaupsdGrid *grid, uintptr_t *out);

/**
 * # Safety
 * `grid` must be null or a handle from [`taupsd_grid_new`], freed once.
 */
void taupsd_grid_free(struct TaupsdGrid *grid);

/**
 * Samples the corpus entry `reference` (e.g. `"gauss(sigma=1)"`) on the
 * phase grid over `grid`.
 *
 * # Safety
 * `reference` must be a NUL-terminated string, `grid` a live handle, `out` writable.
 */
enum TaupsdStatus taupsd_phase_symbol_from_corpus(const char *reference,
                                                  const struct TaupsdGrid *grid,
                                                  struct TaupsdPhaseSymbol **out);

/**
 * Builds a phase symbol from samples `re[k] + i im[k]`, `k = ix * len + jp`
 * with `len = N^dim`; `im` may be null for a real symbol.
 *
 * # Safety
 * `re` (and `im` unless null) must hold `count` doubles.
 */
enum TaupsdStatus taupsd_phase_symbol_from_values(const struct TaupsdGrid *grid,
                                                  const double *re,
                                                  const double *im,
                                                  uintptr_t count,
                                                  struct TaupsdPhaseSymbol **out);

/**
 * # Safety
 * `symbol` must be null or a live handle, freed once.
 */
void taupsd_phase_symbol_free(struct TaupsdPhaseSymbol *symbol);

/**
 * Quantizes `symbol` at the `dim x dim` matrix `tau` (row-major).
 *
 * # Safety
 * `tau` must hold `dim * dim` doubles; `symbol` live; `out` writable.
 */
enum TaupsdStatus taupsd_quantize(const struct TaupsdPhaseSymbol *symbol,
                                  const double *tau,
                                  uintptr_t dim,
                                  struct TaupsdKernel **out);

/**
 * Quantizes `symbol` at the scalar `tau * identity`.
 *
 * # Safety
 * `symbol` live; `out` writable.
 */
enum TaupsdStatus taupsd_quantize_scalar(const struct TaupsdPhaseSymbol *symbol,
                                         double tau,
                                         struct TaupsdKernel **out);

/**
 * # Safety
 * `kernel` must be null or a live handle, freed once.
 */
void taupsd_kernel_free(struct TaupsdKernel *kernel);

/**
 * Side length of the square kernel matrix.
 *
 * # Safety
 * `kernel` live; `out` writable.
 */
enum TaupsdStatus taupsd_kernel_size(const struct TaupsdKernel *kernel, uintptr_t *out);

/**
 * Copies the kernel values row-major (`x` rows, `y` columns) into `re`/`im`,
 * each of `count = size * size` doubles.
 *
 * # Safety
 * `re` and `im` must be valid for `count` doubles.
 */
enum TaupsdStatus taupsd_kernel_values(const struct TaupsdKernel *kernel,
                                       double *re,
                                       double *im,
                                       uintptr_t count);

/**
 * Hilbert-Schmidt norm of the operator the kernel defines.
 *
 * # Safety
 * `kernel` live; `out` writable.
 */
enum TaupsdStatus taupsd_kernel_hs_norm(const struct TaupsdKernel *kernel, double *out);

/**
 * Schatten norms for the `count` orders in `p` (use `INFINITY` for the
 * operator norm), written to `out`.
 *
 * # Safety
 * `p` and `out` must be valid for `count` doubles.
 */
enum TaupsdStatus taupsd_kernel_schatten(const struct TaupsdKernel *kernel,
                                         const double *p,
                                         uintptr_t count,
                                         double *out);

/**
 * Runs the experiment described by the JSON config `json`.
 *
 * The report is returned even when checks fail; see
 * [`taupsd_report_exit_code`]. Config and resource problems return their
 * status and no report.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable.
 */
enum TaupsdStatus taupsd_run_config_json(const char *json, struct TaupsdReport **out);

/**
 * 0 when no asserted check failed, 1 otherwise.
 *
 * # Safety
 * `report` live; `out` writable.
 */
enum TaupsdStatus taupsd_report_exit_code(const struct TaupsdReport *report, int32_t *out);

/**
 * Number of check rows.
 *
 * # Safety
 * `report` live; `out` writable.
 */
enum TaupsdStatus taupsd_report_row_count(const struct TaupsdReport *report, uintptr_t *out);

/**
 * Writes the report as JSON into `buf`; `needed` (may be null) receives the
 * size including the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
enum TaupsdStatus taupsd_report_json(const struct TaupsdReport *report,
                                     char *buf,
                                     uintptr_t len,
                                     uintptr_t *needed);

/**
 * Writes `rows.csv` contents into `buf`, as [`taupsd_report_json`] does.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
enum TaupsdStatus taupsd_report_csv(const struct TaupsdReport *report,
                                    char *buf,
                                    uintptr_t len,
                                    uintptr_t *needed);

/**
 * # Safety
 * `report` must be null or a live handle, freed once.
 */
void taupsd_report_free(struct TaupsdReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAUPSD_H */
