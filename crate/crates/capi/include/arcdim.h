#ifndef ARCDIM_H
#define ARCDIM_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
typedef enum ArcdimStatus {
  ARCDIM_STATUS_OK = 0,
  ARCDIM_STATUS_INTERNAL = 1,
  ARCDIM_STATUS_INVALID_ARGUMENT = 2,
  ARCDIM_STATUS_TRUNCATED = 3,
  ARCDIM_STATUS_SOLVER_FAILURE = 4,
} ArcdimStatus;

/**
 * Opaque family handle.
 */
typedef struct ArcdimFamily ArcdimFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Most recent error message on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *arcdim_last_error(void);

/**
 * Library version as a static string.
 */
const char *arcdim_version(void);

/**
 * Build a family window. On success writes a heap handle to `out`; free it
 * with `arcdim_family_free`.
 *
 * # Safety
 * `family` and (optionally) `f_spec` must be valid NUL-terminated strings;
 * `out` must be a valid pointer.
 */
enum ArcdimStatus arcdim_family_build(const char *family,
                                      const char *f_spec,
                                      uint32_t depth,
                                      struct ArcdimFamily **out);

/**
 * # Safety
 * `h` must be a handle returned by `arcdim_family_build`, not yet freed.
 */
void arcdim_family_free(struct ArcdimFamily *h);

/**
 * # Safety
 * `h` must be a live handle; `out` must be valid.
 */
enum ArcdimStatus arcdim_family_vertex_count(const struct ArcdimFamily *h, unsigned long long *out);

/**
 * # Safety
 * `h` must be a live handle; `out` must be valid.
 */
enum ArcdimStatus arcdim_family_edge_count(const struct ArcdimFamily *h, unsigned long long *out);

/**
 * Graph JSON export; free the string with `arcdim_string_free`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be valid.
 */
enum ArcdimStatus arcdim_family_export_json(const struct ArcdimFamily *h, char **out);

/**
 * # Safety
 * `s` must be a string returned by this library, not yet freed.
 */
void arcdim_string_free(char *s);

/**
 * Two-terminal effective resistance between vertex ids, window closed.
 *
 * # Safety
 * `h` must be a live handle; `out` must be valid.
 */
enum ArcdimStatus arcdim_resistance(const struct ArcdimFamily *h,
                                    unsigned long long a,
                                    unsigned long long b,
                                    double *out);

/**
 * Fitted slope of -log p_{2n}(x,x) against log n from the deep interior
 * vertex; `d_s_out` receives twice the slope.
 *
 * # Safety
 * `h` must be a live handle; output pointers must be valid.
 */
enum ArcdimStatus arcdim_heat_slope(const struct ArcdimFamily *h,
                                    unsigned long long horizon,
                                    double *slope_out,
                                    double *d_s_out);

/**
 * E_{p,k,w}(N1, N2, N) at the deepest certified interior edge cell.
 *
 * # Safety
 * `h` must be a live handle; output pointers must be valid.
 */
enum ArcdimStatus arcdim_energy(const struct ArcdimFamily *h,
                                double p,
                                uint32_t k,
                                uint32_t n1,
                                uint32_t n2,
                                uint32_t n_fat,
                                double *value_out,
                                int *certified_out);

/**
 * Composed spectral dimensions for gasket patterns: the walk dimension from
 * tilted rates and the p = 2 spectral dimension.
 *
 * # Safety
 * `h` must be a live handle; output pointers must be valid.
 */
enum ArcdimStatus arcdim_gasket_dims(const struct ArcdimFamily *h,
                                     double *d_s_walk_out,
                                     double *d_s2_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARCDIM_H */
