#ifndef ORLICZ_LAB_H
#define ORLICZ_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum OlStatus {
  OL_STATUS_OK = 0,
  OL_STATUS_NULL_POINTER = 1,
  OL_STATUS_INVALID_UTF8 = 2,
  OL_STATUS_INVALID_INPUT = 3,
  OL_STATUS_DOMAIN = 4,
  OL_STATUS_PRECONDITION = 5,
  OL_STATUS_DIMENSION_MISMATCH = 6,
  OL_STATUS_PANIC = 7,
} OlStatus;

/**
 * Opaque N-function handle.
 */
typedef struct OlNFunction OlNFunction;

/**
 * Opaque discrete measure space handle.
 */
typedef struct OlSpace OlSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * call into the library on the same thread.
 */
const char *ol_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *ol_version(void);

/**
 * Parses `{"kind": ..., "params": {...}}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum OlStatus ol_nfunction_from_json(const char *json, struct OlNFunction **out);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `m` must come from this library and not be freed twice.
 */
void ol_nfunction_free(struct OlNFunction *m);

/**
 * `M(u)` for `u >= 0`.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum OlStatus ol_nfunction_eval(const struct OlNFunction *m, double u, double *out);

/**
 * `M^{-1}(y)` for `y >= 0`.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum OlStatus ol_nfunction_inverse(const struct OlNFunction *m, double y, double *out);

/**
 * New handle for the complementary N-function.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum OlStatus ol_nfunction_conjugate(const struct OlNFunction *m, struct OlNFunction **out);

/**
 * Space with the given positive cell weights.
 *
 * # Safety
 * `weights` must point to `len` doubles and `out` must be valid.
 */
enum OlStatus ol_space_new(const double *weights, size_t len, struct OlSpace **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void ol_space_free(struct OlSpace *s);

/**
 * Number of cells, 0 for NULL.
 *
 * # Safety
 * `s` must be NULL or a live handle.
 */
size_t ol_space_len(const struct OlSpace *s);

/**
 * Modular `sum M(|x_i|) mu_i`.
 *
 * # Safety
 * Handles must be live, `x` must point to `len` doubles, `out` must be valid.
 */
enum OlStatus ol_modular(const struct OlNFunction *m,
                         const struct OlSpace *s,
                         const double *x,
                         size_t len,
                         double *out);

/**
 * Luxemburg norm.
 *
 * # Safety
 * As for [`ol_modular`].
 */
enum OlStatus ol_luxemburg_norm(const struct OlNFunction *m,
                                const struct OlSpace *s,
                                const double *x,
                                size_t len,
                                double *out);

/**
 * Orlicz norm.
 *
 * # Safety
 * As for [`ol_modular`].
 */
enum OlStatus ol_orlicz_norm(const struct OlNFunction *m,
                             const struct OlSpace *s,
                             const double *x,
                             size_t len,
                             double *out);

/**
 * Solves a Hammerstein problem given as JSON and writes the result JSON to
 * `result_json` (free with [`ol_string_free`]) and the solver exit code
 * (0 solved, 2 certificates failed, 3 not converged) to `exit_code`.
 * `tol <= 0` keeps the default tolerance.
 *
 * # Safety
 * `problem_json` must be NUL-terminated; the out-pointers must be valid.
 */
enum OlStatus ol_solve_json(const char *problem_json,
                            uint64_t seed,
                            double tol,
                            char **result_json,
                            int32_t *exit_code);

/**
 * Frees a string returned by this library; NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void ol_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORLICZ_LAB_H */
