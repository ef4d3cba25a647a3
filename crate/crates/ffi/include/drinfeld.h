#ifndef DRINFELD_H
#define DRINFELD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes shared by all entry points.
enum DrinfeldStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  DRINFELD_STATUS_OK = 0,
  DRINFELD_STATUS_NULL_POINTER = 1,
  DRINFELD_STATUS_INVALID_UTF8 = 2,
  DRINFELD_STATUS_INVALID_PARAMETERS = 3,
  DRINFELD_STATUS_PARSE = 4,
  DRINFELD_STATUS_SINGULAR_MATRIX = 5,
  DRINFELD_STATUS_ARITHMETIC = 6,
  DRINFELD_STATUS_INVARIANT_VIOLATION = 7,
  DRINFELD_STATUS_PANIC = 8,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum DrinfeldStatus DrinfeldStatus;
#else
typedef int32_t DrinfeldStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// A rational function over the completed field.
typedef struct DrinfeldFunction DrinfeldFunction;

// A ball in the Bruhat-Tits tree around the root vertex.
typedef struct DrinfeldTree DrinfeldTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code. Never null; do not free.
// Unknown codes map to `"unknown status"`.
const char *drinfeld_status_message(int32_t status);

// Copy of the last error message on this thread, or null if none.
// Release it with `drinfeld_string_free`.
char *drinfeld_last_error_message(void);

// # Safety
//
// `s` must be null or a pointer returned by this library as an owned
// string that has not been freed yet.
void drinfeld_string_free(char *s);

// Parse a rational function such as `"(z-1)^-2*(z-2)/3"` for the prime `p`.
//
// # Safety
//
// `text` must be a valid nul-terminated string and `out` a valid pointer to
// writable storage for one handle.
DrinfeldStatus drinfeld_function_parse(uint64_t p, const char *text, struct DrinfeldFunction **out);

// # Safety
//
// `f` must be null or a handle from this library that has not been freed.
void drinfeld_function_free(struct DrinfeldFunction *f);

// Render a function; release the string with `drinfeld_string_free`.
//
// # Safety
//
// `f` must be a live function handle and `out` a valid pointer.
DrinfeldStatus drinfeld_function_to_string(const struct DrinfeldFunction *f, char **out);

// Sets `*out` to whether the two handles hold the same function.
//
// # Safety
//
// `f` and `g` must be live function handles and `out` a valid pointer.
DrinfeldStatus drinfeld_function_equal(const struct DrinfeldFunction *f,
                                       const struct DrinfeldFunction *g,
                                       bool *out);

// The `(k+1)`-st derivative of `f`, as a new handle.
//
// # Safety
//
// `f` must be a live function handle and `out` a valid pointer.
DrinfeldStatus drinfeld_function_theta(const struct DrinfeldFunction *f,
                                       uint32_t k,
                                       struct DrinfeldFunction **out);

// Weight-`k` automorphic transform of `f` by the integer matrix `[[a, b], [c, d]]`.
//
// # Safety
//
// `f` must be a live function handle and `out` a valid pointer.
DrinfeldStatus drinfeld_function_act(const struct DrinfeldFunction *f,
                                     int64_t a,
                                     int64_t b,
                                     int64_t c,
                                     int64_t d,
                                     int64_t k,
                                     struct DrinfeldFunction **out);

// Gauss valuation of `f` on the disc `num/den + p^-level O`, in half-units.
//
// # Safety
//
// `f` must be a live function handle and `out_halves` a valid pointer.
DrinfeldStatus drinfeld_function_gauss_valuation(const struct DrinfeldFunction *f,
                                                 int64_t level,
                                                 int64_t offset_num,
                                                 int64_t offset_den,
                                                 int64_t *out_halves);

// Ball of the given radius around the root vertex.
//
// # Safety
//
// `out` must be a valid pointer to writable storage for one handle.
DrinfeldStatus drinfeld_tree_new(uint64_t p, uint32_t radius, struct DrinfeldTree **out);

// # Safety
//
// `t` must be null or a handle from this library that has not been freed.
void drinfeld_tree_free(struct DrinfeldTree *t);

// # Safety
//
// `t` must be a live tree handle and both out-pointers valid.
DrinfeldStatus drinfeld_tree_size(const struct DrinfeldTree *t,
                                  uintptr_t *out_vertices,
                                  uintptr_t *out_edges);

// Computes the residue cochain of `f` in weight `k + 2` on the tree and
// reports whether it vanishes and whether it is harmonic at interior vertices.
//
// # Safety
//
// `f` and `t` must be live handles over the same prime and both out-pointers valid.
DrinfeldStatus drinfeld_residue_check(const struct DrinfeldFunction *f,
                                      uint32_t k,
                                      const struct DrinfeldTree *t,
                                      bool *out_zero,
                                      bool *out_harmonic);

// Degree of the weight-`k` line bundle on a component with `q + 1` marked points.
//
// # Safety
//
// `out` must be a valid pointer.
DrinfeldStatus drinfeld_component_degree(uint64_t q, int64_t k, int64_t *out);

// Dimension of glued sections on the ball of radius `radius`, with the closed-form prediction.
//
// # Safety
//
// Both out-pointers must be valid.
DrinfeldStatus drinfeld_truncated_sections(uint64_t p,
                                           int64_t k,
                                           uint32_t radius,
                                           uintptr_t *out_dim,
                                           uintptr_t *out_expected);

// Runs a command-line invocation (without the program name) and returns the
// JSON report. `*out_pass` receives the report verdict.
//
// # Safety
//
// `argv` must point to `argc` valid nul-terminated strings; `out_json` and
// `out_pass` must be valid pointers. Release the JSON with `drinfeld_string_free`.
DrinfeldStatus drinfeld_run(uintptr_t argc,
                            const char *const *argv,
                            char **out_json,
                            bool *out_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRINFELD_H */
