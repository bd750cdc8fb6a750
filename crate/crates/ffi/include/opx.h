#ifndef OPX_H
#define OPX_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum OpxStatus {
  OPX_STATUS_OK = 0,
  OPX_STATUS_NULL_POINTER = 1,
  OPX_STATUS_INVALID_STRING = 2,
  OPX_STATUS_UNKNOWN_FIELD = 3,
  OPX_STATUS_VALIDATION = 4,
  OPX_STATUS_DOMAIN = 5,
  OPX_STATUS_BRANCH = 6,
  OPX_STATUS_NO_CONVERGENCE = 7,
  OPX_STATUS_RESOLUTION = 8,
  OPX_STATUS_CONDITION = 9,
  OPX_STATUS_IO = 10,
  OPX_STATUS_PANIC = 11,
} OpxStatus;

// Equilibrium measure of a catalogue field.
typedef struct OpxEquilibrium OpxEquilibrium;

// Phase function on [-1, 1] for the stationary-phase integrals.
typedef struct OpxPhase OpxPhase;

// Three-term recurrence coefficients for e^{-N V}.
typedef struct OpxRecurrence OpxRecurrence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread ("" after a success).
// Valid until the next opx call on the same thread.
const char *opx_last_error(void);

// Library version, static string.
const char *opx_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from an opx function that documents ownership transfer, or be NULL.
void opx_string_free(char *s);

// Solves for the equilibrium measure of `field_id` (e.g. "gue", "c2lip(0,1)").
// `quad_order` 0 selects the default.
//
// # Safety
// `field_id` must be a NUL-terminated string, `out_handle` a valid pointer.
enum OpxStatus opx_equilibrium_solve(const char *field_id,
                                     double c,
                                     uintptr_t quad_order,
                                     struct OpxEquilibrium **out_handle);

// # Safety
// `h` must come from [`opx_equilibrium_solve`] and not be used afterwards.
void opx_equilibrium_free(struct OpxEquilibrium *h);

// Support endpoints and the Lagrange constant.
//
// # Safety
// Valid handle and output pointers.
enum OpxStatus opx_equilibrium_constants(const struct OpxEquilibrium *h,
                                         double *alpha,
                                         double *beta,
                                         double *ell);

// Density ψ(x), x in [alpha, beta].
//
// # Safety
// Valid handle and output pointer.
enum OpxStatus opx_equilibrium_psi(const struct OpxEquilibrium *h, double x, double *value);

// θ(x) = 2π∫ₓ^β ψ, x in [alpha, beta].
//
// # Safety
// Valid handle and output pointer.
enum OpxStatus opx_equilibrium_theta(const struct OpxEquilibrium *h, double x, double *value);

// Effective potential φ(x), x outside (alpha, beta).
//
// # Safety
// Valid handle and output pointer.
enum OpxStatus opx_equilibrium_phi(const struct OpxEquilibrium *h, double x, double *value);

// JSON summary (endpoints, ℓ, condition report). Free the string with [`opx_string_free`].
//
// # Safety
// Valid handle and output pointer.
enum OpxStatus opx_equilibrium_summary_json(const struct OpxEquilibrium *h, char **json);

// Recurrence coefficients a_0..a_{n_max-1}, b_1..b_{n_max} for e^{-N V}.
//
// # Safety
// `field_id` NUL-terminated, `out_handle` valid.
enum OpxStatus opx_recurrence_build(const char *field_id,
                                    uintptr_t big_n,
                                    uintptr_t n_max,
                                    struct OpxRecurrence **out_handle);

// # Safety
// `h` must come from [`opx_recurrence_build`] and not be used afterwards.
void opx_recurrence_free(struct OpxRecurrence *h);

// Number of coefficient pairs held.
//
// # Safety
// Valid handle.
uintptr_t opx_recurrence_len(const struct OpxRecurrence *h);

// a_k and b_{k+1} for k < n_max.
//
// # Safety
// Valid handle and output pointers.
enum OpxStatus opx_recurrence_coefficients(const struct OpxRecurrence *h,
                                           uintptr_t k,
                                           double *a_k,
                                           double *b_k1);

// log κ_n² of the orthonormal polynomial p_n, n <= n_max.
//
// # Safety
// Valid handle and output pointer.
enum OpxStatus opx_recurrence_log_kappa_sq(const struct OpxRecurrence *h,
                                           uintptr_t n,
                                           double *value);

// p_n(z) = (re + i im)·e^{log_scale}.
//
// # Safety
// Valid handle and output pointers.
enum OpxStatus opx_recurrence_eval(const struct OpxRecurrence *h,
                                   uintptr_t n,
                                   double z_re,
                                   double z_im,
                                   double *re,
                                   double *im,
                                   double *log_scale);

// Built-in phase: "quad" or "cubic".
//
// # Safety
// `name` NUL-terminated, `out_handle` valid.
enum OpxStatus opx_phase_new(const char *name, struct OpxPhase **out_handle);

// # Safety
// `h` must come from [`opx_phase_new`] and not be used afterwards.
void opx_phase_free(struct OpxPhase *h);

// ∫₋₁¹ e^{inθ(x)} dx.
//
// # Safety
// Valid handle and output pointers.
enum OpxStatus opx_phase_integral(const struct OpxPhase *h, double n, double *re, double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPX_H */
