#ifndef CASIMIR_H
#define CASIMIR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CasimirPfaOrder {
  CASIMIR_PFA_ORDER_LEADING = 0,
  CASIMIR_PFA_ORDER_NEXT_TO_LEADING = 1,
  CASIMIR_PFA_ORDER_NEXT_TO_NEXT_TO_LEADING = 2,
} CasimirPfaOrder;

typedef enum CasimirStatus {
  CASIMIR_STATUS_OK = 0,
  CASIMIR_STATUS_INVALID_ARGUMENT = 1,
  CASIMIR_STATUS_GEOMETRY = 2,
  CASIMIR_STATUS_NO_CONVERGENCE = 3,
  CASIMIR_STATUS_NON_CONTRACTIVE = 4,
  CASIMIR_STATUS_NULL_POINTER = 5,
  CASIMIR_STATUS_PANIC = 6,
} CasimirStatus;

// Opaque geometry handle.
typedef struct CasimirGeometry CasimirGeometry;

// Opaque truncation and quadrature settings.
typedef struct CasimirParams CasimirParams;

// Energy in units of `ħcL/(4πa²)` with its diagnostics.
typedef struct CasimirEnergy {
  double e_hat;
  double e_tm;
  double e_te;
  double est_rel_error;
  uint32_t n_max_final;
  uint32_t m_max_final;
  uint32_t node_count_final;
  // 1 when `est_rel_error <= rel_tol`.
  int32_t converged;
} CasimirEnergy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Coaxial cylinders with radius ratio `alpha = b/a`.
//
// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_geometry_concentric(double alpha, struct CasimirGeometry **out);

// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_geometry_eccentric(double alpha,
                                              double delta,
                                              struct CasimirGeometry **out);

// Cylinder whose axis lies `h_over_a` radii from a plane.
//
// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_geometry_cylinder_plane(double h_over_a, struct CasimirGeometry **out);

// # Safety
// `g` must be null or a handle from this library not yet freed.
void casimir_geometry_free(struct CasimirGeometry *g);

// Smallest surface separation in units of `a`.
//
// # Safety
// `g` must be a live handle; `out` valid for writes.
enum CasimirStatus casimir_geometry_min_gap(const struct CasimirGeometry *g, double *out);

// Default settings: adaptive truncation from `n_max = 16`, `rel_tol = 1e-4`,
// 128 transformed-Gauss nodes.
struct CasimirParams *casimir_params_new(void);

// # Safety
// `p` must be null or a handle from [`casimir_params_new`] not yet freed.
void casimir_params_free(struct CasimirParams *p);

// # Safety
// `p` must be a live params handle.
enum CasimirStatus casimir_params_set_rel_tol(struct CasimirParams *p, double rel_tol);

// Starting angular truncation (exact truncation when adaptivity is off).
//
// # Safety
// `p` must be a live params handle.
enum CasimirStatus casimir_params_set_n_max(struct CasimirParams *p, uint32_t n_max);

// # Safety
// `p` must be a live params handle.
enum CasimirStatus casimir_params_set_nodes(struct CasimirParams *p, uint32_t nodes);

// Nonzero enables refinement of truncation and node count.
//
// # Safety
// `p` must be a live params handle.
enum CasimirStatus casimir_params_set_adapt(struct CasimirParams *p, int32_t adapt);

// Exact energy of any geometry. On `NO_CONVERGENCE` the partially
// converged estimate is still written to `out` when one exists.
//
// # Safety
// Handles must be live; `out` valid for writes.
enum CasimirStatus casimir_energy_exact(const struct CasimirGeometry *g,
                                        const struct CasimirParams *p,
                                        struct CasimirEnergy *out);

// Subtraction-accelerated energy; concentric geometries only.
//
// # Safety
// Handles must be live; `out` valid for writes.
enum CasimirStatus casimir_energy_accelerated(const struct CasimirGeometry *g,
                                              const struct CasimirParams *p,
                                              struct CasimirEnergy *out);

// Proximity-force energy of coaxial cylinders at the given order
// (a `CasimirPfaOrder` value).
//
// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_pfa_concentric(double alpha, uint32_t order, double *out);

// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_large_alpha_asymptote(double alpha, double *out);

// Closed-form subtracted energy used by the accelerated evaluator.
//
// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_tilde_energy(double alpha, double *out);

// Joules from a dimensionless energy, inner radius `a` and length `l` in
// meters.
//
// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_to_physical(double e_hat, double a, double l, double *out);

// `I_n(x)`.
//
// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_bessel_i(int32_t n, double x, double *out);

// `K_n(x)`.
//
// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_bessel_k(int32_t n, double x, double *out);

// Cylindrical to plane rack-and-pinion force ratio with a constant
// profile, for gap `d` and pinion radius `a`.
//
// # Safety
// `out` must be valid for writes.
enum CasimirStatus casimir_force_ratio(double d, double a, double *out);

// Message for the last failed call on this thread; empty after a
// successful call. Valid until the next call into this library from the
// same thread.
const char *casimir_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *casimir_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASIMIR_H */
