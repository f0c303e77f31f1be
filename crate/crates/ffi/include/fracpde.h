#ifndef FRACPDE_H
#define FRACPDE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FracpdeStatus {
  FRACPDE_STATUS_OK = 0,
  /**
   * Null pointer or length mismatch at the boundary.
   */
  FRACPDE_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Rejected parameters or input data.
   */
  FRACPDE_STATUS_INPUT_ERROR = 2,
  /**
   * Solver failure: blow-up, loss of contraction, factorisation failure.
   */
  FRACPDE_STATUS_NUMERICAL_ERROR = 3,
  FRACPDE_STATUS_PANIC = 4,
} FracpdeStatus;

typedef enum FracpdeNonlinearity {
  FRACPDE_NONLINEARITY_ZERO = 0,
  /**
   * `u - u^3`
   */
  FRACPDE_NONLINEARITY_CUBIC = 1,
  /**
   * `u + u^2 - u^3`
   */
  FRACPDE_NONLINEARITY_CUBIC_QUADRATIC = 2,
} FracpdeNonlinearity;

/**
 * Discrete operator on `n` interior nodes of (0,1).
 */
typedef struct FracpdeOperator FracpdeOperator;

/**
 * Eigendecomposition of `-A`.
 */
typedef struct FracpdeSpectrum FracpdeSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next fracpde call on the same thread.
 */
const char *fracpde_last_error(void);

/**
 * Normalisation constant of the fractional Laplacian; NaN outside (0, 2).
 */
double fracpde_fractional_constant(double alpha);

/**
 * # Safety
 * `out_op` must be a valid pointer to writable storage.
 */
enum FracpdeStatus fracpde_operator_new(double alpha, uintptr_t n, struct FracpdeOperator **out_op);

/**
 * # Safety
 * `op` must come from [`fracpde_operator_new`] and not be freed twice.
 */
void fracpde_operator_free(struct FracpdeOperator *op);

/**
 * Number of grid nodes, or 0 for a null handle.
 *
 * # Safety
 * `op` must be null or a live handle.
 */
uintptr_t fracpde_operator_size(const struct FracpdeOperator *op);

/**
 * `out = A u`.
 *
 * # Safety
 * `u` and `out_values` must hold `len` doubles.
 */
enum FracpdeStatus fracpde_operator_apply(const struct FracpdeOperator *op,
                                          const double *u,
                                          uintptr_t len,
                                          double *out_values);

/**
 * Nonlocal Dirichlet form `-<A u, u>` through the two-point gradient.
 *
 * # Safety
 * `u` must hold `len` doubles; `out_value` must be writable.
 */
enum FracpdeStatus fracpde_operator_dirichlet_form(const struct FracpdeOperator *op,
                                                   const double *u,
                                                   uintptr_t len,
                                                   double *out_value);

/**
 * # Safety
 * `op` must be a live handle and `out_spectrum` writable.
 */
enum FracpdeStatus fracpde_spectrum_new(const struct FracpdeOperator *op,
                                        struct FracpdeSpectrum **out_spectrum);

/**
 * # Safety
 * `s` must come from [`fracpde_spectrum_new`] and not be freed twice.
 */
void fracpde_spectrum_free(struct FracpdeSpectrum *s);

/**
 * Ascending eigenvalues of `-A`.
 *
 * # Safety
 * `out_values` must hold `len` doubles.
 */
enum FracpdeStatus fracpde_spectrum_eigenvalues(const struct FracpdeSpectrum *s,
                                                double *out_values,
                                                uintptr_t len);

/**
 * `out = exp(t A) u`.
 *
 * # Safety
 * `u` and `out_values` must hold `len` doubles.
 */
enum FracpdeStatus fracpde_spectrum_heat_apply(const struct FracpdeSpectrum *s,
                                               double t,
                                               const double *u,
                                               uintptr_t len,
                                               double *out_values);

/**
 * Ginzburg-Landau run `u_t = A u + F(u)` to `t_final`. Writes the final
 * field and its squared L2 norm.
 *
 * # Safety
 * `u0` and `out_final` must hold `len` doubles; `out_l2_sq` must be writable.
 */
enum FracpdeStatus fracpde_gl_run(const struct FracpdeSpectrum *s,
                                  enum FracpdeNonlinearity nonlinearity,
                                  const double *u0,
                                  uintptr_t len,
                                  double t_final,
                                  double dt,
                                  double *out_final,
                                  double *out_l2_sq);

/**
 * Uniform Gronwall check of sampled `y, g, h` on the time grid `t` with
 * window `r`. Writes the bound and whether every window satisfied it.
 *
 * # Safety
 * `t`, `y`, `g`, `h` must hold `len` doubles; outputs must be writable.
 */
enum FracpdeStatus fracpde_uniform_gronwall(const double *t,
                                            const double *y,
                                            const double *g,
                                            const double *h,
                                            uintptr_t len,
                                            double r,
                                            double *out_bound,
                                            bool *out_pass);

/**
 * Survival fraction at `t_final` of alpha-stable paths killed on leaving
 * (0,1), with drift `drift_amplitude * sin(2 pi x)` and initial positions
 * drawn from the nodal density `u0`.
 *
 * # Safety
 * `u0` must hold `len` doubles; `out_survival` must be writable.
 */
enum FracpdeStatus fracpde_mc_survival(double alpha,
                                       double drift_amplitude,
                                       const double *u0,
                                       uintptr_t len,
                                       uintptr_t n_paths,
                                       double dt,
                                       double t_final,
                                       uint64_t seed,
                                       double *out_survival);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACPDE_H */
