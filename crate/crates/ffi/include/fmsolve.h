#ifndef FMSOLVE_H
#define FMSOLVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FmsMethod {
  FMS_METHOD_EULER = 0,
  FMS_METHOD_MIDPOINT = 1,
  FMS_METHOD_RK4 = 2,
  FMS_METHOD_DOPRI5 = 3,
} FmsMethod;

typedef enum FmsStatus {
  FMS_STATUS_OK = 0,
  FMS_STATUS_NULL_POINTER = 1,
  FMS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The integration or the network produced non-finite values, or hit the step limit.
   */
  FMS_STATUS_NUMERIC = 3,
  FMS_STATUS_IO = 4,
  FMS_STATUS_PARSE = 5,
  /**
   * The user callback returned nonzero.
   */
  FMS_STATUS_CALLBACK = 6,
  FMS_STATUS_PANIC = 7,
} FmsStatus;

/**
 * A trained flow model.
 */
typedef struct FmsModel FmsModel;

/**
 * Solver choice. `steps` is used by the fixed-step methods; `atol` and `rtol`
 * by DOPRI5, with defaults for the remaining controller settings.
 */
typedef struct FmsSolver {
  enum FmsMethod method;
  uint32_t steps;
  double atol;
  double rtol;
} FmsSolver;

/**
 * Right-hand side callback: write `f(t, y)` into `dy` (both of length `dim`)
 * and return 0, or return nonzero to abort the integration.
 */
typedef int (*FmsRhs)(double t, const double *y, double *dy, size_t dim, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next `fms_*` call on this thread.
 */
const char *fms_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fms_version(void);

/**
 * Loads a model file written by `fmsolve train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for one write.
 */
enum FmsStatus fms_model_load(const char *path, struct FmsModel **out);

/**
 * Parses a model from the JSON text of a model file.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for one write.
 */
enum FmsStatus fms_model_from_json(const char *json, struct FmsModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle from this library that has not been freed.
 */
void fms_model_free(struct FmsModel *model);

/**
 * Data dimension of the model, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t fms_model_dim(const struct FmsModel *model);

/**
 * Evaluates the velocity field at time `t` for `n` points (row-major, `n x dim`)
 * in the model's standardized coordinates.
 *
 * # Safety
 * `x` and `v` must each hold `n * dim` values; `model` must be a live handle.
 */
enum FmsStatus fms_model_velocity(const struct FmsModel *model,
                                  double t,
                                  const double *x,
                                  size_t n,
                                  double *v);

/**
 * Draws `n` samples (row-major, `n x dim`, data coordinates) by integrating
 * the model from Gaussian noise seeded by `seed`. `nfe` (may be null)
 * receives the number of network calls.
 *
 * # Safety
 * `points` must hold `n * dim` values; `model` must be a live handle.
 */
enum FmsStatus fms_model_sample(const struct FmsModel *model,
                                struct FmsSolver solver,
                                size_t n,
                                uint64_t seed,
                                double *points,
                                uint64_t *nfe);

/**
 * `R(z)` of a method at `z = re + i im`.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for one write each.
 */
enum FmsStatus fms_stability_value(enum FmsMethod method,
                                   double re,
                                   double im,
                                   double *out_re,
                                   double *out_im);

/**
 * Sliced 2-Wasserstein distance between two `n x dim` batches with
 * `n_projections` random directions drawn from `seed`.
 *
 * # Safety
 * `a` and `b` must hold `n * dim` values; `out` must be valid for one write.
 */
enum FmsStatus fms_swd(const double *a,
                       const double *b,
                       size_t n,
                       size_t dim,
                       size_t n_projections,
                       uint64_t seed,
                       double *out);

/**
 * Integrates `dy/dt = rhs(t, y)` from `y0` at `t0` to `t1`, writing the final
 * state to `y_out` and the evaluation count to `nfe` (may be null).
 *
 * # Safety
 * `y0` and `y_out` must hold `dim` values; `rhs` must be safe to call with
 * `user_data` and buffers of `dim` values.
 */
enum FmsStatus fms_integrate(struct FmsSolver solver,
                             FmsRhs rhs,
                             void *user_data,
                             const double *y0,
                             size_t dim,
                             double t0,
                             double t1,
                             double *y_out,
                             uint64_t *nfe);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FMSOLVE_H */
