/* C interface for the mkkc multiple-kernel clustering library. */

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Gaussian kernel with the width passed in `gamma` (values `<= 0`
 * select the library default).
 */
#define MKKC_KERNEL_RBF 0

/**
 * Gaussian kernel with the width derived from the view's feature count.
 */
#define MKKC_KERNEL_RBF_DIM_SCALED 1

/**
 * Linear (inner-product) kernel.
 */
#define MKKC_KERNEL_LINEAR 2

/**
 * Adaptive weights on the l2 ball (worst-case view emphasis).
 */
#define MKKC_VARIANT_MINMAX 0

/**
 * Adaptive weights on the floored simplex.
 */
#define MKKC_VARIANT_MINMAX_MINC 1

/**
 * Inverse-variance weights on the simplex (best-case emphasis).
 */
#define MKKC_VARIANT_MINMIN 2

/**
 * Fixed uniform weights.
 */
#define MKKC_VARIANT_UNIFORM 3

/**
 * The single view with the smallest own-kernel residual.
 */
#define MKKC_VARIANT_SINGLE_BEST 4

/**
 * Result of a fallible FFI call.
 */
typedef enum MkkcStatus {
  /**
   * The call succeeded.
   */
  MkkcStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  MkkcStatus_NullArgument = 1,
  /**
   * The input data or parameters were rejected.
   */
  MkkcStatus_InvalidInput = 2,
  /**
   * The computation hit a degenerate or non-finite condition.
   */
  MkkcStatus_Numerical = 3,
} MkkcStatus;

/**
 * Accumulates views before kernel preparation.
 */
typedef struct MkkcBuilder MkkcBuilder;

/**
 * An immutable set of prepared per-view kernels.
 */
typedef struct MkkcBundle MkkcBundle;

/**
 * A solver run: final weights, embedding, and diagnostics.
 */
typedef struct MkkcSolution MkkcSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Explain the most recent failure on the calling thread.
 *
 * The pointer stays valid until the next failing call on the same
 * thread; it is never null and points at an empty string before the
 * first failure.
 */
const char *mkkc_last_error_message(void);

/**
 * Create an empty view builder. Release with [`mkkc_builder_free`] or
 * consume with [`mkkc_builder_finish`].
 */
struct MkkcBuilder *mkkc_builder_new(void);

/**
 * Append one view of row-major data (`n_samples` x `n_features`).
 *
 * `kernel` is one of the `MKKC_KERNEL_*` constants; `gamma` is only
 * read for `MKKC_KERNEL_RBF`, where any value `<= 0` selects the
 * library default width.
 *
 * # Safety
 * `builder` must be a live handle from [`mkkc_builder_new`] and `data`
 * must point at `n_samples * n_features` doubles.
 */
enum MkkcStatus mkkc_builder_add_view(struct MkkcBuilder *builder,
                                      const double *data,
                                      uintptr_t n_samples,
                                      uintptr_t n_features,
                                      int32_t kernel,
                                      double gamma);

/**
 * Prepare the kernels for every accumulated view and hand back a
 * bundle in `out_bundle`. The builder is consumed and freed whether or
 * not preparation succeeds.
 *
 * # Safety
 * `builder` must be a live handle from [`mkkc_builder_new`] (not used
 * again afterwards) and `out_bundle` must be a valid location to store
 * a pointer.
 */
enum MkkcStatus mkkc_builder_finish(struct MkkcBuilder *builder, struct MkkcBundle **out_bundle);

/**
 * Release a builder without building a bundle.
 *
 * # Safety
 * `builder` must be null or a live handle from [`mkkc_builder_new`].
 */
void mkkc_builder_free(struct MkkcBuilder *builder);

/**
 * Number of views in the bundle; 0 for a null handle.
 *
 * # Safety
 * `bundle` must be null or a live handle from [`mkkc_builder_finish`].
 */
uintptr_t mkkc_bundle_n_views(const struct MkkcBundle *bundle);

/**
 * Number of samples shared by every view; 0 for a null handle.
 *
 * # Safety
 * `bundle` must be null or a live handle from [`mkkc_builder_finish`].
 */
uintptr_t mkkc_bundle_n_samples(const struct MkkcBundle *bundle);

/**
 * Release a bundle.
 *
 * # Safety
 * `bundle` must be null or a live handle from [`mkkc_builder_finish`].
 */
void mkkc_bundle_free(struct MkkcBundle *bundle);

/**
 * Run the alternating solver for `k` clusters.
 *
 * `variant` is one of the `MKKC_VARIANT_*` constants. Passing 0 for
 * `max_iter`, a non-positive `tol`, or a non-positive `minc_floor`
 * selects the library default for that parameter. On success the
 * caller owns the solution stored in `out_solution`.
 *
 * # Safety
 * `bundle` must be a live handle from [`mkkc_builder_finish`] and
 * `out_solution` must be a valid location to store a pointer.
 */
enum MkkcStatus mkkc_solve(const struct MkkcBundle *bundle,
                           uintptr_t k,
                           int32_t variant,
                           uintptr_t max_iter,
                           double tol,
                           double minc_floor,
                           struct MkkcSolution **out_solution);

/**
 * Number of views the solution weights; 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle from [`mkkc_solve`].
 */
uintptr_t mkkc_solution_n_views(const struct MkkcSolution *solution);

/**
 * Number of clustered samples; 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle from [`mkkc_solve`].
 */
uintptr_t mkkc_solution_n_samples(const struct MkkcSolution *solution);

/**
 * Copy the final view weights into `out_theta`
 * (length [`mkkc_solution_n_views`]).
 *
 * # Safety
 * `solution` must be a live handle from [`mkkc_solve`] and `out_theta`
 * must point at space for one double per view.
 */
enum MkkcStatus mkkc_solution_theta(const struct MkkcSolution *solution, double *out_theta);

/**
 * Final combined within-cluster variance; NaN for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle from [`mkkc_solve`].
 */
double mkkc_solution_objective(const struct MkkcSolution *solution);

/**
 * Number of alternating iterations performed; 0 for a null handle.
 *
 * # Safety
 * `solution` must be null or a live handle from [`mkkc_solve`].
 */
uintptr_t mkkc_solution_iterations(const struct MkkcSolution *solution);

/**
 * 1 when the weight iteration converged within its cap, else 0.
 *
 * # Safety
 * `solution` must be null or a live handle from [`mkkc_solve`].
 */
int32_t mkkc_solution_converged(const struct MkkcSolution *solution);

/**
 * Round the spectral embedding to hard labels with multi-start k-means
 * and write one label per sample into `out_labels`
 * (length [`mkkc_solution_n_samples`]). Passing 0 for `n_starts`
 * selects the library default. Labels lie in `[0, k)`.
 *
 * # Safety
 * `solution` must be a live handle from [`mkkc_solve`] and `out_labels`
 * must point at space for one `uint32_t` per sample.
 */
enum MkkcStatus mkkc_solution_round(const struct MkkcSolution *solution,
                                    uintptr_t n_starts,
                                    uint64_t seed,
                                    uint32_t *out_labels);

/**
 * Release a solution.
 *
 * # Safety
 * `solution` must be null or a live handle from [`mkkc_solve`].
 */
void mkkc_solution_free(struct MkkcSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
