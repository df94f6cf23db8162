//! C ABI for the mkkc multiple-kernel clustering library.
//!
//! The interface follows three conventions:
//!
//! * **Opaque handles** — builders, kernel bundles, and solutions are
//!   heap-allocated Rust objects behind forward-declared pointers. Every
//!   constructor transfers ownership to the caller, who must release the
//!   handle with the matching `*_free` function exactly once.
//! * **Status codes** — fallible functions return [`MkkcStatus`];
//!   anything other than `Ok` leaves a human-readable explanation in a
//!   thread-local buffer readable via [`mkkc_last_error_message`].
//! * **Caller-allocated output** — accessors write into buffers the
//!   caller sizes via the paired `*_n_views` / `*_n_samples` queries.
//!
//! Handles are not synchronized; using one handle from two threads at
//! once is undefined. Distinct handles may be used concurrently.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ndarray::Array2;

use mkkc::error::Error;
use mkkc::kernels::{KernelBundle, KernelSpec, DEFAULT_RBF_GAMMA};
use mkkc::rounding::round_assignment;
use mkkc::solver::{solve, SolveConfig, SolveResult, Variant};

/// Gaussian kernel with the width passed in `gamma` (values `<= 0`
/// select the library default).
pub const MKKC_KERNEL_RBF: i32 = 0;
/// Gaussian kernel with the width derived from the view's feature count.
pub const MKKC_KERNEL_RBF_DIM_SCALED: i32 = 1;
/// Linear (inner-product) kernel.
pub const MKKC_KERNEL_LINEAR: i32 = 2;

/// Adaptive weights on the l2 ball (worst-case view emphasis).
pub const MKKC_VARIANT_MINMAX: i32 = 0;
/// Adaptive weights on the floored simplex.
pub const MKKC_VARIANT_MINMAX_MINC: i32 = 1;
/// Inverse-variance weights on the simplex (best-case emphasis).
pub const MKKC_VARIANT_MINMIN: i32 = 2;
/// Fixed uniform weights.
pub const MKKC_VARIANT_UNIFORM: i32 = 3;
/// The single view with the smallest own-kernel residual.
pub const MKKC_VARIANT_SINGLE_BEST: i32 = 4;

/// Result of a fallible FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MkkcStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// The input data or parameters were rejected.
    InvalidInput = 2,
    /// The computation hit a degenerate or non-finite condition.
    Numerical = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: MkkcStatus, message: &str) -> MkkcStatus {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("interior NULs removed");
    });
    status
}

fn fail_error(err: &Error) -> MkkcStatus {
    let status = match err.exit_code() {
        3 => MkkcStatus::Numerical,
        _ => MkkcStatus::InvalidInput,
    };
    fail(status, &err.to_string())
}

/// Explain the most recent failure on the calling thread.
///
/// The pointer stays valid until the next failing call on the same
/// thread; it is never null and points at an empty string before the
/// first failure.
#[no_mangle]
pub extern "C" fn mkkc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Accumulates views before kernel preparation.
pub struct MkkcBuilder {
    views: Vec<(Array2<f64>, KernelSpec)>,
}

/// An immutable set of prepared per-view kernels.
pub struct MkkcBundle {
    inner: KernelBundle,
}

/// A solver run: final weights, embedding, and diagnostics.
pub struct MkkcSolution {
    result: SolveResult,
    k: usize,
}

/// Create an empty view builder. Release with [`mkkc_builder_free`] or
/// consume with [`mkkc_builder_finish`].
#[no_mangle]
pub extern "C" fn mkkc_builder_new() -> *mut MkkcBuilder {
    Box::into_raw(Box::new(MkkcBuilder { views: Vec::new() }))
}

/// Append one view of row-major data (`n_samples` x `n_features`).
///
/// `kernel` is one of the `MKKC_KERNEL_*` constants; `gamma` is only
/// read for `MKKC_KERNEL_RBF`, where any value `<= 0` selects the
/// library default width.
///
/// # Safety
/// `builder` must be a live handle from [`mkkc_builder_new`] and `data`
/// must point at `n_samples * n_features` doubles.
#[no_mangle]
pub unsafe extern "C" fn mkkc_builder_add_view(
    builder: *mut MkkcBuilder,
    data: *const f64,
    n_samples: usize,
    n_features: usize,
    kernel: i32,
    gamma: f64,
) -> MkkcStatus {
    let Some(builder) = builder.as_mut() else {
        return fail(MkkcStatus::NullArgument, "builder handle is null");
    };
    if data.is_null() {
        return fail(MkkcStatus::NullArgument, "view data pointer is null");
    }
    if n_samples == 0 || n_features == 0 {
        return fail(
            MkkcStatus::InvalidInput,
            "view dimensions must both be positive",
        );
    }
    let spec = match kernel {
        MKKC_KERNEL_RBF => KernelSpec::Rbf {
            gamma: if gamma > 0.0 { gamma } else { DEFAULT_RBF_GAMMA },
        },
        MKKC_KERNEL_RBF_DIM_SCALED => KernelSpec::RbfDimScaled,
        MKKC_KERNEL_LINEAR => KernelSpec::Linear,
        other => {
            return fail(
                MkkcStatus::InvalidInput,
                &format!("unknown kernel code {other}"),
            )
        }
    };
    let values = std::slice::from_raw_parts(data, n_samples * n_features).to_vec();
    let view = Array2::from_shape_vec((n_samples, n_features), values)
        .expect("buffer length matches the declared shape");
    builder.views.push((view, spec));
    MkkcStatus::Ok
}

/// Prepare the kernels for every accumulated view and hand back a
/// bundle in `out_bundle`. The builder is consumed and freed whether or
/// not preparation succeeds.
///
/// # Safety
/// `builder` must be a live handle from [`mkkc_builder_new`] (not used
/// again afterwards) and `out_bundle` must be a valid location to store
/// a pointer.
#[no_mangle]
pub unsafe extern "C" fn mkkc_builder_finish(
    builder: *mut MkkcBuilder,
    out_bundle: *mut *mut MkkcBundle,
) -> MkkcStatus {
    if builder.is_null() {
        return fail(MkkcStatus::NullArgument, "builder handle is null");
    }
    let builder = Box::from_raw(builder);
    let Some(out_bundle) = out_bundle.as_mut() else {
        return fail(MkkcStatus::NullArgument, "output bundle pointer is null");
    };
    let (views, specs): (Vec<_>, Vec<_>) = builder.views.into_iter().unzip();
    match KernelBundle::from_views(&views, &specs) {
        Ok(inner) => {
            *out_bundle = Box::into_raw(Box::new(MkkcBundle { inner }));
            MkkcStatus::Ok
        }
        Err(err) => fail_error(&err),
    }
}

/// Release a builder without building a bundle.
///
/// # Safety
/// `builder` must be null or a live handle from [`mkkc_builder_new`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_builder_free(builder: *mut MkkcBuilder) {
    if !builder.is_null() {
        drop(Box::from_raw(builder));
    }
}

/// Number of views in the bundle; 0 for a null handle.
///
/// # Safety
/// `bundle` must be null or a live handle from [`mkkc_builder_finish`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_bundle_n_views(bundle: *const MkkcBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.inner.len())
}

/// Number of samples shared by every view; 0 for a null handle.
///
/// # Safety
/// `bundle` must be null or a live handle from [`mkkc_builder_finish`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_bundle_n_samples(bundle: *const MkkcBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.inner.n())
}

/// Release a bundle.
///
/// # Safety
/// `bundle` must be null or a live handle from [`mkkc_builder_finish`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_bundle_free(bundle: *mut MkkcBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Run the alternating solver for `k` clusters.
///
/// `variant` is one of the `MKKC_VARIANT_*` constants. Passing 0 for
/// `max_iter`, a non-positive `tol`, or a non-positive `minc_floor`
/// selects the library default for that parameter. On success the
/// caller owns the solution stored in `out_solution`.
///
/// # Safety
/// `bundle` must be a live handle from [`mkkc_builder_finish`] and
/// `out_solution` must be a valid location to store a pointer.
#[no_mangle]
pub unsafe extern "C" fn mkkc_solve(
    bundle: *const MkkcBundle,
    k: usize,
    variant: i32,
    max_iter: usize,
    tol: f64,
    minc_floor: f64,
    out_solution: *mut *mut MkkcSolution,
) -> MkkcStatus {
    let Some(bundle) = bundle.as_ref() else {
        return fail(MkkcStatus::NullArgument, "bundle handle is null");
    };
    let Some(out_solution) = out_solution.as_mut() else {
        return fail(MkkcStatus::NullArgument, "output solution pointer is null");
    };
    let variant = match variant {
        MKKC_VARIANT_MINMAX => Variant::MinMaxL2,
        MKKC_VARIANT_MINMAX_MINC => Variant::MinMaxMinC,
        MKKC_VARIANT_MINMIN => Variant::MinMin,
        MKKC_VARIANT_UNIFORM => Variant::Uniform,
        MKKC_VARIANT_SINGLE_BEST => Variant::SingleBest,
        other => {
            return fail(
                MkkcStatus::InvalidInput,
                &format!("unknown variant code {other}"),
            )
        }
    };
    let mut config = SolveConfig::new(k, variant);
    if max_iter > 0 {
        config.max_iter = max_iter;
    }
    if tol > 0.0 {
        config.tol = tol;
    }
    if minc_floor > 0.0 {
        config.minc_floor = Some(minc_floor);
    }

    let solved = catch_unwind(AssertUnwindSafe(|| solve(&bundle.inner, &config)));
    match solved {
        Ok(Ok(result)) => {
            *out_solution = Box::into_raw(Box::new(MkkcSolution { result, k }));
            MkkcStatus::Ok
        }
        Ok(Err(err)) => fail_error(&err),
        Err(_) => fail(MkkcStatus::Numerical, "solver panicked; inputs too ill-conditioned"),
    }
}

/// Number of views the solution weights; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle from [`mkkc_solve`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_solution_n_views(solution: *const MkkcSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.result.theta.len())
}

/// Number of clustered samples; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle from [`mkkc_solve`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_solution_n_samples(solution: *const MkkcSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.result.embedding.n())
}

/// Copy the final view weights into `out_theta`
/// (length [`mkkc_solution_n_views`]).
///
/// # Safety
/// `solution` must be a live handle from [`mkkc_solve`] and `out_theta`
/// must point at space for one double per view.
#[no_mangle]
pub unsafe extern "C" fn mkkc_solution_theta(
    solution: *const MkkcSolution,
    out_theta: *mut f64,
) -> MkkcStatus {
    let Some(solution) = solution.as_ref() else {
        return fail(MkkcStatus::NullArgument, "solution handle is null");
    };
    if out_theta.is_null() {
        return fail(MkkcStatus::NullArgument, "output weight pointer is null");
    }
    let theta = solution.result.theta.theta();
    let out = std::slice::from_raw_parts_mut(out_theta, theta.len());
    for (dst, src) in out.iter_mut().zip(theta.iter()) {
        *dst = *src;
    }
    MkkcStatus::Ok
}

/// Final combined within-cluster variance; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle from [`mkkc_solve`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_solution_objective(solution: *const MkkcSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.result.objective)
}

/// Number of alternating iterations performed; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle from [`mkkc_solve`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_solution_iterations(solution: *const MkkcSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.result.iterations())
}

/// 1 when the weight iteration converged within its cap, else 0.
///
/// # Safety
/// `solution` must be null or a live handle from [`mkkc_solve`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_solution_converged(solution: *const MkkcSolution) -> i32 {
    solution.as_ref().map_or(0, |s| i32::from(s.result.converged))
}

/// Round the spectral embedding to hard labels with multi-start k-means
/// and write one label per sample into `out_labels`
/// (length [`mkkc_solution_n_samples`]). Passing 0 for `n_starts`
/// selects the library default. Labels lie in `[0, k)`.
///
/// # Safety
/// `solution` must be a live handle from [`mkkc_solve`] and `out_labels`
/// must point at space for one `uint32_t` per sample.
#[no_mangle]
pub unsafe extern "C" fn mkkc_solution_round(
    solution: *const MkkcSolution,
    n_starts: usize,
    seed: u64,
    out_labels: *mut u32,
) -> MkkcStatus {
    let Some(solution) = solution.as_ref() else {
        return fail(MkkcStatus::NullArgument, "solution handle is null");
    };
    if out_labels.is_null() {
        return fail(MkkcStatus::NullArgument, "output label pointer is null");
    }
    let starts = if n_starts == 0 { mkkc::rounding::DEFAULT_KMEANS_STARTS } else { n_starts };
    let rounded = catch_unwind(AssertUnwindSafe(|| {
        round_assignment(solution.result.embedding.matrix(), solution.k, starts, seed)
    }));
    match rounded {
        Ok(Ok(outcome)) => {
            let labels = outcome.assignment.labels();
            let out = std::slice::from_raw_parts_mut(out_labels, labels.len());
            for (dst, src) in out.iter_mut().zip(labels.iter()) {
                *dst = *src as u32;
            }
            MkkcStatus::Ok
        }
        Ok(Err(err)) => fail_error(&err),
        Err(_) => fail(MkkcStatus::Numerical, "rounding panicked; embedding ill-conditioned"),
    }
}

/// Release a solution.
///
/// # Safety
/// `solution` must be null or a live handle from [`mkkc_solve`].
#[no_mangle]
pub unsafe extern "C" fn mkkc_solution_free(solution: *mut MkkcSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
