//! Kernel construction and preprocessing for multi-view data.
//!
//! Each view (an `n x p` data matrix) is turned into an `n x n` kernel
//! matrix, centered in feature space, and scaled to unit trace so that
//! no view dominates the combination simply through scale. Preparation
//! happens once, up front: nonnegative-weighted combinations of centered
//! positive semidefinite kernels remain centered and positive
//! semidefinite, so the solver never needs to re-center inside its loop.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// Default RBF bandwidth used by the synthetic benchmarks.
pub const DEFAULT_RBF_GAMMA: f64 = 0.5;

/// Relative trace threshold below which a kernel counts as degenerate.
const TRACE_EPS: f64 = 1e-12;

/// RBF bandwidth tied to the feature dimension: `gamma = 1 / (2 + p^2)`.
///
/// Wider data gets a flatter kernel, keeping typical pairwise
/// similarities in a comparable range across dimensionalities.
pub fn rbf_gamma_for_dim(p: usize) -> f64 {
    1.0 / (2.0 + (p * p) as f64)
}

/// How to turn a data view into a kernel matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// Gaussian kernel `exp(-gamma * ||x_i - x_j||^2)` with fixed bandwidth.
    Rbf { gamma: f64 },
    /// Gaussian kernel with the bandwidth from [`rbf_gamma_for_dim`].
    RbfDimScaled,
    /// Inner-product kernel `x_i . x_j`.
    Linear,
}

impl KernelSpec {
    /// The bandwidth this spec resolves to for a view of width `p`
    /// (`None` for the linear kernel).
    pub fn resolved_gamma(&self, p: usize) -> Option<f64> {
        match self {
            KernelSpec::Rbf { gamma } => Some(*gamma),
            KernelSpec::RbfDimScaled => Some(rbf_gamma_for_dim(p)),
            KernelSpec::Linear => None,
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Accepts `rbf` (default bandwidth), `rbf:<gamma>`, `rbf-paper-real`
    /// (dimension-scaled bandwidth), or `linear`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbf" => Ok(KernelSpec::Rbf { gamma: DEFAULT_RBF_GAMMA }),
            "rbf-paper-real" => Ok(KernelSpec::RbfDimScaled),
            "linear" => Ok(KernelSpec::Linear),
            other => {
                if let Some(rest) = other.strip_prefix("rbf:") {
                    let gamma: f64 = rest.parse().map_err(|_| {
                        Error::InvalidInput(format!("cannot parse RBF bandwidth `{rest}`"))
                    })?;
                    if !gamma.is_finite() || gamma <= 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "RBF bandwidth must be finite and positive, got {gamma}"
                        )));
                    }
                    Ok(KernelSpec::Rbf { gamma })
                } else {
                    Err(Error::InvalidInput(format!(
                        "unknown kernel spec `{other}` (expected rbf, rbf:<gamma>, rbf-paper-real, or linear)"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Rbf { gamma } => write!(f, "rbf:{gamma}"),
            KernelSpec::RbfDimScaled => write!(f, "rbf-paper-real"),
            KernelSpec::Linear => write!(f, "linear"),
        }
    }
}

fn check_finite(x: &Array2<f64>, what: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        Err(Error::NonFinite(what.to_string()))
    } else {
        Ok(())
    }
}

/// Gaussian kernel `K[i][j] = exp(-gamma * ||x_i - x_j||^2)`.
///
/// The diagonal is set to exactly 1 and the matrix is exactly symmetric
/// by construction.
pub fn rbf_kernel(x: &Array2<f64>, gamma: f64) -> Result<Array2<f64>> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidInput("empty data matrix for RBF kernel".into()));
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "RBF bandwidth must be finite and positive, got {gamma}"
        )));
    }
    check_finite(x, "data matrix for RBF kernel")?;
    let n = x.nrows();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in 0..i {
            let mut d2 = 0.0;
            for c in 0..x.ncols() {
                let d = x[[i, c]] - x[[j, c]];
                d2 += d * d;
            }
            let v = (-gamma * d2).exp();
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(k)
}

/// Inner-product kernel `K = X X^T`.
pub fn linear_kernel(x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::InvalidInput("empty data matrix for linear kernel".into()));
    }
    check_finite(x, "data matrix for linear kernel")?;
    Ok(x.dot(&x.t()))
}

/// Center a kernel in feature space:
/// `K'[i][j] = K[i][j] - rowmean_i - colmean_j + grandmean`.
pub fn center_kernel(k: &Array2<f64>) -> Array2<f64> {
    let row_means = k.mean_axis(Axis(1)).expect("non-empty kernel");
    let col_means = k.mean_axis(Axis(0)).expect("non-empty kernel");
    let grand = k.mean().expect("non-empty kernel");
    Array2::from_shape_fn(k.dim(), |(i, j)| k[[i, j]] - row_means[i] - col_means[j] + grand)
}

/// Standardize each column in place to mean 0 and unit sample standard
/// deviation (the `n - 1` denominator). A column with zero variance is
/// rejected because it carries no scale to normalize by.
pub fn standardize_columns(x: &mut Array2<f64>) -> Result<()> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidInput(
            "standardization needs at least two rows".into(),
        ));
    }
    check_finite(x, "data matrix for standardization")?;
    for (c, mut col) in x.columns_mut().into_iter().enumerate() {
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n as f64 - 1.0)).sqrt();
        if sd <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "column {c} has zero variance and cannot be standardized"
            )));
        }
        col.mapv_inplace(|v| (v - mean) / sd);
    }
    Ok(())
}

/// A validated, symmetrized kernel matrix with preparation flags.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    matrix: Array2<f64>,
    centered: bool,
    unit_trace: bool,
}

impl KernelMatrix {
    /// Wrap a raw kernel: validates shape and finiteness, then
    /// symmetrizes via `(K + K^T) / 2` to absorb floating-point drift.
    pub fn from_raw(matrix: Array2<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "kernel must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_finite(&matrix, "kernel matrix")?;
        let sym = 0.5 * (&matrix + &matrix.t());
        Ok(KernelMatrix { matrix: sym, centered: false, unit_trace: false })
    }

    /// Wrap, center, and trace-scale in one step.
    pub fn prepared(matrix: Array2<f64>) -> Result<Self> {
        let mut k = Self::from_raw(matrix)?;
        k.center();
        k.scale_to_unit_trace()?;
        Ok(k)
    }

    /// Center in feature space (idempotent).
    pub fn center(&mut self) {
        self.matrix = center_kernel(&self.matrix);
        self.centered = true;
    }

    /// Scale so the trace is exactly 1. Fails with
    /// [`Error::DegenerateKernel`] when the trace is numerically zero
    /// relative to the matrix size.
    pub fn scale_to_unit_trace(&mut self) -> Result<()> {
        let tr = self.trace();
        if !tr.is_finite() || tr <= TRACE_EPS * self.n() as f64 {
            return Err(Error::DegenerateKernel(format!(
                "trace {tr:.3e} too small to scale to unit trace"
            )));
        }
        self.matrix.mapv_inplace(|v| v / tr);
        self.unit_trace = true;
        Ok(())
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Number of samples the kernel covers.
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().sum()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn is_unit_trace(&self) -> bool {
        self.unit_trace
    }
}

/// One prepared kernel per view, all over the same samples.
#[derive(Debug, Clone)]
pub struct KernelBundle {
    kernels: Vec<KernelMatrix>,
}

impl KernelBundle {
    pub fn new(kernels: Vec<KernelMatrix>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::InvalidInput("a kernel bundle needs at least one view".into()));
        }
        let n = kernels[0].n();
        if kernels.iter().any(|k| k.n() != n) {
            return Err(Error::InvalidInput(
                "all kernels in a bundle must have the same size".into(),
            ));
        }
        Ok(KernelBundle { kernels })
    }

    /// Build and prepare one kernel per view. `specs` must hold either a
    /// single spec (applied to every view) or exactly one per view.
    pub fn from_views(views: &[Array2<f64>], specs: &[KernelSpec]) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::InvalidInput("no views supplied".into()));
        }
        if specs.is_empty() || (specs.len() != 1 && specs.len() != views.len()) {
            return Err(Error::InvalidInput(format!(
                "need one kernel spec, or one per view ({} views, {} specs)",
                views.len(),
                specs.len()
            )));
        }
        let n = views[0].nrows();
        if n < 2 {
            return Err(Error::InvalidInput("views need at least two samples".into()));
        }
        if views.iter().any(|v| v.nrows() != n) {
            return Err(Error::InvalidInput(
                "all views must have the same number of rows".into(),
            ));
        }
        let mut kernels = Vec::with_capacity(views.len());
        for (i, view) in views.iter().enumerate() {
            let spec = if specs.len() == 1 { &specs[0] } else { &specs[i] };
            let raw = match spec.resolved_gamma(view.ncols()) {
                Some(gamma) => rbf_kernel(view, gamma)?,
                None => linear_kernel(view)?,
            };
            kernels.push(KernelMatrix::prepared(raw)?);
        }
        KernelBundle::new(kernels)
    }

    pub fn kernels(&self) -> &[KernelMatrix] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    /// Number of samples shared by every kernel in the bundle.
    pub fn n(&self) -> usize {
        self.kernels[0].n()
    }
}

fn check_weights(kernels: &[KernelMatrix], theta: &Array1<f64>) -> Result<()> {
    if theta.len() != kernels.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} kernels",
            theta.len(),
            kernels.len()
        )));
    }
    if theta.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidInput("kernel weights must be finite and nonnegative".into()));
    }
    Ok(())
}

fn combine_with(kernels: &[KernelMatrix], weights: &[f64]) -> KernelMatrix {
    let n = kernels[0].n();
    let mut out = Array2::zeros((n, n));
    for (k, &w) in kernels.iter().zip(weights) {
        out.scaled_add(w, k.matrix());
    }
    // Symmetrize to absorb any floating-point drift, and carry the
    // centered flag: a nonnegative combination of centered kernels stays
    // centered, but unit trace survives only for special weightings.
    let sym = 0.5 * (&out + &out.t());
    KernelMatrix {
        matrix: sym,
        centered: kernels.iter().all(|k| k.is_centered()),
        unit_trace: false,
    }
}

/// Weighted sum `sum_v theta_v K_v`.
pub fn combine_linear(kernels: &[KernelMatrix], theta: &Array1<f64>) -> Result<KernelMatrix> {
    check_weights(kernels, theta)?;
    let weights: Vec<f64> = theta.to_vec();
    Ok(combine_with(kernels, &weights))
}

/// Squared-weight sum `sum_v theta_v^2 K_v`.
pub fn combine_squared(kernels: &[KernelMatrix], theta: &Array1<f64>) -> Result<KernelMatrix> {
    check_weights(kernels, theta)?;
    let weights: Vec<f64> = theta.iter().map(|w| w * w).collect();
    Ok(combine_with(kernels, &weights))
}
