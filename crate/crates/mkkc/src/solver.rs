//! Alternating optimization of view weights and the spectral embedding.
//!
//! All variants share one skeleton: combine the per-view kernels under
//! the current weights `theta`, take the top-`k` eigenvectors of the
//! combined kernel as the relaxed assignment `H`, then refresh `theta`
//! from the per-view within-cluster variances
//! `g_v = tr(K_v) - tr(H^T K_v H)`. They differ only in the weight rule:
//!
//! * **min-max** (`minmax`): `theta` maximizes the weighted variance over
//!   the nonnegative l2 ball — closed form `theta = g / ||g||` — while
//!   `H` minimizes it, so the embedding must hold up against the least
//!   favorable view weighting.
//! * **floored simplex min-max** (`minmax-minc`): same inner maximum but
//!   over the simplex with a per-view floor; the solution is the vertex
//!   that puts all spare mass on the worst-explained view.
//! * **min-min** (`minmin`): the classical squared-combination rule that
//!   *minimizes* over both arguments; weights follow `1/g_v`, favoring
//!   views the current clustering already explains well.
//! * **uniform**: fixed equal weights, one embedding step.
//! * **single-best**: the one view whose own spectrum leaves the least
//!   residual variance at the target cluster count.
//!
//! Iteration stops when `||theta_t - theta_{t-1}||` drops below `tol`
//! (default 1e-4) or after `max_iter` (default 500) sweeps; running out
//! of iterations flags the result as unconverged rather than failing.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::kernels::{combine_linear, combine_squared, KernelBundle, KernelMatrix};
use crate::linalg;

/// Default cap on alternating iterations.
pub const DEFAULT_MAX_ITER: usize = 500;
/// Default convergence tolerance on `||theta_t - theta_{t-1}||_2`.
pub const DEFAULT_TOL: f64 = 1e-4;
/// Eigengap below which the top-`k` subspace is flagged as non-unique.
pub const EIGENGAP_EPS: f64 = 1e-10;
/// Within-cluster variances at or below this count as exactly zero.
const ZERO_VARIANCE_EPS: f64 = 1e-12;

/// Weighting rule used by [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Min-max weighting over the nonnegative l2 ball.
    MinMaxL2,
    /// Min-max weighting over the l1 simplex with a per-view floor.
    MinMaxMinC,
    /// Min-min weighting (squared combination, `1/g` weights).
    MinMin,
    /// Fixed uniform weights.
    Uniform,
    /// All weight on the single view with the smallest own residual.
    SingleBest,
}

impl Variant {
    /// Every variant, in the canonical reporting order.
    pub const ALL: [Variant; 5] =
        [Variant::MinMaxL2, Variant::MinMaxMinC, Variant::MinMin, Variant::Uniform, Variant::SingleBest];
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(Variant::MinMaxL2),
            "minmax-minc" => Ok(Variant::MinMaxMinC),
            "minmin" => Ok(Variant::MinMin),
            "uniform" => Ok(Variant::Uniform),
            "single-best" => Ok(Variant::SingleBest),
            other => Err(Error::InvalidInput(format!(
                "unknown variant `{other}` (expected minmax, minmax-minc, minmin, uniform, or single-best)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::MinMaxL2 => "minmax",
            Variant::MinMaxMinC => "minmax-minc",
            Variant::MinMin => "minmin",
            Variant::Uniform => "uniform",
            Variant::SingleBest => "single-best",
        };
        f.write_str(s)
    }
}

/// Feasible set the weight vector lives on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind {
    /// `||theta||_2 <= 1`, elementwise nonnegative.
    L2Ball,
    /// `sum(theta) = 1` with every component at least `floor`.
    L1SimplexFloor { floor: f64 },
}

/// A validated weight vector together with its feasible set.
#[derive(Debug, Clone)]
pub struct CoefVector {
    theta: Array1<f64>,
    constraint: ConstraintKind,
}

impl CoefVector {
    pub fn new(theta: Array1<f64>, constraint: ConstraintKind) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        if theta.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        match constraint {
            ConstraintKind::L2Ball => {
                let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1.0 + 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "weight vector leaves the unit ball (norm {norm})"
                    )));
                }
            }
            ConstraintKind::L1SimplexFloor { floor } => {
                let sum: f64 = theta.sum();
                if (sum - 1.0).abs() > 1e-8 {
                    return Err(Error::InvalidInput(format!(
                        "simplex weights must sum to 1, got {sum}"
                    )));
                }
                if theta.iter().any(|&v| v < floor - 1e-12) {
                    return Err(Error::InvalidInput(format!(
                        "weight below the floor {floor}"
                    )));
                }
            }
        }
        Ok(CoefVector { theta, constraint })
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    pub fn constraint(&self) -> ConstraintKind {
        self.constraint
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Relaxed cluster assignment: an `n x k` matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct ContinuousAssignment {
    h: Array2<f64>,
}

impl ContinuousAssignment {
    pub fn new(h: Array2<f64>) -> Result<Self> {
        let (n, k) = h.dim();
        if n == 0 || k == 0 || k > n {
            return Err(Error::InvalidInput(format!(
                "assignment matrix must be n x k with 1 <= k <= n, got {n}x{k}"
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("assignment matrix".into()));
        }
        let gram = h.t().dot(&h);
        let mut frob2 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let expect = if i == j { 1.0 } else { 0.0 };
                let d = gram[[i, j]] - expect;
                frob2 += d * d;
            }
        }
        if frob2.sqrt() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "assignment columns are not orthonormal (deviation {:.3e})",
                frob2.sqrt()
            )));
        }
        Ok(ContinuousAssignment { h })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn k(&self) -> usize {
        self.h.ncols()
    }
}

/// Settings for [`solve`].
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub k: usize,
    pub variant: Variant,
    pub max_iter: usize,
    pub tol: f64,
    /// Carried alongside the solve for downstream label rounding; the
    /// solve itself is deterministic and draws no random numbers.
    pub seed: u64,
    /// Per-view floor for the `minmax-minc` variant; `None` means the
    /// default `0.5 / m`. Must stay unset for every other variant.
    pub minc_floor: Option<f64>,
}

impl SolveConfig {
    pub fn new(k: usize, variant: Variant) -> Self {
        SolveConfig {
            k,
            variant,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            seed: 0,
            minc_floor: None,
        }
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.k == 0 || self.k >= n {
            return Err(Error::InvalidInput(format!(
                "cluster count k = {} must satisfy 1 <= k < n = {n}",
                self.k
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if let Some(floor) = self.minc_floor {
            if self.variant != Variant::MinMaxMinC {
                return Err(Error::InvalidInput(
                    "minc_floor only applies to the minmax-minc variant".into(),
                ));
            }
            validate_floor(floor, m)?;
        }
        Ok(())
    }
}

fn validate_floor(floor: f64, m: usize) -> Result<()> {
    if !floor.is_finite() || floor < 0.0 || floor * m as f64 > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "floor {floor} infeasible for {m} views (need 0 <= floor and m*floor <= 1)"
        )));
    }
    Ok(())
}

/// One row of the solve history: the weights after the iteration's
/// update, the combined within-cluster variance under those weights, and
/// the step size `||theta_t - theta_{t-1}||_2`.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub delta: f64,
}

/// Per-iteration history of a solve. There is no pseudo-entry for the
/// initialization: a run that converges immediately has exactly one row.
#[derive(Debug, Clone, Default)]
pub struct SolveTrace {
    records: Vec<IterationRecord>,
}

impl SolveTrace {
    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

/// Output of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub embedding: ContinuousAssignment,
    pub theta: CoefVector,
    pub trace: SolveTrace,
    pub converged: bool,
    /// Set when any embedding update saw an eigengap below
    /// [`EIGENGAP_EPS`], meaning the chosen subspace is not unique.
    pub eigengap_warning: bool,
    /// Combined within-cluster variance at the final iterate.
    pub objective: f64,
}

impl SolveResult {
    /// Number of alternating iterations performed.
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Within-cluster variance of one view: `tr(K) - tr(H^T K H)`, clamped
/// to zero against floating-point underrun (it is nonnegative for any
/// orthonormal `H` on a positive semidefinite kernel).
pub fn within_cluster_variance(kernel: &KernelMatrix, h: &ContinuousAssignment) -> Result<f64> {
    if kernel.n() != h.n() {
        return Err(Error::InvalidInput(format!(
            "kernel over {} samples but assignment over {}",
            kernel.n(),
            h.n()
        )));
    }
    let kh = kernel.matrix().dot(h.matrix());
    let explained: f64 = h.matrix().iter().zip(kh.iter()).map(|(a, b)| a * b).sum();
    Ok((kernel.trace() - explained).max(0.0))
}

/// Within-cluster variance of every view in the bundle.
pub fn within_cluster_variances(
    bundle: &KernelBundle,
    h: &ContinuousAssignment,
) -> Result<Array1<f64>> {
    let mut g = Array1::zeros(bundle.len());
    for (v, kernel) in bundle.kernels().iter().enumerate() {
        g[v] = within_cluster_variance(kernel, h)?;
    }
    Ok(g)
}

fn validate_variances(g: &Array1<f64>) -> Result<()> {
    if g.is_empty() {
        return Err(Error::InvalidInput("empty variance vector".into()));
    }
    if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidInput(
            "within-cluster variances must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Closed-form min-max weights on the l2 ball: `theta = g / ||g||_2`.
///
/// This is the maximizer of `sum_v theta_v g_v` over
/// `{theta >= 0, ||theta||_2 <= 1}`.
pub fn theta_minmax_from_variances(g: &Array1<f64>) -> Result<Array1<f64>> {
    validate_variances(g)?;
    if g.iter().all(|&v| v <= ZERO_VARIANCE_EPS) {
        return Err(Error::DegenerateTheta(
            "every view is perfectly explained; the l2 weighting is undefined".into(),
        ));
    }
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(g.mapv(|v| v / norm))
}

/// Closed-form floored-simplex weights: every view sits at the floor
/// except the one with the largest variance, which takes the remainder.
/// Ties go to the lowest view index.
///
/// This is the maximizer of `sum_v theta_v g_v` over
/// `{sum(theta) = 1, theta >= floor}` (a linear program whose optimum is
/// a vertex of the shrunken simplex).
pub fn theta_minc_from_variances(g: &Array1<f64>, floor: f64) -> Result<Array1<f64>> {
    validate_variances(g)?;
    let m = g.len();
    validate_floor(floor, m)?;
    if g.iter().all(|&v| v <= ZERO_VARIANCE_EPS) {
        return Err(Error::DegenerateTheta(
            "every view is perfectly explained; the floored-simplex weighting is undefined".into(),
        ));
    }
    let mut best = 0usize;
    for (v, &val) in g.iter().enumerate() {
        if val > g[best] {
            best = v;
        }
    }
    let mut theta = Array1::from_elem(m, floor);
    theta[best] = 1.0 - (m as f64 - 1.0) * floor;
    Ok(theta)
}

/// Closed-form min-min weights on the simplex: `theta_v` proportional to
/// `1 / g_v`, the minimizer of `sum_v theta_v^2 g_v`.
///
/// Views with (numerically) zero variance absorb all weight, split
/// uniformly among them — the limit of the general formula.
pub fn theta_minmin_from_variances(g: &Array1<f64>) -> Result<Array1<f64>> {
    validate_variances(g)?;
    let m = g.len();
    let zero_views: Vec<usize> =
        g.iter().enumerate().filter(|(_, &v)| v <= ZERO_VARIANCE_EPS).map(|(i, _)| i).collect();
    if !zero_views.is_empty() {
        let share = 1.0 / zero_views.len() as f64;
        let mut theta = Array1::zeros(m);
        for v in zero_views {
            theta[v] = share;
        }
        return Ok(theta);
    }
    let inv = g.mapv(|v| 1.0 / v);
    let total = inv.sum();
    Ok(inv.mapv(|v| v / total))
}

/// Min-max weight update from a bundle and the current embedding.
pub fn update_theta_minmax(bundle: &KernelBundle, h: &ContinuousAssignment) -> Result<CoefVector> {
    let g = within_cluster_variances(bundle, h)?;
    CoefVector::new(theta_minmax_from_variances(&g)?, ConstraintKind::L2Ball)
}

/// Floored-simplex weight update from a bundle and the current embedding.
pub fn update_theta_minc(
    bundle: &KernelBundle,
    h: &ContinuousAssignment,
    theta_min: f64,
) -> Result<CoefVector> {
    let g = within_cluster_variances(bundle, h)?;
    CoefVector::new(
        theta_minc_from_variances(&g, theta_min)?,
        ConstraintKind::L1SimplexFloor { floor: theta_min },
    )
}

/// Min-min weight update from a bundle and the current embedding.
pub fn update_theta_minmin(bundle: &KernelBundle, h: &ContinuousAssignment) -> Result<CoefVector> {
    let g = within_cluster_variances(bundle, h)?;
    CoefVector::new(
        theta_minmin_from_variances(&g)?,
        ConstraintKind::L1SimplexFloor { floor: 0.0 },
    )
}

/// Embedding update: the top-`k` eigenvectors of the combined kernel,
/// which maximize `tr(H^T K H)` over orthonormal `H`. The flag reports
/// whether the eigengap at `k` fell below [`EIGENGAP_EPS`] (the optimal
/// subspace is then not unique).
pub fn update_h(k_combined: &KernelMatrix, k: usize) -> Result<(ContinuousAssignment, bool)> {
    let n = k_combined.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "cluster count k = {k} must satisfy 1 <= k < n = {n}"
        )));
    }
    let (vals, vecs, next) = linalg::eigh_top_k(k_combined.matrix(), k)?;
    let gap = vals[k - 1] - next.expect("k < n guarantees a (k+1)-th eigenvalue");
    Ok((ContinuousAssignment::new(vecs)?, gap < EIGENGAP_EPS))
}

fn objective_value(variant: Variant, theta: &Array1<f64>, g: &Array1<f64>) -> f64 {
    match variant {
        Variant::MinMin => theta.iter().zip(g.iter()).map(|(t, gv)| t * t * gv).sum(),
        _ => theta.dot(g),
    }
}

fn constraint_for(variant: Variant, floor: f64) -> ConstraintKind {
    match variant {
        Variant::MinMaxL2 => ConstraintKind::L2Ball,
        Variant::MinMaxMinC => ConstraintKind::L1SimplexFloor { floor },
        _ => ConstraintKind::L1SimplexFloor { floor: 0.0 },
    }
}

/// Pick the view whose own kernel leaves the least residual variance
/// beyond its top-`k` eigenvalues; ties go to the lowest index.
fn best_single_view(bundle: &KernelBundle, k: usize) -> Result<usize> {
    let mut best = 0usize;
    let mut best_residual = f64::INFINITY;
    for (v, kernel) in bundle.kernels().iter().enumerate() {
        let (vals, _, _) = linalg::eigh_top_k(kernel.matrix(), k)?;
        let residual = kernel.trace() - vals.sum();
        if residual < best_residual {
            best_residual = residual;
            best = v;
        }
    }
    Ok(best)
}

/// Run one embedding update for a fixed weight vector and wrap it as a
/// completed single-iteration solve.
fn solve_fixed_theta(
    bundle: &KernelBundle,
    config: &SolveConfig,
    theta: Array1<f64>,
) -> Result<SolveResult> {
    let combined = combine_linear(bundle.kernels(), &theta)?;
    let (h, warning) = update_h(&combined, config.k)?;
    let g = within_cluster_variances(bundle, &h)?;
    let objective = theta.dot(&g);
    let record = IterationRecord { theta: theta.to_vec(), objective, delta: 0.0 };
    Ok(SolveResult {
        embedding: h,
        theta: CoefVector::new(theta, constraint_for(config.variant, 0.0))?,
        trace: SolveTrace { records: vec![record] },
        converged: true,
        eigengap_warning: warning,
        objective,
    })
}

fn solve_iterative(bundle: &KernelBundle, config: &SolveConfig) -> Result<SolveResult> {
    let m = bundle.len();
    let floor = config.minc_floor.unwrap_or(0.5 / m as f64);
    if config.variant == Variant::MinMaxMinC {
        validate_floor(floor, m)?;
    }
    let mut theta = match config.variant {
        Variant::MinMaxL2 => Array1::from_elem(m, 1.0 / (m as f64).sqrt()),
        _ => Array1::from_elem(m, 1.0 / m as f64),
    };

    let mut records = Vec::new();
    let mut converged = false;
    let mut warning = false;
    let mut embedding = None;

    for _ in 0..config.max_iter {
        let combined = match config.variant {
            Variant::MinMin => combine_squared(bundle.kernels(), &theta)?,
            _ => combine_linear(bundle.kernels(), &theta)?,
        };
        let (h, gap_small) = update_h(&combined, config.k)?;
        warning |= gap_small;
        let g = within_cluster_variances(bundle, &h)?;
        let theta_new = match config.variant {
            Variant::MinMaxL2 => theta_minmax_from_variances(&g)?,
            Variant::MinMaxMinC => theta_minc_from_variances(&g, floor)?,
            Variant::MinMin => theta_minmin_from_variances(&g)?,
            _ => unreachable!("fixed-weight variants handled separately"),
        };
        let delta = (&theta_new - &theta).iter().map(|v| v * v).sum::<f64>().sqrt();
        records.push(IterationRecord {
            theta: theta_new.to_vec(),
            objective: objective_value(config.variant, &theta_new, &g),
            delta,
        });
        theta = theta_new;
        embedding = Some(h);
        if delta < config.tol {
            converged = true;
            break;
        }
    }

    let embedding = embedding.expect("max_iter >= 1 guarantees at least one iteration");
    let objective = records.last().expect("at least one record").objective;
    Ok(SolveResult {
        embedding,
        theta: CoefVector::new(theta, constraint_for(config.variant, floor))?,
        trace: SolveTrace { records },
        converged,
        eigengap_warning: warning,
        objective,
    })
}

/// Cluster a prepared bundle under the configured variant.
///
/// Weights start uniform on the variant's feasible set (`1/sqrt(m)` on
/// the l2 ball, `1/m` on the simplex); each iteration refreshes the
/// embedding first, then the weights. Failing to converge within
/// `max_iter` is reported through [`SolveResult::converged`], not as an
/// error.
pub fn solve(bundle: &KernelBundle, config: &SolveConfig) -> Result<SolveResult> {
    config.validate(bundle.len(), bundle.n())?;
    match config.variant {
        Variant::Uniform => {
            let m = bundle.len();
            solve_fixed_theta(bundle, config, Array1::from_elem(m, 1.0 / m as f64))
        }
        Variant::SingleBest => {
            let best = best_single_view(bundle, config.k)?;
            let mut theta = Array1::zeros(bundle.len());
            theta[best] = 1.0;
            solve_fixed_theta(bundle, config, theta)
        }
        _ => solve_iterative(bundle, config),
    }
}
