//! Multiple kernel k-means clustering with a min-max view-weighting rule.
//!
//! This crate clusters multi-view data by combining one kernel matrix per
//! view into a single weighted kernel and alternating between two steps:
//! a spectral relaxation of k-means on the combined kernel (the top-`k`
//! eigenvectors), and a closed-form update of the per-view weights. The
//! flagship rule weights views adversarially — it minimizes the worst
//! case over the weight ball, which drives the weights of uninformative
//! or redundant views toward zero — alongside several reference rules
//! (a simplex-floored min-max variant, a min-min rule that rewards
//! already-easy views, uniform weights, and single best view).
//!
//! Pipeline overview:
//!
//! 1. [`kernels`] — build per-view kernel matrices (RBF or linear),
//!    center them in feature space, and scale each to unit trace.
//! 2. [`solver`] — alternate spectral embedding / weight updates until
//!    the weight vector stabilizes.
//! 3. [`rounding`] — round the continuous embedding to hard labels with
//!    multi-start k-means.
//! 4. [`metrics`] — score agreement with reference labels (adjusted Rand
//!    index, normalized mutual information, purity).
//! 5. [`simgen`] — deterministic synthetic multi-view generators with
//!    controlled noise / redundancy perturbations, used by the
//!    benchmark harness in [`bench`] and the `mkkc` CLI.

pub mod bench;
pub mod error;
pub mod io;
pub mod kernels;
mod linalg;
pub mod metrics;
pub mod rounding;
pub mod simgen;
pub mod solver;

pub use error::{Error, Result};
