//! Deterministic synthetic multi-view scenarios with adversarial
//! perturbations.
//!
//! Three balanced Gaussian clusters are observed through two or three
//! views whose informativeness differs by scenario:
//!
//! * **A** — view 1 is complete (three distinct cluster means along a
//!   line, `+mu / 0 / -mu`), view 2 only separates cluster 3.
//! * **B** — view 1 only separates cluster 1, view 2 only separates
//!   cluster 3; the full structure emerges only jointly.
//! * **C** — scenario B plus a third, pure-noise view.
//!
//! Perturbations are appended to view 1: either pure Gaussian noise
//! columns or redundant columns correlated with view 1's original
//! features. After perturbation every feature is standardized (mean 0,
//! unit sample standard deviation), so added columns dilute a view
//! instead of merely widening it. Generation is bit-identical for a
//! given spec, including the seed.

use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::standardize_columns;
use crate::rounding::HardAssignment;

/// Default samples per cluster.
///
/// Together with [`DEFAULT_MU_SEP`] this places the clusters near the
/// spectral detection threshold: unperturbed scenarios cluster
/// perfectly, while a few appended noise columns push an unweighted
/// kernel combination past the point where the cluster eigenvalues sink
/// into the bulk.
pub const DEFAULT_N_PER_CLUSTER: usize = 150;
/// Default features per informative view.
pub const DEFAULT_FEATURES: usize = 10;
/// Default cluster-mean separation; see [`DEFAULT_N_PER_CLUSTER`].
pub const DEFAULT_MU_SEP: f64 = 3.35;

/// Which view layout to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    A,
    B,
    C,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            "C" | "c" => Ok(Scenario::C),
            other => Err(Error::InvalidInput(format!(
                "unknown scenario `{other}` (expected A, B, or C)"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::A => "A",
            Scenario::B => "B",
            Scenario::C => "C",
        })
    }
}

/// Adversarial modification appended to view 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    None,
    /// `count` independent standard-normal columns.
    Noise { count: usize },
    /// `count` columns, each correlated `rho` with one of view 1's
    /// original columns (cycling over them).
    Redundant { count: usize, rho: f64 },
}

/// Full description of one synthetic dataset.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub perturbation: Perturbation,
    pub n_per_cluster: usize,
    pub p: usize,
    pub mu_sep: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        ScenarioSpec {
            scenario,
            perturbation: Perturbation::None,
            n_per_cluster: DEFAULT_N_PER_CLUSTER,
            p: DEFAULT_FEATURES,
            mu_sep: DEFAULT_MU_SEP,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_cluster < 2 {
            return Err(Error::InvalidInput("n_per_cluster must be at least 2".into()));
        }
        if self.p == 0 {
            return Err(Error::InvalidInput("views need at least one feature".into()));
        }
        if !self.mu_sep.is_finite() || self.mu_sep < 0.0 {
            return Err(Error::InvalidInput(format!(
                "mu_sep must be finite and nonnegative, got {}",
                self.mu_sep
            )));
        }
        if let Perturbation::Redundant { rho, .. } = self.perturbation {
            validate_rho(rho)?;
        }
        Ok(())
    }
}

/// Generated views plus the ground-truth labels (always 3 clusters).
#[derive(Debug, Clone)]
pub struct LabeledMultiview {
    pub views: Vec<Array2<f64>>,
    pub truth: HardAssignment,
}

fn validate_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho <= 0.0 || rho > 1.0 {
        return Err(Error::InvalidInput(format!(
            "correlation rho must lie in (0, 1], got {rho}"
        )));
    }
    Ok(())
}

/// Draw an `n x p` matrix of standard normals in row-major order, so
/// the stream position after the call is independent of memory layout.
fn standard_normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    let data: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    Array2::from_shape_vec((n, p), data).expect("length n*p by construction")
}

fn add_cluster_means(view: &mut Array2<f64>, labels: &[usize], means: [f64; 3]) {
    for (i, &label) in labels.iter().enumerate() {
        let shift = means[label];
        for value in view.row_mut(i) {
            *value += shift;
        }
    }
}

fn standardize_vector(x: &Array1<f64>) -> Result<Array1<f64>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput("standardization needs at least two values".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("column for standardization".into()));
    }
    let mean = x.sum() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n as f64 - 1.0)).sqrt();
    if sd <= 0.0 {
        return Err(Error::InvalidInput("column has zero variance".into()));
    }
    Ok(x.mapv(|v| (v - mean) / sd))
}

fn redundant_from(x: &Array1<f64>, rho: f64, rng: &mut ChaCha8Rng) -> Result<Array1<f64>> {
    let xs = standardize_vector(x)?;
    let slack = (1.0 - rho * rho).sqrt();
    let z = Array1::from_iter(
        xs.iter().map(|&v| rho * v + slack * rng.sample::<f64, _>(StandardNormal)),
    );
    standardize_vector(&z)
}

/// Produce a column correlated `rho` with `x`: standardize `x`, mix in
/// `sqrt(1 - rho^2)` worth of fresh Gaussian noise, standardize again.
/// `rho = 1` returns an exact standardized copy.
pub fn make_redundant(x: &Array1<f64>, rho: f64, seed: u64) -> Result<Array1<f64>> {
    validate_rho(rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    redundant_from(x, rho, &mut rng)
}

/// Generate the scenario described by `spec`. Deterministic: the same
/// spec yields bit-identical output.
pub fn generate(spec: &ScenarioSpec) -> Result<LabeledMultiview> {
    spec.validate()?;
    let npc = spec.n_per_cluster;
    let n = 3 * npc;
    let p = spec.p;
    let mu = spec.mu_sep;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<usize> = (0..n).map(|i| i / npc).collect();

    let mut views: Vec<Array2<f64>> = Vec::new();
    match spec.scenario {
        Scenario::A => {
            // Complete view: three collinear means. The partial second
            // view still only tells cluster 3 apart from the rest.
            let mut v1 = standard_normal_matrix(&mut rng, n, p);
            add_cluster_means(&mut v1, &labels, [mu, 0.0, -mu]);
            let mut v2 = standard_normal_matrix(&mut rng, n, p);
            add_cluster_means(&mut v2, &labels, [-mu, -mu, mu]);
            views.push(v1);
            views.push(v2);
        }
        Scenario::B | Scenario::C => {
            let mut v1 = standard_normal_matrix(&mut rng, n, p);
            add_cluster_means(&mut v1, &labels, [mu, -mu, -mu]);
            let mut v2 = standard_normal_matrix(&mut rng, n, p);
            add_cluster_means(&mut v2, &labels, [-mu, -mu, mu]);
            views.push(v1);
            views.push(v2);
            if spec.scenario == Scenario::C {
                views.push(standard_normal_matrix(&mut rng, n, p));
            }
        }
    }

    match spec.perturbation {
        Perturbation::None => {}
        Perturbation::Noise { count } => {
            if count > 0 {
                let noise = standard_normal_matrix(&mut rng, n, count);
                views[0] = concatenate(Axis(1), &[views[0].view(), noise.view()])
                    .expect("row counts match");
            }
        }
        Perturbation::Redundant { count, rho } => {
            // Sources cycle over view 1's original columns, which still
            // occupy the first p positions.
            for j in 0..count {
                let src = views[0].column(j % p).to_owned();
                let col = redundant_from(&src, rho, &mut rng)?;
                let col2 = col.insert_axis(Axis(1));
                views[0] = concatenate(Axis(1), &[views[0].view(), col2.view()])
                    .expect("row counts match");
            }
        }
    }

    for view in &mut views {
        standardize_columns(view)?;
    }

    Ok(LabeledMultiview { views, truth: HardAssignment::new(labels, 3)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    fn cluster_means(view: &Array2<f64>, labels: &[usize], col: usize) -> [f64; 3] {
        let mut sums = [0.0; 3];
        let mut counts = [0usize; 3];
        for (i, &l) in labels.iter().enumerate() {
            sums[l] += view[[i, col]];
            counts[l] += 1;
        }
        [sums[0] / counts[0] as f64, sums[1] / counts[1] as f64, sums[2] / counts[2] as f64]
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = ScenarioSpec {
            perturbation: Perturbation::Noise { count: 3 },
            ..ScenarioSpec::new(Scenario::B, 7)
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.views.len(), b.views.len());
        for (va, vb) in a.views.iter().zip(&b.views) {
            assert_eq!(va, vb);
        }
        assert_eq!(a.truth.labels(), b.truth.labels());

        let other = generate(&ScenarioSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.views[0], other.views[0]);
    }

    #[test]
    fn shapes_and_labels() {
        let npc = 20;
        for (scenario, n_views) in [(Scenario::A, 2), (Scenario::B, 2), (Scenario::C, 3)] {
            let spec = ScenarioSpec {
                n_per_cluster: npc,
                ..ScenarioSpec::new(scenario, 1)
            };
            let data = generate(&spec).unwrap();
            assert_eq!(data.views.len(), n_views);
            for view in &data.views {
                assert_eq!(view.dim(), (3 * npc, DEFAULT_FEATURES));
            }
            let counts = data.truth.counts();
            assert_eq!(counts, vec![npc, npc, npc]);
        }
    }

    #[test]
    fn perturbations_extend_view_one_only() {
        let base = ScenarioSpec { n_per_cluster: 30, ..ScenarioSpec::new(Scenario::B, 3) };
        let noisy = generate(&ScenarioSpec {
            perturbation: Perturbation::Noise { count: 5 },
            ..base.clone()
        })
        .unwrap();
        assert_eq!(noisy.views[0].ncols(), DEFAULT_FEATURES + 5);
        assert_eq!(noisy.views[1].ncols(), DEFAULT_FEATURES);

        let redundant = generate(&ScenarioSpec {
            perturbation: Perturbation::Redundant { count: 3, rho: 0.9 },
            ..base
        })
        .unwrap();
        assert_eq!(redundant.views[0].ncols(), DEFAULT_FEATURES + 3);
    }

    #[test]
    fn columns_are_standardized() {
        let data = generate(&ScenarioSpec {
            n_per_cluster: 40,
            perturbation: Perturbation::Noise { count: 2 },
            ..ScenarioSpec::new(Scenario::C, 5)
        })
        .unwrap();
        for view in &data.views {
            let n = view.nrows() as f64;
            for col in view.columns() {
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
                assert_abs_diff_eq!(var, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn scenario_b_separates_cluster_one_in_view_one() {
        let data = generate(&ScenarioSpec::new(Scenario::B, 11)).unwrap();
        let labels = data.truth.labels().to_vec();
        for col in 0..DEFAULT_FEATURES {
            let [m0, m1, m2] = cluster_means(&data.views[0], &labels, col);
            // Cluster 1 sits well above clusters 2 and 3, which overlap.
            assert!(m0 - m1 > 1.5, "col {col}: {m0} vs {m1}");
            assert!(m0 - m2 > 1.5, "col {col}: {m0} vs {m2}");
            assert!((m1 - m2).abs() < 0.5);
            // And view 2 separates only cluster 3.
            let [w0, w1, w2] = cluster_means(&data.views[1], &labels, col);
            assert!(w2 - w0 > 1.5);
            assert!(w2 - w1 > 1.5);
            assert!((w0 - w1).abs() < 0.5);
        }
    }

    #[test]
    fn scenario_a_first_view_orders_all_three_clusters() {
        let data = generate(&ScenarioSpec::new(Scenario::A, 13)).unwrap();
        let labels = data.truth.labels().to_vec();
        for col in 0..DEFAULT_FEATURES {
            let [m0, m1, m2] = cluster_means(&data.views[0], &labels, col);
            assert!(m0 - m1 > 0.6, "col {col}: expected cluster order, got {m0} {m1} {m2}");
            assert!(m1 - m2 > 0.6, "col {col}: expected cluster order, got {m0} {m1} {m2}");
        }
    }

    #[test]
    fn noise_columns_carry_no_cluster_signal() {
        let data = generate(&ScenarioSpec {
            perturbation: Perturbation::Noise { count: 5 },
            ..ScenarioSpec::new(Scenario::B, 17)
        })
        .unwrap();
        let labels = data.truth.labels().to_vec();
        for j in 0..5 {
            let col: Vec<f64> = data.views[0].column(DEFAULT_FEATURES + j).to_vec();
            for cluster in 0..3 {
                let indicator: Vec<f64> =
                    labels.iter().map(|&l| if l == cluster { 1.0 } else { 0.0 }).collect();
                let r = pearson(&col, &indicator);
                assert!(r.abs() <= 0.2, "noise column {j} vs cluster {cluster}: r = {r}");
            }
        }
    }

    #[test]
    fn redundant_columns_track_their_sources() {
        let data = generate(&ScenarioSpec {
            perturbation: Perturbation::Redundant { count: 3, rho: 0.90 },
            ..ScenarioSpec::new(Scenario::B, 19)
        })
        .unwrap();
        for j in 0..3 {
            let added: Vec<f64> = data.views[0].column(DEFAULT_FEATURES + j).to_vec();
            let source: Vec<f64> = data.views[0].column(j % DEFAULT_FEATURES).to_vec();
            let r = pearson(&added, &source);
            assert!((r - 0.90).abs() <= 0.05, "column {j}: r = {r}");
        }
    }

    #[test]
    fn make_redundant_extremes() {
        let x = Array1::from_iter((0..50).map(|i| (i as f64 * 0.7).sin() * 3.0 + i as f64 * 0.1));
        let copy = make_redundant(&x, 1.0, 99).unwrap();
        let xs = standardize_vector(&x).unwrap();
        for (a, b) in copy.iter().zip(xs.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }

        // Large-n correlation lands near the target.
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let big = Array1::from_iter((0..10000).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let z = make_redundant(&big, 0.45, 321).unwrap();
        let r = pearson(big.as_slice().unwrap(), z.as_slice().unwrap());
        assert!((r - 0.45).abs() <= 0.03, "r = {r}");

        assert!(make_redundant(&x, 0.0, 1).is_err());
        assert!(make_redundant(&x, 1.2, 1).is_err());
        let constant = Array1::from_elem(10, 4.0);
        assert!(make_redundant(&constant, 0.5, 1).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = ScenarioSpec::new(Scenario::B, 1);
        spec.n_per_cluster = 1;
        assert!(generate(&spec).is_err());

        let mut spec = ScenarioSpec::new(Scenario::B, 1);
        spec.p = 0;
        assert!(generate(&spec).is_err());

        let mut spec = ScenarioSpec::new(Scenario::B, 1);
        spec.mu_sep = f64::NAN;
        assert!(generate(&spec).is_err());

        let mut spec = ScenarioSpec::new(Scenario::B, 1);
        spec.perturbation = Perturbation::Redundant { count: 2, rho: 0.0 };
        assert!(generate(&spec).is_err());

        assert!("D".parse::<Scenario>().is_err());
        assert_eq!("b".parse::<Scenario>().unwrap(), Scenario::B);
    }
}
