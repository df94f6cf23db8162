//! Rounding a continuous spectral embedding into hard cluster labels.
//!
//! Embedding rows are normalized to the unit sphere and clustered with
//! multi-start Lloyd k-means (k-means++ seeding). Every start draws its
//! seed from one master stream up front, so results are reproducible for
//! a given `(seed, n_starts)` regardless of how starts are scheduled.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Hard cluster labels for `n` samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl HardAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("empty label vector".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidInput(format!("label {bad} out of range for k = {k}")));
        }
        Ok(HardAssignment { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Cluster sizes, indexed by label.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Result of the multi-start k-means search.
#[derive(Debug, Clone)]
pub struct KmeansOutcome {
    pub assignment: HardAssignment,
    /// Within-cluster sum of squared distances of the winning start.
    pub wcss: f64,
    /// Index of the start that produced the winning solution.
    pub start_index: usize,
}

/// Scale each row to unit Euclidean norm.
///
/// A zero row cannot be placed on the sphere and reports its index via
/// [`Error::DegenerateEmbedding`].
pub fn normalize_rows(h: &Array2<f64>) -> Result<Array2<f64>> {
    if h.nrows() == 0 || h.ncols() == 0 {
        return Err(Error::InvalidInput("empty embedding".into()));
    }
    let mut out = h.clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite(format!("embedding row {i}")));
        }
        if norm <= 1e-300 {
            return Err(Error::DegenerateEmbedding(i));
        }
        row.mapv_inplace(|v| v / norm);
    }
    Ok(out)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, later centers sampled with
/// probability proportional to squared distance from the nearest chosen
/// center. When every candidate distance is zero (duplicated points),
/// falls back to a uniform draw.
fn seed_centers(points: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let d = points.ncols();
    let mut centers = Array2::zeros((k, d));
    let first = rng.gen_range(0..n);
    centers.row_mut(0).assign(&points.row(first));

    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i).as_slice().unwrap(), centers.row(0).as_slice().unwrap()))
        .collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                acc += w;
                if target < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(pick));
        for i in 0..n {
            let dist = sq_dist(points.row(i).as_slice().unwrap(), centers.row(c).as_slice().unwrap());
            if dist < nearest[i] {
                nearest[i] = dist;
            }
        }
    }
    centers
}

fn assign_points(points: &Array2<f64>, centers: &Array2<f64>, labels: &mut [usize]) {
    for (i, point) in points.rows().into_iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, center) in centers.rows().into_iter().enumerate() {
            let d = sq_dist(point.as_slice().unwrap(), center.as_slice().unwrap());
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels[i] = best;
    }
}

fn wcss_of(points: &Array2<f64>, centers: &Array2<f64>, labels: &[usize]) -> f64 {
    points
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p.as_slice().unwrap(), centers.row(l).as_slice().unwrap()))
        .sum()
}

/// One Lloyd run from a k-means++ seeding; returns labels and WCSS.
fn lloyd_once(points: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    const MAX_LLOYD_ITERS: usize = 300;
    let n = points.nrows();
    let d = points.ncols();
    let mut centers = seed_centers(points, k, rng);
    let mut labels = vec![0usize; n];
    assign_points(points, &centers, &mut labels);
    let mut prev_obj = f64::INFINITY;

    for _ in 0..MAX_LLOYD_ITERS {
        // Means of each cluster.
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (p, &l) in points.rows().into_iter().zip(&labels) {
            let mut row = sums.row_mut(l);
            row += &p;
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mut row = sums.row_mut(c);
                row.mapv_inplace(|v| v / counts[c] as f64);
                centers.row_mut(c).assign(&row);
            } else {
                // Re-seed an empty cluster at the point farthest from its
                // current center, the standard escape from a dead start.
                let mut far = 0usize;
                let mut far_d = -1.0;
                for (i, p) in points.rows().into_iter().enumerate() {
                    let dist = sq_dist(
                        p.as_slice().unwrap(),
                        centers.row(labels[i]).as_slice().unwrap(),
                    );
                    if dist > far_d {
                        far_d = dist;
                        far = i;
                    }
                }
                centers.row_mut(c).assign(&points.row(far));
            }
        }

        let mut next = vec![0usize; n];
        assign_points(points, &centers, &mut next);
        let obj = wcss_of(points, &centers, &next);
        debug_assert!(
            obj <= prev_obj + 1e-9,
            "Lloyd objective increased: {prev_obj} -> {obj}"
        );
        prev_obj = obj;
        if next == labels {
            break;
        }
        labels = next;
    }
    let final_wcss = wcss_of(points, &centers, &labels);
    (labels, final_wcss)
}

/// Multi-start k-means. The best start wins on strictly smaller WCSS, so
/// ties go to the earliest start index.
pub fn kmeans(points: &Array2<f64>, k: usize, n_starts: usize, seed: u64) -> Result<KmeansOutcome> {
    let n = points.nrows();
    if n == 0 || points.ncols() == 0 {
        return Err(Error::InvalidInput("empty point matrix for k-means".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("k = {k} invalid for {n} points")));
    }
    if n_starts == 0 {
        return Err(Error::InvalidInput("k-means needs at least one start".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("point matrix for k-means".into()));
    }

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let start_seeds: Vec<u64> = (0..n_starts).map(|_| master.gen()).collect();

    let mut best: Option<(Vec<usize>, f64, usize)> = None;
    for (idx, &s) in start_seeds.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let (labels, wcss) = lloyd_once(points, k, &mut rng);
        let better = match &best {
            None => true,
            Some((_, best_wcss, _)) => wcss < *best_wcss,
        };
        if better {
            best = Some((labels, wcss, idx));
        }
    }
    let (labels, wcss, start_index) = best.expect("at least one start ran");
    Ok(KmeansOutcome { assignment: HardAssignment::new(labels, k)?, wcss, start_index })
}

/// Round a spectral embedding to hard labels: row-normalize, then
/// multi-start k-means on the sphere.
pub fn round_assignment(
    h: &Array2<f64>,
    k: usize,
    n_starts: usize,
    seed: u64,
) -> Result<KmeansOutcome> {
    let normalized = normalize_rows(h)?;
    kmeans(&normalized, k, n_starts, seed)
}

/// Default number of k-means starts used by the CLI and benchmarks.
pub const DEFAULT_KMEANS_STARTS: usize = 100;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::adjusted_rand_index;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn blobs() -> (Array2<f64>, Vec<usize>) {
        // Three tight, well-separated 2-D blobs of 5 points each.
        let mut pts = Vec::new();
        let centers = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)];
        let offsets = [(-0.1, 0.0), (0.1, 0.0), (0.0, -0.1), (0.0, 0.1), (0.05, 0.05)];
        let mut truth = Vec::new();
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for &(dx, dy) in &offsets {
                pts.push([cx + dx, cy + dy]);
                truth.push(c);
            }
        }
        let flat: Vec<f64> = pts.iter().flat_map(|p| p.iter().cloned()).collect();
        (Array2::from_shape_vec((15, 2), flat).unwrap(), truth)
    }

    #[test]
    fn recovers_separated_blobs() {
        let (pts, truth) = blobs();
        let out = kmeans(&pts, 3, 10, 42).unwrap();
        let ari = adjusted_rand_index(out.assignment.labels(), &truth).unwrap();
        assert_abs_diff_eq!(ari, 1.0, epsilon = 1e-12);
        assert_eq!(out.assignment.counts(), vec![5, 5, 5]);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (pts, _) = blobs();
        let a = kmeans(&pts, 3, 7, 9001).unwrap();
        let b = kmeans(&pts, 3, 7, 9001).unwrap();
        assert_eq!(a.assignment.labels(), b.assignment.labels());
        assert_eq!(a.start_index, b.start_index);
        assert_eq!(a.wcss, b.wcss);
    }

    #[test]
    fn more_starts_never_worse() {
        let (pts, _) = blobs();
        let one = kmeans(&pts, 3, 1, 5).unwrap();
        let many = kmeans(&pts, 3, 20, 5).unwrap();
        assert!(many.wcss <= one.wcss + 1e-12);
    }

    #[test]
    fn extreme_k_values() {
        let (pts, _) = blobs();
        let all_one = kmeans(&pts, 1, 3, 1).unwrap();
        assert!(all_one.assignment.labels().iter().all(|&l| l == 0));
        // k = n puts every point in its own cluster with zero cost.
        let singletons = kmeans(&pts, 15, 3, 1).unwrap();
        assert_abs_diff_eq!(singletons.wcss, 0.0, epsilon = 1e-18);
        let mut seen = singletons.assignment.labels().to_vec();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 15);
    }

    #[test]
    fn handles_duplicate_points() {
        // More clusters than distinct locations still terminates and
        // yields zero cost (duplicates share a center).
        let pts = array![
            [1.0, 1.0],
            [1.0, 1.0],
            [1.0, 1.0],
            [5.0, 5.0],
        ];
        let out = kmeans(&pts, 3, 5, 3).unwrap();
        assert_abs_diff_eq!(out.wcss, 0.0, epsilon = 1e-18);
        // The two distinct locations never share a cluster.
        let l = out.assignment.labels();
        assert_eq!(l[0], l[1]);
        assert_eq!(l[1], l[2]);
        assert_ne!(l[0], l[3]);
    }

    #[test]
    fn normalize_rows_unit_norm_and_zero_row() {
        let h = array![
            [3.0, 4.0],
            [0.0, -2.0],
        ];
        let normalized = normalize_rows(&h).unwrap();
        assert_abs_diff_eq!(normalized[[0, 0]], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(normalized[[0, 1]], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(normalized[[1, 1]], -1.0, epsilon = 1e-15);

        let zero = array![[1.0, 0.0], [0.0, 0.0]];
        match normalize_rows(&zero).unwrap_err() {
            Error::DegenerateEmbedding(row) => assert_eq!(row, 1),
            other => panic!("expected degenerate embedding, got {other:?}"),
        }
    }

    #[test]
    fn rounding_separates_angles() {
        // Rows along two different directions, mixed magnitudes: after
        // normalization they form two antipodal groups.
        let h = array![
            [2.0, 0.1],
            [0.5, 0.0],
            [9.0, 0.2],
            [-3.0, 0.1],
            [-0.4, 0.0],
            [-7.0, -0.3],
        ];
        let out = round_assignment(&h, 2, 10, 77).unwrap();
        let truth = [0, 0, 0, 1, 1, 1];
        let ari = adjusted_rand_index(out.assignment.labels(), &truth).unwrap();
        assert_abs_diff_eq!(ari, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rounding_recovers_exact_indicator() {
        // An exact scaled indicator embedding (rows constant within each
        // cluster) must reproduce the underlying labels.
        let truth = [0usize, 1, 1, 2, 0, 2];
        let mut h = Array2::zeros((6, 3));
        for (i, &c) in truth.iter().enumerate() {
            h[[i, c]] = 1.0 / (2.0f64).sqrt();
        }
        let out = round_assignment(&h, 3, 5, 11).unwrap();
        let ari = adjusted_rand_index(out.assignment.labels(), &truth).unwrap();
        assert_abs_diff_eq!(ari, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn input_validation() {
        let (pts, _) = blobs();
        assert!(kmeans(&pts, 0, 5, 1).is_err());
        assert!(kmeans(&pts, 16, 5, 1).is_err());
        assert!(kmeans(&pts, 3, 0, 1).is_err());
        let empty: Array2<f64> = Array2::zeros((0, 2));
        assert!(kmeans(&empty, 1, 1, 1).is_err());
        let mut bad = pts.clone();
        bad[[0, 0]] = f64::INFINITY;
        assert!(kmeans(&bad, 3, 5, 1).is_err());
        assert!(HardAssignment::new(vec![0, 3], 3).is_err());
    }
}
