//! External clustering quality metrics.
//!
//! All metrics compare a predicted hard assignment against reference
//! labels through their contingency table and are invariant to how the
//! clusters are numbered.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Cross-tabulation of two labelings over the same samples.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    /// `counts[i][j]` = samples in predicted cluster `i` and true class `j`.
    counts: Vec<Vec<f64>>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
    n: f64,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.is_empty() {
            return Err(Error::InvalidInput("metrics need at least one sample".into()));
        }
        if pred.len() != truth.len() {
            return Err(Error::InvalidInput(format!(
                "label lengths differ: {} predicted vs {} reference",
                pred.len(),
                truth.len()
            )));
        }
        // Map arbitrary label values to dense indices, ordered by value so
        // the table layout is deterministic.
        let mut pred_ids = BTreeMap::new();
        for &l in pred {
            let next = pred_ids.len();
            pred_ids.entry(l).or_insert(next);
        }
        let mut truth_ids = BTreeMap::new();
        for &l in truth {
            let next = truth_ids.len();
            truth_ids.entry(l).or_insert(next);
        }
        let (r, c) = (pred_ids.len(), truth_ids.len());
        let mut counts = vec![vec![0.0; c]; r];
        for (&p, &t) in pred.iter().zip(truth.iter()) {
            counts[pred_ids[&p]][truth_ids[&t]] += 1.0;
        }
        let row_sums: Vec<f64> = counts.iter().map(|row| row.iter().sum()).collect();
        let col_sums: Vec<f64> =
            (0..c).map(|j| counts.iter().map(|row| row[j]).sum()).collect();
        Ok(ContingencyTable { counts, row_sums, col_sums, n: pred.len() as f64 })
    }
}

fn choose2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index (chance-corrected pair-counting agreement).
///
/// Returns 1 for structurally identical partitions, values near 0 for
/// independent ones, and can be negative for worse-than-chance overlap.
pub fn adjusted_rand_index(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(pred, truth)?;
    let index: f64 = t.counts.iter().flatten().map(|&v| choose2(v)).sum();
    let sum_a: f64 = t.row_sums.iter().map(|&v| choose2(v)).sum();
    let sum_b: f64 = t.col_sums.iter().map(|&v| choose2(v)).sum();
    let pairs = choose2(t.n);
    let expected = if pairs > 0.0 { sum_a * sum_b / pairs } else { 0.0 };
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom.abs() < 1e-12 {
        // Both partitions are all-singletons or both are a single cluster;
        // the pair counts carry no information. They agree exactly in
        // those cases precisely when the cluster counts match.
        let identical = t.counts.len() == t.col_sums.len()
            && t.counts.iter().flatten().filter(|&&v| v > 0.0).count() == t.counts.len();
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// Normalization applied to mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmiMode {
    /// Mutual information divided by the geometric mean of the two label
    /// entropies; 1 means perfect agreement.
    Standard,
    /// [`NmiMode::Standard`] divided by `ln 2`, i.e. the same ratio with
    /// the numerator read in bits. A perfect balanced 3-way clustering
    /// scores `1 / ln 2` (about 1.4427) in this mode.
    Log2,
}

/// Normalized mutual information between two labelings.
pub fn normalized_mutual_information(
    pred: &[usize],
    truth: &[usize],
    mode: NmiMode,
) -> Result<f64> {
    let t = ContingencyTable::new(pred, truth)?;
    let n = t.n;
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0.0 {
                mi += (nij / n) * ((n * nij) / (t.row_sums[i] * t.col_sums[j])).ln();
            }
        }
    }
    let entropy = |sums: &[f64]| -> f64 {
        sums.iter().filter(|&&v| v > 0.0).map(|&v| -(v / n) * (v / n).ln()).sum()
    };
    let (h_pred, h_truth) = (entropy(&t.row_sums), entropy(&t.col_sums));
    let standard = if h_pred <= 0.0 && h_truth <= 0.0 {
        1.0 // both partitions are single-cluster, trivially identical
    } else if h_pred <= 0.0 || h_truth <= 0.0 {
        0.0 // one side carries no information
    } else {
        mi / (h_pred * h_truth).sqrt()
    };
    Ok(match mode {
        NmiMode::Standard => standard,
        NmiMode::Log2 => standard / std::f64::consts::LN_2,
    })
}

/// Fraction of samples that fall in their cluster's majority class.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(pred, truth)?;
    let majority: f64 = t
        .counts
        .iter()
        .map(|row| row.iter().cloned().fold(0.0, f64::max))
        .sum();
    Ok(majority / t.n)
}
