//! Thin wrappers around the dense eigendecomposition / SVD backend.
//!
//! The public crate API speaks `ndarray`; this module converts to the
//! backend's matrix type, runs the factorization, and converts back,
//! fixing an ordering and sign convention so results are deterministic:
//!
//! * eigenvalues are returned in descending order (stable on ties, so
//!   equal eigenvalues keep the backend's relative order);
//! * each returned eigenvector is scaled so its largest-magnitude entry
//!   (the first such entry on ties) is positive.

use faer::{Mat, Side};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

fn to_faer(a: &Array2<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Fix the sign of each column so its largest-|entry| is positive.
fn fix_column_signs(m: &mut Array2<f64>) {
    for mut col in m.columns_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// Returns `(values, vectors)` where `vectors.column(j)` is the unit
/// eigenvector for `values[j]`. The input is read as symmetric (lower
/// triangle); callers are expected to have symmetrized already.
pub(crate) fn eigh_desc(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "eigendecomposition needs a square non-empty matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix for eigendecomposition".into()));
    }
    let decomp = to_faer(a).selfadjoint_eigendecomposition(Side::Lower);
    let s = decomp.s().column_vector();
    let u = decomp.u();

    // The backend yields eigenvalues in ascending order; re-rank descending
    // with a stable sort so ties keep their original relative order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.read(j).partial_cmp(&s.read(i)).unwrap_or(std::cmp::Ordering::Equal));

    let values = Array1::from_iter(order.iter().map(|&i| s.read(i)));
    let mut vectors = Array2::zeros((n, n));
    for (out_col, &src_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, out_col]] = u.read(row, src_col);
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("eigendecomposition produced non-finite eigenvalues".into()));
    }
    fix_column_signs(&mut vectors);
    Ok((values, vectors))
}

/// Top-`k` eigenpairs of a symmetric matrix (descending eigenvalues),
/// plus the `(k+1)`-th eigenvalue when it exists (for eigengap checks).
pub(crate) fn eigh_top_k(
    a: &Array2<f64>,
    k: usize,
) -> Result<(Array1<f64>, Array2<f64>, Option<f64>)> {
    let n = a.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenpairs from a {n}x{n} matrix"
        )));
    }
    let (values, vectors) = eigh_desc(a)?;
    let next = if k < n { Some(values[k]) } else { None };
    let top_vals = values.slice(ndarray::s![..k]).to_owned();
    let top_vecs = vectors.slice(ndarray::s![.., ..k]).to_owned();
    Ok((top_vals, top_vecs, next))
}

/// Thin singular value decomposition `a = u * diag(s) * v^T`.
///
/// Singular values are returned in descending order; `u` is `n x r` and
/// `v` is `p x r` with `r = min(n, p)`. Only tests use it, as an
/// independent cross-check on spectral quantities.
#[cfg(test)]
pub(crate) fn svd_thin(a: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (n, p) = (a.nrows(), a.ncols());
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput("svd of an empty matrix".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix for svd".into()));
    }
    let svd = to_faer(a).thin_svd();
    let r = n.min(p);
    let sv = svd.s_diagonal();
    let singular = Array1::from_iter((0..r).map(|i| sv.read(i)));
    let u = svd.u();
    let v = svd.v();
    let u_nd = Array2::from_shape_fn((n, r), |(i, j)| u.read(i, j));
    let v_nd = Array2::from_shape_fn((p, r), |(i, j)| v.read(i, j));
    Ok((u_nd, singular, v_nd))
}
