//! Dense symmetric eigendecomposition, wrapped so every module shares one
//! numerically trustworthy implementation.

use faer::{Mat, Side};

/// Eigendecomposition of a symmetric matrix given as rows. Returns the
/// eigenvalues in ascending order and the matching eigenvectors as
/// `vecs[c][i]`, one vector per eigenvalue. `None` on numerical breakdown.
pub(crate) fn symmetric_eigen(a: &[Vec<f64>]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    if n == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    // pin sequential execution so results do not depend on thread count
    faer::set_global_parallelism(faer::Par::Seq);
    let m = Mat::from_fn(n, n, |i, j| a[i][j]);
    let eig = m.self_adjoint_eigen(Side::Lower).ok()?;
    let s = eig.S().column_vector();
    let u = eig.U();
    let vals: Vec<f64> = (0..n).map(|c| s[c]).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let vecs = (0..n).map(|c| (0..n).map(|i| u[(i, c)]).collect()).collect();
    Some((vals, vecs))
}
