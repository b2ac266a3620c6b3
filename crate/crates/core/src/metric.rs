//! Finite metric spaces: validation, negative-type testing, the square-root
//! Euclidean realization, balls and dyadic scales.
//!
//! Everything downstream consumes a [`MetricSpace`]. The negative-type test
//! and the square-root embedding both go through the doubly-centered matrix
//! `-1/2 J D J`, whose spectrum decides membership and yields coordinates.

use crate::linalg::symmetric_eigen;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is asymmetric at ({i},{j}): {a} != {b}")]
    AsymmetricMatrix { i: usize, j: usize, a: f64, b: f64 },
    #[error("negative entry at ({i},{j}): {v}")]
    NegativeEntry { i: usize, j: usize, v: f64 },
    #[error("nonzero diagonal at {i}: {v}")]
    NonzeroDiagonal { i: usize, v: f64 },
    #[error("zero distance between distinct points {i} and {j}")]
    ZeroDistance { i: usize, j: usize },
    #[error("triangle inequality violated: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("eigendecomposition failed")]
    EigDecompositionFailure,
    #[error("metric is not of negative type (min eigenvalue {min_eig})")]
    NotNegativeType { min_eig: f64 },
}

/// An `n`-point metric space with an explicit distance matrix.
///
/// Immutable after construction; all operations are pure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricSpace {
    n: usize,
    d: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

/// An explicit point configuration in `R^dim`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointConfig {
    pub n: usize,
    pub dim: usize,
    /// Row-major: `coords[i]` are the coordinates of point `i`.
    pub coords: Vec<Vec<f64>>,
}

impl PointConfig {
    pub fn euclidean(&self, i: usize, j: usize) -> f64 {
        self.coords[i]
            .iter()
            .zip(&self.coords[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.coords[i].iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// Outcome of the negative-type test.
///
/// When `is_negative_type` is false, `witness` is a coefficient vector with
/// `sum(c) = 0` and `sum_{i,j} c_i c_j d(i,j) > 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegativeTypeVerdict {
    pub is_negative_type: bool,
    pub witness: Option<Vec<f64>>,
    pub min_eigenvalue: f64,
}

/// Validates a square matrix as a metric and wraps it.
///
/// Reports the first violated constraint in the order: symmetry, sign,
/// diagonal, positivity off the diagonal, triangle inequality.
pub fn validate_metric(matrix: Vec<Vec<f64>>) -> Result<MetricSpace, MetricError> {
    MetricSpace::new(matrix, None)
}

impl MetricSpace {
    pub fn new(d: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self, MetricError> {
        let n = d.len();
        for (i, row) in d.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::NotSquare { rows: n, cols: row.len() });
            }
            if d[i][i] != 0.0 {
                return Err(MetricError::NonzeroDiagonal { i, v: d[i][i] });
            }
        }
        for i in 0..n {
            for j in 0..n {
                if d[i][j] < 0.0 {
                    return Err(MetricError::NegativeEntry { i, j, v: d[i][j] });
                }
                if j > i {
                    if d[i][j] != d[j][i] {
                        return Err(MetricError::AsymmetricMatrix { i, j, a: d[i][j], b: d[j][i] });
                    }
                    if d[i][j] == 0.0 {
                        return Err(MetricError::ZeroDistance { i, j });
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if d[i][k] > d[i][j] + d[j][k] {
                        return Err(MetricError::TriangleViolation { i, j, k });
                    }
                }
            }
        }
        if let Some(ref l) = labels {
            assert_eq!(l.len(), n, "label count must match point count");
        }
        Ok(MetricSpace { n, d, labels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.d
    }

    pub fn diameter(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m = m.max(self.d[i][j]);
            }
        }
        m
    }

    pub fn min_positive_distance(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m = m.min(self.d[i][j]);
            }
        }
        m
    }

    /// Distance from `i` to the closest point of `set`; `+inf` for the empty set.
    pub fn dist_to_set(&self, i: usize, set: &[usize]) -> f64 {
        set.iter().map(|&j| self.d[i][j]).fold(f64::INFINITY, f64::min)
    }

    /// Restriction of the metric to the given points (indices into `self`).
    pub fn restrict(&self, points: &[usize]) -> MetricSpace {
        let m = points.len();
        let mut d = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in 0..m {
                d[a][b] = self.d[points[a]][points[b]];
            }
        }
        MetricSpace { n: m, d, labels: None }
    }

    /// Returns a copy with every distance multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> MetricSpace {
        let d = self.d.iter().map(|r| r.iter().map(|&v| v * s).collect()).collect();
        MetricSpace { n: self.n, d, labels: self.labels.clone() }
    }
}

/// The doubly-centered matrix `-1/2 J D J` with `J = I - (1/n) 11^T`.
pub(crate) fn centered_gram(m: &MetricSpace) -> Vec<Vec<f64>> {
    let n = m.n;
    let row_means: Vec<f64> = (0..n).map(|i| m.d[i].iter().sum::<f64>() / n as f64).collect();
    let grand: f64 = row_means.iter().sum::<f64>() / n as f64;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| -0.5 * (m.d[i][j] - row_means[i] - row_means[j] + grand))
                .collect()
        })
        .collect()
}

/// Tests whether `(X, sqrt(d))` embeds isometrically in Euclidean space.
///
/// True iff `-1/2 J D J` is positive semidefinite up to `-tol` on its
/// eigenvalues. When false, the returned witness is the eigenvector of the
/// most negative eigenvalue, recentered so its coefficients sum to zero.
pub fn is_negative_type(m: &MetricSpace, tol: f64) -> Result<NegativeTypeVerdict, MetricError> {
    let b = centered_gram(m);
    let (vals, vecs) = symmetric_eigen(&b).ok_or(MetricError::EigDecompositionFailure)?;
    // eigenvalues ascend, so the head is the most negative one
    let min_eig = vals[0];
    if min_eig >= -tol {
        return Ok(NegativeTypeVerdict { is_negative_type: true, witness: None, min_eigenvalue: min_eig });
    }
    let v = &vecs[0];
    let mean = v.iter().sum::<f64>() / m.n as f64;
    let witness: Vec<f64> = v.iter().map(|x| x - mean).collect();
    Ok(NegativeTypeVerdict { is_negative_type: false, witness: Some(witness), min_eigenvalue: min_eig })
}

/// Default eigenvalue tolerance for [`is_negative_type`].
pub fn negative_type_tol(m: &MetricSpace) -> f64 {
    1e-9 * m.diameter().max(1.0)
}

/// Evaluates the quadratic form `sum_{i,j} c_i c_j d(i,j)`.
pub fn quadratic_form(m: &MetricSpace, c: &[f64]) -> f64 {
    let mut q = 0.0;
    for i in 0..m.n {
        for j in 0..m.n {
            q += c[i] * c[j] * m.d[i][j];
        }
    }
    q
}

/// Coordinates with `||g(i) - g(j)||^2 = d(i,j)`, via eigendecomposition of
/// the centered matrix. Eigenvalues in `(-tol, tol)` are discarded, so
/// rank-deficient configurations (cube metrics) do not abort on round-off.
pub fn sqrt_embedding(m: &MetricSpace) -> Result<PointConfig, MetricError> {
    let tol = negative_type_tol(m);
    let b = centered_gram(m);
    let (vals, vecs) = symmetric_eigen(&b).ok_or(MetricError::EigDecompositionFailure)?;
    let min_eig = vals[0];
    if min_eig < -tol {
        return Err(MetricError::NotNegativeType { min_eig });
    }
    let kept: Vec<usize> = (0..m.n).filter(|&k| vals[k] > tol).collect();
    let dim = kept.len();
    let mut coords = vec![vec![0.0; dim]; m.n];
    for (c, &k) in kept.iter().enumerate() {
        let s = vals[k].sqrt();
        for i in 0..m.n {
            coords[i][c] = s * vecs[k][i];
        }
    }
    Ok(PointConfig { n: m.n, dim, coords })
}

/// Closed ball `{y : d(x,y) <= r}`; always contains `x`.
pub fn ball(m: &MetricSpace, x: usize, r: f64) -> Vec<usize> {
    (0..m.n).filter(|&y| m.dist(x, y) <= r).collect()
}

/// Cardinality of the closed ball, without materializing it.
pub fn ball_size(m: &MetricSpace, x: usize, r: f64) -> usize {
    (0..m.n).filter(|&y| m.dist(x, y) <= r).count()
}

/// The telescoping growth sum `sum_k log2(|B(x, 2^{k+a})| / |B(x, 2^k)|)`
/// over all integer `k` with `2^k` ranging from below the minimum positive
/// distance to above the diameter. Exact telescoping gives `<= a * log2 n`.
pub fn growth_sum(m: &MetricSpace, x: usize, a: u32) -> f64 {
    assert!(a >= 1);
    let (lo, hi) = dyadic_scales(m);
    // Below 2^lo every ball is {x}; above 2^(hi+1) every ball is X. Extending
    // the summation range by `a` on each side captures every nonzero term.
    let a = a as i32;
    let first = lo - a - 1;
    let last = hi + 1;
    // Each residue class of k (mod a) telescopes to the ratio of its two
    // endpoint balls, so only the endpoints are counted; this keeps the
    // a * log2 n bound exact in floating point as well.
    let mut sum = 0.0;
    for r in 0..a {
        let bottom = ball_size(m, x, pow2(first + r)) as f64;
        let top = first + r + ((last - first - r) / a) * a;
        let big = ball_size(m, x, pow2(top + a)) as f64;
        sum += (big / bottom).log2();
    }
    sum
}

pub fn pow2(k: i32) -> f64 {
    2.0f64.powi(k)
}

/// The minimal contiguous integer range `[m_min, m_max]` such that every
/// positive distance lies in `[2^m_min, 2^(m_max+1)]`.
pub fn dyadic_scales(m: &MetricSpace) -> (i32, i32) {
    let lo = m.min_positive_distance();
    let hi = m.diameter();
    let m_min = lo.log2().floor() as i32;
    let m_max = ((hi.log2().ceil() as i32) - 1).max(m_min);
    debug_assert!(pow2(m_min) <= lo * (1.0 + 1e-12));
    debug_assert!(pow2(m_max + 1) >= hi * (1.0 - 1e-12));
    (m_min, m_max)
}
