//! Exact instance generators: Hamming cubes, cycle/path/grid shortest-path
//! metrics, random l1 point sets, and the uniform (equilateral) metric.

use crate::metric::{MetricSpace, MetricError};
use rand::Rng;
use thiserror::Error;

/// Generated metrics are capped so desk-scale experiments stay tractable.
pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("instance too large: {n} points exceeds the cap of {MAX_POINTS}")]
    TooLarge { n: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn check_size(n: usize) -> Result<(), GenError> {
    if n == 0 || n > MAX_POINTS {
        return Err(GenError::TooLarge { n });
    }
    Ok(())
}

/// Hamming cube `{0,1}^d` with Hamming distance; labels are the bit strings.
pub fn hypercube(d: u32) -> Result<MetricSpace, GenError> {
    let n = 1usize << d;
    check_size(n)?;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = (i ^ j).count_ones() as f64;
        }
    }
    let labels = (0..n).map(|i| format!("{:0width$b}", i, width = d as usize)).collect();
    Ok(MetricSpace::new(m, Some(labels))?)
}

/// Shortest-path metric of the n-cycle.
pub fn cycle(n: usize) -> Result<MetricSpace, GenError> {
    check_size(n)?;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let k = (i as i64 - j as i64).unsigned_abs() as usize;
            m[i][j] = k.min(n - k) as f64;
        }
    }
    Ok(MetricSpace::new(m, None)?)
}

/// Shortest-path metric of the n-vertex path.
pub fn path(n: usize) -> Result<MetricSpace, GenError> {
    check_size(n)?;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = (i as i64 - j as i64).unsigned_abs() as f64;
        }
    }
    Ok(MetricSpace::new(m, None)?)
}

/// Shortest-path metric of the a-by-b grid graph.
pub fn grid(a: usize, b: usize) -> Result<MetricSpace, GenError> {
    let n = a * b;
    check_size(n)?;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (xi, yi) = (i / b, i % b);
        for j in 0..n {
            let (xj, yj) = (j / b, j % b);
            m[i][j] = ((xi as i64 - xj as i64).abs() + (yi as i64 - yj as i64).abs()) as f64;
        }
    }
    Ok(MetricSpace::new(m, None)?)
}

/// l1 distances of `n` uniform-random points in `[0,1]^dim`.
///
/// Coordinates are quantized to multiples of `2^-30` so the pairwise l1
/// sums are exact in binary floating point and the triangle inequality
/// holds without round-off slack.
pub fn random_l1<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Result<MetricSpace, GenError> {
    check_size(n)?;
    let q = (1u64 << 30) as f64;
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| (rng.gen::<f64>() * q).round() / q).collect())
        .collect();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).abs()).sum();
        }
    }
    Ok(MetricSpace::new(m, None)?)
}

/// All pairwise distances equal to 1.
pub fn uniform(n: usize) -> Result<MetricSpace, GenError> {
    check_size(n)?;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[i][j] = 1.0;
            }
        }
    }
    Ok(MetricSpace::new(m, None)?)
}

/// Shortest-path metric of K_{2,3}: points 0..2 are the three-side vertices,
/// 3..4 the two-side hubs. The classic non-negative-type five-point metric.
pub fn k23() -> MetricSpace {
    // leaves 0,1,2 pairwise at distance 2 (through a hub), hubs 3,4 at
    // distance 2, leaf-hub at distance 1
    let mut d = vec![vec![0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..5 {
            if i == j {
                continue;
            }
            let leaf_i = i < 3;
            let leaf_j = j < 3;
            d[i][j] = if leaf_i == leaf_j { 2.0 } else { 1.0 };
        }
    }
    MetricSpace::new(d, None).expect("K_{2,3} metric is valid")
}
