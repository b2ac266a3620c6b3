//! Single-scale map constructions: Frechet maps from zero-set samplers, the
//! norm-preserving truncation, neighborhood extension, random-subset
//! localization, padded localization, and the small-ratio base map.
//!
//! Distribution-valued maps are realized by finitely many independent draws
//! concatenated with `1/sqrt(T)` scaling, so every returned [`Embedding`] is
//! deterministically Lipschitz, not just in expectation.

use crate::decomp::{reweighted_zero_set_family, padded_partition, ReweightedConfig, ZeroSetDistribution};
use crate::linalg::symmetric_eigen;
use crate::metric::{MetricSpace, PointConfig};
use crate::seeds::SeedStream;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("truncation kernel is not positive semidefinite (min eigenvalue {min_eig})")]
    KernelNotPsd { min_eig: f64 },
    #[error("truncation bounds violated on pair ({i},{j}): ratio {ratio}")]
    TruncationBoundViolated { i: usize, j: usize, ratio: f64 },
    #[error("neighborhood extension requires a nonempty set")]
    EmptySet,
    #[error("eigendecomposition failed")]
    EigFailure,
    #[error("single-scale provider failed: {0}")]
    Provider(String),
}

/// An explicit finite-dimensional realization of a map `X -> L2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Embedding {
    pub n: usize,
    pub dim: usize,
    pub lip_bound: f64,
    /// Row-major: `coords[i]` is the image of point `i`.
    pub coords: Vec<Vec<f64>>,
}

impl Embedding {
    pub fn zero(n: usize) -> Self {
        Embedding { n, dim: 0, lip_bound: 0.0, coords: vec![Vec::new(); n] }
    }

    pub fn from_config(p: PointConfig, lip_bound: f64) -> Self {
        Embedding { n: p.n, dim: p.dim, lip_bound, coords: p.coords }
    }

    pub fn eval(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
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

    /// Direct sum of scaled parts: point `i` maps to the concatenation of
    /// `scale_k * part_k(i)`. The declared Lipschitz bound is the l2
    /// combination of the parts' bounds.
    pub fn concat(parts: &[(f64, &Embedding)]) -> Self {
        assert!(!parts.is_empty());
        let n = parts[0].1.n;
        let dim = parts.iter().map(|(_, e)| e.dim).sum();
        let mut coords = vec![Vec::with_capacity(dim); n];
        for (s, e) in parts {
            assert_eq!(e.n, n);
            for i in 0..n {
                coords[i].extend(e.coords[i].iter().map(|v| s * v));
            }
        }
        let lip = parts
            .iter()
            .map(|(s, e)| (s * e.lip_bound) * (s * e.lip_bound))
            .sum::<f64>()
            .sqrt();
        Embedding { n, dim, lip_bound: lip, coords }
    }

    /// Multiplies every coordinate (and the Lipschitz bound) by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Embedding {
            n: self.n,
            dim: self.dim,
            lip_bound: self.lip_bound * s.abs(),
            coords: self.coords.iter().map(|r| r.iter().map(|v| v * s).collect()).collect(),
        }
    }

    /// Measured Lipschitz constant against the metric (max pair ratio).
    pub fn measured_lip(&self, m: &MetricSpace) -> f64 {
        let mut lip = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                lip = lip.max(self.distance(i, j) / m.dist(i, j));
            }
        }
        lip
    }
}

/// Scale parameters threaded through the localization maps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScaleParams {
    pub tau: f64,
    pub k_or_big_k: f64,
    pub ensemble_c: f64,
    pub eps: f64,
}

/// Supplies the 1-Lipschitz maps `phi_{S,tau}` that the localization maps
/// consume: Lipschitz on all of `X`, with a declared separation lower bound
/// on pairs of `S` at distances `[tau, 6tau]`.
pub trait SingleScaleProvider: Sync {
    fn single_scale_map(
        &self,
        m: &MetricSpace,
        s: &[usize],
        tau: f64,
        stream: &SeedStream,
    ) -> Result<Embedding, EmbedError>;
}

/// Frechet map: coordinate `t` is `d(x, Z_t) / sqrt(T)` for the `t`-th
/// sampled zero set; `d(x, {}) := diam(M)` keeps coordinates bounded and
/// 1-Lipschitz.
pub fn frechet_map(
    m: &MetricSpace,
    dist: &ZeroSetDistribution,
    t_samples: usize,
    start_index: u64,
) -> Embedding {
    assert!(t_samples >= 1);
    let n = m.n();
    let diam = m.diameter();
    let scale = 1.0 / (t_samples as f64).sqrt();
    let mut coords = vec![Vec::with_capacity(t_samples); n];
    for t in 0..t_samples {
        let z = dist.sample(start_index + t as u64);
        for (x, row) in coords.iter_mut().enumerate() {
            let d = if z.is_empty() { diam } else { m.dist_to_set(x, &z) };
            row.push(d * scale);
        }
    }
    Embedding { n, dim: t_samples, lip_bound: 1.0, coords }
}

/// Norm-preserving truncation: re-embeds the points so that every image has
/// norm exactly `tau` and all pairwise distances satisfy
/// `1/2 min{tau, r} <= ||G(x)-G(y)|| <= min{tau, r}`.
///
/// Realized on the finite input set through the kernel
/// `K(x,y) = tau^2 (1 + exp(-r^2 / tau^2)) / 2` (a Gaussian with bandwidth
/// `tau/sqrt(2)` mixed with a constant so norms land exactly on `tau`; the
/// pure Gaussian feature map would overshoot the upper bound at large
/// distances). The two-sided bound is checked on every pair and violations
/// fail loudly rather than being assumed.
pub fn truncation_map(points: &PointConfig, tau: f64) -> Result<PointConfig, EmbedError> {
    assert!(tau > 0.0);
    let n = points.n;
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let r = points.euclidean(i, j);
                    0.5 * tau * tau * (1.0 + (-r * r / (tau * tau)).exp())
                })
                .collect()
        })
        .collect();
    let trace = tau * tau * n as f64;
    let (vals, vecs) = symmetric_eigen(&k).ok_or(EmbedError::EigFailure)?;
    let min_eig = vals[0];
    if min_eig < -1e-8 * trace {
        return Err(EmbedError::KernelNotPsd { min_eig });
    }
    let kept: Vec<usize> = (0..n).filter(|&c| vals[c] > 1e-14 * trace).collect();
    let dim = kept.len();
    let mut coords = vec![vec![0.0; dim]; n];
    for (c, &kc) in kept.iter().enumerate() {
        let s = vals[kc].sqrt();
        for i in 0..n {
            coords[i][c] = s * vecs[kc][i];
        }
    }
    // snap norms exactly onto tau (round-off correction only)
    for row in coords.iter_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let f = tau / norm;
            row.iter_mut().for_each(|v| *v *= f);
        }
    }
    let out = PointConfig { n, dim, coords };
    // the factorization resolves distances to about sqrt(machine eps) * tau,
    // so the audit tolerance scales with tau
    let tol = 1e-7 * tau;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = points.euclidean(i, j);
            let g = out.euclidean(i, j);
            let cap = tau.min(r);
            if g > cap + tol || g < 0.5 * cap - tol {
                return Err(EmbedError::TruncationBoundViolated { i, j, ratio: g / cap.max(f64::MIN_POSITIVE) });
            }
        }
    }
    Ok(out)
}

/// Truncation lifted to an [`Embedding`]; the upper half of the two-sided
/// bound keeps the Lipschitz constant of the input.
pub fn truncate_embedding(e: &Embedding, tau: f64) -> Result<Embedding, EmbedError> {
    let cfg = PointConfig { n: e.n, dim: e.dim, coords: e.coords.clone() };
    let out = truncation_map(&cfg, tau)?;
    Ok(Embedding::from_config(out, e.lip_bound))
}

/// `h = (phi (+) d(.,S)) / sqrt(2)`: extends separation from a neighborhood
/// of `S` to the whole space while staying 1-Lipschitz.
pub fn neighborhood_extend(
    phi: &Embedding,
    m: &MetricSpace,
    s: &[usize],
    _tau: f64,
    _big_l: f64,
) -> Result<Embedding, EmbedError> {
    if s.is_empty() {
        return Err(EmbedError::EmptySet);
    }
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let n = m.n();
    let mut coords = vec![Vec::with_capacity(phi.dim + 1); n];
    for x in 0..n {
        coords[x].extend(phi.coords[x].iter().map(|v| v * inv));
        coords[x].push(m.dist_to_set(x, s) * inv);
    }
    Ok(Embedding { n, dim: phi.dim + 1, lip_bound: phi.lip_bound.max(1.0), coords })
}

/// Monte Carlo localization over random `k`-subsets of `U`: per sample,
/// `h_S = (phi_{S,tau/2} (+) d(.,S)) / sqrt(2)` for a uniform subset
/// `S` of `U` with `|S| = min{|U|, k}`; samples concatenate with `1/sqrt(T)`.
pub fn gamma_map(
    m: &MetricSpace,
    u: &[usize],
    k: usize,
    tau: f64,
    ensemble: &dyn SingleScaleProvider,
    t_samples: usize,
    stream: &SeedStream,
) -> Result<Embedding, EmbedError> {
    assert!(k >= 2);
    assert!(!u.is_empty());
    let scale = 1.0 / (t_samples as f64).sqrt();
    let mut parts: Vec<Embedding> = Vec::with_capacity(t_samples);
    for t in 0..t_samples {
        let sub = stream.child(&format!("gamma/{t}"));
        let mut rng = sub.rng(0);
        let s = uniform_subset(u, k.min(u.len()), &mut rng);
        let phi = ensemble.single_scale_map(m, &s, tau / 2.0, &sub.child("phi"))?;
        let h = neighborhood_extend(&phi, m, &s, tau, 2.0)?;
        parts.push(h);
    }
    let refs: Vec<(f64, &Embedding)> = parts.iter().map(|e| (scale, e)).collect();
    let mut out = Embedding::concat(&refs);
    out.lip_bound = 1.0;
    Ok(out)
}

fn uniform_subset<R: Rng>(u: &[usize], k: usize, rng: &mut R) -> Vec<usize> {
    let mut v = u.to_vec();
    v.shuffle(rng);
    v.truncate(k);
    v.sort_unstable();
    v
}

/// Padded localization: per sample draw a partition at `D = 4 tau alpha`,
/// fade each point by `rho(z) = min{1, d(z, X \ P(z)) / tau}`, and emit
/// `1/2 rho(z) G_tau(gamma_{P(z),k}(z))` in a per-cluster coordinate block.
#[allow(clippy::too_many_arguments)]
pub fn lambda_map(
    m: &MetricSpace,
    tau: f64,
    k: usize,
    ensemble: &dyn SingleScaleProvider,
    t_samples: usize,
    gamma_samples: usize,
    alpha_hat: f64,
    stream: &SeedStream,
) -> Result<Embedding, EmbedError> {
    assert!(k >= 2);
    assert!(tau > 0.0);
    let n = m.n();
    let big_d = 4.0 * tau * alpha_hat;
    let scale = 1.0 / (t_samples as f64).sqrt();
    let mut coords = vec![Vec::new(); n];
    for t in 0..t_samples {
        let sub = stream.child(&format!("lambda/{t}"));
        let part = padded_partition(m, big_d, &mut sub.rng(0));
        let rho: Vec<f64> = (0..n)
            .map(|z| {
                let outside = (0..n)
                    .filter(|&y| part.cluster_of[y] != part.cluster_of[z])
                    .map(|y| m.dist(z, y))
                    .fold(f64::INFINITY, f64::min);
                (outside / tau).min(1.0)
            })
            .collect();
        for (ci, cluster) in part.clusters.iter().enumerate() {
            let gamma = gamma_map(
                m,
                cluster,
                k,
                tau,
                ensemble,
                gamma_samples,
                &sub.child(&format!("cluster/{ci}")),
            )?;
            // truncate on the cluster's own images; other clusters occupy
            // disjoint coordinate blocks, so cross-cluster distances are
            // bounded by the rho-faded norms alone
            let cluster_cfg = PointConfig {
                n: cluster.len(),
                dim: gamma.dim,
                coords: cluster.iter().map(|&z| gamma.coords[z].clone()).collect(),
            };
            let hat = truncation_map(&cluster_cfg, tau)?;
            for (local, &z) in cluster.iter().enumerate() {
                coords[z].extend(hat.coords[local].iter().map(|v| 0.5 * rho[z] * v * scale));
            }
            let block = hat.dim;
            for z in 0..n {
                if part.cluster_of[z] != ci {
                    coords[z].extend(std::iter::repeat(0.0).take(block));
                }
            }
        }
    }
    let dim = coords[0].len();
    debug_assert!(coords.iter().all(|r| r.len() == dim));
    Ok(Embedding { n, dim, lip_bound: 1.0, coords })
}

/// Small-ratio base map: per sample, clamped Frechet coordinates
/// `min{d(x, W_t), tau/4}` against exponentially thinned random subsets.
pub fn small_ratio_map(
    m: &MetricSpace,
    tau: f64,
    t_samples: usize,
    stream: &SeedStream,
) -> Embedding {
    assert!(tau > 0.0);
    let n = m.n();
    let levels = ((n.max(2) as f64).log2().ceil() as usize).max(1);
    let level_scale = 1.0 / (levels as f64).sqrt();
    let scale = level_scale / (t_samples as f64).sqrt();
    let mut coords = vec![Vec::with_capacity(t_samples * levels); n];
    for s in 0..t_samples {
        let mut rng = stream.rng(s as u64);
        for t in 1..=levels {
            let p = 2f64.powi(-(t as i32));
            let w: Vec<usize> = (0..n).filter(|_| rng.gen::<f64>() < p).collect();
            for (x, row) in coords.iter_mut().enumerate() {
                let d = if w.is_empty() { tau / 4.0 } else { m.dist_to_set(x, &w).min(tau / 4.0) };
                row.push(d * scale);
            }
        }
    }
    Embedding { n, dim: t_samples * levels, lip_bound: 1.0, coords }
}

/// Frechet coordinates of the whole space against zero sets sampled on the
/// subspace `s`; `s[local]` maps local indices back to global ones.
fn frechet_against_subspace(
    m: &MetricSpace,
    s: &[usize],
    dist: &ZeroSetDistribution,
    t_samples: usize,
) -> Embedding {
    assert!(t_samples >= 1);
    let n = m.n();
    let diam = m.diameter();
    let scale = 1.0 / (t_samples as f64).sqrt();
    let mut coords = vec![Vec::with_capacity(t_samples); n];
    for t in 0..t_samples {
        let z: Vec<usize> = dist.sample(t as u64).iter().map(|&i| s[i]).collect();
        for (x, row) in coords.iter_mut().enumerate() {
            let d = if z.is_empty() { diam } else { m.dist_to_set(x, &z) };
            row.push(d * scale);
        }
    }
    Embedding { n, dim: t_samples, lip_bound: 1.0, coords }
}

/// Single-scale ensemble backed by the reweighted hyperplane zero-set
/// family on the subspace `S`: requires the metric to be of negative type.
/// The family is built at scale `16 tau` so every pair of `S` at distance
/// at least `tau` is a reweighted pair.
pub struct ReweightedProvider {
    pub cfg: ReweightedConfig,
    pub t_samples: usize,
}

impl SingleScaleProvider for ReweightedProvider {
    fn single_scale_map(
        &self,
        m: &MetricSpace,
        s: &[usize],
        tau: f64,
        stream: &SeedStream,
    ) -> Result<Embedding, EmbedError> {
        if s.is_empty() {
            return Ok(Embedding::zero(m.n()));
        }
        let sub = m.restrict(s);
        let fam = reweighted_zero_set_family(&sub, 16.0 * tau, &self.cfg, stream.child("family"))
            .map_err(|e| EmbedError::Provider(e.to_string()))?;
        Ok(frechet_against_subspace(m, s, &fam, self.t_samples))
    }
}

/// Single-scale ensemble backed by padded-partition zero sets on the
/// subspace `S` at scale `tau`; works on any metric.
pub struct PartitionProvider {
    pub t_samples: usize,
}

impl SingleScaleProvider for PartitionProvider {
    fn single_scale_map(
        &self,
        m: &MetricSpace,
        s: &[usize],
        tau: f64,
        stream: &SeedStream,
    ) -> Result<Embedding, EmbedError> {
        if s.is_empty() {
            return Ok(Embedding::zero(m.n()));
        }
        let sub = m.restrict(s);
        let fam = ZeroSetDistribution::from_partitions(&sub, tau, stream.child("family"));
        Ok(frechet_against_subspace(m, s, &fam, self.t_samples))
    }
}

/// Asserts the declared Lipschitz bound on all pairs; panics on violation.
#[cfg(test)]
pub fn assert_lipschitz(e: &Embedding, m: &MetricSpace) {
    for i in 0..e.n {
        for j in 0..e.n {
            if i != j {
                let ratio = e.distance(i, j) / m.dist(i, j);
                assert!(
                    ratio <= e.lip_bound * (1.0 + 1e-9),
                    "pair ({i},{j}) ratio {ratio} exceeds bound {}",
                    e.lip_bound
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::estimate_alpha;
    use crate::gen::{cycle, hypercube};
    use crate::metric::validate_metric;
    use crate::seeds::SeedStream;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stream(key: &str) -> SeedStream {
        SeedStream::new(0xe3bed, key)
    }

    fn two_point_space() -> MetricSpace {
        validate_metric(vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap()
    }

    #[test]
    fn frechet_always_other_point_reproduces_distance() {
        let m = two_point_space();
        let d = ZeroSetDistribution::fixed(3.0, vec![vec![1]], stream("f"));
        let e = frechet_map(&m, &d, 1, 0);
        assert_eq!(e.dim, 1);
        assert!((e.distance(0, 1) - 3.0).abs() < 1e-12);
        assert_eq!(e.distance(0, 0), 0.0);
    }

    #[test]
    fn frechet_is_lipschitz() {
        let m = cycle(8).unwrap();
        let d = ZeroSetDistribution::from_partitions(&m, 4.0, stream("fl"));
        let e = frechet_map(&m, &d, 64, 0);
        assert_lipschitz(&e, &m);
    }

    #[test]
    fn frechet_c8_spreading_bound() {
        // empirical antipodal-separation bound against partition zero sets at tau = 4
        let m = cycle(8).unwrap();
        let alpha = estimate_alpha(&m, 300, &stream("fa"));
        let d = ZeroSetDistribution::from_partitions(&m, 4.0, stream("fz"));
        let e = frechet_map(&m, &d, 400, 0);
        let expect = (1.0f64 / 8.0).sqrt() * (4.0 / alpha) * 0.8;
        for x in 0..8 {
            let y = (x + 4) % 8;
            assert!(e.distance(x, y) >= expect, "pair ({x},{y}): {} < {expect}", e.distance(x, y));
        }
    }

    #[test]
    fn truncation_single_point() {
        let p = PointConfig { n: 1, dim: 2, coords: vec![vec![5.0, -1.0]] };
        let g = truncation_map(&p, 2.0).unwrap();
        assert!((g.norm(0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_bounds_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100;
        let coords: Vec<Vec<f64>> =
            (0..n).map(|_| (0..5).map(|_| rng.gen::<f64>() * 3.0).collect()).collect();
        let p = PointConfig { n, dim: 5, coords };
        let tau = 1.0;
        let g = truncation_map(&p, tau).unwrap();
        for i in 0..n {
            assert!((g.norm(i) - tau).abs() <= 1e-9 * tau);
            for j in (i + 1)..n {
                let cap = tau.min(p.euclidean(i, j));
                let v = g.euclidean(i, j);
                assert!(v >= 0.5 * cap - 1e-9 && v <= cap + 1e-9, "pair ({i},{j}): {v} vs cap {cap}");
            }
        }
    }

    #[test]
    fn truncation_coincident_points_collapse() {
        let p = PointConfig { n: 2, dim: 1, coords: vec![vec![1.5], vec![1.5]] };
        let g = truncation_map(&p, 1.0).unwrap();
        assert!(g.euclidean(0, 1) < 1e-12);
    }

    #[test]
    fn extend_requires_nonempty_set() {
        let m = two_point_space();
        let phi = Embedding::zero(2);
        assert!(matches!(
            neighborhood_extend(&phi, &m, &[], 1.0, 2.0),
            Err(EmbedError::EmptySet)
        ));
    }

    #[test]
    fn extend_zero_phi_far_point_bound() {
        // with phi = 0, ||h(x)-h(y)|| = |d(x,S)-d(y,S)|/sqrt(2)
        let m = validate_metric(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let phi = Embedding::zero(3);
        let h = neighborhood_extend(&phi, &m, &[0], 1.0, 2.0).unwrap();
        assert_eq!(h.dim, 1);
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h.distance(0, 2) - 2.0 * inv).abs() < 1e-12);
        assert_eq!(h.distance(1, 1), 0.0);
    }

    struct ZeroProvider;
    impl SingleScaleProvider for ZeroProvider {
        fn single_scale_map(
            &self,
            m: &MetricSpace,
            _s: &[usize],
            _tau: f64,
            _stream: &SeedStream,
        ) -> Result<Embedding, EmbedError> {
            Ok(Embedding::zero(m.n()))
        }
    }

    #[test]
    fn gamma_with_small_u_uses_all_of_it() {
        let m = hypercube(2).unwrap();
        let u = vec![0usize, 3];
        let e = gamma_map(&m, &u, 4, 1.0, &ZeroProvider, 8, &stream("g")).unwrap();
        assert_lipschitz(&e, &m);
        // every sample's S = U, so the d(.,S) coordinate is deterministic
        let expected = m.dist_to_set(1, &u) * std::f64::consts::FRAC_1_SQRT_2;
        for c in 0..e.dim {
            assert!((e.coords[1][c] * (8f64).sqrt() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_subsets_have_exactly_k_elements() {
        let u: Vec<usize> = (0..10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = vec![0usize; 10];
        for _ in 0..3000 {
            let s = uniform_subset(&u, 4, &mut rng);
            assert_eq!(s.len(), 4);
            for &x in &s {
                counts[x] += 1;
            }
        }
        // each element appears with frequency ~ 4/10
        for &c in &counts {
            assert!((c as f64 - 1200.0).abs() < 150.0, "count {c}");
        }
    }

    #[test]
    fn lambda_norm_capped_at_half_tau() {
        let m = hypercube(3).unwrap();
        let tau = 1.0;
        let e = lambda_map(&m, tau, 4, &ZeroProvider, 8, 2, 4.0, &stream("l")).unwrap();
        for x in 0..m.n() {
            assert!(e.norm(x) <= tau / 2.0 + 1e-9);
        }
        assert_lipschitz(&e, &m);
    }

    #[test]
    fn small_ratio_coords_bounded_and_lipschitz() {
        let m = cycle(6).unwrap();
        let tau = 2.0;
        let e = small_ratio_map(&m, tau, 16, &stream("sr"));
        for row in &e.coords {
            for &v in row {
                assert!(v >= 0.0);
            }
        }
        assert_lipschitz(&e, &m);
    }

    #[test]
    fn small_ratio_two_points_separates() {
        let m = two_point_space();
        let e = small_ratio_map(&m, 3.0, 64, &stream("sr2"));
        assert!(e.distance(0, 1) > 0.0);
    }

    #[test]
    fn reweighted_provider_is_lipschitz_and_separates() {
        let m = hypercube(2).unwrap();
        let p = ReweightedProvider { cfg: ReweightedConfig::default(), t_samples: 64 };
        let all: Vec<usize> = (0..4).collect();
        let e = p.single_scale_map(&m, &all, 1.0, &stream("ap")).unwrap();
        assert_lipschitz(&e, &m);
        // antipodal cube pairs are at distance 2 >= tau and must separate
        assert!(e.distance(0, 3) > 0.0);
    }

    #[test]
    fn reweighted_provider_rejects_non_negative_type() {
        let m = crate::gen::k23();
        let p = ReweightedProvider { cfg: ReweightedConfig::default(), t_samples: 8 };
        let all: Vec<usize> = (0..5).collect();
        let err = p.single_scale_map(&m, &all, 1.0, &stream("apk"));
        assert!(matches!(err, Err(EmbedError::Provider(_))));
    }

    #[test]
    fn partition_provider_on_subspace_stays_lipschitz_globally() {
        let m = cycle(8).unwrap();
        let p = PartitionProvider { t_samples: 32 };
        let s = vec![0usize, 2, 4, 6];
        let e = p.single_scale_map(&m, &s, 2.0, &stream("pp")).unwrap();
        assert_lipschitz(&e, &m);
        assert!(e.distance(0, 4) > 0.0);
    }

    #[test]
    fn small_ratio_far_close_events() {
        // Claim 4.6 proof events at lambda = 4 on the 6-cycle
        let m = cycle(6).unwrap();
        let tau = 2.0;
        let x = 0usize;
        // |B(x,tau/2)| = 3, so t with 2^t <= 3 <= 2^{t+1} is t = 1
        let t = 1;
        let p = 2f64.powi(-t);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut far, mut close) = (0, 0);
        let draws = 4000;
        for _ in 0..draws {
            let w: Vec<usize> = (0..m.n()).filter(|_| rng.gen::<f64>() < p).collect();
            let d = if w.is_empty() { f64::INFINITY } else { m.dist_to_set(x, &w) };
            if d >= tau / 4.0 {
                far += 1;
            }
            if d <= tau / 8.0 {
                close += 1;
            }
        }
        assert!(far as f64 / draws as f64 > 0.05);
        assert!(close as f64 / draws as f64 > 0.05);
    }
}
