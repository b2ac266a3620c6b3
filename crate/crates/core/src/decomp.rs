//! Random padded decompositions and random zero sets.
//!
//! The partition scheme: a uniform random radius in
//! `[delta/4, delta/2)`, a random permutation of centers, first-capture
//! assignment. Zero sets are derived either from such partitions (a fair
//! coin per cluster) or from the reweighted hyperplane-separation family
//! for negative-type metrics.

use crate::embed::{truncation_map, EmbedError};
use crate::metric::{self, MetricSpace, MetricError, PointConfig};
use crate::seeds::SeedStream;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("no pair of points at distance >= delta = {delta}")]
    InsufficientSeparatedPairs { delta: f64 },
}

/// A partition of the space into clusters of diameter `< delta`, with the
/// padding radius `pi_P(x) = sup{r : B(x,r) subset of P(x)}` per point.
#[derive(Debug, Clone)]
pub struct RandomPartition {
    pub cluster_of: Vec<usize>,
    pub clusters: Vec<Vec<usize>>,
    pub delta: f64,
    pub padding: Vec<f64>,
}

impl RandomPartition {
    pub fn max_cluster_diameter(&self, m: &MetricSpace) -> f64 {
        let mut best = 0.0f64;
        for c in &self.clusters {
            for (a, &i) in c.iter().enumerate() {
                for &j in &c[a + 1..] {
                    best = best.max(m.dist(i, j));
                }
            }
        }
        best
    }
}

/// One partition draw: radius uniform in `[delta/4, delta/2)`, random center
/// permutation, each point joins the first center that covers it.
pub fn padded_partition<R: Rng>(m: &MetricSpace, delta: f64, rng: &mut R) -> RandomPartition {
    assert!(delta > 0.0);
    let n = m.n();
    let r = delta / 4.0 + rng.gen::<f64>() * delta / 4.0;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut cluster_of = vec![usize::MAX; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &c in &order {
        let members: Vec<usize> = (0..n)
            .filter(|&x| cluster_of[x] == usize::MAX && m.dist(c, x) <= r)
            .collect();
        if members.is_empty() {
            continue;
        }
        for &x in &members {
            cluster_of[x] = clusters.len();
        }
        clusters.push(members);
    }

    let padding = (0..n)
        .map(|x| {
            let outside = (0..n)
                .filter(|&y| cluster_of[y] != cluster_of[x])
                .map(|y| m.dist(x, y))
                .fold(f64::INFINITY, f64::min);
            outside.min(delta)
        })
        .collect();

    RandomPartition { cluster_of, clusters, delta, padding }
}

/// Deltas at which the padding modulus is probed: `2^m` over the dyadic
/// scale range extended by one on top.
fn alpha_delta_grid(m: &MetricSpace) -> Vec<f64> {
    if m.n() < 2 {
        return vec![1.0];
    }
    let (lo, hi) = metric::dyadic_scales(m);
    (lo..=hi + 1).map(metric::pow2).collect()
}

/// Empirical upper bound on the modulus of padded decomposability: the
/// smallest grid value `alpha` such that over `samples` draws at every
/// dyadic delta, `Pr[padding(x) >= delta/alpha] >= 1/2` for all `x`.
pub fn estimate_alpha(m: &MetricSpace, samples: usize, stream: &SeedStream) -> f64 {
    assert!(samples >= 1);
    let n = m.n();
    if n < 2 {
        return 1.0;
    }
    let need = samples.div_ceil(2);
    let mut worst: f64 = 1.0;
    for (di, &delta) in alpha_delta_grid(m).iter().enumerate() {
        let sub = stream.child(&format!("alpha/{di}"));
        let mut pads = vec![Vec::with_capacity(samples); n];
        for s in 0..samples {
            let mut rng = sub.rng(s as u64);
            let p = padded_partition(m, delta, &mut rng);
            for x in 0..n {
                pads[x].push(p.padding[x]);
            }
        }
        for x in 0..n {
            pads[x].sort_by(|a, b| b.partial_cmp(a).unwrap());
            let q = pads[x][need - 1]; // padding achieved in at least half the draws
            if q > 0.0 {
                worst = worst.max(delta / q);
            }
        }
    }
    // round up on a fixed 2^(1/8) grid so the estimate is stable across reruns
    let k = (worst.log2() * 8.0).ceil();
    2f64.powf(k / 8.0)
}

/// Union of the clusters whose independent fair coin came up 0.
pub fn zero_set_from_partition<R: Rng>(p: &RandomPartition, rng: &mut R) -> Vec<usize> {
    let coins: Vec<bool> = (0..p.clusters.len()).map(|_| rng.gen::<bool>()).collect();
    let mut z: Vec<usize> = p
        .clusters
        .iter()
        .enumerate()
        .filter(|(c, _)| !coins[*c])
        .flat_map(|(_, members)| members.iter().copied())
        .collect();
    z.sort_unstable();
    z
}

/// Configuration of the reweighted hyperplane-separation family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReweightedConfig {
    /// Projection threshold constant in `(0,1)`.
    pub sigma: f64,
    /// Unit directions drawn per weight function when estimating the
    /// reweighting test probability.
    pub directions: usize,
    /// Number of reweighting rounds; `None` means `ceil(log2 n)`.
    pub rounds: Option<usize>,
    /// Halve a pair's weight when its empirical separation frequency
    /// reaches this threshold.
    pub prob_threshold: f64,
}

impl Default for ReweightedConfig {
    fn default() -> Self {
        ReweightedConfig { sigma: 0.25, directions: 128, rounds: None, prob_threshold: 0.1 }
    }
}

enum ZeroKind {
    /// Fresh padded partition per sample, fair coin per cluster.
    Partition { space: MetricSpace },
    /// Reweighted projection family on a truncated sqrt-embedding.
    Reweighted(ReweightedFamily),
    /// Cycles through a fixed list of subsets; for calibration and tests.
    Fixed { sets: Vec<Vec<usize>> },
}

/// A seeded sampler of random subsets `Z` of the space at scale `delta`.
///
/// Sampling is counter-based: `sample(i)` is a pure function of the master
/// stream and `i`, so samples may be produced in parallel.
pub struct ZeroSetDistribution {
    pub delta: f64,
    kind: ZeroKind,
    stream: SeedStream,
}

/// Human-readable kind tag, used in reports.
impl ZeroSetDistribution {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ZeroKind::Partition { .. } => "partition-derived",
            ZeroKind::Reweighted(_) => "reweighted",
            ZeroKind::Fixed { .. } => "fixed",
        }
    }

    pub fn from_partitions(space: &MetricSpace, delta: f64, stream: SeedStream) -> Self {
        assert!(delta > 0.0);
        ZeroSetDistribution { delta, kind: ZeroKind::Partition { space: space.clone() }, stream }
    }

    pub fn fixed(delta: f64, sets: Vec<Vec<usize>>, stream: SeedStream) -> Self {
        assert!(!sets.is_empty());
        ZeroSetDistribution { delta, kind: ZeroKind::Fixed { sets }, stream }
    }

    pub fn sample(&self, index: u64) -> Vec<usize> {
        match &self.kind {
            ZeroKind::Partition { space } => {
                let mut rng = self.stream.rng(index);
                let p = padded_partition(space, self.delta, &mut rng);
                zero_set_from_partition(&p, &mut rng)
            }
            ZeroKind::Reweighted(fam) => fam.sample(&mut self.stream.rng(index)),
            ZeroKind::Fixed { sets } => sets[(index as usize) % sets.len()].clone(),
        }
    }
}

struct ReweightedFamily {
    space: MetricSpace,
    /// Truncated sqrt-embedding coordinates, one row per point.
    points: PointConfig,
    /// Unordered pairs at distance >= delta/16, by (increasing distance, index).
    far_pairs: Vec<(usize, usize)>,
    /// One weight table per reweighting round; `weights[k][pair]`.
    weights: Vec<Vec<u64>>,
    sigma: f64,
    delta: f64,
    prune_dist: f64,
}

/// The separated/pruned side sets for one direction and weight function.
struct SidesOutcome {
    left_kept: Vec<bool>,
    right_kept: Vec<bool>,
}

impl ReweightedFamily {
    fn threshold(&self) -> f64 {
        self.sigma * self.delta.sqrt() / (self.space.n() as f64).sqrt()
    }

    fn project_sides<R: Rng>(&self, rng: &mut R) -> (Vec<bool>, Vec<bool>) {
        let dim = self.points.dim.max(1);
        let mut u: Vec<f64> = (0..dim)
            .map(|_| {
                // Box-Muller; avoids pulling in a distributions crate
                let a: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                let b: f64 = rng.gen();
                (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
            })
            .collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        u.iter_mut().for_each(|x| *x /= norm);
        let t = self.threshold();
        let n = self.space.n();
        let mut left = vec![false; n];
        let mut right = vec![false; n];
        for i in 0..n {
            let proj: f64 = self.points.coords[i].iter().zip(&u).map(|(a, b)| a * b).sum();
            left[i] = proj <= -t;
            right[i] = proj >= t;
        }
        (left, right)
    }

    /// Greedy weighted pruning: every cross pair within the pruning distance
    /// loses `min(remaining copies)` from both endpoints, in order of
    /// increasing distance then index.
    fn prune(&self, left: &[bool], right: &[bool], weights: &[u64]) -> SidesOutcome {
        let n = self.space.n();
        // copies per point under this weight function
        let mut copies = vec![0u64; n];
        let mut paired = vec![false; n];
        for (pi, &(x, y)) in self.far_pairs.iter().enumerate() {
            copies[x] += weights[pi];
            copies[y] += weights[pi];
            paired[x] = true;
            paired[y] = true;
        }
        let mut cross: Vec<(usize, usize)> = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if left[x] && right[y] && x != y && self.space.dist(x, y) <= self.prune_dist {
                    cross.push((x, y));
                }
            }
        }
        cross.sort_by(|&(a, b), &(c, d)| {
            self.space
                .dist(a, b)
                .partial_cmp(&self.space.dist(c, d))
                .unwrap()
                .then(a.cmp(&c))
                .then(b.cmp(&d))
        });
        for (x, y) in cross {
            let t = copies[x].min(copies[y]);
            copies[x] -= t;
            copies[y] -= t;
        }
        // a point with no far pairs has nothing prunable and stays put
        let keep = |i: usize| !paired[i] || copies[i] > 0;
        SidesOutcome {
            left_kept: (0..n).map(|i| left[i] && keep(i)).collect(),
            right_kept: (0..n).map(|i| right[i] && keep(i)).collect(),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let k = rng.gen_range(0..self.weights.len());
        let (left, right) = self.project_sides(rng);
        let out = self.prune(&left, &right, &self.weights[k]);
        (0..self.space.n()).filter(|&i| out.left_kept[i]).collect()
    }
}

/// Builds the reweighted zero-set family of a negative-type metric at scale
/// `delta`: truncated sqrt-embedding, random hyperplane sides, greedy
/// pruning of close cross pairs, and `O(log n)` halving rounds on the pair
/// weights.
pub fn reweighted_zero_set_family(
    m: &MetricSpace,
    delta: f64,
    cfg: &ReweightedConfig,
    stream: SeedStream,
) -> Result<ZeroSetDistribution, DecompError> {
    assert!(delta > 0.0);
    let verdict = metric::is_negative_type(m, metric::negative_type_tol(m))?;
    if !verdict.is_negative_type {
        return Err(MetricError::NotNegativeType { min_eig: verdict.min_eigenvalue }.into());
    }
    let n = m.n();
    let g = metric::sqrt_embedding(m)?;
    let points = truncation_map(&g, delta.sqrt())?;

    let mut far_pairs: Vec<(usize, usize)> = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            if m.dist(x, y) >= delta / 16.0 {
                far_pairs.push((x, y));
            }
        }
    }
    far_pairs.sort_by(|&(a, b), &(c, d)| {
        m.dist(a, b).partial_cmp(&m.dist(c, d)).unwrap().then(a.cmp(&c)).then(b.cmp(&d))
    });

    let log_n = ((n.max(2) as f64).log2()).max(1.0);
    let rounds = cfg.rounds.unwrap_or(log_n.ceil() as usize).max(1);
    let w0 = (n as u64).pow(4).max(1);
    let prune_dist = delta / log_n.sqrt();

    let mut fam = ReweightedFamily {
        space: m.clone(),
        points,
        far_pairs,
        weights: vec![vec![w0; 0]; 0],
        sigma: cfg.sigma,
        delta,
        prune_dist,
    };
    fam.weights = Vec::with_capacity(rounds);
    let mut w = vec![w0; fam.far_pairs.len()];
    let reweight_stream = stream.child("reweight");
    for k in 0..rounds {
        fam.weights.push(w.clone());
        if k + 1 == rounds || fam.far_pairs.is_empty() {
            continue;
        }
        // estimate the per-pair separation frequency under w_k
        let mut hits = vec![0usize; fam.far_pairs.len()];
        let sub = reweight_stream.child(&format!("{k}"));
        for s in 0..cfg.directions {
            let mut rng = sub.rng(s as u64);
            let (left, right) = fam.project_sides(&mut rng);
            let out = fam.prune(&left, &right, &w);
            for (pi, &(x, y)) in fam.far_pairs.iter().enumerate() {
                let sep = (out.left_kept[x] && out.right_kept[y])
                    || (out.left_kept[y] && out.right_kept[x]);
                if sep {
                    hits[pi] += 1;
                }
            }
        }
        for (pi, h) in hits.iter().enumerate() {
            if (*h as f64) / (cfg.directions as f64) >= cfg.prob_threshold {
                w[pi] = (w[pi] / 2).max(1);
            }
        }
    }

    Ok(ZeroSetDistribution { delta, kind: ZeroKind::Reweighted(fam), stream: stream.child("sample") })
}

/// Empirical spreading statistics of a zero-set distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpreadingEstimate {
    /// Max over separated pairs of `delta / q_xy`, where `q_xy` is the
    /// largest threshold whose event frequency still reaches `p`.
    /// `f64::INFINITY` when some pair never achieves the event.
    pub zeta: f64,
    pub p: f64,
    pub samples: usize,
    pub delta: f64,
    /// Per-pair detail rows: (x, y, empirical p at zeta, zeta_xy).
    pub pairs: Vec<(usize, usize, f64, f64)>,
}

/// For each pair `x,y` with `d(x,y) >= delta`, the least `zeta_xy` such that
/// the event `y in Z and d(x,Z) >= delta/zeta_xy` has empirical frequency
/// `>= p`; returns the max over pairs. Deterministic given the sampler seed.
pub fn estimate_zeta(
    m: &MetricSpace,
    dist: &ZeroSetDistribution,
    p: f64,
    samples: usize,
    start_index: u64,
) -> Result<SpreadingEstimate, DecompError> {
    assert!(samples >= 100);
    assert!(p > 0.0 && p < 1.0);
    let delta = dist.delta;
    let n = m.n();
    let mut far: Vec<(usize, usize)> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y && m.dist(x, y) >= delta {
                far.push((x, y));
            }
        }
    }
    if far.is_empty() {
        return Err(DecompError::InsufficientSeparatedPairs { delta });
    }

    // dists_when_in[pair] collects d(x,Z) over samples with y in Z
    let mut dists_when_in: Vec<Vec<f64>> = vec![Vec::new(); far.len()];
    for s in 0..samples {
        let z = dist.sample(start_index + s as u64);
        let mut in_z = vec![false; n];
        for &i in &z {
            in_z[i] = true;
        }
        let dx: Vec<f64> = (0..n).map(|x| m.dist_to_set(x, &z)).collect();
        for (pi, &(x, y)) in far.iter().enumerate() {
            if in_z[y] {
                dists_when_in[pi].push(dx[x]);
            }
        }
    }

    let need = ((p * samples as f64).ceil() as usize).max(1);
    let mut zeta: f64 = 1.0;
    let mut pairs = Vec::with_capacity(far.len());
    for (pi, &(x, y)) in far.iter().enumerate() {
        let vals = &mut dists_when_in[pi];
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let (zxy, freq) = if vals.len() < need || vals[need - 1] <= 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            let q = vals[need - 1];
            let hits = vals.iter().filter(|&&v| v >= q).count();
            (delta / q, hits as f64 / samples as f64)
        };
        zeta = zeta.max(zxy);
        pairs.push((x, y, freq, zxy));
    }

    Ok(SpreadingEstimate { zeta, p, samples, delta, pairs })
}
