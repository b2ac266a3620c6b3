//! Inter-scale gluing: combines per-scale 1-Lipschitz maps with bump
//! weights driven by local ball growth, stratifies the space by ball-count
//! ratios, and assembles the final embedding through a square-root cascade
//! of localized stages. Also houses distortion evaluation.

use crate::decomp::estimate_alpha;
use crate::embed::{
    lambda_map, small_ratio_map, truncate_embedding, EmbedError, Embedding, SingleScaleProvider,
};
use crate::metric::{self, MetricSpace};
use crate::seeds::SeedStream;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Empirical Lipschitz budget of the glue operator: measured constants on
/// the suite instances stay below `C_GLUE * sqrt(log2 n * log2 4AB)`.
/// Regression-pinned; tightening it requires re-measuring the suite.
pub const C_GLUE: f64 = 8.0;

#[derive(Debug, Error)]
pub enum GlueError {
    #[error("maps must cover scales {lo}..={hi} exactly")]
    ScaleRangeMismatch { lo: i32, hi: i32 },
    #[error("map at scale {m} declares lip_bound {lip} > 1")]
    MapNotLipschitz { m: i32, lip: f64 },
    #[error("points {i} and {j} share an image")]
    NonInjective { i: usize, j: usize },
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Bump-weight parameters. The bump is supported on `[1/2B, 4A]` and flat
/// at 1 on `[1/B, 2A]`; `t_max` is the top ball-count exponent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GlueConfig {
    pub a: f64,
    pub b: f64,
    pub t_max: usize,
}

impl GlueConfig {
    pub fn new(m: &MetricSpace, a: f64, b: f64) -> Self {
        assert!(a >= 1.0 && b >= 1.0);
        let t_max = (m.n().max(1) as f64).log2().ceil() as usize;
        GlueConfig { a, b, t_max }
    }

    /// Extra dyadic scales on each end of the range so that every nonzero
    /// bump weight falls on a covered scale.
    pub fn scale_extension(&self) -> i32 {
        (4.0 * self.a * self.b).log2().ceil() as i32
    }
}

/// Inclusive scale range `m` the glue operator consumes: the dyadic scales
/// of the space extended by the bump support on both ends.
pub fn required_scales(m: &MetricSpace, cfg: &GlueConfig) -> (i32, i32) {
    let (lo, hi) = metric::dyadic_scales(m);
    let e = cfg.scale_extension();
    (lo - e, hi + e)
}

/// Piecewise-linear bump: 0 on `[0, 1/2B]`, rises with slope `2B` to 1 at
/// `1/B`, stays 1 through `2A`, falls linearly to 0 at `4A`. The falling
/// slope `1/2A` never exceeds `2B`, so the whole bump is 2B-Lipschitz.
pub fn bump(cfg: &GlueConfig, r: f64) -> f64 {
    let (a, b) = (cfg.a, cfg.b);
    if r <= 0.5 / b || r >= 4.0 * a {
        0.0
    } else if r < 1.0 / b {
        (r - 0.5 / b) * 2.0 * b
    } else if r <= 2.0 * a {
        1.0
    } else {
        (4.0 * a - r) / (2.0 * a)
    }
}

/// `R(x,t) = sup{R : |B(x,R)| <= 2^t}`: the `2^t`-th order statistic of the
/// distances from `x` (0-indexed, so the sup lands on the first excluded
/// point), or the farthest distance once `2^t` covers the whole space. The
/// latter keeps `R(x,t)` finite and 1-Lipschitz in `x`.
pub fn growth_radius(m: &MetricSpace, x: usize, t: usize) -> f64 {
    let n = m.n();
    let mut d: Vec<f64> = (0..n).map(|y| m.dist(x, y)).collect();
    d.sort_by(|p, q| p.partial_cmp(q).unwrap());
    if t < usize::BITS as usize - 1 && (1usize << t) < n {
        d[1usize << t]
    } else {
        d[n - 1]
    }
}

/// Per-point bump weight at scale `2^mi` and count exponent `t`.
fn weight(m: &MetricSpace, cfg: &GlueConfig, x: usize, t: usize, mi: i32) -> f64 {
    bump(cfg, growth_radius(m, x, t) / metric::pow2(mi))
}

/// Whether any point carries a nonzero bump weight at scale `2^mi`; scales
/// failing this can be supplied as zero maps without changing the output.
pub fn scale_is_active(m: &MetricSpace, cfg: &GlueConfig, mi: i32) -> bool {
    (0..m.n()).any(|x| (0..=cfg.t_max).any(|t| weight(m, cfg, x, t, mi) > 0.0))
}

/// Glues per-scale 1-Lipschitz maps into one embedding: each map is
/// re-truncated at `2^m/B`, weighted per point by the bump of
/// `R(x,t)/2^m`, and the weighted blocks are direct-summed over all
/// `(t, m)` with `t` in `0..=t_max`.
///
/// `maps` must list exactly the scales of [`required_scales`], ascending.
/// The declared Lipschitz bound is `C_GLUE * sqrt(log2 n * log2 4AB)`; the
/// separation contract is audited by [`glue_lower_bound_margin`].
pub fn glue(
    m: &MetricSpace,
    maps: &[(i32, Embedding)],
    cfg: &GlueConfig,
) -> Result<Embedding, GlueError> {
    let n = m.n();
    if n <= 1 {
        return Ok(Embedding::zero(n));
    }
    let (lo, hi) = required_scales(m, cfg);
    let covered = maps.len() == (hi - lo + 1) as usize
        && maps.iter().enumerate().all(|(k, &(mi, _))| mi == lo + k as i32);
    if !covered {
        return Err(GlueError::ScaleRangeMismatch { lo, hi });
    }
    for &(mi, ref e) in maps {
        if e.lip_bound > 1.0 + 1e-9 {
            return Err(GlueError::MapNotLipschitz { m: mi, lip: e.lip_bound });
        }
    }

    // weights[t][k][x] for scale index k
    let scales = (hi - lo + 1) as usize;
    let mut weights = vec![vec![vec![0.0f64; n]; scales]; cfg.t_max + 1];
    for (t, per_scale) in weights.iter_mut().enumerate() {
        for x in 0..n {
            let r = growth_radius(m, x, t);
            for (k, w) in per_scale.iter_mut().enumerate() {
                w[x] = bump(cfg, r / metric::pow2(lo + k as i32));
            }
        }
    }

    // re-truncations at 2^m/B, built lazily: inactive scales never pay for
    // the eigendecomposition
    let mut hats: Vec<Option<Embedding>> = vec![None; scales];
    let mut coords = vec![Vec::new(); n];
    for per_scale in &weights {
        for (k, w) in per_scale.iter().enumerate() {
            if w.iter().all(|&v| v == 0.0) {
                continue;
            }
            if hats[k].is_none() {
                let tau = metric::pow2(lo + k as i32) / cfg.b;
                hats[k] = Some(truncate_embedding(&maps[k].1, tau)?);
            }
            let hat = hats[k].as_ref().unwrap();
            for (x, row) in coords.iter_mut().enumerate() {
                row.extend(hat.coords[x].iter().map(|v| w[x] * v));
            }
        }
    }
    let dim = coords[0].len();
    let log_n = (n as f64).log2().max(1.0);
    let log_ab = (4.0 * cfg.a * cfg.b).log2().max(1.0);
    Ok(Embedding { n, dim, lip_bound: C_GLUE * (log_n * log_ab).sqrt(), coords })
}

/// Deterministic audit of the glue separation contract: for every ordered
/// pair `(x,y)` and scale `m`,
/// `||glued(x)-glued(y)|| >= 1/4 sqrt(count_t(x,m)) min{2^m/B, ||phi_m(x)-phi_m(y)||}`
/// where `count_t(x,m)` enumerates the `t` with bump weight exactly 1.
/// Returns the max over pairs of `bound/achieved`; at most 1 means the
/// contract holds everywhere.
pub fn glue_lower_bound_margin(
    m: &MetricSpace,
    maps: &[(i32, Embedding)],
    cfg: &GlueConfig,
    glued: &Embedding,
) -> f64 {
    let n = m.n();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let achieved = glued.distance(x, y);
            for &(mi, ref phi) in maps {
                let count = (0..=cfg.t_max)
                    .filter(|&t| weight(m, cfg, x, t, mi) >= 1.0 - 1e-12)
                    .count();
                let cap = metric::pow2(mi) / cfg.b;
                let bound = 0.25 * (count as f64).sqrt() * cap.min(phi.distance(x, y));
                if bound > 0.0 {
                    worst = worst.max(bound / achieved.max(f64::MIN_POSITIVE));
                }
            }
        }
    }
    worst
}

/// The stratum `{x : |B(x, 8 tau alpha)| <= K |B(x, tau / (12 C (log2 K)^eps))|}`
/// of points whose ball growth across the scale window is at most `K`.
pub fn s_tau_k(
    m: &MetricSpace,
    tau: f64,
    k: f64,
    c: f64,
    eps: f64,
    alpha_hat: f64,
) -> Vec<usize> {
    assert!(k >= 2.0);
    assert!(tau > 0.0);
    let inner = tau / (12.0 * c * k.log2().powf(eps));
    (0..m.n())
        .filter(|&x| {
            let big = metric::ball_size(m, x, 8.0 * tau * alpha_hat) as f64;
            let small = metric::ball_size(m, x, inner) as f64;
            big <= k * small
        })
        .collect()
}

/// Pairwise max-ratio distortion of an embedding against the metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    pub lip: f64,
    pub colip: f64,
    pub distortion: f64,
    pub lip_pair: (usize, usize),
    pub colip_pair: (usize, usize),
}

/// Exact max-ratio scan over all pairs; errors when two points share an
/// image (the expansion/contraction ratios would be degenerate).
pub fn evaluate_distortion(m: &MetricSpace, e: &Embedding) -> Result<DistortionReport, GlueError> {
    assert_eq!(m.n(), e.n);
    if m.n() < 2 {
        return Ok(DistortionReport {
            lip: 0.0,
            colip: 0.0,
            distortion: 1.0,
            lip_pair: (0, 0),
            colip_pair: (0, 0),
        });
    }
    let mut lip = 0.0f64;
    let mut colip = 0.0f64;
    let mut lip_pair = (0, 1);
    let mut colip_pair = (0, 1);
    for i in 0..m.n() {
        for j in (i + 1)..m.n() {
            let de = e.distance(i, j);
            if de == 0.0 {
                return Err(GlueError::NonInjective { i, j });
            }
            let d = m.dist(i, j);
            if de / d > lip {
                lip = de / d;
                lip_pair = (i, j);
            }
            if d / de > colip {
                colip = d / de;
                colip_pair = (i, j);
            }
        }
    }
    Ok(DistortionReport { lip, colip, distortion: lip * colip, lip_pair, colip_pair })
}

/// Sampling and estimation budgets of the full pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Draws per random Frechet/zero-set map.
    pub t_samples: usize,
    /// Partition draws per padded localization.
    pub lambda_samples: usize,
    /// Subset draws inside each localization.
    pub gamma_samples: usize,
    /// Partition draws behind the padding-modulus estimate.
    pub alpha_samples: usize,
    /// Skips estimation and uses this modulus instead.
    pub alpha_override: Option<f64>,
    /// Pairs audited against the ensemble's separation contract.
    pub audit_pairs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            t_samples: 200,
            lambda_samples: 8,
            gamma_samples: 2,
            alpha_samples: 100,
            alpha_override: None,
            audit_pairs: 4,
        }
    }
}

/// Measured per-stage contribution of the pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub dim: usize,
    pub lip: f64,
    pub colip: f64,
    pub distortion: f64,
}

pub struct PipelineResult {
    pub embedding: Embedding,
    pub stages: Vec<StageReport>,
    pub alpha_hat: f64,
    /// Warning-level contract findings; never fatal.
    pub warnings: Vec<String>,
}

fn stage_report(name: String, e: &Embedding, m: &MetricSpace) -> StageReport {
    let mut lip = 0.0f64;
    let mut colip = 0.0f64;
    for i in 0..m.n() {
        for j in (i + 1)..m.n() {
            let de = e.distance(i, j);
            let d = m.dist(i, j);
            lip = lip.max(de / d);
            colip = colip.max(d / de); // +inf when a stage collapses a pair
        }
    }
    StageReport { stage: name, dim: e.dim, lip, colip, distortion: lip * colip }
}

/// Builds one glued stage, constructing inner maps only for scales with a
/// nonzero bump weight somewhere; inactive scales contribute zero blocks.
fn glue_stage<F>(
    m: &MetricSpace,
    cfg: &GlueConfig,
    mut build: F,
    stream: &SeedStream,
) -> Result<Embedding, GlueError>
where
    F: FnMut(f64, &SeedStream) -> Result<Embedding, EmbedError>,
{
    let (lo, hi) = required_scales(m, cfg);
    let mut maps = Vec::with_capacity((hi - lo + 1) as usize);
    for mi in lo..=hi {
        let e = if scale_is_active(m, cfg, mi) {
            build(metric::pow2(mi), &stream.child(&format!("scale/{mi}")))?
        } else {
            Embedding::zero(m.n())
        };
        maps.push((mi, e));
    }
    glue(m, &maps, cfg)
}

/// Loose empirical check of the ensemble's separation promise on a few
/// pairs at the smallest dyadic scale; findings are warnings, not errors,
/// because the promise is probabilistic and the audit is a single draw.
fn audit_ensemble(
    m: &MetricSpace,
    ensemble: &dyn SingleScaleProvider,
    c: f64,
    eps: f64,
    pairs: usize,
    stream: &SeedStream,
    warnings: &mut Vec<String>,
) -> Result<(), GlueError> {
    if pairs == 0 || m.n() < 2 {
        return Ok(());
    }
    let (lo, _) = metric::dyadic_scales(m);
    let tau = metric::pow2(lo);
    let all: Vec<usize> = (0..m.n()).collect();
    let phi = ensemble.single_scale_map(m, &all, tau, &stream.child("audit"))?;
    let log_n = (m.n() as f64).log2().max(2.0);
    // the promised order of separation, discounted for sampling noise
    let floor = tau / (c * log_n.powf(eps)) / 16.0;
    let mut audited = 0usize;
    'outer: for x in 0..m.n() {
        for y in (x + 1)..m.n() {
            let d = m.dist(x, y);
            if !(tau..=6.0 * tau).contains(&d) {
                continue;
            }
            if phi.distance(x, y) < floor {
                warnings.push(format!(
                    "ensemble separation {:.3e} below audit floor {:.3e} on pair ({x},{y}) at scale {tau}",
                    phi.distance(x, y),
                    floor
                ));
            }
            audited += 1;
            if audited >= pairs {
                break 'outer;
            }
        }
    }
    Ok(())
}

/// The full pipeline: a cascade of glued localized stages with ball-count
/// budgets `K_0 = n, K_{j+1} = sqrt(K_j)` down to 4, a glued small-ratio
/// base stage, and final normalization by the measured Lipschitz constant.
///
/// `c` and `eps` describe the ensemble's separation quality: its maps
/// separate suitable pairs by about `tau / (c (log2 |S|)^eps)`.
pub fn full_embedding(
    m: &MetricSpace,
    ensemble: &dyn SingleScaleProvider,
    c: f64,
    eps: f64,
    cfg: &PipelineConfig,
    stream: &SeedStream,
) -> Result<PipelineResult, GlueError> {
    let n = m.n();
    if n < 2 {
        return Ok(PipelineResult {
            embedding: Embedding::zero(n),
            stages: Vec::new(),
            alpha_hat: 1.0,
            warnings: Vec::new(),
        });
    }
    let alpha_hat = cfg
        .alpha_override
        .unwrap_or_else(|| estimate_alpha(m, cfg.alpha_samples, &stream.child("alpha")));

    let mut budgets = Vec::new();
    let mut kj = n as f64;
    while kj >= 4.0 {
        budgets.push(kj);
        kj = kj.sqrt();
    }
    let stage_cap = (n as f64).log2().max(2.0).log2().ceil() as usize + 1;
    assert!(budgets.len() <= stage_cap, "cascade has {} stages, cap {stage_cap}", budgets.len());

    let mut warnings = Vec::new();
    audit_ensemble(m, ensemble, c, eps, cfg.audit_pairs, &stream.child("audit"), &mut warnings)?;

    let mut stage_embeddings: Vec<Embedding> = Vec::new();
    let mut stages = Vec::new();
    for (j, &k) in budgets.iter().enumerate() {
        let b = (12.0 * c * k.log2().powf(eps)).max(1.0);
        let gcfg = GlueConfig::new(m, (4.0 * alpha_hat).max(1.0), b);
        let sub = stream.child(&format!("stage/{j}"));
        let subset = (k.ceil() as usize).max(2);
        let f = glue_stage(
            m,
            &gcfg,
            |tau, s| {
                lambda_map(
                    m,
                    tau,
                    subset,
                    ensemble,
                    cfg.lambda_samples,
                    cfg.gamma_samples,
                    alpha_hat,
                    s,
                )
            },
            &sub,
        )?;
        stages.push(stage_report(format!("localized-k{}", subset), &f, m));
        stage_embeddings.push(f);
    }
    // base stage for pairs whose ball ratios have shrunk below every budget
    let b = (12.0 * c).max(1.0);
    let gcfg = GlueConfig::new(m, (4.0 * alpha_hat).max(1.0), b);
    let f = glue_stage(
        m,
        &gcfg,
        |tau, s| Ok(small_ratio_map(m, tau, cfg.t_samples, s)),
        &stream.child("stage/base"),
    )?;
    stages.push(stage_report("small-ratio".into(), &f, m));
    stage_embeddings.push(f);

    let parts: Vec<(f64, &Embedding)> = stage_embeddings.iter().map(|e| (1.0, e)).collect();
    let combined = Embedding::concat(&parts);
    let lip = combined.measured_lip(m);
    let embedding = if lip > 0.0 {
        let mut e = combined.scaled(1.0 / lip);
        e.lip_bound = 1.0;
        e
    } else {
        combined
    };
    Ok(PipelineResult { embedding, stages, alpha_hat, warnings })
}
