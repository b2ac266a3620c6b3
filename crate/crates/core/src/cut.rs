//! Cut sparsity, the brute-force sparsest-cut oracle, SDP-based sweep-cut
//! rounding, and the coordinate cut decomposition of line embeddings.

use crate::sdp::{self, SdpError};
use crate::seeds::SeedStream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exhaustive enumeration is capped at 2^23 cuts.
pub const BRUTE_FORCE_CAP: usize = 24;

#[derive(Debug, Error)]
pub enum CutError {
    #[error("cut must be a proper nonempty subset")]
    EmptyOrFullCut,
    #[error("instance too large for brute force: {n} points exceeds {BRUTE_FORCE_CAP}")]
    TooLarge { n: usize },
    #[error("weights must be square, symmetric, nonnegative, with zero diagonal")]
    BadWeights,
    #[error("demand weights are identically zero")]
    ZeroDemand,
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Capacity weights `w_N` and demand weights `w_D` on unordered pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutInstance {
    pub n: usize,
    #[serde(rename = "w_N")]
    pub w_n: Vec<Vec<f64>>,
    #[serde(rename = "w_D")]
    pub w_d: Vec<Vec<f64>>,
}

fn check_weights(n: usize, w: &[Vec<f64>]) -> Result<(), CutError> {
    if w.len() != n {
        return Err(CutError::BadWeights);
    }
    for i in 0..n {
        if w[i].len() != n || w[i][i] != 0.0 {
            return Err(CutError::BadWeights);
        }
        for j in 0..n {
            if w[i][j] < 0.0 || w[i][j] != w[j][i] {
                return Err(CutError::BadWeights);
            }
        }
    }
    Ok(())
}

impl CutInstance {
    pub fn new(w_n: Vec<Vec<f64>>, w_d: Vec<Vec<f64>>) -> Result<Self, CutError> {
        let n = w_n.len();
        check_weights(n, &w_n)?;
        check_weights(n, &w_d)?;
        if w_d.iter().all(|r| r.iter().all(|&v| v == 0.0)) {
            return Err(CutError::ZeroDemand);
        }
        Ok(CutInstance { n, w_n, w_d })
    }

    /// Unit capacities on the graph edges of a shortest-path metric (the
    /// pairs at distance exactly 1) and unit demands on every pair.
    pub fn unit_capacity_uniform(m: &crate::metric::MetricSpace) -> Result<Self, CutError> {
        let n = m.n();
        let mut w_n = vec![vec![0.0; n]; n];
        let mut w_d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    w_d[i][j] = 1.0;
                    if m.dist(i, j) == 1.0 {
                        w_n[i][j] = 1.0;
                    }
                }
            }
        }
        CutInstance::new(w_n, w_d)
    }

    /// Vertices incident to a positive demand.
    pub fn demand_support(&self) -> Vec<usize> {
        (0..self.n).filter(|&u| self.w_d[u].iter().any(|&v| v > 0.0)).collect()
    }
}

/// A two-sided vertex partition; `S = {v : side[v]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cut {
    pub side: Vec<bool>,
}

impl Cut {
    pub fn members(&self) -> Vec<usize> {
        (0..self.side.len()).filter(|&v| self.side[v]).collect()
    }
}

/// Capacity crossing the cut divided by demand crossing it. The flag marks
/// the degenerate 0/0 case, reported as `+inf`; a positive numerator over a
/// zero denominator is plain `+inf`.
pub fn sparsity(inst: &CutInstance, cut: &Cut) -> Result<(f64, bool), CutError> {
    assert_eq!(cut.side.len(), inst.n);
    let k = cut.side.iter().filter(|&&s| s).count();
    if k == 0 || k == inst.n {
        return Err(CutError::EmptyOrFullCut);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for u in 0..inst.n {
        for v in (u + 1)..inst.n {
            if cut.side[u] != cut.side[v] {
                num += inst.w_n[u][v];
                den += inst.w_d[u][v];
            }
        }
    }
    if den == 0.0 {
        return Ok((f64::INFINITY, num == 0.0));
    }
    Ok((num / den, false))
}

/// Exact minimum sparsity over all proper cuts; ties broken by the
/// lexicographically smallest member set (a cut and its complement have
/// equal sparsity, so both representations enter the tie-break).
pub fn brute_force_optimum(inst: &CutInstance) -> Result<(Cut, f64), CutError> {
    let n = inst.n;
    if n > BRUTE_FORCE_CAP {
        return Err(CutError::TooLarge { n });
    }
    if n < 2 {
        return Err(CutError::EmptyOrFullCut);
    }
    let mut best: Option<(f64, Vec<usize>, Cut)> = None;
    for mask in 1u32..(1u32 << (n - 1)) {
        let mut side = vec![false; n];
        for k in 0..(n - 1) {
            side[k + 1] = mask & (1 << k) != 0;
        }
        let cut = Cut { side };
        let (phi, _) = sparsity(inst, &cut)?;
        // compare both the set and its complement for the lex tie-break
        let comp = Cut { side: cut.side.iter().map(|&s| !s).collect() };
        for cand in [cut, comp] {
            let members = cand.members();
            let better = match &best {
                None => true,
                Some((bphi, bmembers, _)) => {
                    phi < bphi - 1e-12 * bphi.abs().max(1.0)
                        || ((phi - bphi).abs() <= 1e-12 * bphi.abs().max(1.0)
                            && members < *bmembers)
                }
            };
            if better {
                best = Some((phi, members, cand));
            }
        }
    }
    let (phi, _, cut) = best.unwrap();
    Ok((cut, phi))
}

/// A nonnegative combination of cuts reconstructing an l1 metric:
/// `||g(x)-g(y)||_1 = sum_i alpha_i |1_{S_i}(x) - 1_{S_i}(y)|`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutDecomposition {
    pub cuts: Vec<(f64, Vec<bool>)>,
}

impl CutDecomposition {
    pub fn reconstruct(&self, x: usize, y: usize) -> f64 {
        self.cuts
            .iter()
            .filter(|(_, s)| s[x] != s[y])
            .map(|(a, _)| a)
            .sum()
    }
}

/// Per coordinate, sorts the values and emits one prefix cut per
/// consecutive gap with weight equal to the gap; the combination
/// reconstructs the l1 metric of the input exactly.
pub fn cut_decomposition(points: &[Vec<f64>]) -> CutDecomposition {
    let n = points.len();
    let dims = points.first().map_or(0, |p| p.len());
    let mut cuts = Vec::new();
    for c in 0..dims {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            points[a][c].partial_cmp(&points[b][c]).unwrap().then(a.cmp(&b))
        });
        for p in 1..n {
            let gap = points[order[p]][c] - points[order[p - 1]][c];
            if gap > 0.0 {
                let mut side = vec![false; n];
                for &v in &order[..p] {
                    side[v] = true;
                }
                cuts.push((gap, side));
            }
        }
    }
    CutDecomposition { cuts }
}

/// Budget knobs for [`round_sdp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundConfig {
    /// Sign vectors per `log2 n`; the count is `ceil(m_factor * log2 n)`.
    pub m_factor: f64,
    pub tol: f64,
    pub sdp_max_iter: usize,
}

impl Default for RoundConfig {
    fn default() -> Self {
        RoundConfig { m_factor: 20.0, tol: 1e-4, sdp_max_iter: 50000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCandidate {
    pub direction: usize,
    pub prefix: usize,
    pub phi: f64,
    /// True when the demand crossing the candidate was zero.
    pub skipped: bool,
}

/// Everything needed to replay and audit one rounding run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundTrace {
    /// Relaxation objective; a lower bound on the optimum.
    pub sdp_value: f64,
    /// Contraction of the 1-Lipschitz re-embedding of the relaxation metric.
    pub epsilon: f64,
    /// Factor applied to make the embedding exactly 1-Lipschitz.
    pub f_scale: f64,
    /// Measured l1 distortion of the sign-projection image.
    pub lambda_measured: f64,
    /// Whether `phi(returned) <= lambda * sdp_value` held numerically.
    pub accounting_ok: bool,
    pub candidates: Vec<SweepCandidate>,
}

/// Solves the relaxation, re-embeds its metric with maximal contraction on
/// the demand support, projects on random sign vectors, and returns the
/// sparsest of all sweep (prefix) cuts over every projection order.
pub fn round_sdp(
    inst: &CutInstance,
    cfg: &RoundConfig,
    stream: &SeedStream,
) -> Result<(Cut, f64, RoundTrace), CutError> {
    let n = inst.n;
    let (d_star, _pts, value) = sdp::sparsest_cut_relaxation(inst, cfg.tol, cfg.sdp_max_iter)?;
    let support = inst.demand_support();
    let (f, eps) = sdp::min_distortion_embedding(&d_star, &support, cfg.tol, cfg.sdp_max_iter)?;
    // exact 1-Lipschitz renormalization before sweeping
    let lip = f.measured_lip(&d_star);
    let f_scale = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    let f = f.scaled(f_scale);

    let m_dirs = ((cfg.m_factor * (n.max(2) as f64).log2()).ceil() as usize).max(1);
    // projections[i][v] = <beta_i, f(v)> for a uniform sign vector beta_i
    let projections: Vec<Vec<f64>> = (0..m_dirs)
        .map(|i| {
            let mut rng = stream.rng(i as u64);
            let beta: Vec<f64> =
                (0..f.dim).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            (0..n)
                .map(|v| f.eval(v).iter().zip(&beta).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();

    let mut candidates = Vec::with_capacity(m_dirs * (n - 1));
    let mut best: Option<(f64, Cut)> = None;
    for (i, proj) in projections.iter().enumerate() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| proj[a].partial_cmp(&proj[b]).unwrap().then(a.cmp(&b)));
        for p in 1..n {
            let mut side = vec![false; n];
            for &v in &order[..p] {
                side[v] = true;
            }
            let cut = Cut { side };
            let (phi, _) = sparsity(inst, &cut)?;
            let skipped = phi.is_infinite();
            candidates.push(SweepCandidate { direction: i, prefix: p, phi, skipped });
            if !skipped && best.as_ref().map_or(true, |(bphi, _)| phi < *bphi) {
                best = Some((phi, cut));
            }
        }
    }
    let (phi, cut) = best.ok_or(CutError::ZeroDemand)?;

    // l1 distortion of the sign-projection image, realized as cuts
    let g: Vec<Vec<f64>> = (0..n).map(|v| projections.iter().map(|p| p[v]).collect()).collect();
    let dec = cut_decomposition(&g);
    let mut l1_lip = 0.0f64;
    let mut l1_colip = 0.0f64;
    for u in 0..n {
        for v in (u + 1)..n {
            let l1 = dec.reconstruct(u, v);
            let d = d_star.dist(u, v);
            l1_lip = l1_lip.max(l1 / d);
            l1_colip = l1_colip.max(d / l1);
        }
    }
    let lambda_measured = l1_lip * l1_colip;
    let accounting_ok = phi <= lambda_measured * value * (1.0 + cfg.tol) + cfg.tol;
    let trace = RoundTrace {
        sdp_value: value,
        epsilon: eps,
        f_scale,
        lambda_measured,
        accounting_ok,
        candidates,
    };
    Ok((cut, phi, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{cycle, path};

    fn c4_uniform() -> CutInstance {
        CutInstance::unit_capacity_uniform(&cycle(4).unwrap()).unwrap()
    }

    #[test]
    fn sparsity_on_c4() {
        let inst = c4_uniform();
        let single = Cut { side: vec![true, false, false, false] };
        assert_eq!(sparsity(&inst, &single).unwrap(), (2.0 / 3.0, false));
        let pair = Cut { side: vec![true, true, false, false] };
        assert_eq!(sparsity(&inst, &pair).unwrap(), (0.5, false));
    }

    #[test]
    fn sparsity_complement_invariance() {
        let inst = CutInstance::unit_capacity_uniform(&path(5).unwrap()).unwrap();
        for mask in 1u32..15 {
            let side: Vec<bool> = (0..5).map(|k| mask & (1 << k) != 0).collect();
            if side.iter().all(|&s| s) {
                continue;
            }
            let cut = Cut { side: side.clone() };
            let comp = Cut { side: side.iter().map(|&s| !s).collect() };
            assert_eq!(sparsity(&inst, &cut).unwrap(), sparsity(&inst, &comp).unwrap());
        }
    }

    #[test]
    fn sparsity_rejects_trivial_cuts() {
        let inst = c4_uniform();
        let empty = Cut { side: vec![false; 4] };
        assert!(matches!(sparsity(&inst, &empty), Err(CutError::EmptyOrFullCut)));
        let full = Cut { side: vec![true; 4] };
        assert!(matches!(sparsity(&inst, &full), Err(CutError::EmptyOrFullCut)));
    }

    #[test]
    fn zero_demand_rejected_and_zero_over_zero_flagged() {
        let z = vec![vec![0.0; 3]; 3];
        assert!(matches!(CutInstance::new(z.clone(), z.clone()), Err(CutError::ZeroDemand)));
        // demand only between 0 and 1; cut isolating 2 crosses nothing
        let mut w_d = vec![vec![0.0; 3]; 3];
        w_d[0][1] = 1.0;
        w_d[1][0] = 1.0;
        let inst = CutInstance::new(z, w_d).unwrap();
        let cut = Cut { side: vec![false, false, true] };
        assert_eq!(sparsity(&inst, &cut).unwrap(), (f64::INFINITY, true));
    }

    #[test]
    fn brute_force_two_vertices() {
        let inst = CutInstance::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let (cut, phi) = brute_force_optimum(&inst).unwrap();
        assert_eq!(phi, 1.0);
        assert_eq!(cut.members(), vec![0]); // lex-smallest representation
    }

    #[test]
    fn brute_force_c4_is_half() {
        let (cut, phi) = brute_force_optimum(&c4_uniform()).unwrap();
        assert_eq!(phi, 0.5);
        // an adjacent pair, lex-smallest among the minimizers
        assert_eq!(cut.members(), vec![0, 1]);
    }

    #[test]
    fn brute_force_star_k13() {
        // center 0, unit capacities on the three spokes, uniform demands
        let mut w_n = vec![vec![0.0; 4]; 4];
        for leaf in 1..4 {
            w_n[0][leaf] = 1.0;
            w_n[leaf][0] = 1.0;
        }
        let mut w_d = vec![vec![1.0; 4]; 4];
        for (i, row) in w_d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        let inst = CutInstance::new(w_n, w_d).unwrap();
        let (cut, phi) = brute_force_optimum(&inst).unwrap();
        // a single leaf cuts 1 spoke over 3 demands; the minimizers are the
        // three leaves and their complements, and {0,1,2} is lex-smallest
        assert_eq!(phi, 1.0 / 3.0);
        assert_eq!(cut.members(), vec![0, 1, 2]);
    }

    #[test]
    fn brute_force_size_cap() {
        let n = 25;
        let mut w = vec![vec![1.0; n]; n];
        for (i, row) in w.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        let inst = CutInstance::new(w.clone(), w).unwrap();
        assert!(matches!(brute_force_optimum(&inst), Err(CutError::TooLarge { .. })));
    }

    #[test]
    fn round_sdp_on_c4_finds_a_good_cut() {
        use crate::seeds::SeedStream;
        let inst = c4_uniform();
        let stream = SeedStream::new(7, "round/c4");
        let (cut, phi, trace) = round_sdp(&inst, &RoundConfig::default(), &stream).unwrap();
        let (_, phi_star) = brute_force_optimum(&inst).unwrap();
        assert!(phi >= phi_star - 1e-12);
        // sweep cuts on a 4-cycle always include an adjacent pair or a
        // singleton; the worst candidate minimum is 2/3
        assert!(phi <= 2.0 / 3.0 + 1e-12, "phi {phi}");
        assert!(trace.sdp_value <= phi + 1e-3);
        assert!(trace.accounting_ok, "lambda {} value {}", trace.lambda_measured, trace.sdp_value);
        assert!(trace.epsilon > 0.0 && trace.epsilon <= 1.0 + 1e-9);
        assert_eq!(cut.members().len(), cut.side.iter().filter(|&&s| s).count());
        assert!(!trace.candidates.is_empty());
    }

    #[test]
    fn round_sdp_is_deterministic() {
        use crate::seeds::SeedStream;
        let inst = CutInstance::unit_capacity_uniform(&path(4).unwrap()).unwrap();
        let run = || {
            let stream = SeedStream::new(11, "round/path4");
            round_sdp(&inst, &RoundConfig::default(), &stream).unwrap()
        };
        let (c1, p1, t1) = run();
        let (c2, p2, t2) = run();
        assert_eq!(c1, c2);
        assert_eq!(p1.to_bits(), p2.to_bits());
        assert_eq!(t1.lambda_measured.to_bits(), t2.lambda_measured.to_bits());
    }

    #[test]
    fn decomposition_three_points_on_a_line() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        let dec = cut_decomposition(&pts);
        assert_eq!(dec.cuts.len(), 2);
        assert_eq!(dec.cuts[0], (1.0, vec![true, false, false]));
        assert_eq!(dec.cuts[1], (2.0, vec![true, true, false]));
        assert_eq!(dec.reconstruct(0, 1), 1.0);
        assert_eq!(dec.reconstruct(1, 2), 2.0);
        assert_eq!(dec.reconstruct(0, 2), 3.0);
    }

    #[test]
    fn decomposition_of_coincident_points_is_empty() {
        let pts = vec![vec![2.0, -1.0]; 4];
        assert!(cut_decomposition(&pts).cuts.is_empty());
    }

    #[test]
    fn decomposition_reconstructs_random_configs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let n = 2 + (rng.gen::<u32>() % 7) as usize;
            let d = 1 + (rng.gen::<u32>() % 4) as usize;
            let pts: Vec<Vec<f64>> =
                (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
            let dec = cut_decomposition(&pts);
            for x in 0..n {
                for y in 0..n {
                    let l1: f64 =
                        pts[x].iter().zip(&pts[y]).map(|(a, b)| (a - b).abs()).sum();
                    assert!((dec.reconstruct(x, y) - l1).abs() <= 1e-12);
                }
            }
        }
    }
}
