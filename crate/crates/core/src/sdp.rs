//! A small dense semidefinite solver (augmented Lagrangian with exact PSD
//! projection) and the two programs built on it: the maximal-contraction
//! 1-Lipschitz re-embedding of a metric, and the sparsest-cut relaxation
//! over negative-type metrics with lazily separated triangle constraints.

use crate::cut::CutInstance;
use crate::embed::Embedding;
use crate::linalg::symmetric_eigen;
use crate::metric::{self, MetricSpace, PointConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("demand weights are identically zero")]
    ZeroDemand,
    #[error("no feasible point found (residual {violation} at penalty cap)")]
    Infeasible { violation: f64 },
    #[error("eigendecomposition failed")]
    EigFailure,
    #[error("solution metric is invalid: {0}")]
    BadMetric(#[from] metric::MetricError),
}

/// A linear functional of the Gram matrix and the auxiliary scalar:
/// `sum_k c_k * G[i_k][j_k] + scalar * s`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LinExpr {
    pub gram: Vec<(usize, usize, f64)>,
    pub scalar: f64,
}

impl LinExpr {
    /// `c * ||x_u - x_v||^2 = c*(G_uu + G_vv - 2 G_uv)`.
    pub fn sq_dist(u: usize, v: usize, c: f64) -> LinExpr {
        LinExpr { gram: vec![(u, u, c), (v, v, c), (u, v, -2.0 * c)], scalar: 0.0 }
    }

    pub fn push_sq_dist(&mut self, u: usize, v: usize, c: f64) {
        self.gram.push((u, u, c));
        self.gram.push((v, v, c));
        self.gram.push((u, v, -2.0 * c));
    }

    fn eval(&self, g: &[Vec<f64>], s: f64) -> f64 {
        self.gram.iter().map(|&(i, j, c)| c * g[i][j]).sum::<f64>() + self.scalar * s
    }

    fn norm(&self) -> f64 {
        (self.gram.iter().map(|&(_, _, c)| c * c).sum::<f64>() + self.scalar * self.scalar)
            .sqrt()
    }
}

/// Maximize `objective` over PSD Gram matrices (and an optional boxed
/// scalar) subject to linear equalities and `expr <= bound` inequalities.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub n: usize,
    pub objective: LinExpr,
    pub eq: Vec<(LinExpr, f64)>,
    pub ineq: Vec<(LinExpr, f64)>,
    /// `Some((lo, hi))` enables the scalar variable, clamped to the box.
    pub scalar_bounds: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    pub gram: Vec<Vec<f64>>,
    /// Factorization of the Gram matrix; eigenvalues below `1e-9 * trace`
    /// are dropped.
    pub points: PointConfig,
    pub scalar: f64,
    pub objective_value: f64,
    pub status: SdpStatus,
    /// Largest constraint residual, each constraint scaled to unit gradient.
    pub max_violation: f64,
    pub iterations: usize,
}

struct ScaledConstraint {
    expr: LinExpr,
    bound: f64,
}

fn scale_constraint(e: &LinExpr, b: f64) -> ScaledConstraint {
    let nrm = e.norm().max(1e-12);
    let expr = LinExpr {
        gram: e.gram.iter().map(|&(i, j, c)| (i, j, c / nrm)).collect(),
        scalar: e.scalar / nrm,
    };
    ScaledConstraint { expr, bound: b / nrm }
}

fn add_grad(grad: &mut [Vec<f64>], grad_s: &mut f64, e: &LinExpr, w: f64) {
    for &(i, j, c) in &e.gram {
        if i == j {
            grad[i][i] += w * c;
        } else {
            // symmetric parametrization: split across the mirror entries
            grad[i][j] += 0.5 * w * c;
            grad[j][i] += 0.5 * w * c;
        }
    }
    *grad_s += w * e.scalar;
}

fn project_psd(g: &mut Vec<Vec<f64>>) -> Result<(), SdpError> {
    let n = g.len();
    let (vals, vecs) = symmetric_eigen(g).ok_or(SdpError::EigFailure)?;
    let mut out = vec![vec![0.0; n]; n];
    for (k, &lam) in vals.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let v = &vecs[k];
        for i in 0..n {
            let li = lam * v[i];
            for j in 0..n {
                out[i][j] += li * v[j];
            }
        }
    }
    // exact symmetry despite accumulation order
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (out[i][j] + out[j][i]);
            out[i][j] = m;
            out[j][i] = m;
        }
    }
    *g = out;
    Ok(())
}

/// Factorizes a PSD matrix into point coordinates, dropping eigenvalues
/// below `1e-9 * trace`.
pub fn factor_gram(g: &[Vec<f64>]) -> Result<PointConfig, SdpError> {
    let n = g.len();
    let (vals, vecs) = symmetric_eigen(g).ok_or(SdpError::EigFailure)?;
    let trace: f64 = (0..n).map(|i| g[i][i]).sum();
    let cut = 1e-9 * trace.max(0.0);
    let kept: Vec<usize> = (0..n).filter(|&k| vals[k] > cut).collect();
    let dim = kept.len();
    let mut coords = vec![vec![0.0; dim]; n];
    for (c, &k) in kept.iter().enumerate() {
        let s = vals[k].sqrt();
        for i in 0..n {
            coords[i][c] = s * vecs[k][i];
        }
    }
    Ok(PointConfig { n, dim, coords })
}

pub fn solve(p: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution, SdpError> {
    solve_from(p, tol, max_iter, None)
}

/// Augmented-Lagrangian projected gradient: alternate gradient steps with
/// exact PSD projection, updating multipliers and escalating the penalty on
/// a fixed cadence. Deterministic and single-threaded.
pub fn solve_from(
    p: &SdpProblem,
    tol: f64,
    max_iter: usize,
    init: Option<(Vec<Vec<f64>>, f64)>,
) -> Result<SdpSolution, SdpError> {
    let n = p.n;
    let eqs: Vec<ScaledConstraint> = p.eq.iter().map(|(e, b)| scale_constraint(e, *b)).collect();
    let ins: Vec<ScaledConstraint> =
        p.ineq.iter().map(|(e, b)| scale_constraint(e, *b)).collect();
    let obj_norm = p.objective.norm();
    let obj = if obj_norm > 0.0 {
        LinExpr {
            gram: p.objective.gram.iter().map(|&(i, j, c)| (i, j, c / obj_norm)).collect(),
            scalar: p.objective.scalar / obj_norm,
        }
    } else {
        LinExpr::default()
    };

    let (mut g, mut s) = init.unwrap_or_else(|| (vec![vec![0.0; n]; n], 0.0));
    if let Some((lo, hi)) = p.scalar_bounds {
        s = s.clamp(lo, hi);
    }
    project_psd(&mut g)?;

    let m_total = (eqs.len() + ins.len()).max(1) as f64;
    let mut lam = vec![0.0f64; eqs.len()];
    let mut mu = vec![0.0f64; ins.len()];
    let mut rho = 1.0f64;
    let inner = 32usize;
    let mut iterations = 0usize;
    let mut prev_viol = f64::INFINITY;
    let mut prev_obj = f64::NAN;
    let mut status = SdpStatus::MaxIterations;

    let max_violation = |g: &Vec<Vec<f64>>, s: f64| -> f64 {
        let mut v = 0.0f64;
        for c in &eqs {
            v = v.max((c.expr.eval(g, s) - c.bound).abs());
        }
        for c in &ins {
            v = v.max(c.expr.eval(g, s) - c.bound);
        }
        v
    };

    // gradient of the augmented Lagrangian at (y, ys) for fixed multipliers
    let al_grad = |y: &Vec<Vec<f64>>, ys: f64, lam: &[f64], mu: &[f64], rho: f64| {
        let mut grad = vec![vec![0.0; n]; n];
        let mut grad_s = 0.0f64;
        add_grad(&mut grad, &mut grad_s, &obj, -1.0);
        for (k, c) in eqs.iter().enumerate() {
            let h = c.expr.eval(y, ys) - c.bound;
            add_grad(&mut grad, &mut grad_s, &c.expr, lam[k] + rho * h);
        }
        for (k, c) in ins.iter().enumerate() {
            let h = c.expr.eval(y, ys) - c.bound;
            let w = (mu[k] + rho * h).max(0.0);
            if w > 0.0 {
                add_grad(&mut grad, &mut grad_s, &c.expr, w);
            }
        }
        (grad, grad_s)
    };

    let mut stall_rounds = 0usize;
    while iterations < max_iter {
        let eta = 1.0 / (1.0 + rho * m_total);
        // accelerated proximal steps (momentum restarts each outer round)
        let mut y = g.clone();
        let mut ys = s;
        let mut g_prev = g.clone();
        let mut s_prev = s;
        let mut tk = 1.0f64;
        for _ in 0..inner {
            if iterations >= max_iter {
                break;
            }
            iterations += 1;
            let (grad, grad_s) = al_grad(&y, ys, &lam, &mu, rho);
            for i in 0..n {
                for j in 0..n {
                    g[i][j] = y[i][j] - eta * grad[i][j];
                }
            }
            project_psd(&mut g)?;
            s = ys;
            if let Some((lo, hi)) = p.scalar_bounds {
                s = (ys - eta * grad_s).clamp(lo, hi);
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
            let beta = (tk - 1.0) / t_next;
            for i in 0..n {
                for j in 0..n {
                    y[i][j] = g[i][j] + beta * (g[i][j] - g_prev[i][j]);
                }
            }
            ys = s + beta * (s - s_prev);
            if let Some((lo, hi)) = p.scalar_bounds {
                ys = ys.clamp(lo, hi);
            }
            g_prev = g.clone();
            s_prev = s;
            tk = t_next;
        }
        for (k, c) in eqs.iter().enumerate() {
            lam[k] += rho * (c.expr.eval(&g, s) - c.bound);
        }
        for (k, c) in ins.iter().enumerate() {
            mu[k] = (mu[k] + rho * (c.expr.eval(&g, s) - c.bound)).max(0.0);
        }
        let viol = max_violation(&g, s);
        let obj_val = p.objective.eval(&g, s);
        if viol <= tol {
            // stationarity: one plain projected step must not move the point
            let (grad, grad_s) = al_grad(&g, s, &lam, &mu, rho);
            let mut trial = g.clone();
            for i in 0..n {
                for j in 0..n {
                    trial[i][j] -= eta * grad[i][j];
                }
            }
            project_psd(&mut trial)?;
            let mut disp = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    disp = disp.max((trial[i][j] - g[i][j]).abs());
                }
            }
            if let Some((lo, hi)) = p.scalar_bounds {
                disp = disp.max(((s - eta * grad_s).clamp(lo, hi) - s).abs());
            }
            let scale = g.iter().flatten().fold(1.0f64, |a, &v| a.max(v.abs()));
            if disp <= tol * eta.max(1e-3) * scale {
                status = SdpStatus::Optimal;
                break;
            }
            // fallback: a long objective stall at feasibility is as good as
            // this method will get
            if !prev_obj.is_nan() && (obj_val - prev_obj).abs() <= tol * obj_val.abs().max(1.0) {
                stall_rounds += 1;
                if stall_rounds >= 40 {
                    status = SdpStatus::Optimal;
                    break;
                }
            } else {
                stall_rounds = 0;
            }
        } else {
            stall_rounds = 0;
        }
        if viol > 0.5 * prev_viol {
            rho = (rho * 2.0).min(1e8);
        }
        if rho >= 1e8 && viol > 1e6 * tol.max(1e-12) && viol > 0.99 * prev_viol {
            return Err(SdpError::Infeasible { violation: viol });
        }
        prev_viol = viol;
        prev_obj = obj_val;
    }

    let points = factor_gram(&g)?;
    let objective_value = p.objective.eval(&g, s);
    let max_violation = max_violation(&g, s);
    Ok(SdpSolution { gram: g, points, scalar: s, objective_value, status, max_violation, iterations })
}

/// Maximal-contraction re-embedding: over point sets 1-Lipschitz on all of
/// `y`, maximizes the contraction floor `eps` with `||x_u - x_v||^2 >=
/// eps * d(u,v)^2` enforced on pairs inside `x`. Returns the embedding and
/// `eps`; the distortion on `x` is at most `1/sqrt(eps)`.
pub fn min_distortion_embedding(
    y: &MetricSpace,
    x: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<(Embedding, f64), SdpError> {
    let (_, e, eps) = min_distortion_detailed(y, x, tol, max_iter)?;
    Ok((e, eps))
}

/// As [`min_distortion_embedding`], but also returns the raw solver state
/// (Gram matrix, residuals, status) for inspection.
pub fn min_distortion_detailed(
    y: &MetricSpace,
    x: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<(SdpSolution, Embedding, f64), SdpError> {
    let n = y.n();
    let mut ineq = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let d2 = y.dist(u, v) * y.dist(u, v);
            ineq.push((LinExpr::sq_dist(u, v, 1.0), d2));
        }
    }
    let mut have_pair = false;
    for (a, &u) in x.iter().enumerate() {
        for &v in &x[a + 1..] {
            let d2 = y.dist(u, v) * y.dist(u, v);
            // eps * d^2 - ||x_u - x_v||^2 <= 0
            let mut e = LinExpr::sq_dist(u, v, -1.0);
            e.scalar = d2;
            ineq.push((e, 0.0));
            have_pair = true;
        }
    }
    // pin the centroid so the translation direction is not free
    let mut center = LinExpr::default();
    for i in 0..n {
        for j in i..n {
            center.gram.push((i, j, if i == j { 1.0 } else { 2.0 }));
        }
    }
    let p = SdpProblem {
        n,
        objective: LinExpr { gram: vec![], scalar: 1.0 },
        eq: vec![(center, 0.0)],
        ineq,
        scalar_bounds: Some((0.0, 1.0)),
    };

    // warm start: PSD part of the classical scaling of the squared metric,
    // shrunk until every Lipschitz constraint holds
    let b = metric::centered_gram(y);
    let mut g0 = b.clone();
    project_psd(&mut g0)?;
    let mut max_ratio = 0.0f64;
    for u in 0..n {
        for v in (u + 1)..n {
            let q = g0[u][u] + g0[v][v] - 2.0 * g0[u][v];
            let d2 = y.dist(u, v) * y.dist(u, v);
            max_ratio = max_ratio.max(q / d2);
        }
    }
    if max_ratio > 1.0 {
        for row in &mut g0 {
            for e in row {
                *e /= max_ratio;
            }
        }
    }
    let mut s0 = if have_pair { 1.0f64 } else { 0.0 };
    for (a, &u) in x.iter().enumerate() {
        for &v in &x[a + 1..] {
            let q = g0[u][u] + g0[v][v] - 2.0 * g0[u][v];
            let d2 = y.dist(u, v) * y.dist(u, v);
            s0 = s0.min(q / d2);
        }
    }

    let sol = solve_from(&p, tol, max_iter, Some((g0, s0.max(0.0))))?;
    let eps = if have_pair { sol.scalar } else { 1.0 };
    let e = Embedding::from_config(sol.points.clone(), 1.0);
    Ok((sol, e, eps))
}

/// Sparsest-cut relaxation over negative-type (squared-Euclidean) metrics:
/// minimize the capacity-weighted sum of squared distances subject to unit
/// demand-weighted sum and triangle inequalities on squared distances.
/// Triangle constraints are separated lazily, worst `5n` per round, at most
/// 20 rounds. Returns the relaxation metric, its realizing points, and the
/// objective value (a lower bound on the optimal cut sparsity).
pub fn sparsest_cut_relaxation(
    inst: &CutInstance,
    tol: f64,
    max_iter: usize,
) -> Result<(MetricSpace, PointConfig, f64), SdpError> {
    let n = inst.n;
    let demand_total: f64 =
        (0..n).map(|u| ((u + 1)..n).map(|v| inst.w_d[u][v]).sum::<f64>()).sum();
    if demand_total <= 0.0 {
        return Err(SdpError::ZeroDemand);
    }

    let mut objective = LinExpr::default();
    let mut demand = LinExpr::default();
    for u in 0..n {
        for v in (u + 1)..n {
            if inst.w_n[u][v] > 0.0 {
                // maximize the negated capacity sum
                objective.push_sq_dist(u, v, -inst.w_n[u][v]);
            }
            if inst.w_d[u][v] > 0.0 {
                demand.push_sq_dist(u, v, inst.w_d[u][v]);
            }
        }
    }
    let mut center = LinExpr::default();
    for i in 0..n {
        for j in i..n {
            center.gram.push((i, j, if i == j { 1.0 } else { 2.0 }));
        }
    }

    // feasible start: centered simplex with unit demand sum
    let c = 1.0 / (2.0 * demand_total);
    let mut g0 = vec![vec![-c / n as f64; n]; n];
    for (i, row) in g0.iter_mut().enumerate() {
        row[i] += c;
    }

    let mut active: Vec<(usize, usize, usize)> = Vec::new();
    let mut sol = None;
    for _round in 0..20 {
        let ineq = active
            .iter()
            .map(|&(u, v, w)| {
                // Q_uv - Q_uw - Q_wv <= 0
                let mut e = LinExpr::sq_dist(u, v, 1.0);
                e.push_sq_dist(u, w, -1.0);
                e.push_sq_dist(w, v, -1.0);
                (e, 0.0)
            })
            .collect();
        let p = SdpProblem {
            n,
            objective: objective.clone(),
            eq: vec![(demand.clone(), 1.0), (center.clone(), 0.0)],
            ineq,
            scalar_bounds: None,
        };
        let s = solve_from(&p, tol, max_iter, Some((g0.clone(), 0.0)))?;
        let q = |g: &Vec<Vec<f64>>, u: usize, v: usize| g[u][u] + g[v][v] - 2.0 * g[u][v];
        // separate: worst violated triangles not yet active
        let mut violated: Vec<(f64, (usize, usize, usize))> = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if v == u {
                    continue;
                }
                for w in 0..n {
                    if w == u || w == v || u > v {
                        continue;
                    }
                    let viol = q(&s.gram, u, v) - q(&s.gram, u, w) - q(&s.gram, w, v);
                    if viol > tol && !active.contains(&(u, v, w)) {
                        violated.push((viol, (u, v, w)));
                    }
                }
            }
        }
        g0 = s.gram.clone();
        sol = Some(s);
        if violated.is_empty() {
            break;
        }
        violated.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for (_, t) in violated.into_iter().take(5 * n) {
            active.push(t);
        }
    }
    let sol = sol.unwrap();
    let value = -sol.objective_value;

    // squared distances, forced into an exact metric: shortest-path closure
    // repairs residual triangle slack, then a uniform pad of the remaining
    // slack keeps distinct points apart; both are negative-type-preserving
    // up to the solver tolerance
    let mut d = vec![vec![0.0; n]; n];
    let mut dmax = 0.0f64;
    for u in 0..n {
        for v in 0..n {
            if u != v {
                d[u][v] = (sol.gram[u][u] + sol.gram[v][v] - 2.0 * sol.gram[u][v]).max(0.0);
                dmax = dmax.max(d[u][v]);
            }
        }
    }
    for w in 0..n {
        for u in 0..n {
            for v in 0..n {
                if u != v && d[u][w] + d[w][v] < d[u][v] {
                    d[u][v] = d[u][w] + d[w][v];
                }
            }
        }
    }
    let pad = (tol * dmax).max(1e-12);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                d[u][v] += pad;
                // symmetry to the bit after the closure
                d[u][v] = 0.5 * (d[u][v] + d[v][u]);
                d[v][u] = d[u][v];
            }
        }
    }
    let d_star = MetricSpace::new(d, None)?;
    let verdict = metric::is_negative_type(&d_star, (10.0 * tol * dmax).max(1e-9))?;
    if !verdict.is_negative_type {
        return Err(SdpError::BadMetric(metric::MetricError::NotNegativeType {
            min_eig: verdict.min_eigenvalue,
        }));
    }
    Ok((d_star, sol.points, value))
}
