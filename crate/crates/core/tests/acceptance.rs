//! End-to-end acceptance battery. Each test covers one release criterion
//! and prints a single pass/fail line; run with `--nocapture` to see them.

use std::panic::{catch_unwind, UnwindSafe};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use metric_descent::cut::{self, CutInstance, RoundConfig};
use metric_descent::decomp::{self, ZeroSetDistribution};
use metric_descent::embed::{self, ReweightedProvider};
use metric_descent::gen;
use metric_descent::glue::{self, GlueConfig, PipelineConfig};
use metric_descent::metric::{self, MetricSpace, PointConfig};
use metric_descent::sdp;
use metric_descent::seeds::SeedStream;

fn criterion(name: &str, body: impl FnOnce() + UnwindSafe) {
    let outcome = catch_unwind(body);
    println!("{name}: {}", if outcome.is_ok() { "PASS" } else { "FAIL" });
    if let Err(e) = outcome {
        std::panic::resume_unwind(e);
    }
}

fn suite_instances() -> Vec<(String, MetricSpace)> {
    let mut v = Vec::new();
    for d in 2..=4u32 {
        v.push((format!("hypercube:{d}"), gen::hypercube(d).unwrap()));
    }
    for n in 4..=8 {
        v.push((format!("cycle:{n}"), gen::cycle(n).unwrap()));
    }
    v.push(("path:6".into(), gen::path(6).unwrap()));
    v.push(("grid:2x3".into(), gen::grid(2, 3).unwrap()));
    v
}

#[test]
fn criterion_01_cube_distortion() {
    criterion("criterion 1 (cube Euclidean distortion equals sqrt d)", || {
        for d in [2u32, 3] {
            let m = gen::hypercube(d).unwrap();
            let all: Vec<usize> = (0..m.n()).collect();
            let (_, eps) = sdp::min_distortion_embedding(&m, &all, 1e-6, 50000).unwrap();
            let distortion = 1.0 / eps.sqrt();
            let want = f64::from(d).sqrt();
            assert!(
                (distortion - want).abs() <= 1e-2,
                "d={d}: distortion {distortion} vs {want}"
            );
        }
    });
}

#[test]
fn criterion_02_negative_type_oracle() {
    criterion("criterion 2 (negative-type oracle with witness)", || {
        let mut positives: Vec<MetricSpace> = Vec::new();
        for d in 2..=4u32 {
            positives.push(gen::hypercube(d).unwrap());
        }
        for n in 4..=8 {
            positives.push(gen::cycle(n).unwrap());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x0217);
        for _ in 0..50 {
            let n = 4 + (rng.gen::<u32>() % 7) as usize;
            let dim = 1 + (rng.gen::<u32>() % 5) as usize;
            positives.push(gen::random_l1(n, dim, &mut rng).unwrap());
        }
        for m in &positives {
            let v = metric::is_negative_type(m, metric::negative_type_tol(m)).unwrap();
            assert!(v.is_negative_type, "false negative on an l1 metric");
        }
        let k23 = gen::k23();
        let v = metric::is_negative_type(&k23, metric::negative_type_tol(&k23)).unwrap();
        assert!(!v.is_negative_type);
        let w = v.witness.expect("negative verdict must carry a witness");
        let sum: f64 = w.iter().sum();
        assert!(sum.abs() <= 1e-9, "witness coefficients must sum to zero");
        assert!(metric::quadratic_form(&k23, &w) > 0.0, "witness must expose the violation");
    });
}

#[test]
fn criterion_03_growth_sum_bound() {
    criterion("criterion 3 (growth sum <= a log2 n exactly)", || {
        for (name, m) in suite_instances() {
            let log_n = (m.n() as f64).log2();
            for x in 0..m.n() {
                for a in 1..=4u32 {
                    let g = metric::growth_sum(&m, x, a);
                    assert!(
                        g <= f64::from(a) * log_n,
                        "{name}: growth_sum(x={x}, a={a}) = {g} exceeds {}",
                        f64::from(a) * log_n
                    );
                }
            }
        }
    });
}

#[test]
fn criterion_04_truncation_bounds() {
    criterion("criterion 4 (truncation map bounds on random point sets)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0404);
        for _ in 0..100 {
            let n = 3 + (rng.gen::<u32>() % 8) as usize;
            let coords: Vec<Vec<f64>> =
                (0..n).map(|_| (0..5).map(|_| rng.gen::<f64>() * 4.0).collect()).collect();
            let p = PointConfig { n, dim: 5, coords };
            let tau = 0.1 + rng.gen::<f64>() * 2.0;
            let g = embed::truncation_map(&p, tau).unwrap();
            for i in 0..n {
                let norm: f64 = g.coords[i].iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - tau).abs() <= 1e-9 * tau, "norm {norm} vs tau {tau}");
                for j in (i + 1)..n {
                    let r = p.euclidean(i, j);
                    let gd = g.euclidean(i, j);
                    let cap = tau.min(r);
                    assert!(
                        gd >= 0.5 * cap - 1e-7 * tau && gd <= cap + 1e-7 * tau,
                        "pair ({i},{j}): {gd} outside [{}, {cap}]",
                        0.5 * cap
                    );
                }
            }
        }
    });
}

#[test]
fn criterion_05_zero_set_spreading() {
    criterion("criterion 5 (zero-set spreading rate at every dyadic scale)", || {
        let draws = 5000usize;
        let p0 = 0.125f64;
        let sigma = (p0 * (1.0 - p0) / draws as f64).sqrt();
        let floor = p0 - 3.0 * sigma;
        for (name, m) in [("cycle:8", gen::cycle(8).unwrap()), ("hypercube:4", gen::hypercube(4).unwrap())]
        {
            let stream = SeedStream::new(0x055, &format!("accept5/{name}"));
            let alpha = decomp::estimate_alpha(&m, 100, &stream.child("alpha"));
            let n = m.n();
            let (lo, _) = metric::dyadic_scales(&m);
            let mut mi = lo;
            while metric::pow2(mi) <= m.diameter() {
                let delta = metric::pow2(mi);
                let dist =
                    ZeroSetDistribution::from_partitions(&m, delta, stream.child(&format!("z/{mi}")));
                let mut hits = vec![vec![0usize; n]; n];
                for idx in 0..draws {
                    let z = dist.sample(idx as u64);
                    let dxz: Vec<f64> = (0..n).map(|x| m.dist_to_set(x, &z)).collect();
                    let mut in_z = vec![false; n];
                    for &y in &z {
                        in_z[y] = true;
                    }
                    for x in 0..n {
                        if dxz[x] >= delta / alpha {
                            for y in 0..n {
                                if in_z[y] {
                                    hits[x][y] += 1;
                                }
                            }
                        }
                    }
                }
                for x in 0..n {
                    for y in 0..n {
                        if x != y && m.dist(x, y) >= delta {
                            let p = hits[x][y] as f64 / draws as f64;
                            assert!(
                                p >= floor,
                                "{name} delta={delta} pair ({x},{y}): rate {p} < {floor}"
                            );
                        }
                    }
                }
                mi += 1;
            }
        }
    });
}

#[test]
fn criterion_06_glue_bounds() {
    criterion("criterion 6 (glue Lipschitz ceiling and quarter lower bound)", || {
        let m = gen::hypercube(4).unwrap();
        let cfg = GlueConfig::new(&m, 2.0, 3.0);
        let (lo, hi) = glue::required_scales(&m, &cfg);
        let maps: Vec<(i32, metric_descent::embed::Embedding)> = (lo..=hi)
            .map(|mi| {
                let d = ZeroSetDistribution::from_partitions(
                    &m,
                    metric::pow2(mi),
                    SeedStream::new(0x066, &format!("accept6/{mi}")),
                );
                (mi, embed::frechet_map(&m, &d, 32, 0))
            })
            .collect();
        let e = glue::glue(&m, &maps, &cfg).unwrap();
        let ceiling = glue::C_GLUE
            * ((m.n() as f64).log2() * (4.0 * cfg.a * cfg.b).log2()).sqrt();
        let lip = e.measured_lip(&m);
        assert!(lip <= ceiling, "measured lip {lip} above ceiling {ceiling}");
        let margin = glue::glue_lower_bound_margin(&m, &maps, &cfg, &e);
        assert!(margin <= 1.0, "lower-bound margin {margin} exceeded");
    });
}

#[test]
fn criterion_07_full_pipeline() {
    criterion("criterion 7 (full pipeline distortion within 3x the SDP optimum)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0707);
        let mut instances: Vec<(String, MetricSpace)> = (2..=4u32)
            .map(|d| (format!("hypercube:{d}"), gen::hypercube(d).unwrap()))
            .collect();
        instances.push(("random_l1:16".into(), gen::random_l1(16, 4, &mut rng).unwrap()));
        instances.push(("random_l1:32".into(), gen::random_l1(32, 4, &mut rng).unwrap()));

        let mut measured: Vec<(String, f64)> = Vec::new();
        for (name, m) in &instances {
            let provider = ReweightedProvider { cfg: Default::default(), t_samples: 200 };
            let cfg = PipelineConfig { t_samples: 200, ..PipelineConfig::default() };
            let stream = SeedStream::new(0x077, &format!("accept7/{name}"));
            let result = glue::full_embedding(m, &provider, 1.0, 0.5, &cfg, &stream).unwrap();
            let report = glue::evaluate_distortion(m, &result.embedding).unwrap();
            let all: Vec<usize> = (0..m.n()).collect();
            let (_, eps) = sdp::min_distortion_embedding(m, &all, 1e-4, 50000).unwrap();
            let c2 = 1.0 / eps.sqrt();
            assert!(
                report.distortion <= 3.0 * c2,
                "{name}: distortion {} above 3 * c2 = {}",
                report.distortion,
                3.0 * c2
            );
            measured.push((name.clone(), report.distortion));
        }

        // golden file: first run records, reruns must stay within 10%
        let dir = std::env::var_os("METRIC_DESCENT_GOLDEN_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden"));
        let path = dir.join("pipeline_distortion.json");
        if path.exists() {
            let raw = std::fs::read_to_string(&path).unwrap();
            let golden: Vec<(String, f64)> = serde_json::from_str(&raw).unwrap();
            for ((name, got), (gname, want)) in measured.iter().zip(&golden) {
                assert_eq!(name, gname);
                assert!(
                    (got - want).abs() <= 0.10 * want,
                    "{name}: distortion {got} drifted beyond 10% of golden {want}"
                );
            }
        } else {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, serde_json::to_string_pretty(&measured).unwrap()).unwrap();
        }
    });
}

#[test]
fn criterion_08_sparsest_cut_sandwich() {
    criterion("criterion 8 (sparsest cut sandwich and exact 4-cycle case)", || {
        let tol = 1e-4;
        let cases = [
            ("cycle:4", gen::cycle(4).unwrap()),
            ("cycle:6", gen::cycle(6).unwrap()),
            ("path:6", gen::path(6).unwrap()),
            ("grid:2x3", gen::grid(2, 3).unwrap()),
        ];
        for (name, m) in &cases {
            let inst = CutInstance::unit_capacity_uniform(m).unwrap();
            let (_, phi_star) = cut::brute_force_optimum(&inst).unwrap();
            let stream = SeedStream::new(0x088, &format!("accept8/{name}"));
            let (_, phi_alg, trace) =
                cut::round_sdp(&inst, &RoundConfig::default(), &stream).unwrap();
            assert!(
                trace.sdp_value <= phi_star + tol,
                "{name}: sdp {} above phi* {}",
                trace.sdp_value,
                phi_star
            );
            assert!(
                phi_star <= phi_alg + tol,
                "{name}: phi* {phi_star} above phi(alg) {phi_alg}"
            );
        }
        // exact small case, 20 seeds
        let inst = CutInstance::unit_capacity_uniform(&gen::cycle(4).unwrap()).unwrap();
        let (_, phi_star) = cut::brute_force_optimum(&inst).unwrap();
        assert_eq!(phi_star, 0.5);
        let mut exact = 0usize;
        for seed in 0..20u64 {
            let stream = SeedStream::new(seed, "accept8/c4");
            let (_, phi_alg, _) =
                cut::round_sdp(&inst, &RoundConfig::default(), &stream).unwrap();
            assert!(phi_alg <= 2.0 / 3.0 + 1e-12, "seed {seed}: phi {phi_alg} above 2/3");
            if (phi_alg - 0.5).abs() <= 1e-9 {
                exact += 1;
            }
        }
        assert!(exact >= 16, "only {exact}/20 seeds recovered the optimal half");
    });
}

#[test]
fn criterion_09_cut_decomposition_exactness() {
    criterion("criterion 9 (cut decomposition reconstructs l1 exactly)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0909);
        for _ in 0..100 {
            let n = 2 + (rng.gen::<u32>() % 9) as usize;
            let pts: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.gen::<f64>() * 10.0 - 5.0]).collect();
            let dec = cut::cut_decomposition(&pts);
            for x in 0..n {
                for y in 0..n {
                    let l1 = (pts[x][0] - pts[y][0]).abs();
                    assert!(
                        (dec.reconstruct(x, y) - l1).abs() <= 1e-12,
                        "reconstruction error beyond 1e-12"
                    );
                }
            }
        }
    });
}

#[test]
fn criterion_10_suite_determinism() {
    criterion("criterion 10 (suite reports byte-identical across thread counts)", || {
        let bin = env!("CARGO_BIN_EXE_metric-descent");
        let base = std::env::temp_dir().join(format!("md-accept10-{}", std::process::id()));
        let mut reports = Vec::new();
        for (tag, threads) in [("a", "1"), ("b", "4"), ("c", "1")] {
            let dir = base.join(tag);
            std::fs::create_dir_all(&dir).unwrap();
            let status = std::process::Command::new(bin)
                .args(["--seed", "5", "--threads", threads, "suite", "--out-dir"])
                .arg(&dir)
                .env_remove("METRIC_DESCENT_GOLDEN_DIR")
                .status()
                .unwrap();
            assert!(status.success(), "suite run failed");
            reports.push(std::fs::read(dir.join("suite_report.csv")).unwrap());
        }
        assert_eq!(reports[0], reports[1], "reports differ across thread counts");
        assert_eq!(reports[0], reports[2], "reports differ across reruns");
        let _ = std::fs::remove_dir_all(&base);
    });
}
