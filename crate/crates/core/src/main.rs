//! Command-line front end: instance generators, embedding and cut
//! experiments, zero-set spreading measurements, and a deterministic
//! self-check suite with per-entry buffered reports.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use metric_descent::cut::{self, CutInstance, RoundConfig};
use metric_descent::decomp::{self, ReweightedConfig, ZeroSetDistribution};
use metric_descent::embed::{ReweightedProvider, PartitionProvider};
use metric_descent::gen;
use metric_descent::glue::{self, PipelineConfig};
use metric_descent::io;
use metric_descent::metric::{self, MetricSpace};
use metric_descent::sdp;
use metric_descent::seeds::SeedStream;

const CSV_HEADER: &str = "# metric-descent v1\n";

#[derive(Parser)]
#[command(name = "metric-descent", version, about = "Low-distortion embeddings and sparsest-cut experiments")]
struct Cli {
    /// Master seed; every randomized stream derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the suite; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Numerical tolerance for SDP-backed subcommands.
    #[arg(long, global = true, default_value_t = 1e-4)]
    tol: f64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ensemble {
    Reweighted,
    Partition,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a metric instance and write it as JSON.
    Gen {
        /// hypercube, cycle, path, grid, random-l1, uniform, or k23.
        #[arg(long)]
        kind: String,
        /// Primary size (cube dimension, cycle/path/uniform length, grid rows).
        #[arg(long, default_value_t = 1)]
        a: usize,
        /// Secondary size (grid columns, random-l1 coordinate count).
        #[arg(long, default_value_t = 1)]
        b: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full embedding pipeline on a metric.
    Embed {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Ensemble::Partition)]
        ensemble: Ensemble,
        /// Draws per random zero-set map.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Least-distortion Euclidean re-embedding via the contraction SDP.
    Distortion {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated vertex subset on which contraction is enforced;
        /// defaults to all vertices.
        #[arg(long)]
        subset: Option<String>,
        /// Embedding JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Raw solver state dump (gram, residuals, status) for debugging.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// SDP relaxation plus sweep-cut rounding of a sparsest-cut instance.
    Cut {
        /// Instance JSON: {"n", "w_N", "w_D"}.
        #[arg(long)]
        input: PathBuf,
        /// Also compute the exact optimum by enumeration (n <= 24).
        #[arg(long)]
        brute_force: bool,
        #[arg(long)]
        report: PathBuf,
    },
    /// Zero-set spreading measurement over a metric.
    Zeroset {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        /// Projection threshold constant for the reweighted ensemble.
        #[arg(long, default_value_t = 0.25)]
        sigma: f64,
        #[arg(long, value_enum, default_value_t = Ensemble::Partition)]
        ensemble: Ensemble,
        /// Target event probability for the spreading constant.
        #[arg(long, default_value_t = 0.125)]
        p: f64,
        #[arg(long)]
        report: PathBuf,
    },
    /// Deterministic self-check battery over a set of standard instances.
    Suite {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Comma-separated instance specs (e.g. "hypercube:3,cycle:6");
        /// an empty string runs nothing. Defaults to the standard battery.
        #[arg(long)]
        instances: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type AnyError = Box<dyn std::error::Error + Send + Sync>;

fn run(cli: &Cli) -> Result<ExitCode, AnyError> {
    match &cli.cmd {
        Cmd::Gen { kind, a, b, out } => {
            let m = generate(kind, *a, *b, cli.seed)?;
            io::save_metric(&m, out)?;
            println!("wrote {} ({} points)", out.display(), m.n());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Embed { input, ensemble, samples, out, report } => {
            let m = io::load_metric(input)?;
            let result = run_pipeline(&m, *ensemble, *samples, cli.seed)?;
            io::save_embedding(&result.embedding, out)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            let mut rows = vec![vec![
                "stage".into(),
                "dim".into(),
                "lip".into(),
                "colip".into(),
                "distortion".into(),
            ]];
            for s in &result.stages {
                rows.push(vec![
                    s.stage.clone(),
                    s.dim.to_string(),
                    fnum(s.lip),
                    fnum(s.colip),
                    fnum(s.distortion),
                ]);
            }
            let (lip, colip) = measure(&m, &result.embedding);
            rows.push(vec![
                "final".into(),
                result.embedding.dim.to_string(),
                fnum(lip),
                fnum(colip),
                fnum(lip * colip),
            ]);
            if let Some(report) = report {
                write_csv(report, &rows)?;
            }
            println!("distortion {:.6} (dim {})", lip * colip, result.embedding.dim);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Distortion { input, subset, out, dump } => {
            let m = io::load_metric(input)?;
            let x: Vec<usize> = match subset {
                Some(s) if !s.trim().is_empty() => s
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<_, _>>()?,
                _ => (0..m.n()).collect(),
            };
            let (sol, e, eps) = sdp::min_distortion_detailed(&m, &x, cli.tol, 50000)?;
            let distortion = if eps > 0.0 { 1.0 / eps.sqrt() } else { f64::INFINITY };
            println!("epsilon {eps:.6} distortion {distortion:.6}");
            if let Some(out) = out {
                io::save_embedding(&e, out)?;
            }
            if let Some(dump) = dump {
                io::save_json(&sol, dump)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Cut { input, brute_force, report } => {
            let raw = std::fs::read_to_string(input)?;
            let inst: CutInstance = serde_json::from_str(&raw)?;
            let cfg = RoundConfig { tol: cli.tol, ..RoundConfig::default() };
            let stream = SeedStream::new(cli.seed, "round/0");
            let (cut, phi, trace) = cut::round_sdp(&inst, &cfg, &stream)?;
            let (phi_star, ratio) = if *brute_force {
                let (_, star) = cut::brute_force_optimum(&inst)?;
                (fnum(star), fnum(phi / star))
            } else {
                (String::new(), String::new())
            };
            let rows = vec![
                vec![
                    "seed".into(),
                    "sdp_value".into(),
                    "epsilon".into(),
                    "lambda_measured".into(),
                    "phi_alg".into(),
                    "phi_star".into(),
                    "ratio".into(),
                ],
                vec![
                    cli.seed.to_string(),
                    fnum(trace.sdp_value),
                    fnum(trace.epsilon),
                    fnum(trace.lambda_measured),
                    fnum(phi),
                    phi_star,
                    ratio,
                ],
            ];
            write_csv(report, &rows)?;
            println!("phi {phi:.6} cut {:?}", cut.members());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Zeroset { input, delta, samples, sigma, ensemble, p, report } => {
            let m = io::load_metric(input)?;
            let stream = SeedStream::new(cli.seed, "decomp/0");
            let dist = match ensemble {
                Ensemble::Partition => ZeroSetDistribution::from_partitions(&m, *delta, stream),
                Ensemble::Reweighted => {
                    let cfg = ReweightedConfig { sigma: *sigma, ..ReweightedConfig::default() };
                    decomp::reweighted_zero_set_family(&m, *delta, &cfg, stream)?
                }
            };
            let est = decomp::estimate_zeta(&m, &dist, *p, *samples, 0)?;
            let mut rows =
                vec![vec!["pair".into(), "delta".into(), "empirical_p".into(), "zeta".into()]];
            for &(x, y, emp, zeta) in &est.pairs {
                rows.push(vec![format!("{x}-{y}"), fnum(*delta), fnum(emp), fnum(zeta)]);
            }
            write_csv(report, &rows)?;
            println!("zeta {:.6} over {} samples", est.zeta, est.samples);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Suite { out_dir, instances } => run_suite(cli, out_dir, instances.as_deref()),
    }
}

fn generate(kind: &str, a: usize, b: usize, seed: u64) -> Result<MetricSpace, AnyError> {
    Ok(match kind {
        "hypercube" => gen::hypercube(u32::try_from(a)?)?,
        "cycle" => gen::cycle(a)?,
        "path" => gen::path(a)?,
        "grid" => gen::grid(a, b)?,
        "random-l1" => {
            let mut rng = SeedStream::new(seed, "gen/0").rng(0);
            gen::random_l1(a, b, &mut rng)?
        }
        "uniform" => gen::uniform(a)?,
        "k23" => gen::k23(),
        other => return Err(format!("unknown instance kind: {other}").into()),
    })
}

fn run_pipeline(
    m: &MetricSpace,
    ensemble: Ensemble,
    samples: usize,
    seed: u64,
) -> Result<glue::PipelineResult, AnyError> {
    let cfg = PipelineConfig { t_samples: samples, ..PipelineConfig::default() };
    let stream = SeedStream::new(seed, "embed/0");
    // (c, eps) describe the ensemble's separation quality tau/(c (log k)^eps)
    let result = match ensemble {
        Ensemble::Reweighted => {
            let p = ReweightedProvider { cfg: ReweightedConfig::default(), t_samples: samples };
            glue::full_embedding(m, &p, 1.0, 0.5, &cfg, &stream)?
        }
        Ensemble::Partition => {
            let p = PartitionProvider { t_samples: samples };
            glue::full_embedding(m, &p, 1.0, 1.0, &cfg, &stream)?
        }
    };
    Ok(result)
}

fn measure(m: &MetricSpace, e: &metric_descent::embed::Embedding) -> (f64, f64) {
    let mut lip = 0.0f64;
    let mut colip = 0.0f64;
    for i in 0..m.n() {
        for j in (i + 1)..m.n() {
            lip = lip.max(e.distance(i, j) / m.dist(i, j));
            colip = colip.max(m.dist(i, j) / e.distance(i, j));
        }
    }
    (lip, colip)
}

/// Fixed-precision float formatting so reports are byte-stable.
fn fnum(v: f64) -> String {
    format!("{v:.9e}")
}

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), AnyError> {
    let mut buf = Vec::new();
    buf.write_all(CSV_HEADER.as_bytes())?;
    let mut w = csv::Writer::from_writer(buf);
    for row in rows {
        w.write_record(row)?;
    }
    let buf = w.into_inner()?;
    io::write_atomic(path, &buf)?;
    Ok(())
}

const DEFAULT_SUITE: &str =
    "hypercube:2,hypercube:3,hypercube:4,cycle:4,cycle:5,cycle:6,cycle:7,cycle:8,path:6,grid:2x3";

fn parse_instance(spec: &str) -> Result<MetricSpace, AnyError> {
    let (kind, size) = spec.split_once(':').ok_or_else(|| format!("bad spec: {spec}"))?;
    let (a, b) = match size.split_once('x') {
        Some((a, b)) => (a.parse()?, b.parse()?),
        None => (size.parse()?, 1),
    };
    generate(kind, a, b, 0)
}

#[derive(serde::Serialize)]
struct SuiteSummary {
    instances: usize,
    checks: usize,
    failures: usize,
    golden: String,
}

fn run_suite(cli: &Cli, out_dir: &Path, instances: Option<&str>) -> Result<ExitCode, AnyError> {
    let specs: Vec<String> = instances
        .unwrap_or(DEFAULT_SUITE)
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if cli.threads > 0 {
        pool = pool.num_threads(cli.threads);
    }
    let pool = pool.build()?;

    // one buffered row set per entry, merged afterwards in spec order
    let results: Vec<Result<Vec<Vec<String>>, AnyError>> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| suite_entry(spec, cli.seed, cli.tol))
            .collect()
    });

    let mut rows = vec![vec!["instance".into(), "check".into(), "status".into(), "detail".into()]];
    let mut failures = 0usize;
    for (spec, res) in specs.iter().zip(results) {
        match res {
            Ok(entry_rows) => {
                for r in &entry_rows {
                    if r[2] == "fail" {
                        failures += 1;
                    }
                }
                rows.extend(entry_rows);
            }
            Err(e) => {
                failures += 1;
                rows.push(vec![spec.clone(), "run".into(), "fail".into(), e.to_string()]);
            }
        }
    }
    let checks = rows.len() - 1;
    let report_path = out_dir.join("suite_report.csv");
    write_csv(&report_path, &rows)?;

    // golden-file comparison: first run records, later runs must match
    let golden = match std::env::var_os("METRIC_DESCENT_GOLDEN_DIR") {
        Some(dir) => {
            let golden_path = Path::new(&dir).join("suite_report.csv");
            let produced = std::fs::read(&report_path)?;
            if golden_path.exists() {
                if std::fs::read(&golden_path)? == produced {
                    "match".to_string()
                } else {
                    failures += 1;
                    "mismatch".to_string()
                }
            } else {
                io::write_atomic(&golden_path, &produced)?;
                "created".to_string()
            }
        }
        None => "unset".to_string(),
    };

    let summary =
        SuiteSummary { instances: specs.len(), checks, failures, golden };
    io::save_json(&summary, &out_dir.join("suite_summary.json"))?;
    println!("suite: {} instances, {} checks, {} failures", specs.len(), checks, failures);
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn suite_entry(spec: &str, seed: u64, tol: f64) -> Result<Vec<Vec<String>>, AnyError> {
    let m = parse_instance(spec)?;
    let stream = SeedStream::new(seed, &format!("suite/{spec}"));
    let n = m.n();
    let log_n = (n as f64).log2();
    let mut rows = Vec::new();
    let mut push = |check: &str, ok: bool, detail: String| {
        rows.push(vec![
            spec.to_string(),
            check.to_string(),
            if ok { "pass" } else { "fail" }.to_string(),
            detail,
        ]);
    };

    // all standard instances are shortest-path metrics of l1-embeddable
    // graphs, hence negative type
    let verdict = metric::is_negative_type(&m, metric::negative_type_tol(&m))?;
    push(
        "negative-type",
        verdict.is_negative_type,
        format!("min_eig={}", fnum(verdict.min_eigenvalue)),
    );

    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for x in 0..n {
        for a in 1..=4u32 {
            let g = metric::growth_sum(&m, x, a);
            worst = worst.max(g - f64::from(a) * log_n);
            ok &= g <= f64::from(a) * log_n;
        }
    }
    push("growth-sum", ok, format!("max_slack={}", fnum(-worst)));

    let dist = ZeroSetDistribution::from_partitions(
        &m,
        m.min_positive_distance(),
        stream.child("zeroset"),
    );
    let est = decomp::estimate_zeta(&m, &dist, 0.125, 500, 0)?;
    push("spreading", est.zeta.is_finite(), format!("zeta={}", fnum(est.zeta)));

    let cfg = PipelineConfig {
        t_samples: 40,
        lambda_samples: 4,
        gamma_samples: 1,
        alpha_samples: 40,
        audit_pairs: 0,
        ..PipelineConfig::default()
    };
    let provider = PartitionProvider { t_samples: 40 };
    let result = glue::full_embedding(&m, &provider, 1.0, 1.0, &cfg, &stream.child("pipeline"))?;
    let (lip, colip) = measure(&m, &result.embedding);
    let distortion = lip * colip;
    push("pipeline", distortion.is_finite() && distortion <= 16.0, format!("distortion={}", fnum(distortion)));

    if n <= 12 {
        let inst = CutInstance::unit_capacity_uniform(&m)?;
        let (_, phi_star) = cut::brute_force_optimum(&inst)?;
        let rcfg = RoundConfig { tol, sdp_max_iter: 30000, ..RoundConfig::default() };
        let (_, phi_alg, trace) = cut::round_sdp(&inst, &rcfg, &stream.child("cut"))?;
        let sandwich = trace.sdp_value - 1e-3 <= phi_star && phi_star <= phi_alg + 1e-12;
        push(
            "cut-sandwich",
            sandwich && trace.accounting_ok,
            format!(
                "sdp={};phi_star={};phi_alg={}",
                fnum(trace.sdp_value),
                fnum(phi_star),
                fnum(phi_alg)
            ),
        );
    } else {
        push("cut-sandwich", true, "skipped=n>12".to_string());
    }

    Ok(rows)
}
