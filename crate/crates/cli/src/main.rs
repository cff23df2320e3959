//! `uipt`: exact counts, limit laws, layer moments, boundary distributions,
//! hull simulation and ancestor counts from one binary.

mod output;
mod verify;

use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use uipt::branching::simulate::{
    boundary_distributions_exact, simulate_hull_profiles, DEFAULT_EPS,
};
use uipt::contour::{conditioned_ancestor_samples, contour_coefficient, expected_ancestors};
use uipt::gf::{tutte_count, GfError};
use uipt::layer::{moment_exact, moment_table};
use uipt::limits::{max_part_probability, rn_probability, NeighborhoodSpec};
use uipt::numeric::{rational_string, rational_to_f64};
use uipt::stats::{ks_gamma32, moment_summary};

use output::{num, write_json, write_summary, write_table, Format, Table};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 1729;
/// Thread-count override.
pub const THREADS_ENV: &str = "UIPT_THREADS";

const VERSION: &str = match option_env!("UIPT_GIT_DESCRIBE") {
    Some(v) => v,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Runtime(_) => 3,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "uipt", version = VERSION, about = "UIPT exact calculator and simulator")]
pub struct Cli {
    /// Random seed; every run is reproducible from it.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Primary output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Summary file; stderr when absent (for table outputs).
    #[arg(long, global = true)]
    summary: Option<PathBuf>,
    /// Format of tabular output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Number of near-triangulations with N triangles and boundary m.
    Count(CountArgs),
    /// Table of counts for N <= n-max, m <= m-max.
    Coeffs(CoeffsArgs),
    /// Limit probability of a rigid root neighborhood.
    Limits(LimitsArgs),
    /// Exact moments E[m1^j] of the hull boundary.
    Moments(MomentsArgs),
    /// Distribution of the hull boundary after R layers.
    Dist(DistArgs),
    /// Monte Carlo hull boundary profiles.
    Simulate(SimulateArgs),
    /// Expected ancestor counts and the contour bound.
    Contour(ContourArgs),
    /// Run the identity suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
struct CountArgs {
    #[arg(long)]
    n: i64,
    #[arg(long)]
    m: i64,
}

#[derive(Debug, Args, Serialize)]
struct CoeffsArgs {
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    #[arg(long, default_value_t = 8)]
    m_max: usize,
}

#[derive(Debug, Args, Serialize)]
struct LimitsArgs {
    /// Triangles in the neighborhood.
    #[arg(long)]
    n: u64,
    /// Root boundary length.
    #[arg(long)]
    m0: usize,
    /// Hole boundary lengths.
    #[arg(long, value_delimiter = ',', required = true)]
    holes: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
struct MomentsArgs {
    #[arg(long, default_value_t = 2)]
    j_max: usize,
    #[arg(long = "R-list", value_delimiter = ',', default_values_t = [16, 32, 64])]
    r_list: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
struct DistArgs {
    #[arg(long = "R")]
    r: usize,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 1024)]
    kmax: usize,
    /// Fail when the bound on the mean exceeds this.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long = "R")]
    r: usize,
    #[arg(long, default_value_t = 2)]
    m0: usize,
    #[arg(long, default_value_t = 1000)]
    replicas: usize,
    /// Tail tolerance of each kernel row.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// KS distance below which the Gamma(3/2,1) fit passes.
    #[arg(long, default_value_t = 0.05)]
    ks_threshold: f64,
}

#[derive(Debug, Args, Serialize)]
struct ContourArgs {
    #[arg(long, default_value_t = 32)]
    r: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    x_list: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    mc_replicas: usize,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// Truncation order of the series identities.
    #[arg(long, default_value_t = 30)]
    orders: usize,
    /// Deliberately break one check (harness self-test).
    #[arg(long, value_enum, hide = true)]
    sabotage: Option<verify::Sabotage>,
}

fn meta(cli: &Cli) -> Value {
    json!({
        "version": VERSION,
        "seed": cli.seed,
        "config": cli,
        "argv": std::env::args().skip(1).collect::<Vec<_>>(),
    })
}

fn gf_error(e: GfError) -> CliError {
    match e {
        GfError::Parity { .. } | GfError::NegativeTriangles(_) | GfError::BoundaryTooShort(_) => {
            CliError::Usage(e.to_string())
        }
        other => runtime(other),
    }
}

fn run_count(cli: &Cli, a: &CountArgs) -> Result<bool, CliError> {
    let c = tutte_count(a.n, a.m).map_err(gf_error)?;
    let out = json!({
        "n": a.n,
        "m": a.m,
        "count": c.value.to_string(),
        "source": c.source.label(),
        "meta": meta(cli),
    });
    write_json(&out, cli.out.as_ref())?;
    Ok(true)
}

fn run_coeffs(cli: &Cli, a: &CoeffsArgs) -> Result<bool, CliError> {
    let mut t = Table::new(vec!["N", "m", "count", "source"]);
    for n in 0..=a.n_max {
        for m in 2..=a.m_max {
            if (n + m) % 2 != 0 {
                continue;
            }
            let c = tutte_count(n as i64, m as i64).map_err(gf_error)?;
            t.push(vec![
                json!(n),
                json!(m),
                json!(c.value.to_string()),
                json!(c.source.label()),
            ]);
        }
    }
    write_table(&t, cli.format, cli.out.as_ref())?;
    write_summary(
        &json!({"rows": t.rows.len(), "meta": meta(cli)}),
        cli.summary.as_ref(),
    )?;
    Ok(true)
}

fn run_limits(cli: &Cli, a: &LimitsArgs) -> Result<bool, CliError> {
    let spec = NeighborhoodSpec::new(a.n, a.m0, a.holes.clone())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (v, formula) = rn_probability(&spec).map_err(runtime)?;
    let max_part: Vec<Value> = (1..=a.holes.len())
        .map(|j| {
            max_part_probability(j, &a.holes)
                .map(|p| json!({"hole": j, "exact": p.to_string(), "float": num(p.to_f64())}))
                .map_err(runtime)
        })
        .collect::<Result<_, _>>()?;
    let out = json!({
        "value_exact": v.to_string(),
        "value_float": num(v.to_f64()),
        "formula": formula.label(),
        "infinite_hole": max_part,
        "meta": meta(cli),
    });
    write_json(&out, cli.out.as_ref())?;
    Ok(true)
}

fn run_moments(cli: &Cli, a: &MomentsArgs) -> Result<bool, CliError> {
    let rows = moment_table(a.j_max, &a.r_list).map_err(runtime)?;
    let mut t = Table::new(vec!["R", "j", "exact", "float", "scaled", "asymptote"]);
    for r in &rows {
        t.push(vec![
            json!(r.r),
            json!(r.j),
            json!(rational_string(&r.exact)),
            num(r.value),
            num(r.scaled),
            num(r.asymptote),
        ]);
    }
    write_table(&t, cli.format, cli.out.as_ref())?;
    write_summary(
        &json!({"rows": rows.len(), "meta": meta(cli)}),
        cli.summary.as_ref(),
    )?;
    Ok(true)
}

fn run_dist(cli: &Cli, a: &DistArgs) -> Result<bool, CliError> {
    if a.l < 2 || a.l > a.kmax {
        return Err(CliError::Usage(format!(
            "--l must lie in [2, kmax], got {}",
            a.l
        )));
    }
    let all = boundary_distributions_exact(a.r, a.l, a.kmax, a.tolerance.unwrap_or(f64::INFINITY))
        .map_err(runtime)?;
    let d = all.last().expect("initial state is always present");
    let mut t = Table::new(vec!["k", "probability", "truncation_bound"]);
    for (k, p) in d.probabilities.iter().enumerate().skip(2) {
        t.push(vec![json!(k), num(*p), num(d.mass_bound)]);
    }
    write_table(&t, cli.format, cli.out.as_ref())?;
    let summary = json!({
        "total": num(d.total()),
        "mean": num(d.mean()),
        "mean_bound": num(d.truncation_bound),
        "lost_mass": num(d.lost_mass),
        "meta": meta(cli),
    });
    write_summary(&summary, cli.summary.as_ref())?;
    Ok(true)
}

fn sample_block(samples: &[f64], scale: f64, ks_threshold: f64) -> Result<Value, CliError> {
    let s = moment_summary(samples, scale).map_err(runtime)?;
    let scaled: Vec<f64> = samples.iter().map(|v| v / scale).collect();
    let ks = ks_gamma32(&scaled).map_err(runtime)?;
    Ok(json!({
        "n": s.count,
        "mean": num(s.mean),
        "se_mean": num(s.se_mean),
        "m2": num(s.m2),
        "se_m2": num(s.se_m2),
        "ks": num(ks),
        "ks_pass": ks < ks_threshold,
    }))
}

fn run_simulate(cli: &Cli, a: &SimulateArgs) -> Result<bool, CliError> {
    if a.m0 < 2 {
        return Err(CliError::Usage(format!(
            "--m0 must be at least 2, got {}",
            a.m0
        )));
    }
    if a.replicas == 0 || a.r == 0 {
        return Err(CliError::Usage(
            "--R and --replicas must be positive".into(),
        ));
    }
    let paths = simulate_hull_profiles(a.r, a.m0, a.replicas, cli.seed, a.eps).map_err(runtime)?;
    let mut t = Table::new(vec!["replica", "step", "boundary_length"]);
    for (i, p) in paths.iter().enumerate() {
        for (step, m) in p.iter().enumerate() {
            t.push(vec![json!(i), json!(step), json!(m)]);
        }
    }
    write_table(&t, cli.format, cli.out.as_ref())?;
    let finals: Vec<f64> = paths.iter().map(|p| *p.last().unwrap() as f64).collect();
    let scale = (a.r * a.r) as f64;
    let mut summary = json!({
        "stats": sample_block(&finals, scale, a.ks_threshold)?,
        "meta": meta(cli),
    });
    if a.m0 == 2 && a.r <= 256 {
        let exact = moment_exact(1, a.r).map_err(runtime)?;
        summary["exact_mean_scaled"] = num(rational_to_f64(&exact) / scale);
    }
    write_summary(&summary, cli.summary.as_ref())?;
    Ok(true)
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
fn run_contour(cli: &Cli, a: &ContourArgs) -> Result<bool, CliError> {
    if a.r == 0 {
        return Err(CliError::Usage("--r must be positive".into()));
    }
    let coefficient = rational_to_f64(&contour_coefficient());
    let mut results = Vec::new();
    for (i, &x) in a.x_list.iter().enumerate() {
        if !(x > 0.0) {
            return Err(CliError::Usage(format!(
                "x values must be positive, got {x}"
            )));
        }
        let n = ((x * (a.r * a.r) as f64).round() as usize).max(2);
        let rep = expected_ancestors(a.r, n).map_err(runtime)?;
        let (mc_mean, mc_stderr) = if a.mc_replicas > 0 {
            let first = (i * a.mc_replicas) as u64;
            let s = conditioned_ancestor_samples(a.r, n, a.mc_replicas, cli.seed, first, a.eps)
                .map_err(runtime)?;
            (num(s.mean), num(s.stderr))
        } else {
            (Value::Null, Value::Null)
        };
        results.push(json!({
            "x": x,
            "n": n,
            "exact": num(rep.value),
            "exact_rational": rational_string(&rep.exact),
            "asymptotic": num(rep.asymptotic),
            "relative_gap": num(rep.relative_gap()),
            "mc_mean": mc_mean,
            "mc_stderr": mc_stderr,
            "bound_coefficient": num(coefficient),
        }));
    }
    let out = json!({
        "r": a.r,
        "results": results,
        "contour_bound": num(coefficient * a.r as f64),
        "meta": meta(cli),
    });
    write_json(&out, cli.out.as_ref())?;
    Ok(true)
}

fn run_verify(cli: &Cli, a: &VerifyArgs) -> Result<bool, CliError> {
    let results = verify::run(a.orders, a.sabotage);
    let mut lines = String::new();
    for r in &results {
        lines.push_str(&r.to_json().to_string());
        lines.push('\n');
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let summary = json!({
        "passed": results.len() - failed.len(),
        "failed": failed,
        "meta": meta(cli),
    });
    lines.push_str(&summary.to_string());
    lines.push('\n');
    match &cli.out {
        Some(p) => std::fs::write(p, lines).map_err(|e| CliError::io(p, e))?,
        None => print!("{lines}"),
    }
    Ok(failed.is_empty())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(runtime)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Count(a) => run_count(cli, a),
        Command::Coeffs(a) => run_coeffs(cli, a),
        Command::Limits(a) => run_limits(cli, a),
        Command::Moments(a) => run_moments(cli, a),
        Command::Dist(a) => run_dist(cli, a),
        Command::Simulate(a) => run_simulate(cli, a),
        Command::Contour(a) => run_contour(cli, a),
        Command::Verify(a) => run_verify(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("run `uipt --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
