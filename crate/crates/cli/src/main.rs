//! `cachelab`: memory-rate curves, converse bounds, scheme simulations,
//! critical-size brackets and request-vector families from the command line.

mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cachelab::bounds::{
    beta_bounds, beta_consistent, critical_bracket, default_alphas, default_grid, improved_bound,
    improved_bound_branch, rate_curve, AlphaBranch, BoundSpec,
};
use cachelab::constructions::{build_family, build_family_branch, derive_bound, validate_family};
use cachelab::model::{make_library, DemandVector};
use cachelab::rational::{int, parse_rational, ratio, to_exact_string, Rational};
use cachelab::schemes::{
    coded_place, coded_placement_rate, coded_rate, cp_place, delivery_decodes, sweep_demands,
    uncoded_place, uncoded_rate, DemandSearch, DEFAULT_DEMAND_LIMIT,
};
use cachelab::verify::{square_cases, verify_all, Fault, SweepGrid, VerifyOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use config::{MemoryGrid, SweepConfig};
use output::{curve_csv, curve_json, emit, json_bytes, Format};

/// Bad input that is not a domain error: malformed config files or
/// environment. Exits with status 2 like argument errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "cachelab", version, about = "Coded caching laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate achievable rates and lower bounds over a memory grid.
    Curve(CurveArgs),
    /// Evaluate the improved lower bound on αM + R.
    Bound(BoundArgs),
    /// Run placement, delivery and decoding of a caching scheme.
    Simulate(SimulateArgs),
    /// Bracket the critical number of files for (α, K).
    Critical(CriticalArgs),
    /// Bracket the growth constant of the critical number of files.
    Beta(BetaArgs),
    /// Build, validate and count a request-vector family.
    Construct(ConstructArgs),
    /// Run every invariant sweep and report pass/fail per check.
    VerifyAll(VerifyArgs),
}

fn rational_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// `lo:hi:step` (inclusive) or a comma-separated list.
fn grid_arg(s: &str) -> std::result::Result<MemoryGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (rational_arg(lo)?, rational_arg(hi)?, rational_arg(step)?);
            if step <= int(0) || lo > hi {
                return Err(format!("empty range {s}"));
            }
            let mut v = Vec::new();
            let mut m = lo;
            while m <= hi {
                v.push(m);
                m += step;
            }
            Ok(MemoryGrid::List(v))
        }
        [_] => s
            .split(',')
            .map(rational_arg)
            .collect::<std::result::Result<_, _>>()
            .map(MemoryGrid::List),
        _ => Err(format!("expected lo:hi:step or a list, got {s}")),
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BranchArg {
    /// ⌈1/α⌉ statement, valid for every α.
    Ceil,
    /// ⌊α⌋ statement, for α > 1 and K ≥ 2⌊α⌋.
    Floor,
}

impl From<BranchArg> for AlphaBranch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Ceil => AlphaBranch::CeilInvAlpha,
            BranchArg::Floor => AlphaBranch::FloorAlpha,
        }
    }
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long = "n")]
    num_files: u64,
    #[arg(long = "k")]
    num_users: u64,
    /// Cost weights whose bounds are projected onto (M, R); repeatable.
    #[arg(long, value_parser = rational_arg, value_delimiter = ',')]
    alpha: Vec<Rational>,
    /// Memory values as lo:hi:step or a comma-separated list.
    #[arg(long, value_parser = grid_arg, conflicts_with = "points")]
    grid: Option<MemoryGrid>,
    /// Number of evenly spaced memory values on [0, N].
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    points: Option<u64>,
    /// Append exact p/q columns.
    #[arg(long)]
    exact: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_parser = rational_arg)]
    alpha: Rational,
    #[arg(long = "n")]
    num_files: u64,
    #[arg(long = "k")]
    num_users: u64,
    /// Evaluate one statement instead of the larger of the two.
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Uncoded,
    Coded,
    /// Coded content placement (N = K, M = 1/N).
    Cp,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long = "n")]
    num_files: u32,
    #[arg(long = "k")]
    num_users: u32,
    /// Coded-caching parameter; sets M = Nt/K.
    #[arg(long, conflicts_with = "memory")]
    t: Option<u32>,
    /// Cache size in files (uncoded scheme).
    #[arg(long, value_parser = rational_arg)]
    memory: Option<Rational>,
    /// File size in bits.
    #[arg(long = "f")]
    file_size: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// One demand vector of 1-based file ids, e.g. 1,2,3.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "all")]
    demands: Vec<u32>,
    /// Every demand vector (up to --demand-limit).
    #[arg(long)]
    all: bool,
    /// Draw this many demand vectors when the full space exceeds the limit.
    #[arg(long, requires = "all")]
    sample: Option<usize>,
    #[arg(long)]
    demand_limit: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CriticalArgs {
    #[arg(long, value_parser = rational_arg)]
    alpha: Rational,
    #[arg(long = "k")]
    num_users: u64,
}

#[derive(Args)]
struct BetaArgs {
    #[arg(long, value_parser = rational_arg)]
    alpha: Rational,
    /// Also check the finite-K bracket against the limit bracket.
    #[arg(long = "k")]
    num_users: Option<u64>,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, value_parser = rational_arg)]
    alpha: Rational,
    #[arg(long = "n")]
    num_files: u64,
    #[arg(long = "k")]
    num_users: u64,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FaultArg {
    InflateBound,
    CorruptFamily,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inject a fault to check that the sweeps catch it.
    #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "inflate-bound")]
    mutate: Option<FaultArg>,
    /// Also write the per-check report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&PathBuf>) -> Result<SweepConfig> {
    path.map_or_else(|| Ok(SweepConfig::default()), |p| SweepConfig::load(p))
}

fn cmd_curve(a: CurveArgs) -> Result<ExitCode> {
    let cfg = load_config(a.config.as_ref())?;
    let alphas = if !a.alpha.is_empty() {
        a.alpha
    } else {
        cfg.alphas
            .unwrap_or_else(|| default_alphas(a.num_files, a.num_users))
    };
    let grid = match (a.grid, a.points, cfg.m_grid) {
        (Some(g), _, _) => g.points(a.num_files),
        (None, Some(c), _) => MemoryGrid::Count(c).points(a.num_files),
        (None, None, Some(g)) => g.points(a.num_files),
        (None, None, None) => default_grid(a.num_files, a.num_users),
    };
    let rows = rate_curve(a.num_files, a.num_users, &alphas, &grid)?;
    let exact = a.exact || cfg.exact.unwrap_or(false);
    let bytes = match a.format.or(cfg.format).unwrap_or(Format::Csv) {
        Format::Csv => curve_csv(&rows, exact)?,
        Format::Json => json_bytes(&curve_json(&rows))?,
    };
    emit(&bytes, a.out.or(cfg.output_path).as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bound(a: BoundArgs) -> Result<ExitCode> {
    let spec = BoundSpec::new(a.alpha, a.num_files, a.num_users)?;
    let result = match a.branch {
        Some(b) => improved_bound_branch(&spec, b.into())?,
        None => improved_bound(&spec)?,
    };
    emit(&json_bytes(&result)?, None)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(a: SimulateArgs) -> Result<ExitCode> {
    let cfg = load_config(a.config.as_ref())?;
    let (n, k) = (a.num_files, a.num_users);
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let library = make_library(n, a.file_size, seed)?;
    let t_memory =
        a.t.map(|t| ratio(i128::from(n) * i128::from(t), i128::from(k)));
    let (inst, formula) = match a.scheme {
        SchemeArg::Uncoded => {
            let memory = a
                .memory
                .or(t_memory)
                .context("uncoded caching needs --memory or --t")?;
            (
                uncoded_place(&library, k, memory)?,
                uncoded_rate(n, k, memory)?,
            )
        }
        SchemeArg::Coded => {
            let Some(t) = a.t else {
                bail!("coded caching needs --t")
            };
            let memory = t_memory.expect("t given");
            (coded_place(&library, k, t)?, coded_rate(n, k, memory)?)
        }
        SchemeArg::Cp => {
            if k != n {
                bail!("coded content placement needs K = N, got N = {n}, K = {k}");
            }
            (cp_place(&library, n)?, coded_placement_rate(n))
        }
    };

    let scheme = match a.scheme {
        SchemeArg::Uncoded => "uncoded",
        SchemeArg::Coded => "coded",
        SchemeArg::Cp => "cp",
    };
    let mut report = json!({
        "scheme": scheme,
        "n": n,
        "k": k,
        "f": a.file_size,
        "seed": seed,
        "memory": to_exact_string(&inst.memory),
        "formula_rate": to_exact_string(&formula),
    });
    let all_decoded = if a.all {
        let limit = a
            .demand_limit
            .or(cfg.demand_limit)
            .map_or(DEFAULT_DEMAND_LIMIT, u128::from);
        let search = DemandSearch {
            limit,
            sample: a.sample,
            seed,
        };
        let sweep = sweep_demands(&inst, &library, &search).map_err(|e| match e {
            cachelab::Error::TooLarge { count, limit } => anyhow::anyhow!(
                "{count} demand vectors exceed the limit of {limit}; raise --demand-limit or pass --sample"
            ),
            e => e.into(),
        })?;
        merge(
            &mut report,
            json!({
                "max_measured_rate": to_exact_string(&sweep.max_rate),
                "min_measured_rate": to_exact_string(&sweep.min_rate),
                "decoded": sweep.decoded.to_string().parse::<u64>().unwrap_or(u64::MAX),
                "total": sweep.evaluated.to_string().parse::<u64>().unwrap_or(u64::MAX),
                "exhaustive": sweep.exhaustive,
                "witness": sweep.witness.as_slice(),
            }),
        );
        sweep.decoded == sweep.evaluated
    } else {
        if a.demands.is_empty() {
            bail!("pass --demands or --all");
        }
        let d = DemandVector::new(a.demands, n, k)?;
        let (result, ok) = delivery_decodes(&inst, &library, &d)?;
        let rate = to_exact_string(&result.measured_rate);
        merge(
            &mut report,
            json!({
                "max_measured_rate": rate,
                "min_measured_rate": rate,
                "decoded": u64::from(ok),
                "total": 1,
                "exhaustive": false,
                "witness": d.as_slice(),
            }),
        );
        ok
    };
    emit(&json_bytes(&report)?, None)?;
    if !all_decoded {
        eprintln!("some users failed to decode their files");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn cmd_critical(a: CriticalArgs) -> Result<ExitCode> {
    emit(&json_bytes(&critical_bracket(a.alpha, a.num_users)?)?, None)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_beta(a: BetaArgs) -> Result<ExitCode> {
    let mut report = serde_json::to_value(beta_bounds(a.alpha)?)?;
    if let Some(k) = a.num_users {
        let bracket = critical_bracket(a.alpha, k)?;
        let k2 = int(i128::from(k) * i128::from(k));
        merge(
            &mut report,
            json!({
                "k": k,
                "scaled_lower": to_exact_string(&(bracket.lower.0 / k2)),
                "scaled_upper": to_exact_string(&(int(i128::from(bracket.upper)) / k2)),
                "consistent": beta_consistent(a.alpha, k)?,
            }),
        );
    }
    emit(&json_bytes(&report)?, None)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_construct(a: ConstructArgs) -> Result<ExitCode> {
    let spec = BoundSpec::new(a.alpha, a.num_files, a.num_users)?;
    let family = match a.branch {
        Some(b) => build_family_branch(&spec, b.into())?,
        None => build_family(&spec)?,
    };
    let report = validate_family(&family, &spec);
    let closed = improved_bound_branch(&spec, family.branch)?.value();
    let (derivation, error) = match derive_bound(&family, &spec) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let passed = report.passed() && derivation.is_some();
    let doc = json!({
        "family": family,
        "checks": report.checks,
        "closed_form": to_exact_string(&closed),
        "derivation": derivation,
        "error": error,
        "passed": passed,
    });
    emit(&json_bytes(&doc)?, a.out.as_deref())?;
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_verify_all(a: VerifyArgs) -> Result<ExitCode> {
    let cfg = load_config(a.config.as_ref())?;
    let mut grid = SweepGrid::default();
    if let Some(alphas) = cfg.alphas {
        grid.alphas = alphas;
    }
    if let Some((lo, hi)) = cfg.n_range {
        grid.num_files = lo..=hi;
    }
    if let Some((lo, hi)) = cfg.k_range {
        grid.num_users = lo..=hi;
    }
    let (klo, khi) = (*grid.num_users.start(), *grid.num_users.end());
    let opts = VerifyOptions {
        scheme_cases: square_cases((klo.max(2)..=khi.min(4)).map(|k| k as u32)),
        grid,
        demand_limit: cfg.demand_limit.map_or(DEFAULT_DEMAND_LIMIT, u128::from),
        fault: a.mutate.map(|f| match f {
            FaultArg::InflateBound => Fault::InflateBound,
            FaultArg::CorruptFamily => Fault::CorruptFamily,
        }),
    };
    let start = Instant::now();
    let outcomes = verify_all(&opts);
    let elapsed = start.elapsed();
    for o in &outcomes {
        let status = if o.passed() { "PASS" } else { "FAIL" };
        print!("{status} {:<22} {:>6} points", o.name, o.evaluated);
        match &o.witness {
            Some(w) => println!(", violations {}; first: {w}", o.violations),
            None => println!(),
        }
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    println!(
        "{} of {} checks passed in {:.2} s",
        outcomes.len() - failed,
        outcomes.len(),
        elapsed.as_secs_f64()
    );
    if let Some(path) = a.out.as_deref() {
        emit(&json_bytes(&outcomes)?, Some(path))?;
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("CACHELAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(n) if n >= 1 => n,
        _ => {
            return Err(UsageError(format!(
                "CACHELAB_THREADS must be a positive integer, got {raw:?}"
            ))
            .into())
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Curve(a) => cmd_curve(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Critical(a) => cmd_critical(a),
        Command::Beta(a) => cmd_beta(a),
        Command::Construct(a) => cmd_construct(a),
        Command::VerifyAll(a) => cmd_verify_all(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
