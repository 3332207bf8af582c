use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use klsym::cache_admin::{cache_admin, CacheCommand};
use klsym::report::LocalFactorOut;
use klsym::run::{evaluator, EXIT_ERROR};
use klsym::{run, CliError, CliResult, Mode, RunConfig, CACHE_ENV};
use klsym_core::lfun;
use serde_json::json;

#[derive(Parser)]
#[command(name = "klsym", version, about = "Kloosterman symmetric power L-functions and their Newton polygons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List closed points of G_m over F_q of degree <= D.
    Points(FieldArgs),
    /// Evaluate Kl_n at one closed point.
    Sum(SumArgs),
    /// Local L-factors at all closed points of degree <= D.
    Local(FieldArgs),
    /// Truncated L(Sym^k).
    Symk(RunArgs),
    /// Truncated L(Sym^{κ,∞}) to a π-precision.
    Syminf(RunArgs),
    /// Truncated unit-root L-function with exponent κ.
    Unitroot(RunArgs),
    /// Check every coefficient point against the Hodge polygon.
    Verify(RunArgs),
    /// Compare the slope <= k hull segments of L(Sym^k) and L(Sym^{k,∞}).
    Compare(RunArgs),
    /// Inspect, verify or compact a sum cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Args, Clone)]
struct FieldArgs {
    #[arg(long)]
    p: u32,
    #[arg(long, default_value_t = 1)]
    a: u32,
    /// Coefficients c0,c1,...,ca of a monic irreducible modulus for F_q.
    #[arg(long, value_delimiter = ',')]
    modulus: Option<Vec<u32>>,
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Truncation degree D.
    #[arg(long = "degree", short = 'D', default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, env = CACHE_ENV)]
    cache: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    max_degree: u32,
    #[arg(long, default_value_t = klsym_core::ff::DEFAULT_MAX_FIELD_SIZE)]
    max_field_size: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, conflicts_with_all = ["kappa", "kappa_int"])]
    k: Option<i64>,
    /// Base-p digits d0,d1,...,ds of κ.
    #[arg(long, value_delimiter = ',', conflicts_with = "kappa_int")]
    kappa: Option<Vec<u32>>,
    #[arg(long, allow_negative_numbers = true)]
    kappa_int: Option<i64>,
    /// Working precision in π-units.
    #[arg(long)]
    precision: Option<u64>,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SumArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Coordinates of a representative in F_{q^d} (d = --point-degree).
    #[arg(long, value_delimiter = ',')]
    rep: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    point_degree: u32,
    #[arg(long, default_value_t = 1)]
    m: u32,
}

#[derive(Subcommand)]
enum CacheAction {
    Stat {
        path: PathBuf,
    },
    Verify {
        path: PathBuf,
        #[arg(long, default_value_t = 32)]
        sample: usize,
    },
    Compact {
        path: PathBuf,
    },
}

impl FieldArgs {
    fn config(&self, mode: Mode) -> RunConfig {
        let mut cfg = RunConfig::new(self.p, self.n, mode, self.degree);
        cfg.a = self.a;
        cfg.modulus = self.modulus.clone();
        cfg.workers = self.workers;
        cfg.cache_path = self.cache.clone();
        cfg.out_path = self.out.clone();
        cfg.max_degree = self.max_degree;
        cfg.max_field_size = self.max_field_size;
        cfg
    }

    /// Config used only for field and cache setup.
    fn setup(&self) -> CliResult<RunConfig> {
        let cfg = self.config(Mode::Symk).with_k(0);
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunArgs {
    fn config(&self, mode: Mode) -> RunConfig {
        let mut cfg = self.field.config(mode);
        cfg.precision = self.precision;
        cfg.max_retries = self.max_retries;
        cfg.csv_path = self.csv.clone();
        if let Some(k) = self.k.or(self.kappa_int) {
            cfg = cfg.with_k(k);
        }
        if let Some(d) = &self.kappa {
            cfg = cfg.with_digits(d.clone());
        }
        cfg
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        None => {
            let mut w = std::io::stdout().lock();
            writeln!(w, "{text}")?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run_mode(args: &RunArgs, mode: Mode) -> CliResult<i32> {
    let cfg = args.config(mode);
    let outcome = run(&cfg)?;
    emit(cfg.out_path.as_deref(), &outcome.report.to_json()?)?;
    if let Some(csv) = &cfg.csv_path {
        let mut w = BufWriter::new(File::create(csv)?);
        outcome.report.write_csv(&mut w)?;
        w.flush()?;
    }
    eprintln!("verdict: {} ({})", outcome.report.verdict.status, outcome.report.verdict.detail);
    Ok(outcome.exit_code)
}

fn points(args: &FieldArgs) -> CliResult<i32> {
    let cfg = args.setup()?;
    let ev = evaluator(&cfg)?;
    let mut rows = Vec::new();
    for d in 1..=cfg.degree {
        for pt in ev.tower().closed_points(ev.base(), d)? {
            rows.push(json!({"degree": d, "rep": pt.coords()}));
        }
    }
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&rows)?)?;
    Ok(0)
}

fn sum(args: &SumArgs) -> CliResult<i32> {
    let cfg = args.field.setup()?;
    let ev = evaluator(&cfg)?;
    let pt = ev
        .tower()
        .closed_points(ev.base(), args.point_degree)?
        .into_iter()
        .find(|pt| {
            let f = pt.field();
            f.from_coords(&args.rep).map(|t| pt.orbit().contains(&t)).unwrap_or(false)
        })
        .ok_or_else(|| {
            CliError::Usage(format!("{:?} is not a point of exact degree {}", args.rep, args.point_degree))
        })?;
    let value = ev.kloosterman(cfg.n, &pt, args.m)?;
    let row = json!({"n": cfg.n, "degree": pt.degree(), "rep": pt.coords(), "m": args.m, "value": value.to_string()});
    emit(args.field.out.as_deref(), &serde_json::to_string_pretty(&row)?)?;
    Ok(0)
}

fn local(args: &FieldArgs) -> CliResult<i32> {
    let cfg = args.setup()?;
    let ev = evaluator(&cfg)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let factors = pool.install(|| lfun::local_factors(&ev, cfg.n, cfg.degree))?;
    let rows: Vec<_> = factors.iter().map(|(pt, f)| LocalFactorOut::new(pt.coords(), f)).collect();
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&rows)?)?;
    Ok(0)
}

fn cache(action: &CacheAction) -> CliResult<i32> {
    let (path, cmd) = match action {
        CacheAction::Stat { path } => (path, CacheCommand::Stat),
        CacheAction::Verify { path, sample } => (path, CacheCommand::Verify { sample: *sample }),
        CacheAction::Compact { path } => (path, CacheCommand::Compact),
    };
    let summary = cache_admin(path, cmd)?;
    emit(None, &serde_json::to_string_pretty(&summary)?)?;
    Ok(if summary.mismatches.is_empty() { 0 } else { 2 })
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Points(a) => points(a),
        Command::Sum(a) => sum(a),
        Command::Local(a) => local(a),
        Command::Symk(a) => run_mode(a, Mode::Symk),
        Command::Syminf(a) => run_mode(a, Mode::Syminf),
        Command::Unitroot(a) => run_mode(a, Mode::Unitroot),
        Command::Verify(a) => run_mode(a, Mode::VerifyNewtonHodge),
        Command::Compare(a) => run_mode(a, Mode::CompareSlopes),
        Command::Cache { action } => cache(action),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("klsym: {e}");
            let code = e.exit_code();
            ExitCode::from(if code == 0 { EXIT_ERROR } else { code } as u8)
        }
    }
}
