use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reduced_isotonic::bench::{run_config, write_table, BenchConfig};
use reduced_isotonic::model_select::{select_k, usable_sigma};
use reduced_isotonic::pava::isotonic_fit;
use reduced_isotonic::reduced_iso::{fit_k, ReducedPath};
use reduced_isotonic::segment_dp::{segment_fit_k, segment_select_k, DEFAULT_K_MAX};
use reduced_isotonic::unimodal::unimodal_aggregate;
use reduced_isotonic::{Error, FitResult64, PenaltyFamily, PenaltySpec64, Series64};

#[derive(Parser)]
#[command(name = "riso", version, about = "Reduced isotonic regression and risk benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one series and print the result as JSON.
    Fit(FitArgs),
    /// Run a Monte Carlo benchmark config and write the risk table as CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitMethod {
    Iso,
    Reduced,
    Auto,
    AutoModified,
    Segment,
    AutoSegment,
    Unimodal,
}

#[derive(clap::Args)]
struct FitArgs {
    /// One number per line, or a CSV file with a header when --column is given.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    column: Option<String>,
    #[arg(long, value_enum)]
    method: FitMethod,
    /// Number of pieces (reduced, segment, unimodal).
    #[arg(long)]
    k: Option<usize>,
    /// Largest piece count searched by auto-segment (default min(n, 64)).
    #[arg(long)]
    k_max: Option<usize>,
    /// Penalty scale for the adaptive methods, used as given.
    #[arg(long)]
    tau: Option<f64>,
    /// Penalty scale as a multiple of sigma squared (default 6).
    #[arg(long)]
    c_tau: Option<f64>,
    /// Noise level, or "auto" to estimate it from the data.
    #[arg(long, default_value = "auto")]
    sigma: String,
    /// Seed for the sample split of the unimodal estimator.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; the table does not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Serialize)]
struct FitReport {
    n: usize,
    method: String,
    k_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_hat: Option<usize>,
    knots: Vec<usize>,
    levels: Vec<f64>,
    sse: f64,
    penalty: Option<f64>,
    sigma_used: Option<f64>,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("riso: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn parse_number(text: &str, line: usize, path: &Path) -> Result<f64, Failure> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            Failure::Usage(format!("{}:{line}: cannot parse {:?} as a number", path.display(), text.trim()))
        })
}

fn read_lines(path: &Path, text: &str) -> Result<Vec<f64>, Failure> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_number(line, i + 1, path)?);
    }
    Ok(out)
}

fn read_column(path: &Path, text: &str, column: &str) -> Result<Vec<f64>, Failure> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Failure::Usage(format!("{}: no column named {column:?}", path.display())))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = record
            .get(idx)
            .ok_or_else(|| Failure::Usage(format!("{}:{line}: missing field {column:?}", path.display())))?;
        out.push(parse_number(field, line, path)?);
    }
    Ok(out)
}

fn read_series(args: &FitArgs) -> Result<Series64, Failure> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.input.display())))?;
    let values = match &args.column {
        Some(c) => read_column(&args.input, &text, c)?,
        None => read_lines(&args.input, &text)?,
    };
    if values.is_empty() {
        return Err(Failure::Usage(format!("{} contains no numbers", args.input.display())));
    }
    Ok(Series64::new(values)?)
}

fn parse_sigma(text: &str) -> Result<Option<f64>, Failure> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    match text.parse::<f64>() {
        Ok(s) if s > 0.0 && s.is_finite() => Ok(Some(s)),
        _ => Err(Failure::Usage(format!("--sigma must be a positive number or \"auto\", got {text:?}"))),
    }
}

fn validate_flags(args: &FitArgs) -> Result<(), Failure> {
    use FitMethod::*;
    let m = args.method;
    let needs_k = matches!(m, Reduced | Segment | Unimodal);
    if needs_k && args.k.is_none() {
        return Err(Failure::Usage("--k is required for this method".into()));
    }
    if !needs_k && args.k.is_some() {
        return Err(Failure::Usage("--k only applies to reduced, segment and unimodal".into()));
    }
    if args.k == Some(0) {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    let tuned = matches!(m, Auto | AutoModified | AutoSegment);
    if !tuned && (args.tau.is_some() || args.c_tau.is_some()) {
        return Err(Failure::Usage("--tau and --c-tau only apply to adaptive methods".into()));
    }
    if args.tau.is_some() && args.c_tau.is_some() {
        return Err(Failure::Usage("give at most one of --tau and --c-tau".into()));
    }
    if args.k_max.is_some() && m != AutoSegment {
        return Err(Failure::Usage("--k-max only applies to auto-segment".into()));
    }
    if args.seed.is_some() && m != Unimodal {
        return Err(Failure::Usage("--seed only applies to unimodal".into()));
    }
    Ok(())
}

fn penalty_spec(family: PenaltyFamily, args: &FitArgs, sigma: Option<f64>) -> PenaltySpec64 {
    let mut spec = PenaltySpec64::new(family);
    if let Some(t) = args.tau {
        spec = spec.with_tau(t);
    }
    if let Some(c) = args.c_tau {
        spec = spec.with_c_tau(c);
    }
    if let Some(s) = sigma {
        spec = spec.with_sigma(s);
    }
    spec
}

fn run_fit(args: &FitArgs, x: &Series64) -> Result<(FitResult64, Option<f64>), Failure> {
    let sigma = parse_sigma(&args.sigma)?;
    let n = x.len();
    let k = args.k.unwrap_or(1);
    let out = match args.method {
        FitMethod::Iso => (isotonic_fit(x)?, None),
        FitMethod::Reduced => (fit_k(x, k)?, None),
        FitMethod::Segment => {
            if k > n {
                return Err(Failure::Usage(format!("--k {k} exceeds n = {n}")));
            }
            (segment_fit_k(x, k)?, None)
        }
        FitMethod::Auto | FitMethod::AutoModified => {
            let family = if args.method == FitMethod::Auto {
                PenaltyFamily::Plain
            } else {
                PenaltyFamily::Modified
            };
            let spec = penalty_spec(family, args, sigma);
            let used = spec.resolve(x)?.sigma;
            (select_k(&ReducedPath::build(x)?, x, &spec)?, used)
        }
        FitMethod::AutoSegment => {
            let spec = penalty_spec(PenaltyFamily::Segment, args, sigma);
            let resolved = spec.resolve(x)?;
            let k_max = args.k_max.unwrap_or(DEFAULT_K_MAX).min(n);
            (segment_select_k(x, resolved.tau, k_max)?, resolved.sigma)
        }
        FitMethod::Unimodal => {
            let s = sigma.unwrap_or_else(|| usable_sigma(x));
            let agg = unimodal_aggregate(x, k, s, args.seed.unwrap_or(0))?;
            (agg.result, Some(s))
        }
    };
    Ok(out)
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    validate_flags(args)?;
    let x = read_series(args)?;
    let (r, sigma_used) = run_fit(args, &x)?;
    let report = FitReport {
        n: x.len(),
        method: r.method.label().to_string(),
        k_used: r.k_used,
        k_hat: r.k_selected,
        knots: r.fit.knots().to_vec(),
        levels: r.fit.levels().to_vec(),
        sse: r.sse,
        penalty: r.penalty,
        sigma_used,
    };
    let json = serde_json::to_string(&report).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("{json}");
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    if args.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = BenchConfig::from_toml_str(&text)?;
    let table = run_config(&cfg, args.threads)?;
    for e in &cfg.experiments {
        let rows: Vec<_> = table.rows.iter().filter(|r| r.experiment == e.id).collect();
        let summary: Vec<String> = rows
            .iter()
            .filter(|r| r.n == *e.n.last().unwrap_or(&0) && r.p == e.p[0])
            .map(|r| format!("{}={:.4}", r.estimator, r.mean_loss))
            .collect();
        eprintln!(
            "{}: {} rows, {} replications per cell; n={} p={}: {}",
            e.id,
            rows.len(),
            e.replications,
            e.n.last().unwrap_or(&0),
            e.p[0],
            summary.join(" ")
        );
    }
    write_table(&table, &args.out).map_err(|e| match e {
        Error::Io(io) => Failure::Io(format!("cannot write {}: {io}", args.out.display())),
        Error::Csv(c) => Failure::Io(format!("cannot write {}: {c}", args.out.display())),
        other => Failure::from(other),
    })?;
    Ok(())
}
