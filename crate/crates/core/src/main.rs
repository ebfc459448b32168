use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num::{BigInt, One, Zero};

use qanomaly::combinatorics::{to_f64, Rational};
use qanomaly::gram::{closed_form_spectrum, closed_form_spectrum_exact, ProblemInstance};
use qanomaly::oracle::universal_success_oracle;
use qanomaly::protocols::{
    min_error_asymptotic, min_error_success, unambiguous_success,
    verify_unambiguous_certificates, CERTIFICATE_TOLERANCE,
};
use qanomaly::sweep::{
    parse_grid, parse_range, run_sweep, validate_figure, write_csv, Figure, Protocol, SweepConfig,
};
use qanomaly::universal::{universal_asymptote, universal_success_exact, UniversalInstance};
use qanomaly::verify::{run_verification, Scope, VerifyConfig};
use qanomaly::Error;

#[derive(Parser)]
#[command(name = "qanomaly", version, about = "Optimal detection of anomalous quantum sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gram spectrum λ_j with multiplicities.
    Spectrum(PointArgs),
    /// Minimum-error success probability.
    Minerr {
        #[command(flatten)]
        point: PointArgs,
        /// Also print the large-n expansion.
        #[arg(long)]
        asymptotic: bool,
    },
    /// Unambiguous (zero-error) success probability.
    Unambiguous {
        #[command(flatten)]
        point: PointArgs,
        /// Build and check both optimality certificates.
        #[arg(long)]
        certify: bool,
    },
    /// Universal protocol success probability for unknown states.
    Universal {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 2)]
        d: u32,
        /// Cross-check against the explicit density-matrix computation.
        #[arg(long)]
        oracle: bool,
    },
    /// Parameter sweep written as CSV.
    Sweep(SweepArgs),
    /// Run the verification suites.
    Verify {
        #[arg(long, default_value = "all")]
        scope: String,
        #[arg(long, default_value_t = 9)]
        max_n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Multiplies every numerical tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
    /// Overlap; with --exact also accepts `p/q`.
    #[arg(long)]
    c: String,
    /// Rational arithmetic.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Preset grid: fig2 or fig3.
    #[arg(long)]
    figure: Option<String>,
    /// minerr, unambiguous, universal or average (comma separated).
    #[arg(long, default_value = "minerr")]
    protocol: String,
    #[arg(long)]
    n_range: Option<String>,
    /// Anomaly counts, comma separated.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    c_grid: Option<String>,
    /// Local dimensions for universal/average, comma separated.
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    exact: bool,
    /// Omit the large-n limit rows.
    #[arg(long)]
    no_limits: bool,
}

enum Failure {
    Invalid(String),
    Verification(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::Io(e.to_string())
}

/// `p/q`, an integer or a terminating decimal, exactly.
fn parse_rational(text: &str) -> Result<Rational, Failure> {
    let bad = || Failure::Invalid(format!("cannot read '{text}' as a rational"));
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.chars().any(|ch| !ch.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let den = num::pow(BigInt::from(10), frac.len());
    Ok(Rational::new(num, den))
}

fn instance(point: &PointArgs) -> Result<(ProblemInstance, Option<Rational>), Failure> {
    if point.exact {
        let c = parse_rational(&point.c)?;
        if c < Rational::zero() || c > Rational::one() {
            return Err(Failure::Invalid(format!("overlap c = {c} outside [0, 1]")));
        }
        let c2 = &c * &c;
        Ok((ProblemInstance::with_exact_c_squared(point.n, point.k, c2.clone())?, Some(c2)))
    } else {
        let c: f64 = point.c.trim().parse().map_err(|_| Failure::Invalid(format!("bad overlap '{}'", point.c)))?;
        Ok((ProblemInstance::new(point.n, point.k, c)?, None))
    }
}

fn cmd_spectrum(point: &PointArgs) -> Result<(), Failure> {
    let (inst, exact) = instance(point)?;
    println!("j\tlambda_j\tm_j");
    let size = inst.size() as f64;
    match exact {
        Some(c2) => {
            let entries = closed_form_spectrum_exact(inst.n, inst.k, &c2)?;
            let mut trace = Rational::zero();
            for e in &entries {
                println!("{}\t{}\t{}", e.index, e.eigenvalue, e.multiplicity);
                trace += &e.eigenvalue * Rational::from_integer(BigInt::from(e.multiplicity));
            }
            println!("# trace {trace} (expected {})", inst.size());
        }
        None => {
            let spectrum = closed_form_spectrum(&inst)?;
            for e in &spectrum.entries {
                println!("{}\t{:.12}\t{}", e.index, e.eigenvalue, e.multiplicity);
            }
            println!("# trace {:.12} (expected {size})", spectrum.trace());
        }
    }
    Ok(())
}

fn cmd_minerr(point: &PointArgs, asymptotic: bool) -> Result<(), Failure> {
    let (inst, _) = instance(point)?;
    let result = min_error_success(&inst)?;
    println!("minerr\t{:.12}", result.value);
    if asymptotic {
        let a = min_error_asymptotic(&inst)?;
        println!("asymptotic\t{:.12}", a.value);
    }
    Ok(())
}

fn cmd_unambiguous(point: &PointArgs, certify: bool) -> Result<(), Failure> {
    let (inst, exact) = instance(point)?;
    match exact {
        Some(c2) => {
            let base = Rational::one() - c2;
            let exponent = qanomaly::johnson::class_count(inst.n, inst.k);
            let value = (0..exponent).fold(Rational::one(), |acc, _| acc * &base);
            println!("unambiguous\t{value}");
        }
        None => println!("unambiguous\t{:.12}", unambiguous_success(&inst)?.value),
    }
    if certify {
        let report = verify_unambiguous_certificates(&inst)?;
        println!("primal_feasible\t{}", report.primal_feasible);
        println!("dual_feasible\t{}", report.dual_feasible);
        println!("dual_value\t{:.12}", report.dual_value);
        println!("gap\t{:.3e}", report.gap);
        if !report.certified(CERTIFICATE_TOLERANCE) {
            return Err(Failure::Verification("certificates do not close".into()));
        }
    }
    Ok(())
}

fn cmd_universal(n: u32, k: u32, d: u32, oracle: bool) -> Result<(), Failure> {
    let ui = UniversalInstance::new(n, k, d)?;
    let exact = universal_success_exact(&ui)?;
    println!("universal\t{exact}\t{:.12}", to_f64(&exact));
    println!("limit\t{:.12}", universal_asymptote(k, d)?);
    if oracle {
        let o = universal_success_oracle(&ui)?;
        let residual = (o.success - to_f64(&exact)).abs();
        println!("oracle\t{:.12}\tresidual {residual:.3e}", o.success);
        if residual > 1e-8 || !o.holevo_satisfied() {
            return Err(Failure::Verification(format!("oracle disagrees by {residual:e}")));
        }
    }
    Ok(())
}

fn list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(|v| v.trim().parse().map_err(|_| Failure::Invalid(format!("bad {what} '{v}'"))))
        .collect()
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let figure = args.figure.as_deref().map(str::parse::<Figure>).transpose()?;
    let mut config = match figure {
        Some(f) => SweepConfig::figure(f),
        None => {
            let protocols: Vec<Protocol> = args
                .protocol
                .split(',')
                .map(|p| p.trim().parse())
                .collect::<Result<_, Error>>()?;
            let uses_dim = protocols.iter().any(|p| p.uses_dimension());
            if uses_dim && protocols.iter().any(|p| !p.uses_dimension()) {
                return Err(Failure::Invalid("cannot mix overlap and dimension protocols in one sweep".into()));
            }
            let params = if uses_dim {
                list::<u32>(args.d.as_deref().unwrap_or("2"), "dimension")?.into_iter().map(f64::from).collect()
            } else {
                parse_grid(args.c_grid.as_deref().unwrap_or("0.5"))?
            };
            SweepConfig {
                protocols,
                n_values: parse_range(args.n_range.as_deref().unwrap_or("2:20:1"))?,
                k_values: list(args.k.as_deref().unwrap_or("1"), "k")?,
                params,
                exact: false,
                include_limits: true,
            }
        }
    };
    if let Some(r) = &args.n_range {
        config.n_values = parse_range(r)?;
    }
    config.exact = args.exact;
    config.include_limits = !args.no_limits;
    let rows = run_sweep(&config)?;

    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(io_failure)?;
            write_csv(&rows, BufWriter::new(file)).map_err(io_failure)?;
        }
        None => write_csv(&rows, io::stdout().lock()).map_err(io_failure)?,
    }
    if let Some(f) = figure {
        let checks = validate_figure(f, &rows);
        for c in &checks {
            eprintln!("{c}");
        }
        if checks.iter().any(|c| !c.passed) {
            return Err(Failure::Verification("figure checks failed".into()));
        }
    }
    Ok(())
}

fn cmd_verify(scope: &str, max_n: u32, seed: u64, tol_scale: f64) -> Result<(), Failure> {
    let cfg = VerifyConfig { scope: scope.parse::<Scope>()?, max_n, seed, tol_scale };
    let report = run_verification(&cfg)?;
    let mut out = io::stdout().lock();
    for c in &report.checks {
        writeln!(out, "{c}").map_err(io_failure)?;
    }
    let summary = serde_json::to_string(&report.summary).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out, "SUMMARY {summary}").map_err(io_failure)?;
    if !report.all_passed() {
        return Err(Failure::Verification(format!("{} of {} checks failed", report.summary.failed, report.summary.total)));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(p) => cmd_spectrum(p),
        Command::Minerr { point, asymptotic } => cmd_minerr(point, *asymptotic),
        Command::Unambiguous { point, certify } => cmd_unambiguous(point, *certify),
        Command::Universal { n, k, d, oracle } => cmd_universal(*n, *k, *d, *oracle),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify { scope, max_n, seed, tol_scale } => cmd_verify(scope, *max_n, *seed, *tol_scale),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(3)
        }
    }
}
