//! `wittlab`: generate and cache Witt polynomials, inspect `H^1(G, O_L)`, and
//! run the verification checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use wittlab::extension::{h1_dimension, h1_truncated_oracle, ASExtension};
use wittlab::verify::{self, CheckName, CheckParams, ReportFormat};
use wittlab::wittpoly::{self, WittKind};
use wittlab::{Error, LaurentSeries};

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_PRECISION: u8 = 3;

#[derive(Parser)]
#[command(name = "wittlab", version, about = "Artin-Schreier extensions, H^1 and truncated Witt vectors")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, verify and cache Witt structure polynomials.
    WittpolyGen(GenArgs),
    /// Dimension and basis of H^1(G, O_L).
    H1(H1Args),
    /// Run one named check or all of them and emit a report.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Sum,
    Product,
    Negation,
    All,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "all")]
    kind: KindArg,
    #[arg(long, env = "WITTLAB_CACHE_DIR")]
    cache_dir: PathBuf,
    /// Re-verify the ghost identity when loading an existing cache file.
    #[arg(long)]
    paranoid: bool,
}

#[derive(Args)]
struct ExtArgs {
    #[arg(long)]
    p: u32,
    /// Ramification break.
    #[arg(long)]
    s: i64,
    /// `t^-s` (default), `t^-K`, or sparse coefficients `c:v,c:v,...` for `Σ c t^v`.
    #[arg(long)]
    f: Option<String>,
}

#[derive(Args)]
struct H1Args {
    #[command(flatten)]
    ext: ExtArgs,
    /// Print the representatives `t^j λ^i`.
    #[arg(long)]
    basis: bool,
    /// Cross-check against the truncated linear-algebra oracle.
    #[arg(long)]
    oracle: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Check name, or `all`.
    #[arg(long, default_value = "all")]
    check: String,
    #[command(flatten)]
    ext: ExtArgs,
    /// Witt length (defaults depend on the check).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = verify::checks::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Working precision N (default 4sp+16, scaled by p^(n-1) for Witt checks).
    #[arg(long)]
    precision: Option<i64>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "WITTLAB_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    paranoid: bool,
    /// Corrupt one structure polynomial before ghost_identities verifies it.
    #[arg(long)]
    inject_fault: bool,
    /// Target level of the transition map for find_vanishing_m.
    #[arg(long, default_value_t = 1)]
    target_n: usize,
    /// Largest length scanned by find_vanishing_m.
    #[arg(long)]
    m_max: Option<usize>,
}

/// Parse `--f` for an extension with prime `p` and break `s`.
fn parse_f(text: Option<&str>, p: u32, s: i64) -> Result<Option<LaurentSeries>, Error> {
    let Some(text) = text.map(str::trim) else {
        return Ok(None);
    };
    if text == "t^-s" {
        return Ok(None);
    }
    if let Some(k) = text.strip_prefix("t^-") {
        let k: i64 = k.parse().map_err(|_| Error::InvalidF(format!("cannot parse {text:?}")))?;
        return Ok(Some(LaurentSeries::monomial(p, 1, -k)));
    }
    let mut terms = Vec::new();
    for part in text.split(',') {
        let (c, v) = part
            .split_once(':')
            .ok_or_else(|| Error::InvalidF(format!("expected c:v, got {part:?}")))?;
        let c: i64 = c.trim().parse().map_err(|_| Error::InvalidF(format!("bad coefficient in {part:?}")))?;
        let v: i64 = v.trim().parse().map_err(|_| Error::InvalidF(format!("bad exponent in {part:?}")))?;
        terms.push((v, c));
    }
    let lo = terms.iter().map(|t| t.0).min().ok_or_else(|| Error::InvalidF("empty f".into()))?;
    let hi = terms.iter().map(|t| t.0).max().expect("nonempty");
    if hi - lo > 4 * s.abs() + 4096 {
        return Err(Error::InvalidF(format!("f spans t^{lo}..t^{hi}, too wide")));
    }
    let mut dense = vec![0i64; (hi - lo + 1) as usize];
    for (v, c) in terms {
        dense[(v - lo) as usize] += c;
    }
    LaurentSeries::exact(p, lo, &dense).map(Some)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::PrecisionExhausted(_) => EXIT_PRECISION,
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        Error::Config(_)
        | Error::UnsupportedPrime(_)
        | Error::InvalidBreak { .. }
        | Error::InvalidF(_)
        | Error::Domain(_)
        | Error::PrecisionWindowInvalid(_) => EXIT_CONFIG,
        _ => EXIT_FAILED,
    }
}

fn wittpoly_gen(args: &GenArgs) -> Result<u8, Error> {
    let kinds: Vec<WittKind> = match args.kind {
        KindArg::Sum => vec![WittKind::Sum],
        KindArg::Product => vec![WittKind::Product],
        KindArg::Negation => vec![WittKind::Negation],
        KindArg::All => WittKind::ALL.to_vec(),
    };
    wittpoly::check_budget(args.p, args.n)?;
    for kind in kinds {
        let path = wittpoly::cache_path(&args.cache_dir, args.p, args.n, kind);
        match wittpoly::cache_load(&args.cache_dir, args.p, args.n, kind, args.paranoid) {
            Ok(_) => {
                println!("{}: present{}", path.display(), if args.paranoid { ", re-verified" } else { "" });
                continue;
            }
            Err(Error::CacheMiss(_)) => {}
            Err(Error::CacheCorrupt(msg)) => warn!("replacing corrupt cache file: {msg}"),
            Err(e) => return Err(e),
        }
        let structure = wittpoly::WittStructure::generate(args.p, args.n, kind)?;
        let path = wittpoly::cache_store(&args.cache_dir, &structure)?;
        let terms: Vec<usize> = structure.polys.iter().map(|q| q.len()).collect();
        println!("{}: written, ghost identity verified, terms {terms:?}", path.display());
    }
    Ok(0)
}

fn h1(args: &H1Args) -> Result<u8, Error> {
    let (p, s) = (args.ext.p, args.ext.s);
    let f = parse_f(args.ext.f.as_deref(), p, s)?;
    let ext = ASExtension::new(p, s, f)?;
    let (dim, basis) = h1_dimension(p, s)?;
    if args.basis {
        let names: Vec<String> = basis.iter().map(ToString::to_string).collect();
        println!("dim {dim}; basis {}", names.join(", "));
    } else {
        println!("dim {dim}");
    }
    if args.oracle {
        let n = 2 * s * p as i64 + p as i64;
        let value = h1_truncated_oracle(&ext, n)?;
        println!("oracle {value} (stable at N = {}, {n}, {})", n - p as i64, n + p as i64);
        if value != dim {
            eprintln!("oracle disagrees with the closed form");
            return Ok(EXIT_FAILED);
        }
    }
    Ok(0)
}

fn run_verify(args: &VerifyArgs) -> Result<u8, Error> {
    let (p, s) = (args.ext.p, args.ext.s);
    wittlab::fp::check_prime(p as u64)?;
    let f = parse_f(args.ext.f.as_deref(), p, s)?;
    ASExtension::new(p, s, f.clone())?;
    if args.samples == 0 {
        return Err(Error::Config("--samples must be positive".into()));
    }
    if let Some(n) = args.n {
        wittpoly::check_budget(p, n).map_err(|e| Error::Config(e.to_string()))?;
    }
    let params = CheckParams {
        f,
        n: args.n,
        precision: args.precision,
        samples: args.samples,
        seed: args.seed,
        target_n: args.target_n,
        m_max: args.m_max,
        cache_dir: args.cache_dir.clone(),
        paranoid: args.paranoid,
        inject_fault: args.inject_fault,
        ..CheckParams::new(p, s)
    };
    let reports = if args.check == "all" {
        verify::run_all(&params)?
    } else {
        let check: CheckName = args.check.parse()?;
        vec![verify::run_check(check, &params).map_err(|e| match e {
            Error::BudgetExceeded { .. } => Error::Config(e.to_string()),
            other => other,
        })?]
    };
    let text = verify::emit_report(&reports, args.format.into(), args.out.as_deref())?;
    if args.out.is_none() {
        print!("{text}");
    }
    for r in reports.iter().filter(|r| !r.passed()) {
        eprintln!("{} failed: {}", r.check, r.summary);
    }
    Ok(if reports.iter().all(|r| r.passed()) { 0 } else { EXIT_FAILED })
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::WittpolyGen(args) => {
            log::info!("cache directory {}", args.cache_dir.display());
            wittpoly_gen(args)
        }
        Command::H1(args) => h1(args),
        Command::Verify(args) => run_verify(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_shorthands() {
        assert!(parse_f(None, 3, 2).unwrap().is_none());
        assert!(parse_f(Some("t^-s"), 3, 2).unwrap().is_none());
        assert_eq!(parse_f(Some("t^-2"), 3, 2).unwrap().unwrap(), LaurentSeries::monomial(3, 1, -2));
        let f = parse_f(Some("1:-2, 2:0"), 3, 2).unwrap().unwrap();
        assert_eq!(f, LaurentSeries::exact(3, -2, &[1, 0, 2]).unwrap());
        assert!(parse_f(Some("1;-2"), 3, 2).is_err());
        assert!(parse_f(Some("t^-x"), 3, 2).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::BudgetExceeded { p: 5, n: 4, max: 2 }), EXIT_BUDGET);
        assert_eq!(exit_code(&Error::InvalidBreak { p: 3, s: 3 }), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::PrecisionExhausted(String::new())), EXIT_PRECISION);
        assert_eq!(exit_code(&Error::NotTraceZero), EXIT_FAILED);
    }
}
