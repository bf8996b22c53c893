//! The `hmtrace` command line front end.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 usage or input error,
//! 3 precision ceiling reached.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use astro_float::{Radix, RoundingMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::asymptotics::{self, AsymptoticError};
use crate::forms::QuadForm;
use crate::hauptmodul::{self, HauptmodulError, Level, PrecisionBudget};
use crate::identities::{self, IdentityError, StarTraces, VerificationReport};
use crate::numeric::{Ctx, NumericError};
use crate::traces::{TraceEngine, TraceError, TraceTable};

/// Version of the JSON envelope written by `--format json`.
pub const SCHEMA_VERSION: u32 = 1;

/// Window used by `verify sectors --full-sturm`.
pub const FULL_STURM_WINDOW: i64 = 3960;

/// Smallest accepted `--prec-ceiling`.
pub const MIN_PRECISION_CEILING: usize = 128;

#[derive(Debug, Parser)]
#[command(name = "hmtrace", version, about = "Hauptmoduln of level 1, 2, 3, 5 and traces of their singular moduli")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalOpts,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Size of the worker pool (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Give up on a CM sum once this many bits do not certify it.
    #[arg(long, global = true, default_value_t = PrecisionBudget::DEFAULT_CEILING)]
    pub prec_ceiling: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fourier coefficients of a Hauptmodul.
    Coeffs {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        star: bool,
        #[arg(long)]
        n_max: i64,
    },
    /// One trace value t_m(d).
    Trace {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        star: bool,
        #[arg(long)]
        m: u32,
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
        /// Restrict an unstarred trace to one `b mod 2p` sector.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<i64>,
    },
    /// The table of t_1*, t_2*, t_1, t_2 for -4 <= d <= d_max.
    Table {
        #[arg(long)]
        p: Option<u32>,
        #[arg(long, default_value_t = 50)]
        d_max: i64,
        /// Write table_p2.csv, table_p3.csv and table_p5.csv into this directory.
        #[arg(long, value_name = "DIR")]
        seed_tables: Option<PathBuf>,
    },
    /// Faber polynomial φ_m of j_p*.
    Faber {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        m: u32,
    },
    /// Verification suites.
    Verify {
        #[command(subcommand)]
        suite: VerifyCommand,
    },
    /// Exact c_n^(p) against the asymptotic prediction.
    Asym {
        #[arg(long)]
        p: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<u64>,
    },
    /// Evaluate j_p* at the CM point of a form.
    EvalCm {
        #[arg(long)]
        p: u32,
        /// `a,b,c`
        #[arg(long, allow_hyphen_values = true)]
        form: String,
        #[arg(long, default_value_t = 256)]
        prec: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Coefficients of j_p from traces (Kaneko's formula for p = 1).
    Thm1 {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n_max: u64,
    },
    /// The weight-2 sector identities up to q^window.
    Sectors {
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 200)]
        window: i64,
        /// Run to q^3960. Long-running.
        #[arg(long)]
        full_sturm: bool,
    },
    /// j_p* = j_p - p (j_p | U_p) up to q^window.
    Star {
        #[arg(long)]
        p: u32,
        #[arg(long, default_value_t = 1000)]
        window: i64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    PrecisionCeiling(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::PrecisionCeiling(_) => 3,
        }
    }
}

fn is_ceiling_trace(e: &TraceError) -> bool {
    matches!(
        e,
        TraceError::PrecisionCeiling { .. }
            | TraceError::Numeric(NumericError::PrecisionCeiling { .. })
            | TraceError::Hauptmodul(HauptmodulError::Numeric(NumericError::PrecisionCeiling { .. }))
    )
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        if is_ceiling_trace(&e) {
            CliError::PrecisionCeiling(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<IdentityError> for CliError {
    fn from(e: IdentityError) -> Self {
        match e {
            IdentityError::Trace(t) => t.into(),
            e => CliError::Usage(e.to_string()),
        }
    }
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Usage(e.to_string())
            }
        }
    )*};
}

usage_from!(
    HauptmodulError,
    AsymptoticError,
    crate::forms::FormError,
    crate::series::SeriesError,
    NumericError,
    serde_json::Error,
    rayon::ThreadPoolBuildError
);

/// Rendered result of a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    /// `false` when a verification found a mismatch.
    pub passed: bool,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Outcome { body, passed: true }
    }
}

fn envelope<T: Serialize>(command: &str, result: &T) -> Result<String, CliError> {
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "result": result,
    });
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn parse_form(text: &str) -> Result<QuadForm, CliError> {
    let parts: Vec<i64> = text
        .split(',')
        .map(|s| s.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--form expects a,b,c: {e}")))?;
    match parts[..] {
        [a, b, c] => Ok(QuadForm::new(a, b, c)),
        _ => Err(CliError::Usage("--form expects exactly three integers a,b,c".into())),
    }
}

fn engine(p: u32, m_max: u32, ceiling: usize) -> Result<TraceEngine, CliError> {
    Ok(TraceEngine::new(p, m_max)?.with_ceiling(ceiling))
}

/// Run a parsed command and render its output.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    if g.prec_ceiling < MIN_PRECISION_CEILING {
        return Err(CliError::Usage(format!("--prec-ceiling must be at least {MIN_PRECISION_CEILING}")));
    }
    match &cli.command {
        Command::Coeffs { p, star, n_max } => coeffs(g, *p, *star, *n_max),
        Command::Trace { p, star, m, d, beta } => trace(g, *p, *star, *m, *d, *beta),
        Command::Table { p, d_max, seed_tables } => table(g, *p, *d_max, seed_tables.as_ref()),
        Command::Faber { p, m } => faber(g, *p, *m),
        Command::Verify { suite } => verify(g, suite),
        Command::Asym { p, grid } => asym(g, *p, grid),
        Command::EvalCm { p, form, prec } => eval_cm(g, *p, form, *prec),
    }
}

fn coeffs(g: &GlobalOpts, p: u32, star: bool, n_max: i64) -> Result<Outcome, CliError> {
    if n_max < 0 {
        return Err(CliError::Usage("--n-max must be non-negative".into()));
    }
    let level = Level::new(p, star)?;
    let series = hauptmodul::hauptmodul_series(level, n_max)?;
    let rows: Vec<(i64, String)> = (-1..=n_max)
        .map(|n| Ok((n, series.coeff_integer(n)?.to_string())))
        .collect::<Result<_, crate::series::SeriesError>>()?;
    let body = match g.format {
        Format::Text => {
            let mut out = format!("{level}\n");
            for (n, c) in &rows {
                let _ = writeln!(out, "q^{n}\t{c}");
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("n,coefficient\n");
            for (n, c) in &rows {
                let _ = writeln!(out, "{n},{c}");
            }
            out
        }
        Format::Json => {
            let coefficients: Vec<&String> = rows.iter().map(|(_, c)| c).collect();
            envelope(
                "coeffs",
                &json!({ "level": level.to_string(), "p": p, "starred": level.starred, "valuation": -1, "coefficients": coefficients }),
            )?
        }
    };
    Ok(Outcome::ok(body))
}

fn trace(g: &GlobalOpts, p: u32, star: bool, m: u32, d: i64, beta: Option<i64>) -> Result<Outcome, CliError> {
    if m == 0 {
        return Err(CliError::Usage("--m must be at least 1".into()));
    }
    let eng = engine(p, m, g.prec_ceiling)?;
    let value = match beta {
        Some(b) if !star => eng.trace_beta(m, d, b)?,
        Some(_) => return Err(CliError::Usage("--beta applies to unstarred traces only".into())),
        None => eng.trace(star, m, d)?,
    };
    let body = match g.format {
        Format::Text => {
            let star_mark = if value.starred { "*" } else { "" };
            let mut out = format!("t_{}^({}{})({}) = {}\t[{:?}", m, p, star_mark, d, value.value, value.provenance);
            if let (Some(bits), Some(res)) = (value.bits, value.residual) {
                let _ = write!(out, ", {bits} bits, residual {res:.1e}");
            }
            out.push_str("]\n");
            out
        }
        Format::Csv => format!(
            "p,starred,m,d,value\n{},{},{},{},{}\n",
            value.p, value.starred, value.m, value.d, value.value
        ),
        Format::Json => envelope("trace", &value)?,
    };
    Ok(Outcome::ok(body))
}

fn table(g: &GlobalOpts, p: Option<u32>, d_max: i64, seed: Option<&PathBuf>) -> Result<Outcome, CliError> {
    if let Some(dir) = seed {
        std::fs::create_dir_all(dir)?;
        let mut written = String::new();
        for p in [2u32, 3, 5] {
            let t = engine(p, 2, g.prec_ceiling)?.table(d_max)?;
            let path = dir.join(format!("table_p{p}.csv"));
            std::fs::write(&path, t.to_csv())?;
            let _ = writeln!(written, "wrote {}", path.display());
        }
        return Ok(Outcome::ok(written));
    }
    let p = p.ok_or_else(|| CliError::Usage("table needs --p unless --seed-tables is given".into()))?;
    let t: TraceTable = engine(p, 2, g.prec_ceiling)?.table(d_max)?;
    let body = match g.format {
        Format::Text => t.to_text(),
        Format::Csv => t.to_csv(),
        Format::Json => envelope("table", &t)?,
    };
    Ok(Outcome::ok(body))
}

fn faber(g: &GlobalOpts, p: u32, m: u32) -> Result<Outcome, CliError> {
    let poly = hauptmodul::faber(Level::star(p)?, m)?;
    let body = match g.format {
        Format::Text => format!("phi_{m} = {poly}\n"),
        Format::Csv => {
            let mut out = String::from("power,coefficient\n");
            for (i, c) in poly.coeffs.iter().enumerate() {
                let _ = writeln!(out, "{i},{c}");
            }
            out
        }
        Format::Json => {
            let coeffs: Vec<String> = poly.coeffs.iter().map(|c| c.to_string()).collect();
            envelope("faber", &json!({ "p": p, "m": m, "coefficients": coeffs }))?
        }
    };
    Ok(Outcome::ok(body))
}

fn report_outcome(g: &GlobalOpts, report: &VerificationReport, per_row: bool) -> Result<Outcome, CliError> {
    let body = match g.format {
        Format::Text => {
            let mut out = String::new();
            if per_row {
                for c in &report.comparisons {
                    let rel = if c.matches { "=" } else { "!=" };
                    let _ = writeln!(out, "n={}: {} {} {}", c.n, c.expected, rel, c.computed);
                }
            }
            out.push_str(&report.summary());
            out.push('\n');
            out
        }
        Format::Csv => {
            let mut out = String::from("n,expected,computed,matches\n");
            for c in &report.comparisons {
                let _ = writeln!(out, "{},{},{},{}", c.n, c.expected, c.computed, c.matches);
            }
            out
        }
        Format::Json => envelope(&report.check, report)?,
    };
    Ok(Outcome {
        body,
        passed: report.passed(),
    })
}

fn verify(g: &GlobalOpts, suite: &VerifyCommand) -> Result<Outcome, CliError> {
    match suite {
        VerifyCommand::Thm1 { p, n_max } => {
            if *n_max == 0 {
                return Err(CliError::Usage("--n-max must be at least 1".into()));
            }
            let eng = engine(*p, 2, g.prec_ceiling)?;
            let report = if *p == 1 {
                identities::verify_level_one(&eng, *n_max)?
            } else {
                identities::verify_coefficient_formula(&eng, *n_max)?
            };
            report_outcome(g, &report, true)
        }
        VerifyCommand::Sectors { p, window, full_sturm } => {
            let n = if *full_sturm { FULL_STURM_WINDOW } else { *window };
            if n < 1 {
                return Err(CliError::Usage("--window must be at least 1".into()));
            }
            let started = Instant::now();
            let traces = StarTraces::build(&engine(*p, 2, g.prec_ceiling)?, 2, 4 * n)?;
            let report = identities::verify_weight2_sectors_with(&traces, n, started)?;
            report_outcome(g, &report, false)
        }
        VerifyCommand::Star { p, window } => {
            if *window < 1 {
                return Err(CliError::Usage("--window must be at least 1".into()));
            }
            let report = identities::verify_star_relation(*p, *window)?;
            report_outcome(g, &report, false)
        }
    }
}

fn asym(g: &GlobalOpts, p: u32, grid: &[u64]) -> Result<Outcome, CliError> {
    let report = asymptotics::convergence_report(p, grid)?;
    let body = match g.format {
        Format::Text => report.to_text(),
        Format::Csv => report.to_csv(),
        Format::Json => envelope("asym", &report)?,
    };
    Ok(Outcome {
        body,
        passed: report.trends.iter().all(|t| t.signs_match),
    })
}

fn eval_cm(g: &GlobalOpts, p: u32, form: &str, prec: usize) -> Result<Outcome, CliError> {
    if prec < 64 || prec > g.prec_ceiling {
        return Err(CliError::Usage(format!("--prec must lie in 64..={}", g.prec_ceiling)));
    }
    let q = parse_form(form)?;
    let level = Level::star(p)?;
    let mut ctx = Ctx::new(prec);
    let v = hauptmodul::eval_at_point(level, &q, &mut ctx)?;
    let dec = |x: &astro_float::BigFloat, ctx: &mut Ctx| {
        x.format(Radix::Dec, RoundingMode::ToEven, &mut ctx.consts)
            .map_err(|e| CliError::Usage(format!("formatting failed: {e:?}")))
    };
    let re = dec(&v.re, &mut ctx)?;
    let im = dec(&v.im, &mut ctx)?;
    let radius = v.radius();
    let body = match g.format {
        Format::Text => format!("{level}({q})\nre = {re}\nim = {im}\nradius <= {radius:.3e}\nbits = {}\n", ctx.bits),
        Format::Csv => format!("p,form,bits,re,im,radius\n{p},\"{q}\",{},{re},{im},{radius:e}\n", ctx.bits),
        Format::Json => envelope(
            "eval-cm",
            &json!({ "p": p, "form": [q.a, q.b, q.c], "bits": ctx.bits, "re": re, "im": im, "radius": radius }),
        )?,
    };
    Ok(Outcome::ok(body))
}

fn run_with_pool(cli: &Cli) -> Result<Outcome, CliError> {
    match cli.global.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| execute(cli)),
        None => execute(cli),
    }
}

/// Parse `args`, run, write the output, and map the result to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = run_with_pool(&cli).and_then(|outcome| {
        match &cli.global.output {
            Some(path) => std::fs::write(path, &outcome.body)?,
            None => print!("{}", outcome.body),
        }
        Ok(outcome.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
