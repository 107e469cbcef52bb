//! `qqfit`: goodness-of-fit testing and location/scale estimation from
//! quantile-quantile plots, with seeded Monte Carlo calibration.
//!
//! Exit codes: 0 success, 1 internal error, 2 data or usage error.

mod commands;
mod ingest;

use std::fmt;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qqfit::{Family, PositionMethod, TestKind};

#[derive(Debug)]
pub enum CliError {
    /// Bad input data or invalid request: exit code 2.
    Data(String),
    /// Internal failure (numerics, unexpected I/O): exit code 1.
    Internal(String),
}

impl CliError {
    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Data(m) | CliError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl From<qqfit::Error> for CliError {
    fn from(e: qqfit::Error) -> Self {
        match e {
            qqfit::Error::Domain(_) | qqfit::Error::Degenerate(_) => CliError::Data(e.to_string()),
            qqfit::Error::Numeric(_) => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qqfit",
    version,
    about = "Distribution checks from Q-Q plots: correlation test with calibrated p-values, \
             Lilliefors and Shapiro-Wilk comparison, seeded Monte Carlo calibration and power \
             tables, SVG plots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the test battery on CSV datasets (or map a published statistic
    /// to its p-value)
    Test(TestArgs),
    /// Simulate the null distribution of the correlation statistic for a
    /// range of sample sizes
    Calibrate(CalibrateArgs),
    /// Estimate type-II error rates against a Gumbel or logistic
    /// alternative
    Power(PowerArgs),
    /// Render Q-Q plots without running the battery
    Plot(PlotArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Input CSV (one dataset per column, header row names them)
    #[arg(long, required_unless_present = "statistic")]
    input: Option<String>,

    /// Analyze only these columns (repeatable)
    #[arg(long)]
    column: Vec<String>,

    /// Transform applied before testing. 'log' asks whether the data is
    /// lognormal (the combined-ratio workflow); 'identity' tests the raw
    /// values for normality.
    #[arg(long, default_value = "log", value_parser = parse_transform)]
    transform: qqfit::Transform,

    /// Plotting positions for the rendered plot and the location/scale
    /// estimates. The correlation test itself always uses the fitted
    /// positions it is calibrated with.
    #[arg(long, default_value = "fitted")]
    positions: PositionMethod,

    /// p-value method for the correlation test: 'approx' (normal
    /// approximation, n >= 10) or 'mc'. Lilliefors and Shapiro-Wilk
    /// p-values always come from simulation.
    #[arg(long, default_value = "approx", value_parser = parse_p_method)]
    p_method: PMethodArg,

    /// Monte Carlo replications (simulated p-values)
    #[arg(long, default_value_t = 100_000)]
    reps: u64,

    /// Run simulations at full scale (10^6 replications) unless --reps is
    /// given explicitly
    #[arg(long)]
    full_scale: bool,

    /// Simulation seed
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Decision levels, comma-separated
    #[arg(long, default_value = "0.01,0.05,0.1", value_parser = parse_alphas)]
    alphas: Alphas,

    /// Directory for artifacts (tables, SVG plots); stdout only when absent
    #[arg(long)]
    out: Option<String>,

    /// Artifact formats, comma-separated subset of text,csv,json,svg
    #[arg(long, default_value = "text,csv,json,svg", value_parser = parse_formats)]
    format: Formats,

    /// Numbers use ',' as decimal separator (';'-separated files)
    #[arg(long)]
    decimal_comma: bool,

    /// Published-statistics mode: map this correlation statistic directly
    /// to its p-value (requires --sample-size, ignores --input)
    #[arg(long, conflicts_with = "input")]
    statistic: Option<f64>,

    /// Sample size the published statistic was computed from
    #[arg(long, requires = "statistic")]
    sample_size: Option<usize>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Sample sizes: a range 'a..b' (inclusive) or a comma list '10,14,50'
    #[arg(long, value_parser = parse_n_range)]
    n_range: NRange,

    /// Replications per sample size (floor 10^4)
    #[arg(long, default_value_t = 100_000)]
    reps: u64,

    /// Run at full scale (10^6 replications) unless --reps is given
    #[arg(long)]
    full_scale: bool,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Output directory for calibration tables and histogram SVGs
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct PowerArgs {
    /// Test: correlation, lilliefors, or shapiro-wilk
    #[arg(long)]
    test: TestKind,

    /// Alternative hypothesis family: gumbel or logistic
    #[arg(long, value_parser = parse_alternative)]
    alternative: Family,

    /// Sample size
    #[arg(long)]
    n: usize,

    #[arg(long, default_value = "0.01,0.05,0.1", value_parser = parse_alphas)]
    alphas: Alphas,

    #[arg(long, default_value_t = 100_000)]
    reps: u64,

    /// Run at full scale (10^6 replications) unless --reps is given
    #[arg(long)]
    full_scale: bool,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Output directory for the power table CSV
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: String,

    #[arg(long)]
    column: Vec<String>,

    #[arg(long, default_value = "log", value_parser = parse_transform)]
    transform: qqfit::Transform,

    #[arg(long, default_value = "fitted")]
    positions: PositionMethod,

    #[arg(long)]
    decimal_comma: bool,

    /// Output directory for the SVG files
    #[arg(long)]
    out: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PMethodArg {
    Approx,
    Mc,
}

#[derive(Debug, Clone)]
struct Alphas(Vec<f64>);

#[derive(Debug, Clone)]
struct NRange(Vec<usize>);

#[derive(Debug, Clone, Copy)]
struct Formats {
    text: bool,
    csv: bool,
    json: bool,
    svg: bool,
}

fn parse_transform(s: &str) -> Result<qqfit::Transform, String> {
    match s.to_ascii_lowercase().as_str() {
        "log" => Ok(qqfit::Transform::Log),
        "identity" => Ok(qqfit::Transform::Identity),
        other => Err(format!("unknown transform '{other}' (log, identity)")),
    }
}

fn parse_p_method(s: &str) -> Result<PMethodArg, String> {
    match s.to_ascii_lowercase().as_str() {
        "approx" | "normal-approx" => Ok(PMethodArg::Approx),
        "mc" | "monte-carlo" => Ok(PMethodArg::Mc),
        other => Err(format!("unknown p-method '{other}' (approx, mc)")),
    }
}

fn parse_alternative(s: &str) -> Result<Family, String> {
    match s.to_ascii_lowercase().as_str() {
        "gumbel" => Ok(Family::Gumbel),
        "logistic" => Ok(Family::Logistic),
        other => Err(format!("unknown alternative '{other}' (gumbel, logistic)")),
    }
}

fn parse_alphas(s: &str) -> Result<Alphas, String> {
    let mut out = Vec::new();
    for field in s.split(',') {
        let a: f64 = field
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse alpha '{field}'"))?;
        if !(a > 0.0 && a < 1.0) {
            return Err(format!("alpha {a} outside (0,1)"));
        }
        out.push(a);
    }
    if out.is_empty() {
        return Err("need at least one alpha".into());
    }
    Ok(Alphas(out))
}

fn parse_n_range(s: &str) -> Result<NRange, String> {
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| format!("bad range '{s}'"))?;
        let hi: usize = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| format!("bad range '{s}'"))?;
        if lo > hi {
            return Err(format!("empty range '{s}'"));
        }
        return Ok(NRange((lo..=hi).collect()));
    }
    let mut out = Vec::new();
    for field in s.split(',') {
        out.push(
            field
                .trim()
                .parse()
                .map_err(|_| format!("cannot parse sample size '{field}'"))?,
        );
    }
    Ok(NRange(out))
}

fn parse_formats(s: &str) -> Result<Formats, String> {
    let mut f = Formats {
        text: false,
        csv: false,
        json: false,
        svg: false,
    };
    for field in s.split(',') {
        match field.trim().to_ascii_lowercase().as_str() {
            "text" => f.text = true,
            "csv" => f.csv = true,
            "json" => f.json = true,
            "svg" => f.svg = true,
            other => return Err(format!("unknown format '{other}' (text, csv, json, svg)")),
        }
    }
    Ok(f)
}

/// 10^6 replications when --full-scale is active and --reps was left at
/// its default.
fn effective_reps(reps: u64, full_scale: bool) -> u64 {
    if full_scale && reps == 100_000 {
        1_000_000
    } else {
        reps
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(args) => commands::cmd_test(args),
        Command::Calibrate(args) => commands::cmd_calibrate(args),
        Command::Power(args) => commands::cmd_power(args),
        Command::Plot(args) => commands::cmd_plot(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
