//! Front-end of the `locconv` binary: argument parsing and the three commands.
//!
//! Every command produces JSON on stdout and a one-line summary on stderr.
//! [`run`] does no I/O besides reading gate files and the supplied stdin, so
//! the tests drive it directly.

pub mod commands;
pub mod error;
pub mod gate_source;
pub mod report;

use std::ffi::OsString;
use std::io::Read;

use clap::{Args, Parser, Subcommand, ValueEnum};
use locconv_core::{ConversionTarget, DEFAULT_RANK_TOL};

pub use error::CliError;

/// Environment variable holding the default Choi rank tolerance.
pub const RANK_TOL_ENV: &str = "LOCCONV_RANK_TOL";

#[derive(Debug, Parser)]
#[command(name = "locconv", version, about = "Classify two-party gates and convert them into CNOT or SWAP")]
pub struct Cli {
    /// Relative tolerance below which a Choi Schmidt coefficient counts as zero.
    #[arg(long, global = true, env = RANK_TOL_ENV, default_value_t = DEFAULT_RANK_TOL, value_parser = parse_rank_tol)]
    pub rank_tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonical form, Choi spectrum, class and conversion quotes of one gate.
    Analyze(GateArgs),
    /// Run the optimal conversion protocol on the simulator.
    Convert(ConvertArgs),
    /// Classify every gate of a JSON-lines file (`-` for stdin).
    ClassifyBatch { path: String },
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct GateArgs {
    /// Registry gate: identity, cnot, cz, swap, iswap, sqrt_swap, ualpha(x).
    #[arg(long)]
    pub name: Option<String>,
    /// Interaction parameters with identity locals, e.g. `pi/8,0,0`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, value_parser = parse_angle)]
    pub mu: Option<Vec<f64>>,
    /// Gate JSON: a file path, `-` for stdin, or an inline object.
    #[arg(long)]
    pub gate: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunMode {
    Exact,
    Sample,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub gate: GateArgs,
    #[arg(long, value_parser = parse_target)]
    pub target: ConversionTarget,
    #[arg(long, value_enum, default_value_t = RunMode::Exact)]
    pub mode: RunMode,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Haar-random inputs added to the 16 product test states (exact mode).
    #[arg(long, default_value_t = 4)]
    pub random_inputs: usize,
}

fn parse_rank_tol(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("rank tolerance must lie in (0, 1), got {x}"))
    }
}

fn parse_target(s: &str) -> Result<ConversionTarget, String> {
    s.parse().map_err(|e: locconv_core::Error| e.to_string())
}

/// A real number, or a multiple of pi written `pi`, `pi/8`, `3*pi/16`, `-pi/4`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    if let Ok(x) = t.parse::<f64>() {
        return if x.is_finite() { Ok(x) } else { Err(format!("angle `{s}` is not finite")) };
    }
    let bad = || format!("cannot parse angle `{s}`");
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t.as_str()),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (body, 1.0),
    };
    let coeff = match num.split_once('*') {
        Some((c, "pi")) => c.parse::<f64>().map_err(|_| bad())?,
        None if num == "pi" => 1.0,
        _ => return Err(bad()),
    };
    let x = sign * coeff * std::f64::consts::PI / den;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad())
    }
}

/// What a finished invocation writes and returns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn failure(e: &CliError) -> Self {
        Self { stdout: String::new(), stderr: format!("error: {e}\n"), code: e.exit_code() }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdin: &mut dyn Read) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            };
        }
    };
    let result = match &cli.command {
        Command::Analyze(g) => commands::analyze(g, cli.rank_tol, stdin),
        Command::Convert(c) => commands::convert(c, cli.rank_tol, stdin),
        Command::ClassifyBatch { path } => commands::classify_batch(path, cli.rank_tol, stdin),
    };
    result.unwrap_or_else(|e| Outcome::failure(&e))
}
