use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sinefactor::Error;

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "sinefactor",
    version,
    about = "Sine-product structure of real-rooted exponential sums"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse an expression and print its exponential sum.
    Parse(Common),
    /// Coefficients of Q'/Q in both half-planes.
    Hcoeffs(Common),
    /// Growth profile R(r) and the linear/superlinear verdict.
    Meyer(MeyerArgs),
    /// Real zeros on the window.
    Roots(Common),
    /// Fourier atoms of the zero measure against empirical estimates.
    Fourier(FourierArgs),
    /// Recover C·e^{iaz}·∏ sin^k(αz+β).
    Factor(Common),
    /// Write a secular test example.
    Generate(GenerateArgs),
    /// Run the whole chain and emit one document.
    Report(FourierArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Expression, e.g. "sin(pi*z)*sin(sqrt2*pi*z + 0.5)".
    #[arg(allow_hyphen_values = true)]
    pub expression: Option<String>,
    /// Basis declaration `name=decimal`; repeatable.
    #[arg(long = "basis", value_name = "NAME=DECIMAL")]
    pub basis: Vec<String>,
    /// Read the exponential sum from a JSON file instead.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["expression", "secular"])]
    pub expsum: Option<PathBuf>,
    /// Read a secular matrix description from a JSON file instead.
    #[arg(long, value_name = "PATH", conflicts_with = "expression")]
    pub secular: Option<PathBuf>,
    #[arg(long, default_value_t = 50.0)]
    pub cutoff: f64,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, default_values_t = [-100.0, 100.0])]
    pub window: Vec<f64>,
    /// Half-height of the root-finding strip.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Fixed-point bits for the coefficient recursion; double precision when absent.
    #[arg(long, value_name = "BITS")]
    pub precision: Option<u32>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MeyerArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of log-spaced radii up to the cutoff.
    #[arg(long, default_value_t = 25)]
    pub radii: usize,
    #[arg(long, default_value_t = sinefactor::logderiv::DEFAULT_SLOPE_TOLERANCE)]
    pub slope_tol: f64,
    #[arg(long, default_value_t = sinefactor::logderiv::DEFAULT_SPAN_FACTOR)]
    pub span_factor: f64,
}

#[derive(Args, Debug, Clone)]
pub struct FourierArgs {
    #[command(flatten)]
    pub meyer: MeyerArgs,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, default_value = "fejer")]
    pub weight: String,
    /// Also write (γ, |mass|) rows here.
    #[arg(long, value_name = "PATH")]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GenerateArgs {
    /// Matrix dimension.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Comma-separated lengths; defaults to 2π·√p for the first n of 1, 2, 3, 5, 7, 11.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<String>,
    /// Multiply the matrix by this factor (1 keeps it unitary).
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Emit the certified exponential sum instead of the matrix description.
    #[arg(long)]
    pub expand: bool,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Parse(c) => commands::parse(c),
        Command::Hcoeffs(c) => commands::hcoeffs(c),
        Command::Meyer(m) => commands::meyer(m),
        Command::Roots(c) => commands::roots(c),
        Command::Fourier(f) => commands::fourier(f),
        Command::Factor(c) => commands::factor(c),
        Command::Generate(g) => commands::generate(g),
        Command::Report(f) => commands::report(f),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let doc = json!({
                "schema": sinefactor::SCHEMA,
                "error": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{doc}");
            ExitCode::from(2)
        }
    }
}

pub type CmdResult = Result<u8, Error>;
