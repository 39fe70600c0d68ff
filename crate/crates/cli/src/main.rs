//! `augmix`: adaptive runs, table reproduction, checkerboard parameters and
//! mesh export.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config keys or flag combinations.
    Usage(String),
    /// Solver, estimator or parameter failure.
    Numerical(augmix_core::Error),
    /// `table` could not find the runs it needs.
    MissingRuns(Vec<String>),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::MissingRuns(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::MissingRuns(list) => write!(f, "missing runs: {}", list.join(", ")),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<augmix_core::Error> for CliError {
    fn from(e: augmix_core::Error) -> Self {
        use augmix_core::Error as E;
        match e {
            E::Config(m) => CliError::Usage(m),
            E::Io(e) => CliError::Io(e.to_string()),
            E::Csv(e) => CliError::Io(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "augmix", version, about = "Adaptive augmented mixed and least-squares FEM for the generalized Darcy problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive run writing history.csv, summary.json and final_mesh.vtk.
    Run(RunArgs),
    /// Reproduces one reference table from runs on data sets 1 to 4.
    Table(TableArgs),
    /// Solves the checkerboard parameter system and prints JSON.
    KelloggParams(KelloggArgs),
    /// Writes the initial mesh, optionally refined, as legacy VTK.
    MeshDump(MeshArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// aug1, aug2, ls or hls [default: aug1]
    #[arg(long)]
    pub method: Option<String>,
    /// rt0-p1 or bdm1-p2 [default: rt0-p1]
    #[arg(long)]
    pub space: Option<String>,
    /// Checkerboard data set 1..4, `linear` or `sine` [default: 1]
    #[arg(long)]
    pub data: Option<String>,
    /// dirichlet or mixed [default: dirichlet]
    #[arg(long)]
    pub bc: Option<String>,
    /// Use the symmetric form of an augmented method.
    #[arg(long)]
    pub symmetric: bool,
    /// Dörfler bulk parameter [default: 0.3]
    #[arg(long)]
    pub theta_mark: Option<f64>,
    /// Stop once the relative error reaches this [default: 0.010]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Refinement budget [default: 400]
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Stop instead of refining past this many elements [default: 100000]
    #[arg(long)]
    pub max_elements: Option<usize>,
    /// Initial mesh of (2n)² squares [default: 4]
    #[arg(long)]
    pub initial_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress per-iteration progress on stderr.
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Args)]
pub struct TableArgs {
    /// Table id (2 to 9).
    pub which: usize,
    /// Directory holding one subdirectory per run, as written by `run`.
    #[arg(long, default_value = "runs")]
    pub runs: PathBuf,
    /// Run absent configurations instead of failing.
    #[arg(long)]
    pub run_missing: bool,
    /// CSV destination [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, short)]
    pub quiet: bool,
}

#[derive(Args)]
pub struct KelloggArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub rho: f64,
}

#[derive(Args)]
pub struct MeshArgs {
    /// Initial mesh of (2n)² squares.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Uniform bisection rounds.
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
    /// dirichlet or mixed
    #[arg(long, default_value = "dirichlet")]
    pub bc: String,
    /// VTK destination [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Table(a) => commands::table(&a),
        Command::KelloggParams(a) => commands::kellogg_params(&a),
        Command::MeshDump(a) => commands::mesh_dump(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("augmix: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
