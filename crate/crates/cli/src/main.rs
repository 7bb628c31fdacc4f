//! `condense`: batch front end for diffusion condensation.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure at run time, 3 the clustering equivalence check failed.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NUMERIC: u8 = 2;
pub const EXIT_NOT_EQUIVALENT: u8 = 3;

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_CONFIG,
            error: error.into(),
        }
    }
}

impl From<condensation::Error> for Failure {
    fn from(e: condensation::Error) -> Self {
        use condensation::Error as E;
        let code = match e.root() {
            E::InvalidCloud(_)
            | E::NonPositiveBandwidth(_)
            | E::InvalidKernel(_)
            | E::DeltaTooLarge(_)
            | E::ZetaNotBelowDiameter { .. }
            | E::InvalidSchedule(_)
            | E::InvalidConfig(_)
            | E::BadParams(_)
            | E::Parse(_)
            | E::Io(_)
            | E::DimensionMismatch { .. }
            | E::DimensionUnsupported(_)
            | E::LeafMismatch { .. } => EXIT_CONFIG,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_CONFIG,
            error,
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

#[derive(Debug, Parser)]
#[command(
    name = "condense",
    version,
    about = "Diffusion condensation runs, audits and clustering comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Write a synthetic point cloud as CSV.
    Generate(GenerateArgs),
    /// Run condensation and write a trace directory.
    Condense(CondenseArgs),
    /// Persistence diagrams, barcodes, dendrogram and activity curve of a trace.
    Homology(HomologyArgs),
    /// Spectral audit of a trace.
    Spectra(SpectraArgs),
    /// Compare a condensation merge tree with centroid or median linkage.
    CompareClustering(CompareArgs),
    /// Print the manifests of one or more trace directories.
    Report(ReportArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct DatasetArgs {
    /// Number of points (dimension for simplex corners).
    #[arg(long)]
    pub n: Option<usize>,
    /// Alias of --n for simplex corners.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Shape parameter, `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Dataset name: petals, hyperuniform-circle, double-annulus, barbell,
    /// two-moons, simplex-corners (or simplex), gaussian-blob, uniform.
    #[arg(long)]
    pub name: String,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Output file; defaults to `<name>_n<n>_s<seed>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ConfigArgs {
    /// TOML file with a full configuration; the flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// box, gaussian, laplace, alpha-decay or density-normalized.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Base family of a density-normalized kernel.
    #[arg(long)]
    pub base: Option<String>,
    /// fixed, doubling, min-distance, geometric-guarantee or spectral-guarantee.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub stall_threshold: Option<f64>,
    #[arg(long)]
    pub coincidence_tol: Option<f64>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Merge radius as a fraction of each step's bandwidth.
    #[arg(long)]
    pub zeta_fraction: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub convergence_tol: Option<f64>,
    #[arg(long)]
    pub fixed_point_tol: Option<f64>,
    #[arg(long)]
    pub weight_by_multiplicity: bool,
}

#[derive(Debug, Args)]
pub struct CondenseArgs {
    /// Input cloud (CSV or whitespace separated).
    #[arg(long, conflicts_with_all = ["dataset", "manifest"])]
    pub input: Option<PathBuf>,
    /// Generate the input instead of reading it.
    #[arg(long, conflicts_with = "manifest")]
    pub dataset: Option<String>,
    #[command(flatten)]
    pub dataset_args: DatasetArgs,
    /// Rerun exactly what an earlier manifest describes.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Skip the second eigenvalue column of the diagnostics.
    #[arg(long)]
    pub no_spectrum: bool,
    /// Trace directory to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HomologyArgs {
    /// Trace directory written by `condense`.
    #[arg(long)]
    pub trace: PathBuf,
    /// `condensation` (filtration over steps) or `rips` (per-step Vietoris-Rips).
    #[arg(long, default_value = "condensation")]
    pub mode: String,
    /// Rips dimensions, comma separated.
    #[arg(long, default_value = "0,1", value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Merge radius of the condensation filtration; defaults to the larger of
    /// the run's merge radius and its convergence tolerance.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Largest Rips scale.
    #[arg(long)]
    pub max_scale: Option<f64>,
    /// Output directory; defaults to the trace directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectraArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Output file; defaults to `spectral.csv` in the trace directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// upgmc or wpgmc.
    #[arg(long, default_value = "upgmc")]
    pub mode: String,
    /// Directory for both linkage tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trace directories or manifest files.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Condense(a) => commands::condense(&a),
        Command::Homology(a) => commands::homology(&a),
        Command::Spectra(a) => commands::spectra(&a),
        Command::CompareClustering(a) => commands::compare_clustering(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
