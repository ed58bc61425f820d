//! Command-line front end.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical error, 4 I/O error.

mod commands;
pub mod files;
pub mod pool;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::error::MfmError;

pub use commands::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const DEFAULT_SHOTS: u64 = 8192;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Mfm { context: String, source: MfmError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn mfm(context: impl Into<String>, source: MfmError) -> Self {
        Self::Mfm { context: context.into(), source }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub(crate) fn in_file(self, path: &Path) -> Self {
        match self {
            Self::Mfm { context, source } => Self::Mfm { context: format!("{}: {context}", path.display()), source },
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Mfm { source, .. } if source.is_numerical() => EXIT_NUMERICAL,
            Self::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mfm", version, about = "Measurement fidelity matrices for qubit readout")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReconstructMode {
    Cumulant2,
    Cumulant3,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Full,
    PairsWithSpectators,
    Clusters,
    Singles,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a matrix from a counts file (direct or spectator runs).
    BuildFull {
        counts: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Metric report destination; printed to stdout otherwise.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Tensor product of per-qubit kernels from vendor calibration data.
    VendorKernel {
        calibration: PathBuf,
        /// Qubit order, e.g. "0,1,2"; defaults to file order.
        #[arg(long)]
        layout: Option<String>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Approximate a large matrix from subsystem data.
    Reconstruct {
        #[arg(long, value_enum)]
        mode: ReconstructMode,
        /// Counts or matrix files covering the needed subsystems.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        layout: String,
        /// Cluster mode: qubit groups, e.g. "0,1,2;3,4".
        #[arg(long)]
        clusters: Option<String>,
        #[arg(long)]
        bias_correct: bool,
        /// Clip and renormalize the reconstruction.
        #[arg(long)]
        project: bool,
        /// Matrix (or counts) file to compare against.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// CSV of (state, reference fidelity, reconstructed fidelity).
        #[arg(long)]
        emit_fidelities: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Scalar correlation factors, their uncertainties and a heatmap.
    Scf {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Qubit order for the heatmap; defaults to all input qubits.
        #[arg(long)]
        layout: Option<String>,
        /// Pairwise factors between qubits (default).
        #[arg(long, conflicts_with = "clusters")]
        pairs: bool,
        /// Factors between qubit groups, e.g. "0,1;2,3".
        #[arg(long)]
        clusters: Option<String>,
        /// Add one factor per prepared state.
        #[arg(long)]
        per_state: bool,
        /// Heatmap cells hold |Λ − σ| rather than max(Λ − σ, 0).
        #[arg(long)]
        absolute: bool,
        #[arg(long)]
        bias_correct: bool,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Correct an observed distribution with a kernel.
    Mitigate {
        distribution: PathBuf,
        matrix: PathBuf,
        #[arg(long, default_value = "solve")]
        method: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Generate counts files from a noise model.
    Simulate {
        model: PathBuf,
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long, default_value_t = DEFAULT_SHOTS)]
        shots: u64,
        #[arg(long, env = "MFM_SEED", default_value_t = 0)]
        seed: u64,
        /// Clusters experiment: qubit groups; defaults to the model's clusters.
        #[arg(long)]
        clusters: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Number of circuits needed by a construction strategy.
    Cost {
        n: Option<usize>,
        /// full, singles, pairs, triples or split:k
        strategy: Option<String>,
        /// Write a cost table for n = 1..20 as CSV.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

/// Runs a parsed command, writing human output to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::BuildFull { counts, out: dest, report } => cmd_build_full(&counts, &dest, report.as_deref(), out),
        Command::VendorKernel { calibration, layout, out: dest } => cmd_vendor_kernel(&calibration, layout.as_deref(), &dest),
        Command::Reconstruct { mode, inputs, layout, clusters, bias_correct, project, reference, emit_fidelities, out: dest, report } => {
            let opts = ReconstructOptions {
                mode,
                layout,
                clusters,
                bias_correct,
                project,
                reference,
                emit_fidelities,
                report,
            };
            cmd_reconstruct(&inputs, &opts, &dest, out)
        }
        Command::Scf { inputs, layout, pairs: _, clusters, per_state, absolute, bias_correct, out: dest, heatmap } => {
            let opts = ScfOptions { layout, clusters, per_state, absolute, bias_correct, heatmap };
            cmd_scf(&inputs, &opts, &dest)
        }
        Command::Mitigate { distribution, matrix, method, out: dest } => cmd_mitigate(&distribution, &matrix, &method, &dest),
        Command::Simulate { model, experiment, shots, seed, clusters, out_dir } => {
            cmd_simulate(&model, experiment, shots, seed, clusters.as_deref(), &out_dir, out)
        }
        Command::Cost { n, strategy, table } => cmd_cost(n, strategy.as_deref(), table.as_deref(), out),
    }
}

/// Parses arguments, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}
