//! `fdsim`: link-level cancellation sweeps, system-level throughput and PA
//! model fitting from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdsim::link_eval::Profile;
use fdsim::FdError;

#[derive(Debug, Parser)]
#[command(name = "fdsim", version, about = "Full-duplex self-interference cancellation simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run a link-level cancellation sweep.
    Link(LinkArgs),
    /// Half-duplex vs full-duplex throughput over a topology.
    System(SystemArgs),
    /// Fit a Hammerstein PA model to a pair of waveform captures.
    PaFit(PaFitArgs),
    /// Write synthetic PA input/output captures from a PA model.
    PaCapture(PaCaptureArgs),
    /// Draw a topology from a log-distance indoor layout.
    Topology(TopologyArgs),
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<Profile>,
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Topology file; required unless the config has a `[layout]` section.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for generated drops.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<Profile>,
    /// Take each FD point's total cancellation from a `link` summary.csv
    /// (analog plus mean digital) instead of the config.
    #[arg(long)]
    pub from_link_sim: Option<PathBuf>,
    /// Coherence time of the summary rows used by `--from-link-sim`.
    #[arg(long, default_value_t = 142.86)]
    pub link_coherence_ms: f64,
}

#[derive(Debug, Args)]
pub struct PaFitArgs {
    /// PA input capture.
    #[arg(long)]
    pub input: PathBuf,
    /// PA output capture.
    #[arg(long)]
    pub output: PathBuf,
    /// Number of odd-order branches.
    #[arg(short = 'k', long)]
    pub k_terms: usize,
    /// Memory taps per branch.
    #[arg(short = 'l', long)]
    pub l_taps: usize,
    /// PA coefficient file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PaCaptureArgs {
    /// PA coefficient file.
    #[arg(long)]
    pub pa: PathBuf,
    /// Directory for `pa_in.fdwf` and `pa_out.fdwf`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_profile, default_value = "reduced")]
    pub profile: Profile,
}

#[derive(Debug, Args)]
pub struct TopologyArgs {
    /// Layout parameters (TOML); built-in defaults otherwise.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Topology file to write.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_profile(s: &str) -> Result<Profile, FdError> {
    s.parse()
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<FdError> for Failure {
    fn from(e: FdError) -> Self {
        // unreadable or missing inputs count as configuration errors
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Link(a) => commands::link(&a),
        Cmd::System(a) => commands::system(&a),
        Cmd::PaFit(a) => commands::pa_fit(&a),
        Cmd::PaCapture(a) => commands::pa_capture(&a),
        Cmd::Topology(a) => commands::topology(&a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) | Failure::Runtime(m) => eprintln!("fdsim: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
