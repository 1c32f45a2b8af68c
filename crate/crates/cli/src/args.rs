use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crosswalk_core::pedestrian::PedestrianSource;

/// Intention-aware vehicle decision-making at an unsignalized crossing.
///
/// Exit codes: 0 success, 1 usage or configuration error, 2 the run timed
/// out (potential deadlock).
#[derive(Debug, Parser)]
#[command(name = "crosswalk", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input file for the subcommand (scenario, tuning or dataset file).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dotted-key override applied to the configuration, e.g. decision.k_disc=0.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Sfm,
    Mdp,
    Scripted,
}

impl From<Model> for PedestrianSource {
    fn from(m: Model) -> Self {
        match m {
            Model::Sfm => Self::Sfm,
            Model::Mdp => Self::Mdp,
            Model::Scripted => Self::Scripted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReplayFormat {
    /// One JSON state message per tick.
    Jsonl,
    /// One CSV row per tick, without a header.
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write trace.csv and summary.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Built-in scenario name, used when --config is not given.
        #[arg(long, conflicts_with = "config")]
        scenario: Option<String>,
        #[arg(long)]
        model: Option<Model>,
        /// Decision-parameter file, e.g. one written by `tune`.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Design decision parameters for the SFM and MDP pedestrians with PSO.
    Tune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        swarm: Option<usize>,
        /// Hand-set baseline parameters the design starts from.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Fit pedestrian model parameters to a trajectory CSV (--config).
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Model to fit; both SFM and MDP when omitted.
        #[arg(long)]
        model: Option<Model>,
        /// Calibration settings file (rollout contexts, search, bounds).
        #[arg(long)]
        settings: Option<PathBuf>,
    },
    /// Run the real-time session server.
    Serve {
        /// Extra scenario files offered alongside the built-in ones.
        #[arg(long)]
        config: Vec<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Seconds a running session continues without clients before pausing.
        #[arg(long, default_value_t = 30.0)]
        grace: f64,
    },
    /// Re-emit a stored trace tick by tick on stdout.
    Replay {
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = ReplayFormat::Jsonl)]
        format: ReplayFormat,
    },
}
