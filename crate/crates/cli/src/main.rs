//! `wbp`: train the persuasiveness model, compose storylines and run the
//! verification oracles from the command line.
//!
//! Exit status: 0 on success, 1 when a verification fails (or training
//! diverges), 2 on bad input or usage.

mod commands;
mod config;
mod ratings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::FileConfig;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Verify(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

impl From<wbp_core::Error> for Failure {
    fn from(e: wbp_core::Error) -> Self {
        use wbp_core::Error::*;
        match e {
            Diverged { .. } | Numeric { .. } => Failure::Verify(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Verify(m) => f.write_str(m),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wbp", version, about = "Persuasiveness-driven storyline composition for promotional videos")]
pub struct Cli {
    /// TOML run configuration; command-line flags override its values
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed; clustering, synthesis and baselines derive named sub-seeds [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it [default: available parallelism]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log progress to stderr (repeat for more detail)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to rated sequences; writes an `lwc-v1` model file
    Train(TrainArgs),
    /// Compose a storyline from a manifest; writes a `wbp-storyline-v1` document
    Storyline(StorylineArgs),
    /// Score one explicit ordering step by step
    Score(ScoreArgs),
    /// Compare analytic gradients with finite differences
    Gradcheck(GradcheckArgs),
    /// Compare the solver with brute force and the naive baselines
    Oracle(OracleArgs),
    /// Revenue-weighted relative improvement from a category table
    Uplift(UpliftArgs),
    /// Write a synthetic ratings file labelled by a known model
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Ratings file (`wbp-ratings-v1` JSON) [required]
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Manifest resolving `order` records in the ratings file [default: none]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Starting model file; replaces --init [default: none]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Starting preset: canonical or jittered [default: canonical]
    #[arg(long)]
    pub init: Option<String>,
    /// Learning rate [default: 0.01]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Full-batch epochs [default: 5000]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Gradient-norm clip [default: off]
    #[arg(long)]
    pub grad_clip: Option<f64>,
    /// Aesthetics bonus for video materials [default: manifest value, else 0.1]
    #[arg(long)]
    pub incentive: Option<f64>,
    /// Model output path [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch loss CSV (`epoch,loss`) [default: not written]
    #[arg(long)]
    pub loss_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Manifest file (`wbp-manifest-v1` JSON) [required]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Model file (`lwc-v1`) [required]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of clusters; wins over --category [default: 3, capped at the material count]
    #[arg(long)]
    pub k: Option<usize>,
    /// Product category looked up in the category table (clothes = 3) [default: none]
    #[arg(long)]
    pub category: Option<String>,
    /// Maximum materials in the storyline [default: 8]
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Largest cluster searched exhaustively [default: 8]
    #[arg(long)]
    pub exhaustive_threshold: Option<usize>,
    /// Largest arrangement count searched exhaustively [default: 1000000]
    #[arg(long)]
    pub enumeration_cap: Option<u64>,
    /// Beam width for clusters above the threshold [default: 50]
    #[arg(long)]
    pub beam_width: Option<usize>,
    /// Aesthetics bonus for video materials [default: manifest value, else 0.1]
    #[arg(long)]
    pub incentive: Option<f64>,
    /// Output path [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StorylineArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Manifest file [required]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Model file [required]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Comma-separated material ids in presentation order [required]
    #[arg(long, value_delimiter = ',')]
    pub order: Vec<String>,
    /// Aesthetics bonus for video materials [default: manifest value, else 0.1]
    #[arg(long)]
    pub incentive: Option<f64>,
    /// Report path [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Fixed model to check; random models per draw otherwise [default: none]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Random (model, example) draws [default: 200]
    #[arg(long)]
    pub draws: Option<usize>,
    /// Perturb one analytic component by name; negative control for the check
    #[arg(long, hide = true)]
    pub corrupt_param: Option<String>,
    /// Report path [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UpliftArgs {
    /// Category table with `name,weight,x,y` rows [required]
    #[arg(long)]
    pub revenue: PathBuf,
    /// Report path [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Ground-truth model file [default: the built-in reference bell]
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of examples [default: 40]
    #[arg(long)]
    pub n: Option<usize>,
    /// Gaussian label noise [default: 0.02]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Shortest sequence [default: 1]
    #[arg(long)]
    pub min_len: Option<usize>,
    /// Longest sequence [default: 8]
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Ratings output path [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let threads = config::pick(&cli.threads, &file.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    let seed = config::pick(&cli.seed, &file.seed).unwrap_or(0);
    pool.install(|| commands::dispatch(&cli.command, &file, seed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("wbp: {f}");
            ExitCode::from(f.code())
        }
    }
}
