//! Command-line pipeline: dataset generation, learning, abstraction,
//! synthesis, validation, and the noise-radius sweep. Every stage is a pure
//! file-in/file-out function, so stages can be cached and rerun; rerunning a
//! stage with unchanged inputs produces byte-identical outputs.

pub mod commands;
pub mod config;
pub mod scenario;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::CONFIG_HELP;

/// Exit codes: 0 ok, 2 configuration error, 3 numeric failure.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "swsynth",
    about = "Strategy synthesis for partially-known switched stochastic systems",
    after_help = CONFIG_HELP
)]
pub struct Cli {
    /// Worker threads for abstraction and value iteration (results are
    /// identical for any value).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a dataset from a built-in scenario's ground truth.
    #[command(name = "gen-data", after_help = CONFIG_HELP)]
    GenData {
        /// Built-in scenario: linear3 or nonlin4.
        #[arg(long)]
        scenario: String,
        /// Samples drawn per mode, uniformly over the domain.
        #[arg(long)]
        samples_per_mode: usize,
        /// RNG seed; the file is a pure function of it.
        #[arg(long)]
        seed: u64,
        /// Output CSV path (header u, x1..xn, xp1..xpn).
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit per-mode, per-dimension posteriors from a dataset.
    #[command(after_help = CONFIG_HELP)]
    Learn {
        #[arg(long)]
        config: PathBuf,
        /// Dataset CSV produced by gen-data (or the same layout);
        /// falls back to `[paths]` data.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output JSON with the fitted modes; falls back to `[paths]` learned.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the interval MDP abstraction from fitted modes.
    #[command(after_help = CONFIG_HELP)]
    Abstract {
        #[arg(long)]
        config: PathBuf,
        /// Fitted modes JSON from the learn stage; falls back to
        /// `[paths]` learned.
        #[arg(long)]
        learned: Option<PathBuf>,
        /// Output JSON with the abstraction; falls back to `[paths]` imdp.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the noise radii with this fraction of the support bound.
        #[arg(long)]
        eta_fraction: Option<f64>,
    },
    /// Compile the formula, build the product, and synthesize the strategy.
    #[command(after_help = CONFIG_HELP)]
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        /// Abstraction JSON from the abstract stage; falls back to
        /// `[paths]` imdp.
        #[arg(long)]
        imdp: Option<PathBuf>,
        /// Output JSON with values, classification, and the strategy;
        /// falls back to `[paths]` result.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional per-cell values CSV for plotting.
        #[arg(long)]
        heatmap: Option<PathBuf>,
        /// Optional automaton table export.
        #[arg(long)]
        dfa_table: Option<PathBuf>,
    },
    /// Monte Carlo validation of a synthesized strategy against ground truth.
    #[command(after_help = CONFIG_HELP)]
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Built-in scenario providing the true dynamics.
        #[arg(long)]
        scenario: String,
        /// Synthesis result JSON; falls back to `[paths]` result.
        #[arg(long)]
        result: Option<PathBuf>,
        /// Cells to validate: "yes:K", "maybe:K", "no:K" (K seeded random
        /// picks from that class) or a comma-separated index list.
        #[arg(long, default_value = "yes:10")]
        cells: String,
        /// Trials per cell; defaults to the config value.
        #[arg(long)]
        trials: Option<usize>,
        /// Batch seed; defaults to the config value.
        #[arg(long)]
        seed: Option<u64>,
        /// Output JSON report; falls back to `[paths]` report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for one sample trace CSV per validated cell.
        #[arg(long)]
        traces_dir: Option<PathBuf>,
    },
    /// Rebuild the abstraction and synthesize across noise-radius fractions.
    #[command(name = "sweep-eta", after_help = CONFIG_HELP)]
    SweepEta {
        #[arg(long)]
        config: PathBuf,
        /// Fitted modes JSON from the learn stage; falls back to
        /// `[paths]` learned.
        #[arg(long)]
        learned: Option<PathBuf>,
        /// Comma-separated fractions of the noise support bound.
        #[arg(long, default_value = "0.5,0.75,0.95,0.99")]
        fractions: String,
        /// Output directory (per-fraction results plus sweep.csv).
        #[arg(long)]
        out_dir: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads > 1 {
        // ignore the error if a pool already exists (repeated calls in-process)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    } else {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global();
    }
    match cli.command {
        Command::GenData {
            scenario,
            samples_per_mode,
            seed,
            out,
        } => commands::gen_data(&scenario, samples_per_mode, seed, &out),
        Command::Learn { config, data, out } => {
            commands::learn(&config, data.as_deref(), out.as_deref())
        }
        Command::Abstract {
            config,
            learned,
            out,
            eta_fraction,
        } => commands::abstract_system(&config, learned.as_deref(), out.as_deref(), eta_fraction),
        Command::Synthesize {
            config,
            imdp,
            out,
            heatmap,
            dfa_table,
        } => commands::synthesize(
            &config,
            imdp.as_deref(),
            out.as_deref(),
            heatmap.as_deref(),
            dfa_table.as_deref(),
        ),
        Command::Validate {
            config,
            scenario,
            result,
            cells,
            trials,
            seed,
            out,
            traces_dir,
        } => commands::validate(
            &config,
            &scenario,
            result.as_deref(),
            &cells,
            trials,
            seed,
            out.as_deref(),
            traces_dir.as_deref(),
        ),
        Command::SweepEta {
            config,
            learned,
            fractions,
            out_dir,
        } => commands::sweep_eta(&config, learned.as_deref(), &fractions, &out_dir),
    }
}
