//! File formats, dataset manifests, synthetic data and the `keyshot`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod synth;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use keyshot_core::Representativeness;

use crate::commands::{EvaluateArgs, Metric, SelectArgs};
use crate::config::BudgetChoice;
use crate::error::CliResult;
use crate::manifest::Split;

#[derive(Debug, Parser)]
#[command(name = "keyshot", version, about = "Budgeted key-shot video summarization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ManifestArg {
    /// Dataset manifest (JSON)
    #[arg(long, env = "KEYSHOT_MANIFEST")]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct BudgetArgs {
    /// Select exactly this many shots
    #[arg(long)]
    pub budget_count: Option<usize>,
    /// Select shots up to this share of the video duration
    #[arg(long)]
    pub budget_ratio: Option<f64>,
}

impl BudgetArgs {
    fn choice(&self) -> Option<BudgetChoice> {
        self.budget_count
            .map(BudgetChoice::Count)
            .or(self.budget_ratio.map(BudgetChoice::Ratio))
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum RepArg {
    Adjacent,
    Nearest,
}

impl From<RepArg> for Representativeness {
    fn from(r: RepArg) -> Self {
        match r {
            RepArg::Adjacent => Representativeness::Adjacent,
            RepArg::Nearest => Representativeness::Nearest,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greedy summary of one video
    Summarize {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        video: String,
        /// Train report, `{"w": [..], "class": ..}` object or bare 4-array
        #[arg(long)]
        weights: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Run config whose `[budget]` applies when no budget flag is given
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        representativeness: Option<RepArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn edited and raw property weights
    Train {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarization patterns and mixing coefficients of the training videos
    Mixcoef {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score summaries against the manifest's annotations
    Evaluate {
        #[command(flatten)]
        manifest: ManifestArg,
        /// Directory of `<video id>.json` summary reports
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        #[arg(long, default_value_t = 1)]
        min_overlap_frames: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive optimum for a small video
    Oracle {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        video: String,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        budget_count: usize,
        #[arg(long, value_enum)]
        representativeness: Option<RepArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a planted synthetic dataset
    Synth {
        #[arg(long)]
        seed: u64,
        /// Generator settings (TOML); defaults when omitted
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Summarize { manifest, video, weights, budget, config, representativeness, out } => {
            commands::summarize(&SelectArgs {
                manifest: &manifest.manifest,
                video: &video,
                weights: &weights,
                budget: budget.choice(),
                config: config.as_deref(),
                representativeness: representativeness.map(Into::into),
                out: out.as_deref(),
            })
        }
        Command::Train { manifest, config, out } => {
            commands::train_cmd(&manifest.manifest, config.as_deref(), out.as_deref())
        }
        Command::Mixcoef { manifest, config, out } => {
            commands::mixcoef(&manifest.manifest, config.as_deref(), out.as_deref())
        }
        Command::Evaluate { manifest, summaries, metric, split, min_overlap_frames, out } => {
            commands::evaluate(&EvaluateArgs {
                manifest: &manifest.manifest,
                summaries: &summaries,
                metric,
                split: split.map(|s| match s {
                    SplitArg::Train => Split::Train,
                    SplitArg::Test => Split::Test,
                }),
                min_overlap_frames,
                out: out.as_deref(),
            })
        }
        Command::Oracle { manifest, video, weights, budget_count, representativeness, out } => {
            commands::oracle(&SelectArgs {
                manifest: &manifest.manifest,
                video: &video,
                weights: &weights,
                budget: Some(BudgetChoice::Count(budget_count)),
                config: None,
                representativeness: representativeness.map(Into::into),
                out: out.as_deref(),
            })
        }
        Command::Synth { seed, spec, out } => commands::synth_cmd(seed, spec.as_deref(), &out),
    }
}
