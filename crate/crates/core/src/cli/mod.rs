//! The `propspan` command-line driver.
//!
//! Every subcommand writes its artifacts plus a `manifest.json` (config
//! hash, seed, input digests) into `--out`. Exit codes: 1 for usage and
//! configuration errors, 2 for data errors, 3 for model errors.

mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::features::FeatureSet;
use crate::Error;

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "propspan",
    version,
    about = "Propaganda span identification and technique classification"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every model and the augmenter.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Decoding threshold for span identification.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Feature groups, e.g. `pos,ner,kw` or `none`.
    #[arg(long, global = true, value_parser = FeatureSet::parse)]
    pub features: Option<FeatureSet>,
    /// Token embedding table (PEMB or PEMBTXT).
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Per-token upstream probabilities for the composed model.
    #[arg(long = "upstream-probs", global = true)]
    pub upstream_probs: Option<PathBuf>,
    /// POS/NER sidecar replacing the rule taggers.
    #[arg(long, global = true)]
    pub sidecar: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Skip malformed label rows instead of failing.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Label offsets count UTF-16 code units.
    #[arg(long, global = true)]
    pub utf16: bool,
}

/// Training overrides shared by the model commands.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize articles, export the token stream and projected labels.
    Preprocess {
        #[arg(long)]
        articles: PathBuf,
        /// Span identification (3-column) or, with --tc, technique (4-column) labels.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        tc: bool,
    },
    /// Train the span identification tagger.
    TrainSi {
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Predict spans with a trained tagger.
    PredictSi {
        #[arg(long)]
        articles: PathBuf,
        /// Directory written by train-si.
        #[arg(long)]
        model: PathBuf,
    },
    /// Train the technique classifier, optionally with silver samples.
    TrainTc {
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        silver: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Assign a technique to each given span.
    PredictTc {
        #[arg(long)]
        articles: PathBuf,
        /// Spans to label (3 or 4 columns).
        #[arg(long)]
        spans: PathBuf,
        /// Directory written by train-tc.
        #[arg(long)]
        model: PathBuf,
    },
    /// Plan and generate silver samples for minority techniques.
    Augment {
        #[arg(long, requires = "labels")]
        articles: Option<PathBuf>,
        /// Technique labels; without them only the plan is computed, from
        /// reference counts.
        #[arg(long, requires = "articles")]
        labels: Option<PathBuf>,
        #[arg(long)]
        total_new: Option<i64>,
        #[arg(long)]
        synonyms: Option<PathBuf>,
        #[arg(long)]
        names_dir: Option<PathBuf>,
    },
    /// Score span predictions.
    ScoreSi {
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Exact-offset matching instead of proportional overlap.
        #[arg(long)]
        exact: bool,
        /// Average per article instead of over all spans.
        #[arg(long)]
        per_article: bool,
    },
    /// Score technique predictions.
    ScoreTc {
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Train and score the feature ablation grid.
    Ablate {
        #[arg(long, required_unless_present = "synthetic")]
        train_articles: Option<PathBuf>,
        #[arg(long, required_unless_present = "synthetic")]
        train_labels: Option<PathBuf>,
        #[arg(long, required_unless_present = "synthetic")]
        dev_articles: Option<PathBuf>,
        #[arg(long, required_unless_present = "synthetic")]
        dev_labels: Option<PathBuf>,
        /// Run on the generated separable corpus.
        #[arg(long, conflicts_with_all = ["train_articles", "dev_articles"])]
        synthetic: bool,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Score a trained tagger across decoding thresholds.
    SweepThreshold {
        #[arg(long)]
        articles: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        from: f64,
        #[arg(long, default_value_t = 0.7)]
        to: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
    },
}

/// Exit code for an error.
pub fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) => 1,
        Error::Model(_) => 3,
        _ => 2,
    }
}

/// Parse `args` and run. Returns the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
