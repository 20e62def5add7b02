use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "seqveritas", version, about = "Train and run LSTM fake-news classifiers")]
pub struct Cli {
    /// JSON file with default settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Force the single-threaded code path.
    #[arg(long, global = true)]
    pub reference_mode: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, split and encode the two CSV files into a data directory.
    Prepare(PrepareArgs),
    /// Train a preset on a prepared data directory.
    Train(TrainArgs),
    /// Score a checkpoint on an encoded dataset.
    Eval(EvalArgs),
    /// Classify raw text.
    Predict(PredictArgs),
    /// Compare analytic and numeric gradients on miniature models.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// CSV of fake articles.
    #[arg(long, value_name = "CSV")]
    pub fake: PathBuf,
    /// CSV of genuine articles.
    #[arg(long = "true", value_name = "CSV")]
    pub true_: PathBuf,
    /// Output directory for train.svec, val.svec and vocab.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub maxlen: Option<usize>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub min_freq: Option<usize>,
    /// Fraction of records used for training.
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `prepare`.
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,
    /// baseline, regularized or optimized.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "batch")]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub min_delta: Option<f64>,
    #[arg(long, value_name = "FILE")]
    pub out_checkpoint: Option<PathBuf>,
    /// JSON-lines training history; defaults next to the checkpoint.
    #[arg(long, value_name = "FILE")]
    pub history: Option<PathBuf>,
    /// Score the training split after every epoch.
    #[arg(long)]
    pub track_train_accuracy: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// An .svec file, or a prepared directory (its val.svec is used).
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
    #[arg(long = "batch")]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["text", "stdin"])))]
pub struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub text: Option<String>,
    /// Read one article per line from standard input.
    #[arg(long)]
    pub stdin: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Check a single preset end to end; all presets when omitted.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}
