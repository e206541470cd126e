mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use topiclens::topics::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "topiclens", version, about = "Topic modeling and explanations for short texts")]
struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean, tokenize and build the dictionary for a JSONL corpus.
    Prepare(PrepareArgs),
    /// Score candidate topic counts by coherence.
    Sweep(SweepArgs),
    /// Train one topic model.
    Train(TrainArgs),
    /// Print the top keywords of every topic.
    Topics(TopicsArgs),
    /// Predict the topic of each input line.
    Predict(PredictArgs),
    /// Explain one prediction with a local surrogate.
    Explain(ExplainArgs),
    /// Export the topic visualization payload.
    Ldavis(LdavisArgs),
    /// Measure accuracy against labeled records.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One stopword per line; defaults to the bundled English list.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Keep only records containing one of these (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub keywords: Option<Vec<String>>,
    /// Keep the first N records after filtering.
    #[arg(long)]
    pub head: Option<usize>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub no_stem: bool,
    #[arg(long)]
    pub no_below: Option<usize>,
    #[arg(long)]
    pub no_above: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory written by `prepare`.
    #[arg(long)]
    pub prepared: Option<PathBuf>,
    #[arg(long = "type")]
    pub kind: Option<ModelKind>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Report path (JSON); a CSV with the same stem is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub prepared: Option<PathBuf>,
    #[arg(long = "type")]
    pub kind: Option<ModelKind>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TopicsArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub prepared: Option<PathBuf>,
    /// One text per line; stdin when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub prepared: Option<PathBuf>,
    /// Raw text to explain.
    #[arg(long, conflicts_with = "doc_id")]
    pub text: Option<String>,
    /// Id of a prepared document to explain.
    #[arg(long)]
    pub doc_id: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Kernel width on cosine distance.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Write the explanation JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print JSON instead of the text report.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct LdavisArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub prepared: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a static HTML page.
    #[arg(long)]
    pub html: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub terms: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub prepared: Option<PathBuf>,
    /// Labeled JSONL records.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Tab-separated `id<TAB>label` file merged into the records.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config::FileConfig::load(cli.config.as_deref()).and_then(|file| {
        let ctx = commands::Context {
            seed: config::pick(cli.seed, file.seed, 0),
            file,
        };
        match cli.command {
            Command::Prepare(a) => commands::prepare(&ctx, a),
            Command::Sweep(a) => commands::sweep(&ctx, a),
            Command::Train(a) => commands::train(&ctx, a),
            Command::Topics(a) => commands::topics(&ctx, a),
            Command::Predict(a) => commands::predict(&ctx, a),
            Command::Explain(a) => commands::explain(&ctx, a),
            Command::Ldavis(a) => commands::ldavis(&ctx, a),
            Command::Evaluate(a) => commands::evaluate(&ctx, a),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
