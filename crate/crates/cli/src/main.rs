mod commands;
mod config;
mod error;
mod represent;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ClassifierKind, PipelineConfig, Representation};
use error::{CliError, CliResult};

/// Staged news-classification pipeline. Every stage reads and writes the
/// configured output directory.
#[derive(Debug, Parser)]
#[command(name = "newsclass", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Runs every parallel section on a single worker.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Auto-label threshold; for `multilabel` the binarization threshold.
    #[arg(long, global = true)]
    threshold: Option<f64>,

    #[arg(long, global = true, value_enum)]
    representation: Option<Representation>,

    #[arg(long, global = true, value_enum)]
    classifier: Option<ClassifierKind>,

    /// Any config key, e.g. `--set lda.k=8` or `--set autolabel.thresholds=[0.6,0.7]`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Clean and tokenize the corpus, write the train/test split.
    Preprocess,
    /// Train the configured word and document embeddings.
    TrainEmbeddings,
    /// Run the LDA grid and keep the lowest-perplexity model.
    TrainLda,
    /// Label documents with topic-derived classes.
    Autolabel,
    /// Fit and evaluate a single-label classifier.
    TrainClassifier,
    /// Fit and evaluate a multi-label classifier on auto-labelled data.
    Multilabel,
    /// Aggregate every report into one summary table.
    Report,
}

fn overrides(cli: &Cli) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for s in &cli.set {
        let (k, v) = s.split_once('=').ok_or_else(|| CliError::config(format!("--set expects KEY=VALUE, got {s:?}")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(seed) = cli.seed {
        out.push(("seed".into(), seed.to_string()));
    }
    if let Some(th) = cli.threshold {
        match cli.command {
            Command::Multilabel => out.push(("multilabel.threshold".into(), format!("{th:?}"))),
            _ => out.push(("autolabel.thresholds".into(), format!("[{th:?}]"))),
        }
    }
    if let Some(r) = cli.representation {
        out.push(("features.representation".into(), format!("{:?}", r.as_str())));
    }
    if let Some(c) = cli.classifier {
        let key = if cli.command == Command::Multilabel { "multilabel.kind" } else { "classifier.kind" };
        out.push((key.into(), format!("{:?}", c.as_str())));
    }
    Ok(out)
}

fn run(cli: &Cli) -> CliResult<()> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::config("--config is required"))?;
    let cfg = PipelineConfig::load(path, &overrides(cli)?)?;
    if cli.deterministic {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot configure worker pool: {e}")))?;
    }
    match cli.command {
        Command::Preprocess => commands::preprocess(&cfg),
        Command::TrainEmbeddings => commands::train_embeddings(&cfg),
        Command::TrainLda => commands::train_lda(&cfg),
        Command::Autolabel => commands::autolabel(&cfg),
        Command::TrainClassifier => commands::train_classifier(&cfg),
        Command::Multilabel => commands::multilabel(&cfg),
        Command::Report => commands::report(&cfg).map(|table| print!("{table}")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
