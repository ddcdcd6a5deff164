use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

mod commands;

/// Build corpora, generate benchmark items, run models on them, score the
/// responses and report aggregate metrics.
#[derive(Debug, Parser)]
#[command(name = "longif", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// TOML configuration file. Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output location: a directory for build-corpus, generate and report,
    /// a file for run, score and expand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More log output on stderr; repeat for debug level.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the list, document and essay pools.
    BuildCorpus,
    /// Generate the benchmark dataset and its manifest.
    Generate {
        /// TOML plan (tasks, intervals, expressions, variables).
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Pools from build-corpus; built in memory when omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Send every item to a model and record the responses.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        /// A configured model name, a model TOML file, or `mock:<kind>`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        parallel: Option<usize>,
        /// Keep finished responses in the output and only run the rest.
        #[arg(long)]
        resume: bool,
    },
    /// Score responses against the rubric.
    Score {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        responses: Vec<PathBuf>,
        #[arg(long)]
        rubric: Option<PathBuf>,
    },
    /// Aggregate scores into metric tables.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        scores: Vec<PathBuf>,
        /// Combine scores computed against different datasets.
        #[arg(long)]
        force: bool,
    },
    /// Diversify instruction templates by rewriting, embedding and clustering.
    Expand {
        #[arg(long)]
        plan: Option<PathBuf>,
    },
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.global.verbose);
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
