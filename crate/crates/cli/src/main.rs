//! `relmat`: build entity-relation matrices, train embeddings, evaluate and export.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<relmat::Error> for CliError {
    fn from(e: relmat::Error) -> Self {
        use relmat::Error::*;
        match e {
            NonFinite { .. } => CliError::Numeric(e.to_string()),
            Config(_) | InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "relmat", version, about = "Entity embeddings from entity-relation matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a matrix file from a table, a text corpus or another matrix.
    Build(BuildArgs),
    /// Train embeddings from a `key = value` run configuration.
    Train(TrainArgs),
    /// Cluster labeled embeddings with k-means and report NMI, ARI and ACC.
    Eval(EvalArgs),
    /// Write centered embeddings, a distance matrix or nearest-neighbor lists.
    Export(ExportArgs),
    /// Write the synthetic block matrices, labels and a run configuration.
    Synth(SynthArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recipe {
    Cooccur,
    Tfidf,
    Coattend,
    Similarity,
    Wordcontext,
    Bow,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    pub recipe: Recipe,
    /// Table (tsv/csv), text file (one document per line), directory of
    /// `<label>/<document>` files, or a matrix file for `tfidf`.
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Row attribute (cooccur, coattend).
    #[arg(long)]
    pub row: Option<String>,
    /// Column attribute (cooccur).
    #[arg(long)]
    pub col: Option<String>,
    /// Attribute whose shared values link two rows (coattend).
    #[arg(long)]
    pub via: Option<String>,
    /// Entity attribute (similarity).
    #[arg(long)]
    pub key: Option<String>,
    /// Comma-separated numeric feature attributes (similarity).
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 20_000)]
    pub vocab: usize,
    /// Field delimiter; defaults to `,` for .csv files and tab otherwise.
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Alpha written into the matrix header.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// For a labeled corpus directory, also write `doc:<name><TAB><label>` lines.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    pub config: PathBuf,
    #[arg(long)]
    pub sampling: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub n_iter: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub embeddings: PathBuf,
    /// `type:name<TAB>label` per line.
    pub labels: PathBuf,
    /// Number of clusters; defaults to the number of distinct labels.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub n_init: usize,
    /// Center each type before clustering.
    #[arg(long)]
    pub center: bool,
    /// Write `type:name<TAB>cluster` for every labeled entity.
    #[arg(long)]
    pub assignments: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    pub embeddings: PathBuf,
    #[arg(long)]
    pub center: bool,
    /// Comma-separated types for a block-ordered distance matrix.
    #[arg(long, value_delimiter = ',', conflicts_with = "neighbors")]
    pub dist: Vec<String>,
    /// Target type for nearest-neighbor lists.
    #[arg(long)]
    pub neighbors: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Query entities as `type:name`; repeatable.
    #[arg(long)]
    pub query: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthTask {
    /// A x B two-block matrix and A x C center/corner matrix.
    TwoMatrix,
    /// A x B matrix of four diagonal blocks.
    FourBlock,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    pub task: SynthTask,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Build(a) => commands::build(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Export(a) => commands::export(&a),
        Command::Synth(a) => commands::synth(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("relmat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
