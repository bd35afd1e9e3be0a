//! Command-line driver tying the toolkit into reproducible experiments.
//!
//! Every command validates its inputs through the library contracts, exits
//! non-zero with a one-line diagnostic on any format error, and writes
//! output files atomically (temp file plus rename) so failures never leave
//! truncated files behind. All randomness is governed by `--seed`.

#![forbid(unsafe_code)]

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::ConfigMap;

/// Discourse-aware retrieval re-ranking experiments.
#[derive(Debug, Parser)]
#[command(name = "rrank", version, about)]
pub struct Cli {
    /// Flat `key = value` config file; flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build collection statistics and write a snapshot.
    Index(IndexArgs),
    /// Tag a corpus with the heuristic cue rules and write annotations.
    Tag(TagArgs),
    /// Rank documents for each topic with the Dirichlet baseline.
    Retrieve(RetrieveArgs),
    /// Re-rank a baseline run with relation evidence.
    Rerank(RerankArgs),
    /// Score a run against judgments.
    Evaluate(EvaluateArgs),
    /// Tune mu and kappa by cross-validation.
    Tune(TuneArgs),
    /// Infer the optimal relation from pooled per-query scores.
    Select(SelectArgs),
    /// index -> retrieve -> rerank -> evaluate in one command.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
struct IndexArgs {
    /// Corpus: directory of files or `<docid><TAB><text>` lines.
    #[arg(long)]
    docs: Option<PathBuf>,
    /// Snapshot file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TagArgs {
    #[arg(long)]
    docs: Option<PathBuf>,
    /// Cue rule file; the built-in rules are used when absent.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Annotations file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    docs: Option<PathBuf>,
    /// Optional statistics snapshot; built from the corpus when absent.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Topics file: `<qid><TAB><text>` lines.
    #[arg(long)]
    topics: Option<PathBuf>,
    /// Dirichlet smoothing parameter.
    #[arg(long)]
    mu: Option<f64>,
    /// Ranking depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Run tag.
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RerankArgs {
    #[arg(long)]
    docs: Option<PathBuf>,
    #[arg(long)]
    topics: Option<PathBuf>,
    /// Discourse annotations to attach before scoring.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Baseline run file to re-rank.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Mixture weight on the relation model.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Single relation to score against.
    #[arg(long)]
    relation: Option<String>,
    /// Mix over all relations present in each document instead.
    #[arg(long)]
    all_relations: bool,
    /// Drop the relation-given-document weight from the final score.
    #[arg(long)]
    no_span_weight: bool,
    #[arg(long)]
    tag: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Run file to score.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Qrels file: `<qid> 0 <docid> <grade>` lines.
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// map, bpref, ndcg, or all.
    #[arg(long)]
    metric: Option<String>,
    /// NDCG cutoff (full run depth when absent).
    #[arg(long)]
    cutoff: Option<usize>,
    /// Baseline run for percent differences, significance, and diffs.
    #[arg(long)]
    baseline_run: Option<PathBuf>,
    /// Directory for the report files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(long)]
    docs: Option<PathBuf>,
    #[arg(long)]
    topics: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    relation: Option<String>,
    #[arg(long)]
    all_relations: bool,
    #[arg(long)]
    no_span_weight: bool,
    #[arg(long)]
    metric: Option<String>,
    /// Cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    cutoff: Option<usize>,
    /// Comma-separated mu grid override.
    #[arg(long)]
    mu_grid: Option<String>,
    /// Comma-separated kappa grid override.
    #[arg(long)]
    kappa_grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Per-query score files, one per query set (at least two):
    /// `<relation><TAB><qid><TAB><score>` lines.
    #[arg(long = "scores", value_name = "FILE")]
    scores: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pooling repeats.
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    docs: Option<PathBuf>,
    #[arg(long)]
    topics: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Annotations file; when absent the corpus is tagged with cue rules.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Cue rules for the tagging fallback.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    relation: Option<String>,
    #[arg(long)]
    all_relations: bool,
    #[arg(long)]
    no_span_weight: bool,
    /// map, bpref, ndcg, or all (the default).
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Parses `args` and runs the selected command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(anyhow::anyhow!(e.to_string())),
    };
    let cfg = ConfigMap::load(cli.config.as_deref())?;
    match cli.command {
        Command::Index(args) => commands::index(args, &cfg),
        Command::Tag(args) => commands::tag(args, &cfg),
        Command::Retrieve(args) => commands::retrieve(args, &cfg),
        Command::Rerank(args) => commands::rerank(args, &cfg),
        Command::Evaluate(args) => commands::evaluate(args, &cfg),
        Command::Tune(args) => commands::tune(args, &cfg),
        Command::Select(args) => commands::select(args, &cfg),
        Command::Pipeline(args) => commands::pipeline(args, &cfg),
    }
}
