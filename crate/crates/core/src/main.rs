use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use venuerank::eval::{Qrel, QrelSet};
use venuerank::harness::config::{PipelineConfig, DEFAULT_SEED};
use venuerank::harness::ingest::{load_bundle, read_jsonl, write_bundle, BundlePaths};
use venuerank::harness::persist::{load_models, save_models};
use venuerank::harness::pipeline::{evaluate_run, format_run, parse_run, rank, run_cv, train};
use venuerank::harness::synth::generate_synthetic;

/// Context-aware venue suggestion ranker.
#[derive(Parser)]
#[command(name = "venuerank", version)]
struct Cli {
    /// Seed for every randomized stage.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// File of `key = value` overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Directory holding venues/reviews/profiles/requests/qrels JSONL.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train review classifiers and the ranker.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// Model directory to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank every request's candidates and write a run file.
    Rank {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        models: PathBuf,
        /// Output directory; the run goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a run file against judgments.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query-level k-fold cross-validation.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

fn data_err(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn emit(out: Option<&Path>, file: &str, text: &str) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(data_err)?;
            fs::write(dir.join(file), text).map_err(data_err)
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(data_err),
    }
}

fn jsonl(records: impl IntoIterator<Item = serde_json::Value>) -> String {
    records.into_iter().map(|r| format!("{r}\n")).collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &cli.config {
        config
            .load_overrides(path)
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    config.set_seed(cli.seed);

    match cli.command {
        Command::Synth { out } => {
            let (bundle, _) = generate_synthetic(&config.synth).map_err(data_err)?;
            write_bundle(&bundle, &out).map_err(data_err)?;
            eprintln!(
                "wrote {} venues, {} users, {} requests to {}",
                bundle.catalog.len(),
                bundle.histories.len(),
                bundle.requests.len(),
                out.display()
            );
        }
        Command::Train { data, out } => {
            let bundle = load_bundle(&BundlePaths::in_dir(&data.data)).map_err(data_err)?;
            let models = train(&bundle, &config).map_err(data_err)?;
            save_models(&out, &models).map_err(data_err)?;
            eprintln!(
                "trained {} trees and {} review classifiers",
                models.ranker.trees.len(),
                models.review.len()
            );
        }
        Command::Rank { data, models, out } => {
            let bundle = load_bundle(&BundlePaths::in_dir(&data.data)).map_err(data_err)?;
            let models = load_models(&models).map_err(data_err)?;
            let lines = rank(&bundle, &models, &config).map_err(data_err)?;
            emit(out.as_deref(), "run.tsv", &format_run(&lines))?;
        }
        Command::Eval { run, qrels, out } => {
            let text = fs::read_to_string(&run)
                .map_err(|e| Failure::Data(format!("{}: {e}", run.display())))?;
            let lines = parse_run(&text).map_err(data_err)?;
            let qrels: QrelSet = read_jsonl::<Qrel>(&qrels)
                .map_err(data_err)?
                .into_iter()
                .collect();
            let (per_query, summary) = evaluate_run(&lines, &qrels);
            let records = per_query
                .iter()
                .map(|m| json!({"request_id": m.request_id, "p5": m.p5, "rr": m.rr, "ndcg5": m.ndcg5}))
                .chain([json!({"summary": summary})]);
            emit(out.as_deref(), "metrics.jsonl", &jsonl(records))?;
        }
        Command::Cv { data, out } => {
            let bundle = load_bundle(&BundlePaths::in_dir(&data.data)).map_err(data_err)?;
            let report = run_cv(&bundle, &config).map_err(data_err)?;
            let records = report
                .folds
                .iter()
                .map(|f| json!({"fold": f.fold, "queries": f.held_out.len(), "p5": f.p5, "mrr": f.mrr, "ndcg5": f.ndcg5}))
                .chain([json!({
                    "k": report.k,
                    "seed": report.seed,
                    "mean_p5": report.mean_p5,
                    "mean_mrr": report.mean_mrr,
                    "mean_ndcg5": report.mean_ndcg5,
                    "random_p5": report.random_p5,
                })]);
            emit(out.as_deref(), "cv.jsonl", &jsonl(records))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
