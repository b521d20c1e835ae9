use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glogex::{with_pool, Error, RunConfig, Runner, StageName};

const FORMATS: &str = "\
Files (all in --out DIR):
  dataset.jsonl        one graph per line:
                       {\"nodes\":3,\"edges\":[[0,1],[1,2]],\"features\":[[1.0],[1.0],[1.0]],
                        \"label\":0,\"split\":\"train\",\"motifs\":[\"house\"],\"motif_nodes\":[[0,1,2]]}
  edge_weights.jsonl   {\"graph_id\":7,\"weights\":[[0,1,0.93],[1,2,0.05]]}
  explanations.jsonl   dataset record of the subgraph plus
                       \"source_graph_id\", \"source_nodes\" and \"annotation\" (House|Grid|Wheel|Mix|Others)
  gnn.ckpt, glg.ckpt   {\"format_version\":1,\"kind\":\"gnn\",\"arch\":{..},\"rng_seed\":0,\"step_count\":N,
                        \"params\":[{\"name\":\"gcn0.weight\",\"shape\":[1,20],\"data\":[..]}],..}
  formulas.json        {\"formulas\":[{\"class\":1,\"clauses\":[[{\"concept\":0,\"polarity\":true}]],
                        \"display_positive_only\":\"P0\",\"accuracy\":0.97,..}],..}
  report.json/.csv     fidelity, formula accuracy, purity, entropy, per-motif accuracy, seed aggregate
  concepts.json        per prototype: nearest explanations (line numbers in explanations.jsonl)
  glg_log.csv          epoch,entropy,fidelity,formula_accuracy
  run_config.json      resolved configuration and tool version

Environment: GLOGEX_THREADS caps worker threads.";

#[derive(Parser)]
#[command(name = "glogex", version, about = "Global logic-based explanations for graph classifiers", after_help = FORMATS)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON); defaults apply to omitted keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate BAMultiShapes (or copy `dataset_path`) into dataset.jsonl.
    GenData,
    /// Train the graph classifier: gnn.ckpt, predictions.jsonl, gnn_curve.csv.
    TrainGnn,
    /// Explain every graph and binarize: edge_weights.jsonl, explanations.jsonl.
    ExplainLocal,
    /// Train the global explainer: glg.ckpt, glg_runs.json, glg_log.csv.
    TrainGlg,
    /// Read formulas from the trained explainer: formulas.json.
    ExtractFormulas,
    /// Evaluate everything: report.json, report.csv, concepts.json, per_motif.csv.
    Evaluate,
    /// Train one explainer per prototype count: sweep.json, sweep.csv.
    SweepPrototypes,
    /// Train with and without discretization: ablation.json, ablation.csv.
    AblateDiscretization,
    /// gen-data through evaluate.
    RunAll,
}

fn run(cli: Cli) -> glogex::Result<()> {
    let cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cfg = cfg.resolve(cli.common.seed, cli.common.out.clone())?;
    let runner = Runner::new(cfg, cli.common.quiet);
    let stage = match cli.command {
        Command::GenData => Some(StageName::GenData),
        Command::TrainGnn => Some(StageName::TrainGnn),
        Command::ExplainLocal => Some(StageName::ExplainLocal),
        Command::TrainGlg => Some(StageName::TrainGlg),
        Command::ExtractFormulas => Some(StageName::ExtractFormulas),
        Command::Evaluate => Some(StageName::Evaluate),
        Command::SweepPrototypes => Some(StageName::SweepPrototypes),
        Command::AblateDiscretization => Some(StageName::AblateDiscretization),
        Command::RunAll => None,
    };
    with_pool(|| match stage {
        Some(s) => runner.run(s),
        None => runner.run_all(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = error_json(&e);
            println!("{doc}");
            ExitCode::FAILURE
        }
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() })
}
