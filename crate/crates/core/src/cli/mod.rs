//! The `argrank` command line.
//!
//! Every subcommand reads one TOML experiment file (see [`PipelineConfig`])
//! and writes its artifacts under `paths.output`:
//!
//! | subcommand | reads | writes |
//! |---|---|---|
//! | `index` | topics, candidates, corpus | `index.json` |
//! | `features` | topics, candidates, qrels, index | `train.features`, `valid.features` |
//! | `train` | `train.features` | `model.json` |
//! | `rerank` | model, `valid.features` | `run.txt` |
//! | `eval` | run, qrels | `report.txt`, `report.json` |
//! | `pipeline` | everything | all of the above |

mod config;
mod pipeline;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::info;

pub use config::{Acquisition, EvalSection, Paths, PipelineConfig, QrelsFormat, SplitSection, TrainSection};
pub use pipeline::{
    acquire, build_collection_index, build_datasets, evaluate, load_inputs, rerank_dataset, train_model, Candidates,
    Inputs, INDEX_FILE, MODEL_FILE, REPORT_JSON_FILE, REPORT_TEXT_FILE, RUN_FILE, TRAIN_FILE, VALID_FILE,
};

use crate::error::Result;
use crate::eval::{read_run, write_run};
use crate::features::{read_dataset, write_dataset};
use crate::index::InvertedIndex;
use crate::ltr::{Ensemble, Mode};

#[derive(Debug, Parser)]
#[command(name = "argrank", version, about = "Rerank documents for comparative questions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the inverted index over candidates and corpus.
    Index,
    /// Extract training and validation feature files.
    Features,
    /// Train a ranker on the training features.
    Train,
    /// Rerank the validation candidates with the model.
    Rerank,
    /// Score a run against the validation judgments.
    Eval {
        /// Run file to score instead of the pipeline's own.
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Fetch, extract, train (or load), rerank and evaluate.
    Pipeline,
}

#[derive(Debug, Clone, Args)]
pub struct Overrides {
    #[arg(long, global = true, default_value = "argrank.toml")]
    pub config: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// NDCG cutoff.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Use cached responses only.
    #[arg(long, global = true)]
    pub offline: bool,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = self.mode {
            cfg.train.mode = mode;
        }
        if let Some(k) = self.k {
            cfg.eval.k = k;
        }
        if self.offline {
            cfg.acquisition.offline = true;
        }
    }
}

pub fn load_config(overrides: &Overrides) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&overrides.config)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    let echo = toml::to_string(&cfg).unwrap_or_else(|_| format!("{cfg:?}"));
    info!("config {}:\n{echo}", overrides.config.display());
    info!("seed {}", cfg.seed);
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(&cli.overrides)?;
    pipeline::ensure_dir(&cfg.paths.output)?;
    match &cli.command {
        Command::Index => {
            let inputs = load_inputs(&cfg)?;
            let candidates = acquire(&cfg, &inputs)?;
            build_collection_index(&cfg, &inputs, &candidates)?.save(&cfg.output(INDEX_FILE))
        }
        Command::Features => {
            let inputs = load_inputs(&cfg)?;
            let candidates = acquire(&cfg, &inputs)?;
            let index_path = cfg.output(INDEX_FILE);
            let index = if index_path.exists() {
                InvertedIndex::load(&index_path)?
            } else {
                build_collection_index(&cfg, &inputs, &candidates)?
            };
            let (train_ds, valid_ds) = build_datasets(&cfg, &inputs, &candidates, &index)?;
            write_dataset(&cfg.output(TRAIN_FILE), &train_ds)?;
            write_dataset(&cfg.output(VALID_FILE), &valid_ds)
        }
        Command::Train => {
            let train_ds = read_dataset(&cfg.output(TRAIN_FILE))?;
            train_model(&cfg, &train_ds)?.save(&cfg.output(MODEL_FILE))
        }
        Command::Rerank => {
            let model = Ensemble::load(&model_path(&cfg))?;
            let valid_ds = read_dataset(&cfg.output(VALID_FILE))?;
            write_run(&cfg.output(RUN_FILE), &rerank_dataset(&model, &valid_ds)?)
        }
        Command::Eval { run } => {
            let inputs = load_inputs(&cfg)?;
            let entries = read_run(run.as_deref().unwrap_or(&cfg.output(RUN_FILE)))?;
            let report = evaluate(&cfg, &inputs, &entries)?;
            print!("{}", report.to_text());
            pipeline::write_report(&cfg, &report)
        }
        Command::Pipeline => {
            let inputs = load_inputs(&cfg)?;
            let candidates = acquire(&cfg, &inputs)?;
            let index = build_collection_index(&cfg, &inputs, &candidates)?;
            index.save(&cfg.output(INDEX_FILE))?;
            let (train_ds, valid_ds) = build_datasets(&cfg, &inputs, &candidates, &index)?;
            write_dataset(&cfg.output(TRAIN_FILE), &train_ds)?;
            write_dataset(&cfg.output(VALID_FILE), &valid_ds)?;
            let model = match &cfg.paths.model {
                Some(path) => Ensemble::load(path)?,
                None => {
                    let model = train_model(&cfg, &train_ds)?;
                    model.save(&cfg.output(MODEL_FILE))?;
                    model
                }
            };
            let entries = rerank_dataset(&model, &valid_ds)?;
            write_run(&cfg.output(RUN_FILE), &entries)?;
            let report = evaluate(&cfg, &inputs, &entries)?;
            print!("{}", report.to_text());
            pipeline::write_report(&cfg, &report)
        }
    }
}

fn model_path(cfg: &PipelineConfig) -> PathBuf {
    cfg.paths.model.clone().unwrap_or_else(|| cfg.output(MODEL_FILE))
}
