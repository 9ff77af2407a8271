//! `semgraph train`: fit the classifier, write a checkpoint and a per-epoch
//! metrics CSV (`epoch,split,loss,accuracy`; metrics are eval-mode passes
//! over the training set after each epoch).

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use semgraph_core::gnn::{train, TrainOptions, TrainOutcome};

use crate::config::{self, FileConfig};
use crate::{worker_threads, DatasetFlags, ModelFlags, TrainFlags};

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetFlags,

    #[command(flatten)]
    pub model: ModelFlags,

    #[command(flatten)]
    pub train: TrainFlags,

    /// Where to write the trained parameters
    #[arg(long)]
    pub checkpoint: PathBuf,

    /// Where to write the per-epoch metrics CSV
    #[arg(long)]
    pub metrics: PathBuf,
}

pub fn metrics_csv(outcome: &TrainOutcome) -> String {
    let mut csv = String::from("epoch,split,loss,accuracy\n");
    for m in &outcome.history {
        writeln!(csv, "{},train,{},{}", m.epoch, m.loss, m.accuracy).expect("string write");
    }
    csv
}

pub fn run(args: &TrainArgs, file_cfg: &FileConfig) -> Result<i32> {
    let ds = super::load_input_dataset(&args.data)?;
    let resolved = config::resolve_train(&args.train, file_cfg)?;
    let cfg = config::resolve_model(&args.model, file_cfg, resolved.seed)?;
    let opts = TrainOptions {
        epochs: resolved.epochs,
        batch: resolved.batch,
        adam: resolved.adam,
        seed: resolved.seed,
        threads: worker_threads(),
    };

    let outcome = train(&ds, &cfg, &opts).context("training failed")?;

    outcome
        .params
        .save(&args.checkpoint)
        .with_context(|| format!("writing {}", args.checkpoint.display()))?;
    super::write_text(&args.metrics, &metrics_csv(&outcome))?;

    let last = outcome.history.last().expect("at least one epoch");
    println!(
        "trained {} epochs on {} samples: loss {:.6}, accuracy {:.4}",
        resolved.epochs,
        ds.len(),
        last.loss,
        last.accuracy
    );
    Ok(0)
}
