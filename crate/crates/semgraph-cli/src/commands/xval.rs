//! `semgraph xval`: k-fold cross-validation. Each fold trains from scratch
//! on the remaining folds and is scored on the held-out one; the CSV lists
//! per-fold accuracy plus mean and standard deviation rows.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use semgraph_core::data::{make_folds, split_by_fold};
use semgraph_core::gnn::{evaluate, train, TrainOptions};

use crate::config::{self, FileConfig};
use crate::{worker_threads, DatasetFlags, ModelFlags, TrainFlags};

#[derive(Args, Debug, Clone)]
pub struct XvalArgs {
    #[command(flatten)]
    pub data: DatasetFlags,

    #[command(flatten)]
    pub model: ModelFlags,

    #[command(flatten)]
    pub train: TrainFlags,

    /// Fold count
    #[arg(long)]
    pub k: Option<usize>,

    /// Balance class proportions across folds
    #[arg(long)]
    pub stratified: bool,

    /// Output CSV (fold,accuracy rows plus mean/std)
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &XvalArgs, file_cfg: &FileConfig) -> Result<i32> {
    let ds = super::load_input_dataset(&args.data)?;
    let resolved = config::resolve_train(&args.train, file_cfg)?;
    let cfg = config::resolve_model(&args.model, file_cfg, resolved.seed)?;
    let k = config::pick(args.k, file_cfg.get("k"), config::DEFAULT_FOLDS)?;
    let stratified = args.stratified || file_cfg.get("stratified")?.unwrap_or(false);

    let plan = make_folds(&ds, k, resolved.seed, stratified)?;
    let opts = TrainOptions {
        epochs: resolved.epochs,
        batch: resolved.batch,
        adam: resolved.adam,
        seed: resolved.seed,
        threads: worker_threads(),
    };

    let mut accuracies = Vec::with_capacity(k);
    let mut csv = String::from("fold,accuracy\n");
    for fold in 0..k {
        let (train_ds, test_ds) = split_by_fold(&ds, &plan, fold)?;
        let outcome =
            train(&train_ds, &cfg, &opts).with_context(|| format!("training fold {fold}"))?;
        // Evaluate with the training-set distance statistics so the scheme
        // sees the features it was fitted on.
        let report = evaluate(&test_ds, &outcome.params, &cfg, outcome.stats.as_ref())?;
        println!("fold {fold}: accuracy {}", report.accuracy);
        writeln!(csv, "{fold},{}", report.accuracy).expect("string write");
        accuracies.push(report.accuracy);
    }

    let mean = accuracies.iter().sum::<f64>() / k as f64;
    let var = accuracies
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / k as f64;
    let std = var.sqrt();
    writeln!(csv, "mean,{mean}").expect("string write");
    writeln!(csv, "std,{std}").expect("string write");
    super::write_text(&args.out, &csv)?;

    println!("overall accuracy: {mean} +/- {std}");
    Ok(0)
}
