//! `semgraph eval`: load a checkpoint (shapes verified against the config
//! before anything runs), report overall accuracy and optionally write the
//! confusion matrix as CSV. With the gaussian_input scheme the distance
//! statistics are recomputed from the dataset being evaluated.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use semgraph_core::data::GraphDataset;
use semgraph_core::gnn::{compute_edge_stats, evaluate, EvalReport, ModelParams};

use crate::config::{self, FileConfig};
use crate::{DatasetFlags, ModelFlags};

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DatasetFlags,

    #[command(flatten)]
    pub model: ModelFlags,

    /// Trained parameters to evaluate
    #[arg(long)]
    pub checkpoint: PathBuf,

    /// Optional confusion-matrix CSV output
    #[arg(long)]
    pub confusion: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn confusion_csv(report: &EvalReport, ds: &GraphDataset) -> String {
    let mut csv = String::from("true\\predicted");
    for name in &ds.class_names {
        write!(csv, ",{name}").expect("string write");
    }
    csv.push('\n');
    for (i, row) in report.confusion.iter().enumerate() {
        write!(csv, "{}", ds.class_names[i]).expect("string write");
        for count in row {
            write!(csv, ",{count}").expect("string write");
        }
        csv.push('\n');
    }
    csv
}

pub fn run(args: &EvalArgs, file_cfg: &FileConfig) -> Result<i32> {
    let ds = super::load_input_dataset(&args.data)?;
    let seed = config::pick(args.seed, file_cfg.get("seed"), config::DEFAULT_SEED)?;
    let cfg = config::resolve_model(&args.model, file_cfg, seed)?;

    let params = ModelParams::load(&args.checkpoint, &cfg, ds.feature_width(), ds.num_classes())
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;

    let stats = if cfg.resolved_for(ds.feature_kind).needs_edge_stats() {
        Some(compute_edge_stats(&ds)?)
    } else {
        None
    };
    let report = evaluate(&ds, &params, &cfg, stats.as_ref())?;

    println!("overall accuracy: {}", report.accuracy);
    println!("mean loss: {}", report.mean_loss);
    if let Some(path) = &args.confusion {
        super::write_text(path, &confusion_csv(&report, &ds))?;
    }
    Ok(0)
}
