//! `semgraph ablate`: train and score every edge-scheme x normalization
//! combination (5 x 4 grid) on a fixed train/test split, emitting one CSV
//! row per cell.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use semgraph_core::data::load_dataset;
use semgraph_core::gnn::{evaluate, train, EdgeScheme, Normalization, TrainOptions};

use crate::config::{self, FileConfig};
use crate::{worker_threads, ModelFlags, TrainFlags};

#[derive(Args, Debug, Clone)]
pub struct AblateArgs {
    /// Training dataset (SEMGRAPH v1)
    #[arg(long)]
    pub train: PathBuf,

    /// Held-out test dataset (SEMGRAPH v1)
    #[arg(long)]
    pub test: PathBuf,

    #[command(flatten)]
    pub model: ModelFlags,

    #[command(flatten)]
    pub train_flags: TrainFlags,

    /// Output CSV (edge_scheme,normalization,accuracy)
    #[arg(long)]
    pub out: PathBuf,
}

const SCHEMES: [EdgeScheme; 5] = [
    EdgeScheme::DefaultOne,
    EdgeScheme::ExpL2,
    EdgeScheme::ExpL2Squared,
    EdgeScheme::GaussKernel,
    EdgeScheme::GaussianInput,
];

const NORMALIZATIONS: [Normalization; 4] = [
    Normalization::Row,
    Normalization::Column,
    Normalization::NaiveSymmetric,
    Normalization::Symmetric,
];

pub fn run(args: &AblateArgs, file_cfg: &FileConfig) -> Result<i32> {
    let train_ds =
        load_dataset(&args.train).with_context(|| format!("loading {}", args.train.display()))?;
    let test_ds =
        load_dataset(&args.test).with_context(|| format!("loading {}", args.test.display()))?;

    let resolved = config::resolve_train(&args.train_flags, file_cfg)?;
    let base_cfg = config::resolve_model(&args.model, file_cfg, resolved.seed)?;
    let opts = TrainOptions {
        epochs: resolved.epochs,
        batch: resolved.batch,
        adam: resolved.adam,
        seed: resolved.seed,
        threads: worker_threads(),
    };

    let mut csv = String::from("edge_scheme,normalization,accuracy\n");
    for scheme in SCHEMES {
        for norm in NORMALIZATIONS {
            let cfg = semgraph_core::gnn::ModelConfig {
                edge_scheme: scheme,
                normalization: norm,
                ..base_cfg.clone()
            };
            let outcome = train(&train_ds, &cfg, &opts)
                .with_context(|| format!("training {scheme}/{norm}"))?;
            let report = evaluate(&test_ds, &outcome.params, &cfg, outcome.stats.as_ref())?;
            println!("{scheme},{norm}: accuracy {}", report.accuracy);
            writeln!(csv, "{scheme},{norm},{}", report.accuracy).expect("string write");
        }
    }
    super::write_text(&args.out, &csv)?;
    Ok(0)
}
