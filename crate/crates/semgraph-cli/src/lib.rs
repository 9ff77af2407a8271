//! `semgraph` command-line front end: annotate point clouds via ICP label
//! transfer, extract semantic-graph datasets, train/evaluate the classifier,
//! cross-validate and run ablation sweeps.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "semgraph",
    version,
    about = "Semantic graphs from point clouds and a spectral graph classifier with learned edge features"
)]
pub struct Cli {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Register unlabeled clouds against labeled templates and transfer part labels
    Annotate(commands::annotate::AnnotateArgs),
    /// Build a semantic-graph dataset from labeled clouds
    Extract(commands::extract::ExtractArgs),
    /// Train the classifier and write a checkpoint plus per-epoch metrics
    Train(commands::train_cmd::TrainArgs),
    /// Evaluate a checkpoint and report overall accuracy
    Eval(commands::eval_cmd::EvalArgs),
    /// k-fold cross-validation
    Xval(commands::xval::XvalArgs),
    /// Sweep the edge-scheme x normalization grid
    Ablate(commands::ablate::AblateArgs),
}

/// Dataset source shared by the training-side commands: either a SEMGRAPH
/// file or a TU-format directory plus dataset name.
#[derive(Args, Debug, Clone, Default)]
pub struct DatasetFlags {
    /// SEMGRAPH v1 dataset file
    #[arg(long)]
    pub dataset: Option<PathBuf>,

    /// TU-format directory (requires --name)
    #[arg(long)]
    pub tu: Option<PathBuf>,

    /// TU dataset name (reads `<name>_A.txt` and friends)
    #[arg(long)]
    pub name: Option<String>,
}

/// Model-shape and scheme options; unset flags fall back to the config file
/// and then to the defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct ModelFlags {
    /// Edge feature scheme: default_one | exp_l2 | exp_l2_squared | gauss_kernel | gaussian_input
    #[arg(long)]
    pub edge_scheme: Option<String>,

    /// Input-layer scheme override; defaults by feature kind (positions use
    /// the edge scheme, one-hot labels use default_one)
    #[arg(long)]
    pub input_scheme: Option<String>,

    /// Adjacency normalization: row | column | naive_symmetric | symmetric
    #[arg(long)]
    pub normalization: Option<String>,

    /// Enable the add-on layers (true/false)
    #[arg(long)]
    pub addon_enabled: Option<bool>,

    /// Add-on update mode: matmul | elementwise
    #[arg(long)]
    pub addon_update: Option<String>,

    /// Biases on the add-on linear maps (true/false)
    #[arg(long)]
    pub addon_bias: Option<bool>,

    /// Graph-convolution activation: tanh | relu
    #[arg(long)]
    pub activation: Option<String>,

    /// SortPooling keep count
    #[arg(long)]
    pub z: Option<usize>,

    /// Hidden widths of the graph convolutions, comma separated
    #[arg(long, value_delimiter = ',')]
    pub layer_dims: Option<Vec<usize>>,
}

/// Training-protocol options.
#[derive(Args, Debug, Clone, Default)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<usize>,

    #[arg(long)]
    pub batch: Option<usize>,

    /// Adam learning rate
    #[arg(long)]
    pub lr: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,
}

/// Worker cap: SEMGRAPH_THREADS, defaulting to the machine's parallelism.
/// Results never depend on the count; it only bounds concurrency.
pub fn worker_threads() -> usize {
    match std::env::var("SEMGRAPH_THREADS") {
        Ok(v) => v.parse().ok().filter(|&n| n >= 1).unwrap_or(1),
        Err(_) => std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1),
    }
}

/// Map `f` over `items` on up to `threads` workers, preserving input order
/// in the result.
pub fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let workers = threads.min(items.len());
    let chunk = items.len().div_ceil(workers);
    let mut results: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();

    std::thread::scope(|scope| {
        let f = &f;
        let mut rest = results.as_mut_slice();
        let mut start = 0;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            let offset = start;
            scope.spawn(move || {
                for (i, slot) in head.iter_mut().enumerate() {
                    *slot = Some(f(&items[offset + i]));
                }
            });
            start += take;
            rest = tail;
        }
    });

    results
        .into_iter()
        .map(|r| r.expect("worker filled slot"))
        .collect()
}

/// Run a parsed command line. The returned code is the process exit status:
/// zero only when no per-file errors and no numeric aborts occurred.
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    let file_cfg = config::FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Annotate(args) => commands::annotate::run(&args, &file_cfg),
        Command::Extract(args) => commands::extract::run(&args, &file_cfg),
        Command::Train(args) => commands::train_cmd::run(&args, &file_cfg),
        Command::Eval(args) => commands::eval_cmd::run(&args, &file_cfg),
        Command::Xval(args) => commands::xval::run(&args, &file_cfg),
        Command::Ablate(args) => commands::ablate::run(&args, &file_cfg),
    }
}
