//! `semgraph extract`: labeled clouds in, SEMGRAPH dataset out. Categories
//! come from the input's subdirectory names (sorted order defines the class
//! indices). Prints a node-count histogram.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use semgraph_core::data::{dataset_from_graphs, save_dataset};
use semgraph_core::partition::{build_graph, SemanticGraph};
use semgraph_core::pointcloud::{load_cloud, CloudFormat};

use crate::config::{self, FileConfig};
use crate::{parallel_map, worker_threads};

#[derive(Args, Debug, Clone)]
pub struct ExtractArgs {
    /// Directory of labeled clouds, one subdirectory per category
    #[arg(long)]
    pub input: PathBuf,

    /// Sub-part separation threshold
    #[arg(long)]
    pub tau: Option<f64>,

    /// Output dataset file (SEMGRAPH v1)
    #[arg(long)]
    pub out: PathBuf,

    /// Sidecar split file, one cloud id (`category/stem`) per line; listed
    /// clouds go to --test-out instead of --out
    #[arg(long, requires = "test_out")]
    pub test_ids: Option<PathBuf>,

    /// Output dataset file for the held-out clouds
    #[arg(long, requires = "test_ids")]
    pub test_out: Option<PathBuf>,
}

fn cloud_id(category: &str, path: &PathBuf) -> String {
    format!(
        "{category}/{}",
        path.file_stem().unwrap_or_default().to_string_lossy()
    )
}

pub fn run(args: &ExtractArgs, file_cfg: &FileConfig) -> Result<i32> {
    let tau = config::pick(args.tau, file_cfg.get("tau"), config::DEFAULT_TAU)?;

    let test_ids: Option<std::collections::BTreeSet<String>> = match &args.test_ids {
        None => None,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading split file {}", path.display()))?;
            Some(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect(),
            )
        }
    };

    let categories = super::category_dirs(&args.input)?;
    if categories.is_empty() {
        bail!("input directory {} has no categories", args.input.display());
    }
    let class_names: Vec<String> = categories.iter().map(|(c, _)| c.clone()).collect();

    let mut files: Vec<(usize, PathBuf)> = Vec::new();
    for (class, (_, dir)) in categories.iter().enumerate() {
        for path in super::files_with_ext(dir, &["xyz"])? {
            files.push((class, path));
        }
    }
    if files.is_empty() {
        bail!("no .xyz clouds under {}", args.input.display());
    }

    let results = parallel_map(&files, worker_threads(), |(class, path)| {
        let cloud = load_cloud(path, CloudFormat::XyzText)?;
        if cloud.labels().is_none() {
            return Ok(None); // skipped, reported below
        }
        build_graph(&cloud, tau, *class).map(Some)
    });

    let mut graphs: Vec<SemanticGraph> = Vec::new();
    let mut held_out: Vec<SemanticGraph> = Vec::new();
    let mut skipped = 0usize;
    for ((class, path), result) in files.iter().zip(results) {
        match result {
            Ok(Some(g)) => {
                let id = cloud_id(&class_names[*class], path);
                match &test_ids {
                    Some(ids) if ids.contains(&id) => held_out.push(g),
                    _ => graphs.push(g),
                }
            }
            Ok(None) => {
                eprintln!("warning: {} has no part labels, skipped", path.display());
                skipped += 1;
            }
            Err(e) => return Err(anyhow::Error::new(e).context(format!("{}", path.display()))),
        }
    }
    if graphs.is_empty() {
        bail!("no labeled clouds to extract from");
    }

    let ds = dataset_from_graphs(&graphs, class_names.clone())
        .context("assembling dataset from extracted graphs")?;
    save_dataset(&ds, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(test_out) = &args.test_out {
        if held_out.is_empty() {
            bail!("split file matched no clouds");
        }
        let test_ds =
            dataset_from_graphs(&held_out, class_names).context("assembling held-out dataset")?;
        save_dataset(&test_ds, test_out)
            .with_context(|| format!("writing {}", test_out.display()))?;
    }

    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for g in graphs.iter().chain(&held_out) {
        *histogram.entry(g.node_count()).or_default() += 1;
    }
    println!(
        "extracted {} graphs ({} held out, {} clouds skipped)",
        graphs.len() + held_out.len(),
        held_out.len(),
        skipped
    );
    println!("nodes,graphs");
    for (nodes, count) in histogram {
        println!("{nodes},{count}");
    }
    Ok(0)
}
