pub mod ablate;
pub mod annotate;
pub mod eval_cmd;
pub mod extract;
pub mod train_cmd;
pub mod xval;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use semgraph_core::data::{load_dataset, load_tu, GraphDataset};

use crate::DatasetFlags;

/// Load a dataset from either a SEMGRAPH file or a TU directory; TU warnings
/// go to stderr.
pub fn load_input_dataset(flags: &DatasetFlags) -> Result<GraphDataset> {
    match (&flags.dataset, &flags.tu) {
        (Some(path), None) => {
            load_dataset(path).with_context(|| format!("loading {}", path.display()))
        }
        (None, Some(dir)) => {
            let name = flags
                .name
                .as_deref()
                .context("--tu requires --name <DATASET>")?;
            let loaded =
                load_tu(dir, name).with_context(|| format!("loading TU dataset {name}"))?;
            for w in &loaded.warnings {
                eprintln!("warning: {w}");
            }
            Ok(loaded.dataset)
        }
        (Some(_), Some(_)) => bail!("--dataset and --tu are mutually exclusive"),
        (None, None) => bail!("one of --dataset or --tu is required"),
    }
}

/// Sorted immediate subdirectories (category layout).
pub fn category_dirs(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    let entries =
        std::fs::read_dir(root).with_context(|| format!("reading directory {}", root.display()))?;
    for entry in entries {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            out.push((
                entry.file_name().to_string_lossy().into_owned(),
                entry.path(),
            ));
        }
    }
    out.sort();
    Ok(out)
}

/// Sorted files with one of the given extensions.
pub fn files_with_ext(dir: &Path, exts: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let entries =
        std::fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let path = entry.path();
        if let Some(ext) = path.extension().and_then(|e| e.to_str()) {
            if exts.contains(&ext.to_ascii_lowercase().as_str()) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
