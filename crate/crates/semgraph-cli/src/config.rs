//! Option resolution: command-line flags take precedence over the key=value
//! config file, which takes precedence over the built-in defaults
//! (tau 0.283, z 30, epochs 200, batch 20, lr 0.001, ICP 50 iterations at
//! tol 1e-6, 1024-point subsampling, 10 folds, seed 0).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use semgraph_core::gnn::ModelConfig;
use semgraph_core::registration::IcpParams;
use semgraph_core::tensor::AdamConfig;

use crate::{ModelFlags, TrainFlags};

pub const DEFAULT_TAU: f64 = 0.283;
pub const DEFAULT_POINTS: usize = 1024;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_SEED: u64 = 0;

/// Flat `key = value` file (hash comments allowed). Unknown keys are
/// rejected so typos surface instead of silently using defaults.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "tau",
    "points",
    "max_iters",
    "tol",
    "seed",
    "epochs",
    "batch",
    "lr",
    "k",
    "stratified",
    "z",
    "layer_dims",
    "edge_scheme",
    "input_scheme",
    "normalization",
    "addon_enabled",
    "addon_update",
    "addon_bias",
    "activation",
];

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected `key = value`", path.display(), lineno + 1);
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!(
                    "{}:{}: unknown config key {key:?}",
                    path.display(),
                    lineno + 1
                );
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse::<T>() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key {key} = {raw:?}: {e}"),
            },
        }
    }

    /// Comma-separated list value.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .with_context(|| format!("config key {key} = {raw:?}"))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

/// flag > file > default
pub fn pick<T>(flag: Option<T>, file: Result<Option<T>>, default: T) -> Result<T> {
    Ok(flag.or(file?).unwrap_or(default))
}

pub fn resolve_model(flags: &ModelFlags, file: &FileConfig, seed: u64) -> Result<ModelConfig> {
    let defaults = ModelConfig::default();
    let cfg = ModelConfig {
        layer_dims: flags
            .layer_dims
            .clone()
            .or(file.get_list("layer_dims")?)
            .unwrap_or(defaults.layer_dims),
        z: pick(flags.z, file.get("z"), defaults.z)?,
        edge_scheme: pick(
            flags.edge_scheme.as_deref().map(parse_or_die).transpose()?,
            file.get("edge_scheme"),
            defaults.edge_scheme,
        )?,
        input_scheme: flags
            .input_scheme
            .as_deref()
            .map(parse_or_die)
            .transpose()?
            .or(file.get("input_scheme")?),
        normalization: pick(
            flags
                .normalization
                .as_deref()
                .map(parse_or_die)
                .transpose()?,
            file.get("normalization"),
            defaults.normalization,
        )?,
        addon_enabled: pick(
            flags.addon_enabled,
            file.get("addon_enabled"),
            defaults.addon_enabled,
        )?,
        addon_update: pick(
            flags
                .addon_update
                .as_deref()
                .map(parse_or_die)
                .transpose()?,
            file.get("addon_update"),
            defaults.addon_update,
        )?,
        addon_bias: pick(
            flags.addon_bias,
            file.get("addon_bias"),
            defaults.addon_bias,
        )?,
        activation: pick(
            flags.activation.as_deref().map(parse_or_die).transpose()?,
            file.get("activation"),
            defaults.activation,
        )?,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_or_die<T: FromStr<Err = String>>(s: &str) -> Result<T> {
    s.parse::<T>().map_err(anyhow::Error::msg)
}

pub struct ResolvedTrain {
    pub epochs: usize,
    pub batch: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

pub fn resolve_train(flags: &TrainFlags, file: &FileConfig) -> Result<ResolvedTrain> {
    let lr = pick(flags.lr, file.get("lr"), 0.001)?;
    Ok(ResolvedTrain {
        epochs: pick(flags.epochs, file.get("epochs"), 200)?,
        batch: pick(flags.batch, file.get("batch"), 20)?,
        adam: AdamConfig {
            lr,
            ..AdamConfig::default()
        },
        seed: pick(flags.seed, file.get("seed"), DEFAULT_SEED)?,
    })
}

pub fn resolve_icp(
    max_iters: Option<usize>,
    tol: Option<f64>,
    file: &FileConfig,
) -> Result<IcpParams> {
    let defaults = IcpParams::default();
    Ok(IcpParams {
        max_iters: pick(max_iters, file.get("max_iters"), defaults.max_iters)?,
        tol: pick(tol, file.get("tol"), defaults.tol)?,
        init: defaults.init,
    })
}
