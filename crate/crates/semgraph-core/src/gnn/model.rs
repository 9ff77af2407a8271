//! Trainable parameters: four graph-convolution weights, the per-layer
//! add-on linear maps and the conv/dense readout stack. Parameters live as
//! plain matrices between steps and are bound to a fresh tape for every
//! forward pass.

use std::path::Path;

use super::config::{ModelConfig, CONV1_FILTERS, CONV2_FILTERS, CONV2_KERNEL, DENSE_WIDTH};
use crate::error::{Error, Result, TensorError};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::tensor::{load_named, save_named, Tape, Tensor};

/// The two f -> 1 linear maps of one add-on layer.
#[derive(Clone, Debug)]
pub struct AddonParams {
    pub l1_w: Matrix,
    pub l1_b: Option<Matrix>,
    pub l2_w: Matrix,
    pub l2_b: Option<Matrix>,
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub conv_w: Vec<Matrix>,
    pub addons: Vec<AddonParams>,
    pub conv1_w: Matrix,
    pub conv1_b: Matrix,
    pub conv2_w: Matrix,
    pub conv2_b: Matrix,
    pub dense_w: Matrix,
    pub dense_b: Matrix,
    pub out_w: Matrix,
    pub out_b: Matrix,
}

fn glorot(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = rng.range_f64(-limit, limit);
    }
    m
}

impl ModelParams {
    /// Fresh parameters with seeded Glorot-uniform weights and zero biases.
    pub fn init(
        cfg: &ModelConfig,
        feature_width: usize,
        classes: usize,
        rng: &mut Rng,
    ) -> Result<Self, TensorError> {
        cfg.validate()?;
        if classes < 2 {
            return Err(TensorError::InvalidArgument(format!(
                "need at least 2 classes, got {classes}"
            )));
        }

        let mut conv_w = Vec::new();
        let mut fan_in = feature_width;
        for &dim in &cfg.layer_dims {
            conv_w.push(glorot(rng, fan_in, dim));
            fan_in = dim;
        }

        let addons = if cfg.addon_enabled {
            cfg.layer_dims[..cfg.layer_dims.len() - 1]
                .iter()
                .map(|&dim| AddonParams {
                    l1_w: glorot(rng, dim, 1),
                    l1_b: cfg.addon_bias.then(|| Matrix::zeros(1, 1)),
                    l2_w: glorot(rng, dim, 1),
                    l2_b: cfg.addon_bias.then(|| Matrix::zeros(1, 1)),
                })
                .collect()
        } else {
            Vec::new()
        };

        let f = cfg.concat_width();
        Ok(ModelParams {
            conv_w,
            addons,
            conv1_w: glorot(rng, f, CONV1_FILTERS),
            conv1_b: Matrix::zeros(1, CONV1_FILTERS),
            conv2_w: glorot(rng, CONV2_KERNEL * CONV1_FILTERS, CONV2_FILTERS),
            conv2_b: Matrix::zeros(1, CONV2_FILTERS),
            dense_w: glorot(rng, cfg.conv2_out_len() * CONV2_FILTERS, DENSE_WIDTH),
            dense_b: Matrix::zeros(1, DENSE_WIDTH),
            out_w: glorot(rng, DENSE_WIDTH, classes),
            out_b: Matrix::zeros(1, classes),
        })
    }

    /// Parameters with their canonical names, in the order used by the
    /// checkpoint format and the optimizer state.
    pub fn named(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        for (k, w) in self.conv_w.iter().enumerate() {
            out.push((format!("conv.w{k}"), w));
        }
        for (k, a) in self.addons.iter().enumerate() {
            out.push((format!("addon{}.l1.w", k + 1), &a.l1_w));
            if let Some(b) = &a.l1_b {
                out.push((format!("addon{}.l1.b", k + 1), b));
            }
            out.push((format!("addon{}.l2.w", k + 1), &a.l2_w));
            if let Some(b) = &a.l2_b {
                out.push((format!("addon{}.l2.b", k + 1), b));
            }
        }
        out.push(("readout.conv1.w".into(), &self.conv1_w));
        out.push(("readout.conv1.b".into(), &self.conv1_b));
        out.push(("readout.conv2.w".into(), &self.conv2_w));
        out.push(("readout.conv2.b".into(), &self.conv2_b));
        out.push(("readout.dense.w".into(), &self.dense_w));
        out.push(("readout.dense.b".into(), &self.dense_b));
        out.push(("readout.out.w".into(), &self.out_w));
        out.push(("readout.out.b".into(), &self.out_b));
        out
    }

    /// Mutable views in the same canonical order as [`ModelParams::named`].
    pub fn flat_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = Vec::new();
        for w in &mut self.conv_w {
            out.push(w);
        }
        for a in &mut self.addons {
            out.push(&mut a.l1_w);
            if let Some(b) = &mut a.l1_b {
                out.push(b);
            }
            out.push(&mut a.l2_w);
            if let Some(b) = &mut a.l2_b {
                out.push(b);
            }
        }
        out.push(&mut self.conv1_w);
        out.push(&mut self.conv1_b);
        out.push(&mut self.conv2_w);
        out.push(&mut self.conv2_b);
        out.push(&mut self.dense_w);
        out.push(&mut self.dense_b);
        out.push(&mut self.out_w);
        out.push(&mut self.out_b);
        out
    }

    pub fn num_params(&self) -> usize {
        self.named().iter().map(|(_, m)| m.rows() * m.cols()).sum()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_named(path, &self.named())
    }

    /// Load a checkpoint and verify that every array matches the shapes the
    /// configuration implies - mismatches fail here, before any training or
    /// evaluation starts.
    pub fn load(
        path: impl AsRef<Path>,
        cfg: &ModelConfig,
        feature_width: usize,
        classes: usize,
    ) -> Result<Self> {
        let mut rng = Rng::new(0);
        let mut params = ModelParams::init(cfg, feature_width, classes, &mut rng)?;
        let entries = load_named(path)?;

        let expected = params.named();
        if entries.len() != expected.len() {
            return Err(Error::InvalidArgument(format!(
                "checkpoint holds {} arrays, config implies {}",
                entries.len(),
                expected.len()
            )));
        }
        for ((name, loaded), (want_name, want)) in entries.iter().zip(&expected) {
            if name != want_name {
                return Err(Error::InvalidArgument(format!(
                    "checkpoint array {name:?} where {want_name:?} was expected"
                )));
            }
            if loaded.shape() != want.shape() {
                return Err(Error::Tensor(TensorError::ShapeMismatch {
                    op: "checkpoint",
                    lhs: loaded.shape(),
                    rhs: want.shape(),
                }));
            }
        }

        let values: Vec<Matrix> = entries.into_iter().map(|(_, m)| m).collect();
        for (slot, value) in params.flat_mut().into_iter().zip(values) {
            *slot = value;
        }
        Ok(params)
    }

    /// Put every parameter on `tape` as a differentiable leaf.
    pub fn bind<'t>(&self, tape: &'t Tape) -> BoundParams<'t> {
        BoundParams {
            conv_w: self.conv_w.iter().map(|w| tape.var(w.clone())).collect(),
            addons: self
                .addons
                .iter()
                .map(|a| BoundAddon {
                    l1_w: tape.var(a.l1_w.clone()),
                    l1_b: a.l1_b.as_ref().map(|b| tape.var(b.clone())),
                    l2_w: tape.var(a.l2_w.clone()),
                    l2_b: a.l2_b.as_ref().map(|b| tape.var(b.clone())),
                })
                .collect(),
            conv1_w: tape.var(self.conv1_w.clone()),
            conv1_b: tape.var(self.conv1_b.clone()),
            conv2_w: tape.var(self.conv2_w.clone()),
            conv2_b: tape.var(self.conv2_b.clone()),
            dense_w: tape.var(self.dense_w.clone()),
            dense_b: tape.var(self.dense_b.clone()),
            out_w: tape.var(self.out_w.clone()),
            out_b: tape.var(self.out_b.clone()),
        }
    }
}

#[derive(Clone, Copy)]
pub struct BoundAddon<'t> {
    pub l1_w: Tensor<'t>,
    pub l1_b: Option<Tensor<'t>>,
    pub l2_w: Tensor<'t>,
    pub l2_b: Option<Tensor<'t>>,
}

/// Tape-bound view of [`ModelParams`] for one forward/backward pass.
pub struct BoundParams<'t> {
    pub conv_w: Vec<Tensor<'t>>,
    pub addons: Vec<BoundAddon<'t>>,
    pub conv1_w: Tensor<'t>,
    pub conv1_b: Tensor<'t>,
    pub conv2_w: Tensor<'t>,
    pub conv2_b: Tensor<'t>,
    pub dense_w: Tensor<'t>,
    pub dense_b: Tensor<'t>,
    pub out_w: Tensor<'t>,
    pub out_b: Tensor<'t>,
}

impl<'t> BoundParams<'t> {
    /// Leaves in the canonical parameter order.
    pub fn all(&self) -> Vec<Tensor<'t>> {
        let mut out = Vec::new();
        out.extend(self.conv_w.iter().copied());
        for a in &self.addons {
            out.push(a.l1_w);
            if let Some(b) = a.l1_b {
                out.push(b);
            }
            out.push(a.l2_w);
            if let Some(b) = a.l2_b {
                out.push(b);
            }
        }
        out.extend([
            self.conv1_w,
            self.conv1_b,
            self.conv2_w,
            self.conv2_b,
            self.dense_w,
            self.dense_b,
            self.out_w,
            self.out_b,
        ]);
        out
    }

    /// Gradients in canonical order; zeros where a parameter did not reach
    /// the loss.
    pub fn gradients(&self) -> Vec<Matrix> {
        self.all()
            .iter()
            .map(|t| {
                t.grad().unwrap_or_else(|| {
                    let (r, c) = t.shape();
                    Matrix::zeros(r, c)
                })
            })
            .collect()
    }
}
