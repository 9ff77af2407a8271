//! Model configuration: layer widths, edge-feature scheme, adjacency
//! normalization and add-on layer options. Defaults follow the reference
//! setup: four convolution layers of widths 32/32/32/1, SortPooling keep
//! count 30, per-layer exponential-L2 edge features over a row-normalized
//! adjacency, add-on layers enabled with matrix-product updates.

use std::fmt;
use std::str::FromStr;

use crate::error::TensorError;

/// Rule producing edge weights from the current node representations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeScheme {
    /// Every edge weight fixed to 1 (the backbone default, and the input
    /// features for one-hot datasets).
    DefaultOne,
    /// e^{+||h_w - h_q||_2} - larger for far-apart nodes.
    ExpL2,
    /// e^{+||h_w - h_q||_2^2}.
    ExpL2Squared,
    /// Gaussian kernel e^{-||h_w - h_q||_2^2 / sigma^2} with sigma = 1.
    GaussKernel,
    /// Normalized Gaussian bump over pairwise distance, parameterized by the
    /// dataset-level distance mean and standard deviation.
    GaussianInput,
}

/// How the self-loop-augmented weighted adjacency is normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// D^-1 A (each row sums to 1).
    Row,
    /// A D^-1.
    Column,
    /// D^-1 A D^-1.
    NaiveSymmetric,
    /// D^-1/2 A D^-1/2.
    Symmetric,
}

/// How the add-on layer's update matrix is applied to the normalized
/// adjacency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AddonUpdate {
    /// H' x A_N (matrix product, the default).
    Matmul,
    /// H' ⊙ A_N (entrywise).
    Elementwise,
}

/// Nonlinearity of the graph convolution layers. The readout always uses
/// relu.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

macro_rules! str_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = match self {
                    $($variant => $name),+
                };
                f.write_str(s)
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(format!(
                        concat!("unknown ", stringify!($ty), " {:?} (expected one of: ", $($name, " ",)+ ")"),
                        other
                    )),
                }
            }
        }
    };
}

str_enum!(EdgeScheme {
    EdgeScheme::DefaultOne => "default_one",
    EdgeScheme::ExpL2 => "exp_l2",
    EdgeScheme::ExpL2Squared => "exp_l2_squared",
    EdgeScheme::GaussKernel => "gauss_kernel",
    EdgeScheme::GaussianInput => "gaussian_input",
});

str_enum!(Normalization {
    Normalization::Row => "row",
    Normalization::Column => "column",
    Normalization::NaiveSymmetric => "naive_symmetric",
    Normalization::Symmetric => "symmetric",
});

str_enum!(AddonUpdate {
    AddonUpdate::Matmul => "matmul",
    AddonUpdate::Elementwise => "elementwise",
});

str_enum!(Activation {
    Activation::Tanh => "tanh",
    Activation::Relu => "relu",
});

pub const CONV1_FILTERS: usize = 16;
pub const CONV2_FILTERS: usize = 32;
pub const CONV2_KERNEL: usize = 5;
pub const DENSE_WIDTH: usize = 128;
pub const DROPOUT_RATE: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub layer_dims: Vec<usize>,
    pub z: usize,
    pub edge_scheme: EdgeScheme,
    /// Scheme for the input-layer adjacency. `None` resolves by feature
    /// kind: position features use `edge_scheme`, one-hot label features
    /// (TU datasets) use the default edge feature 1 - the per-layer
    /// recomputation stays active either way.
    pub input_scheme: Option<EdgeScheme>,
    pub normalization: Normalization,
    pub addon_enabled: bool,
    pub addon_update: AddonUpdate,
    pub addon_bias: bool,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            layer_dims: vec![32, 32, 32, 1],
            z: 30,
            edge_scheme: EdgeScheme::ExpL2,
            input_scheme: None,
            normalization: Normalization::Row,
            addon_enabled: true,
            addon_update: AddonUpdate::Matmul,
            addon_bias: true,
            activation: Activation::Tanh,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Pin the input scheme for a dataset's feature kind (no-op when set
    /// explicitly). One-hot node labels get the default edge feature 1 at
    /// the input layer; position features use the configured scheme there
    /// too.
    pub fn resolved_for(&self, kind: crate::data::FeatureKind) -> ModelConfig {
        let mut cfg = self.clone();
        if cfg.input_scheme.is_none() {
            cfg.input_scheme = Some(match kind {
                crate::data::FeatureKind::Position3d => cfg.edge_scheme,
                crate::data::FeatureKind::OneHot => EdgeScheme::DefaultOne,
            });
        }
        cfg
    }

    /// Whether any layer needs the dataset-level distance statistics.
    pub fn needs_edge_stats(&self) -> bool {
        self.edge_scheme == EdgeScheme::GaussianInput
            || self.input_scheme == Some(EdgeScheme::GaussianInput)
    }

    /// Shape sanity for model construction; in particular the SortPooling
    /// keep count must leave the second readout convolution at least one
    /// output position.
    pub fn validate(&self) -> Result<(), TensorError> {
        if self.layer_dims.is_empty() || self.layer_dims.contains(&0) {
            return Err(TensorError::InvalidArgument(format!(
                "layer_dims must be non-empty positive widths, got {:?}",
                self.layer_dims
            )));
        }
        if self.z < 2 * CONV2_KERNEL {
            return Err(TensorError::InvalidArgument(format!(
                "z = {} too small: the readout needs z/2 >= {CONV2_KERNEL} positions for its second convolution",
                self.z
            )));
        }
        Ok(())
    }

    /// Width of the concatenated hidden representations fed to SortPooling.
    pub fn concat_width(&self) -> usize {
        self.layer_dims.iter().sum()
    }

    /// Length of the second readout convolution's output.
    pub fn conv2_out_len(&self) -> usize {
        self.z / 2 - CONV2_KERNEL + 1
    }

    /// Exact trainable-parameter count implied by the shape rules.
    pub fn param_count(&self, feature_width: usize, classes: usize) -> usize {
        let mut count = 0;
        let mut fan_in = feature_width;
        for &dim in &self.layer_dims {
            count += fan_in * dim;
            fan_in = dim;
        }
        if self.addon_enabled {
            let bias = usize::from(self.addon_bias);
            for &dim in &self.layer_dims[..self.layer_dims.len() - 1] {
                count += 2 * (dim + bias);
            }
        }
        let f = self.concat_width();
        count += f * CONV1_FILTERS + CONV1_FILTERS;
        count += CONV2_KERNEL * CONV1_FILTERS * CONV2_FILTERS + CONV2_FILTERS;
        count += self.conv2_out_len() * CONV2_FILTERS * DENSE_WIDTH + DENSE_WIDTH;
        count += DENSE_WIDTH * classes + classes;
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let cfg = ModelConfig::default();
        assert_eq!(cfg.layer_dims, vec![32, 32, 32, 1]);
        assert_eq!(cfg.z, 30);
        assert_eq!(cfg.edge_scheme, EdgeScheme::ExpL2);
        assert_eq!(cfg.normalization, Normalization::Row);
        assert!(cfg.addon_enabled);
        assert_eq!(cfg.concat_width(), 97);
        cfg.validate().unwrap();
    }

    #[test]
    fn z_below_readout_minimum_rejected() {
        let cfg = ModelConfig {
            z: 9,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig {
            z: 10,
            ..ModelConfig::default()
        };
        cfg.validate().unwrap();
    }

    #[test]
    fn enum_round_trips() {
        for s in [
            "default_one",
            "exp_l2",
            "exp_l2_squared",
            "gauss_kernel",
            "gaussian_input",
        ] {
            assert_eq!(s.parse::<EdgeScheme>().unwrap().to_string(), s);
        }
        for s in ["row", "column", "naive_symmetric", "symmetric"] {
            assert_eq!(s.parse::<Normalization>().unwrap().to_string(), s);
        }
        assert!("bogus".parse::<EdgeScheme>().is_err());
    }

    #[test]
    fn param_count_default_config() {
        let cfg = ModelConfig::default();
        // Convolutions: 3*32 + 32*32 + 32*32 + 32*1.
        let convs = 96 + 1024 + 1024 + 32;
        // Three add-on layers, two biased f->1 maps each (f = 32).
        let addons = 3 * 2 * 33;
        // Readout: conv1 97*16+16, conv2 80*32+32, dense 352*128+128,
        // output 128*2+2 for two classes.
        let readout = (97 * 16 + 16) + (80 * 32 + 32) + (11 * 32 * 128 + 128) + (128 * 2 + 2);
        assert_eq!(cfg.param_count(3, 2), convs + addons + readout);
        assert_eq!(cfg.param_count(3, 2), 51_976);

        let no_addon = ModelConfig {
            addon_enabled: false,
            ..ModelConfig::default()
        };
        assert_eq!(no_addon.param_count(3, 2), convs + readout);

        let bias_free = ModelConfig {
            addon_bias: false,
            ..ModelConfig::default()
        };
        assert_eq!(bias_free.param_count(3, 2), convs + 3 * 2 * 32 + readout);
    }
}
