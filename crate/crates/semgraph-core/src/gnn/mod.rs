//! The graph classification model: stacked graph convolutions over a
//! normalized weighted adjacency, per-layer edge-feature schemes, optional
//! add-on layers that learn an adjacency update, SortPooling and a
//! conv/dense readout.
//!
//! Per layer k the pipeline is: recompute edge weights from the current node
//! representations, mask them with the graph's structure plus self-loops,
//! normalize, optionally apply the add-on update, then aggregate:
//! H^{k+1} = act(A HÂ W). The four hidden representations are concatenated,
//! sort-pooled to `z` rows and pushed through two 1-D convolutions and two
//! dense layers.

mod config;
mod model;
mod train;

pub use config::{
    Activation, AddonUpdate, EdgeScheme, ModelConfig, Normalization, CONV1_FILTERS, CONV2_FILTERS,
    CONV2_KERNEL, DENSE_WIDTH, DROPOUT_RATE,
};
pub use model::{AddonParams, BoundAddon, BoundParams, ModelParams};
pub use train::{evaluate, train, EpochMetrics, EvalReport, TrainOptions, TrainOutcome};

use crate::data::{GraphDataset, GraphSample};
use crate::error::TensorError;
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::tensor::{Tape, Tensor};

/// Mean and standard deviation of node distances over a whole dataset,
/// feeding the `gaussian_input` edge scheme.
#[derive(Clone, Copy, Debug)]
pub struct EdgeStats {
    pub mu: f64,
    pub sigma: f64,
}

/// Distance statistics over all unordered distinct node pairs of every
/// graph (population standard deviation).
pub fn compute_edge_stats(ds: &GraphDataset) -> Result<EdgeStats, TensorError> {
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for s in &ds.samples {
        let f = &s.node_features;
        for w in 0..f.rows() {
            for q in (w + 1)..f.rows() {
                let mut acc = 0.0;
                for c in 0..f.cols() {
                    let d = f[(w, c)] - f[(q, c)];
                    acc += d * d;
                }
                let dist = acc.sqrt();
                count += 1;
                sum += dist;
                sum_sq += dist * dist;
            }
        }
    }
    if count == 0 {
        return Err(TensorError::InvalidArgument(
            "no node pairs to compute edge statistics from".into(),
        ));
    }
    let mu = sum / count as f64;
    let var = (sum_sq / count as f64 - mu * mu).max(0.0);
    let sigma = var.sqrt();
    if sigma <= 0.0 {
        return Err(TensorError::InvalidArgument(
            "degenerate edge statistics: zero distance variance".into(),
        ));
    }
    Ok(EdgeStats { mu, sigma })
}

/// Dense n x n edge-feature matrix from node representations `h`. Self-loop
/// entries are included (squared distance 0 on the diagonal). `stats` is
/// required by `gaussian_input` only.
pub fn edge_features<'t>(
    h: Tensor<'t>,
    scheme: EdgeScheme,
    stats: Option<&EdgeStats>,
) -> Result<Tensor<'t>, TensorError> {
    match scheme {
        EdgeScheme::DefaultOne => Ok(h.tape().leaf(Matrix::filled(h.rows(), h.rows(), 1.0))),
        EdgeScheme::ExpL2 => h.pair_norms().exp(),
        EdgeScheme::ExpL2Squared => h.pair_sq_dists().exp(),
        EdgeScheme::GaussKernel => h.pair_sq_dists().neg().exp(),
        EdgeScheme::GaussianInput => {
            let stats = stats.ok_or_else(|| {
                TensorError::InvalidArgument(
                    "gaussian_input edge scheme needs dataset distance statistics".into(),
                )
            })?;
            // (1 / (sqrt(2 pi) sigma)) * exp(-((x - mu) / (2 sigma))^2)
            let t = h
                .pair_norms()
                .add_scalar(-stats.mu)
                .scale(1.0 / (2.0 * stats.sigma));
            let bump = t.mul(t)?.neg().exp()?;
            Ok(bump.scale(1.0 / ((2.0 * std::f64::consts::PI).sqrt() * stats.sigma)))
        }
    }
}

/// Normalize a non-negative weighted adjacency by its (self-loop inclusive)
/// weighted row-sum degrees. Fails on any zero-degree node, naming it.
pub fn normalize_adjacency<'t>(
    a: Tensor<'t>,
    mode: Normalization,
) -> Result<Tensor<'t>, TensorError> {
    let deg = a.row_sum();
    {
        let d = deg.value();
        for i in 0..d.rows() {
            if d[(i, 0)] <= 0.0 {
                return Err(TensorError::ZeroDegree { node: i });
            }
        }
    }
    match mode {
        Normalization::Row => a.div_rows(deg),
        Normalization::Column => a.div_cols(deg),
        Normalization::NaiveSymmetric => a.div_rows(deg)?.div_cols(deg),
        Normalization::Symmetric => {
            let s = deg.sqrt();
            a.div_rows(s)?.div_cols(s)
        }
    }
}

/// One spectral convolution: act(a_norm . h . w).
pub fn graph_conv<'t>(
    h: Tensor<'t>,
    a_norm: Tensor<'t>,
    w: Tensor<'t>,
    activation: Activation,
) -> Result<Tensor<'t>, TensorError> {
    let z = a_norm.matmul(h)?.matmul(w)?;
    Ok(match activation {
        Activation::Tanh => z.tanh(),
        Activation::Relu => z.relu(),
    })
}

/// Add-on layer: two f -> 1 linear maps of the node representations,
/// broadcast-added into an n x n update matrix H', applied to the
/// normalized adjacency as H' x A (matmul mode) or H' ⊙ A (elementwise).
pub fn addon_layer<'t>(
    h: Tensor<'t>,
    a_norm: Tensor<'t>,
    addon: &BoundAddon<'t>,
    update: AddonUpdate,
) -> Result<Tensor<'t>, TensorError> {
    let mut col = h.matmul(addon.l1_w)?;
    if let Some(b) = addon.l1_b {
        col = col.add_row(b)?;
    }
    let mut row = h.matmul(addon.l2_w)?;
    if let Some(b) = addon.l2_b {
        row = row.add_row(b)?;
    }
    let update_matrix = col.broadcast_add(row.transpose())?;
    match update {
        AddonUpdate::Matmul => update_matrix.matmul(a_norm),
        AddonUpdate::Elementwise => update_matrix.mul(a_norm),
    }
}

/// Training vs evaluation forward. Training applies dropout in the readout,
/// drawing the mask from the supplied stream.
pub enum ForwardMode<'r> {
    Eval,
    Train { dropout_rng: &'r mut Rng },
}

/// Conv/dense readout over the sort-pooled representation: a width-F
/// convolution (one application per pooled row), max-pooling over adjacent
/// rows, a kernel-5 convolution across positions, then dense layers with
/// dropout before the class logits.
pub fn readout<'t>(
    pooled: Tensor<'t>,
    params: &BoundParams<'t>,
    mode: &mut ForwardMode<'_>,
) -> Result<Tensor<'t>, TensorError> {
    let tape = pooled.tape();
    let c1 = pooled
        .matmul(params.conv1_w)?
        .add_row(params.conv1_b)?
        .relu();
    let p1 = c1.maxpool_rows2()?;

    let out_len = p1.rows() + 1 - CONV2_KERNEL;
    let windows = (0..CONV2_KERNEL)
        .map(|d| p1.slice_rows(d, d + out_len))
        .collect::<Result<Vec<_>, _>>()?;
    let stacked = tape.concat_cols(&windows)?;
    let c2 = stacked
        .matmul(params.conv2_w)?
        .add_row(params.conv2_b)?
        .relu();

    let flat = c2.reshape(1, out_len * CONV2_FILTERS)?;
    let mut hidden = flat.matmul(params.dense_w)?.add_row(params.dense_b)?.relu();
    if let ForwardMode::Train { dropout_rng } = mode {
        hidden = hidden.dropout(DROPOUT_RATE, dropout_rng)?;
    }
    hidden.matmul(params.out_w)?.add_row(params.out_b)
}

/// Structure mask: the sample's base adjacency with self-loops added.
fn self_loop_mask(sample: &GraphSample) -> Matrix {
    let mut m = sample.base_adjacency.clone();
    for i in 0..m.rows() {
        m[(i, i)] = 1.0;
    }
    m
}

/// Edge weights restricted to the graph's structure (plus self-loops).
fn weighted_adjacency<'t>(
    h: Tensor<'t>,
    mask: Tensor<'t>,
    scheme: EdgeScheme,
    stats: Option<&EdgeStats>,
) -> Result<Tensor<'t>, TensorError> {
    if scheme == EdgeScheme::DefaultOne {
        return Ok(mask);
    }
    edge_features(h, scheme, stats)?.mul(mask)
}

/// Full forward pass to 1 x C logits.
pub fn forward<'t>(
    tape: &'t Tape,
    params: &BoundParams<'t>,
    sample: &GraphSample,
    cfg: &ModelConfig,
    stats: Option<&EdgeStats>,
    mode: &mut ForwardMode<'_>,
) -> Result<Tensor<'t>, TensorError> {
    let mask = tape.leaf(self_loop_mask(sample));
    let h0 = tape.leaf(sample.node_features.clone());

    let input_scheme = cfg.input_scheme.unwrap_or(cfg.edge_scheme);
    let a0 = weighted_adjacency(h0, mask, input_scheme, stats)?;
    let a0n = normalize_adjacency(a0, cfg.normalization)?;
    let mut h = graph_conv(h0, a0n, params.conv_w[0], cfg.activation)?;
    let mut hidden = vec![h];

    for k in 1..cfg.layer_dims.len() {
        let ak = weighted_adjacency(h, mask, cfg.edge_scheme, stats)?;
        let mut akn = normalize_adjacency(ak, cfg.normalization)?;
        if cfg.addon_enabled {
            akn = addon_layer(h, akn, &params.addons[k - 1], cfg.addon_update)?;
        }
        h = graph_conv(h, akn, params.conv_w[k], cfg.activation)?;
        hidden.push(h);
    }

    let concat = tape.concat_cols(&hidden)?;
    let pooled = concat.sort_pool(cfg.z);
    readout(pooled, params, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureKind;

    fn complete_sample(features: Matrix, label: usize) -> GraphSample {
        let n = features.rows();
        let mut adj = Matrix::filled(n, n, 1.0);
        for i in 0..n {
            adj[(i, i)] = 0.0;
        }
        GraphSample::new(features, adj, label).unwrap()
    }

    fn random_features(rng: &mut Rng, n: usize, f: usize) -> Matrix {
        let mut m = Matrix::zeros(n, f);
        for v in m.data_mut() {
            *v = rng.range_f64(-1.0, 1.0);
        }
        m
    }

    #[test]
    fn edge_features_identical_rows_are_one() {
        let tape = Tape::new();
        let h = tape.leaf(Matrix::filled(3, 4, 0.4));
        let e = edge_features(h, EdgeScheme::ExpL2, None).unwrap().value();
        for i in 0..3 {
            for j in 0..3 {
                assert!((e[(i, j)] - 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn edge_features_exp_l2_hand_value() {
        let tape = Tape::new();
        let h = tape.leaf(Matrix::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![3.0, 4.0, 0.0],
        ]));
        let e = edge_features(h, EdgeScheme::ExpL2, None).unwrap().value();
        assert!((e[(0, 1)] - 148.4131591).abs() < 1e-4, "{}", e[(0, 1)]);
        // Diagonal: e^sqrt(eps) = e^1e-6, within 2e-6 of 1.
        assert!((e[(0, 0)] - 1.0).abs() < 2e-6);
        // Never below 1: the exponent is non-negative.
        assert!(e.data().iter().all(|&v| v >= 1.0));
    }

    #[test]
    fn edge_features_gaussian_peak() {
        let tape = Tape::new();
        let stats = EdgeStats {
            mu: 5.0,
            sigma: 2.0,
        };
        // Rows at distance exactly mu.
        let h = tape.leaf(Matrix::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![5.0, 0.0, 0.0],
        ]));
        let e = edge_features(h, EdgeScheme::GaussianInput, Some(&stats))
            .unwrap()
            .value();
        let peak = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * stats.sigma);
        assert!((e[(0, 1)] - peak).abs() < 1e-9);
    }

    #[test]
    fn edge_features_gaussian_requires_stats() {
        let tape = Tape::new();
        let h = tape.leaf(Matrix::zeros(2, 3));
        assert!(edge_features(h, EdgeScheme::GaussianInput, None).is_err());
    }

    #[test]
    fn gauss_kernel_bounded_by_one() {
        let tape = Tape::new();
        let mut rng = Rng::new(3);
        let h = tape.leaf(random_features(&mut rng, 5, 4));
        let e = edge_features(h, EdgeScheme::GaussKernel, None)
            .unwrap()
            .value();
        for v in e.data() {
            assert!(*v > 0.0 && *v <= 1.0);
        }
        for i in 0..5 {
            assert_eq!(e[(i, i)], 1.0); // exact: squared distance is exactly 0
        }
    }

    #[test]
    fn edge_features_are_symmetric() {
        // Every scheme is a function of the pairwise distance, which is
        // symmetric in its arguments.
        let tape = Tape::new();
        let mut rng = Rng::new(12);
        let h = tape.leaf(random_features(&mut rng, 6, 3));
        let stats = EdgeStats {
            mu: 1.0,
            sigma: 0.5,
        };
        for scheme in [
            EdgeScheme::ExpL2,
            EdgeScheme::ExpL2Squared,
            EdgeScheme::GaussKernel,
            EdgeScheme::GaussianInput,
        ] {
            let e = edge_features(h, scheme, Some(&stats)).unwrap().value();
            for i in 0..6 {
                for j in 0..6 {
                    assert_eq!(e[(i, j)], e[(j, i)], "{scheme} asymmetric at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn edge_stats_degenerate_variance_errors() {
        // All pair distances identical: sigma would be 0.
        let s = complete_sample(
            Matrix::from_rows(&[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]),
            0,
        );
        let ds = GraphDataset::new(
            vec![s.clone(), s],
            vec!["a".into(), "b".into()],
            FeatureKind::Position3d,
        )
        .unwrap();
        assert!(compute_edge_stats(&ds).is_err());
    }

    #[test]
    fn normalize_row_sums_to_one() {
        let tape = Tape::new();
        let a = tape.leaf(Matrix::filled(3, 3, 1.0));
        let n = normalize_adjacency(a, Normalization::Row).unwrap().value();
        for i in 0..3 {
            for j in 0..3 {
                assert!((n[(i, j)] - 1.0 / 3.0).abs() < 1e-15);
            }
        }

        let mut rng = Rng::new(4);
        let mut w = Matrix::zeros(5, 5);
        for v in w.data_mut() {
            *v = rng.range_f64(0.01, 2.0);
        }
        let a = tape.leaf(w);
        let n = normalize_adjacency(a, Normalization::Row).unwrap().value();
        for i in 0..5 {
            let s: f64 = n.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
        }
    }

    #[test]
    fn normalize_symmetric_keeps_symmetry() {
        let tape = Tape::new();
        let mut rng = Rng::new(5);
        let mut w = Matrix::zeros(4, 4);
        for i in 0..4 {
            w[(i, i)] = rng.range_f64(0.5, 1.5);
            for j in (i + 1)..4 {
                let v = rng.range_f64(0.01, 2.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        let a = tape.leaf(w);
        let n = normalize_adjacency(a, Normalization::Symmetric)
            .unwrap()
            .value();
        for i in 0..4 {
            for j in 0..4 {
                assert!((n[(i, j)] - n[(j, i)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalize_zero_degree_names_node() {
        let tape = Tape::new();
        let mut w = Matrix::filled(3, 3, 1.0);
        for j in 0..3 {
            w[(1, j)] = 0.0;
        }
        let a = tape.leaf(w);
        match normalize_adjacency(a, Normalization::Row) {
            Err(TensorError::ZeroDegree { node }) => assert_eq!(node, 1),
            other => panic!("expected ZeroDegree, got {other:?}"),
        }
    }

    #[test]
    fn all_four_normalizations_run_on_same_input() {
        let tape = Tape::new();
        let mut rng = Rng::new(6);
        let mut w = Matrix::zeros(4, 4);
        for v in w.data_mut() {
            *v = rng.range_f64(0.1, 1.0);
        }
        for mode in [
            Normalization::Row,
            Normalization::Column,
            Normalization::NaiveSymmetric,
            Normalization::Symmetric,
        ] {
            let a = tape.leaf(w.clone());
            normalize_adjacency(a, mode).unwrap();
        }
    }

    #[test]
    fn graph_conv_identity_aggregation_is_tanh() {
        let tape = Tape::new();
        let h = tape.leaf(Matrix::from_rows(&[vec![0.3, -0.7], vec![1.2, 0.0]]));
        let a = tape.leaf(Matrix::identity(2));
        let w = tape.leaf(Matrix::identity(2));
        let out = graph_conv(h, a, w, Activation::Tanh).unwrap().value();
        let expect = h.value().map(f64::tanh);
        assert_eq!(out, expect);
    }

    #[test]
    fn graph_conv_single_node_self_loop() {
        let tape = Tape::new();
        let h = tape.leaf(Matrix::from_rows(&[vec![0.5, -0.25]]));
        let a = tape.leaf(Matrix::filled(1, 1, 1.0));
        let w = tape.leaf(Matrix::from_rows(&[vec![2.0], vec![1.0]]));
        let out = graph_conv(h, a, w, Activation::Tanh).unwrap().value();
        assert!((out[(0, 0)] - (0.75f64).tanh()).abs() < 1e-15);
    }

    #[test]
    fn addon_zero_maps_zero_update() {
        let tape = Tape::new();
        let h = tape.leaf(Matrix::filled(3, 4, 0.5));
        let a = tape.leaf(Matrix::filled(3, 3, 1.0 / 3.0));
        let addon = BoundAddon {
            l1_w: tape.var(Matrix::zeros(4, 1)),
            l1_b: Some(tape.var(Matrix::zeros(1, 1))),
            l2_w: tape.var(Matrix::zeros(4, 1)),
            l2_b: Some(tape.var(Matrix::zeros(1, 1))),
        };
        let out = addon_layer(h, a, &addon, AddonUpdate::Matmul)
            .unwrap()
            .value();
        assert_eq!(out, Matrix::zeros(3, 3));
    }

    #[test]
    fn addon_unit_bias_sums_columns() {
        // l1 bias 1 and l2 == 0 make H' all ones, so each output row of the
        // matmul update holds the column sums of a_norm.
        let tape = Tape::new();
        let h = tape.leaf(Matrix::filled(3, 2, 0.25));
        let a_vals = Matrix::from_rows(&[
            vec![0.5, 0.3, 0.2],
            vec![0.1, 0.8, 0.1],
            vec![0.25, 0.25, 0.5],
        ]);
        let a = tape.leaf(a_vals.clone());
        let addon = BoundAddon {
            l1_w: tape.var(Matrix::zeros(2, 1)),
            l1_b: Some(tape.var(Matrix::filled(1, 1, 1.0))),
            l2_w: tape.var(Matrix::zeros(2, 1)),
            l2_b: Some(tape.var(Matrix::zeros(1, 1))),
        };
        let out = addon_layer(h, a, &addon, AddonUpdate::Matmul)
            .unwrap()
            .value();
        for i in 0..3 {
            for j in 0..3 {
                let col_sum: f64 = (0..3).map(|r| a_vals[(r, j)]).sum();
                assert!((out[(i, j)] - col_sum).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_runs_on_single_node_graph() {
        let cfg = ModelConfig {
            z: 10,
            ..ModelConfig::default()
        };
        let mut rng = Rng::new(7);
        let params = ModelParams::init(&cfg, 3, 2, &mut rng).unwrap();
        let sample = complete_sample(Matrix::from_rows(&[vec![0.1, 0.2, 0.3]]), 0);
        let tape = Tape::new();
        let bound = params.bind(&tape);
        let logits = forward(&tape, &bound, &sample, &cfg, None, &mut ForwardMode::Eval).unwrap();
        assert_eq!(logits.shape(), (1, 2));
        assert!(logits.value().is_finite());
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let cfg = ModelConfig::default();
        let mut rng = Rng::new(8);
        let params = ModelParams::init(&cfg, 3, 2, &mut rng).unwrap();
        let sample = complete_sample(random_features(&mut rng, 6, 3), 1);
        let run = || {
            let tape = Tape::new();
            let bound = params.bind(&tape);
            forward(&tape, &bound, &sample, &cfg, None, &mut ForwardMode::Eval)
                .unwrap()
                .value()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn forward_invariant_under_node_permutation() {
        let cfg = ModelConfig::default();
        let mut rng = Rng::new(9);
        let params = ModelParams::init(&cfg, 3, 2, &mut rng).unwrap();

        for trial in 0..5 {
            let n = 4 + trial % 3;
            let features = random_features(&mut rng, n, 3);
            let sample = complete_sample(features.clone(), 0);

            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let mut permuted = Matrix::zeros(n, 3);
            for (dst, &src) in perm.iter().enumerate() {
                for c in 0..3 {
                    permuted[(dst, c)] = features[(src, c)];
                }
            }
            let sample_p = complete_sample(permuted, 0);

            let logits = |s: &GraphSample| {
                let tape = Tape::new();
                let bound = params.bind(&tape);
                forward(&tape, &bound, s, &cfg, None, &mut ForwardMode::Eval)
                    .unwrap()
                    .value()
            };
            let a = logits(&sample);
            let b = logits(&sample_p);
            assert!(a.max_abs_diff(&b) < 1e-9, "trial {trial}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn forward_invariant_under_permutation_with_tied_keys() {
        // Duplicate feature rows tie every sort key exactly; the index
        // tie-break then picks between identical rows, so the pooled matrix
        // (and the logits) still cannot depend on node order.
        let cfg = ModelConfig::default();
        let mut rng = Rng::new(14);
        let params = ModelParams::init(&cfg, 3, 2, &mut rng).unwrap();

        let mut features = random_features(&mut rng, 5, 3);
        for c in 0..3 {
            let v = features[(1, c)];
            features[(3, c)] = v; // rows 1 and 3 identical
        }
        let sample = complete_sample(features.clone(), 0);

        let mut perm: Vec<usize> = (0..5).collect();
        rng.shuffle(&mut perm);
        let mut permuted = Matrix::zeros(5, 3);
        for (dst, &src) in perm.iter().enumerate() {
            for c in 0..3 {
                permuted[(dst, c)] = features[(src, c)];
            }
        }
        let sample_p = complete_sample(permuted, 0);

        let logits = |s: &GraphSample| {
            let tape = Tape::new();
            let bound = params.bind(&tape);
            forward(&tape, &bound, s, &cfg, None, &mut ForwardMode::Eval)
                .unwrap()
                .value()
        };
        assert!(logits(&sample).max_abs_diff(&logits(&sample_p)) < 1e-9);
    }

    #[test]
    fn readout_zero_input_zero_bias_gives_zero_logits() {
        let cfg = ModelConfig {
            z: 10,
            ..ModelConfig::default()
        };
        let mut params = ModelParams::init(&cfg, 3, 2, &mut Rng::new(10)).unwrap();
        // Zero every readout bias (weights may stay random: relu(0 . w) = 0).
        for b in [
            &mut params.conv1_b,
            &mut params.conv2_b,
            &mut params.dense_b,
            &mut params.out_b,
        ] {
            *b = Matrix::zeros(b.rows(), b.cols());
        }
        let tape = Tape::new();
        let bound = params.bind(&tape);
        let pooled = tape.leaf(Matrix::zeros(cfg.z, cfg.concat_width()));
        let logits = readout(pooled, &bound, &mut ForwardMode::Eval).unwrap();
        assert_eq!(logits.value(), Matrix::zeros(1, 2));
    }

    #[test]
    fn edge_stats_toy_dataset() {
        // Two 2-node graphs with pair distances 3 and 5: mu = 4, population
        // sigma = 1.
        let s1 = complete_sample(
            Matrix::from_rows(&[vec![0.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]]),
            0,
        );
        let s2 = complete_sample(
            Matrix::from_rows(&[vec![0.0, 0.0, 0.0], vec![5.0, 0.0, 0.0]]),
            1,
        );
        let ds = GraphDataset::new(
            vec![s1, s2],
            vec!["a".into(), "b".into()],
            FeatureKind::Position3d,
        )
        .unwrap();
        let stats = compute_edge_stats(&ds).unwrap();
        assert!((stats.mu - 4.0).abs() < 1e-12);
        assert!((stats.sigma - 1.0).abs() < 1e-12);
    }
}
