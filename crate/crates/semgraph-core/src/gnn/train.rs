//! Training loop and evaluation.
//!
//! Per-sample forward/backward with gradients averaged over each batch and
//! one Adam step per batch. All randomness (init, shuffling, dropout) comes
//! from named sub-streams of the seed; the dropout stream is keyed by
//! (epoch, batch, position), so results do not depend on the worker count.

use std::thread;

use super::config::ModelConfig;
use super::model::ModelParams;
use super::{compute_edge_stats, forward, EdgeStats, ForwardMode};
use crate::data::GraphDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::tensor::{adam_step, AdamConfig, AdamState, Tape};

#[derive(Clone, Copy, Debug)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Workers for the per-sample forward/backward inside a batch; the
    /// batch reduction stays an ordered, deterministic sum.
    pub threads: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 200,
            batch: 20,
            adam: AdamConfig::default(),
            seed: 0,
            threads: 1,
        }
    }
}

/// Whole-dataset loss/accuracy measured in eval mode after the epoch.
#[derive(Clone, Copy, Debug)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<EpochMetrics>,
    pub stats: Option<EdgeStats>,
}

#[derive(Debug)]
pub struct EvalReport {
    pub accuracy: f64,
    pub mean_loss: f64,
    /// `confusion[true_class][predicted_class]`
    pub confusion: Vec<Vec<usize>>,
}

/// Argmax with ties to the lowest index.
pub fn predicted_class(logits: &Matrix) -> usize {
    let mut best = 0;
    for j in 1..logits.cols() {
        if logits[(0, j)] > logits[(0, best)] {
            best = j;
        }
    }
    best
}

struct SampleResult {
    loss: f64,
    grads: Vec<Matrix>,
}

type SampleOutcome = Result<SampleResult, crate::error::TensorError>;

fn run_sample(
    params: &ModelParams,
    ds: &GraphDataset,
    cfg: &ModelConfig,
    stats: Option<&EdgeStats>,
    sample_idx: usize,
    dropout_rng: &mut Rng,
) -> Result<SampleResult, crate::error::TensorError> {
    let sample = &ds.samples[sample_idx];
    let tape = Tape::new();
    let bound = params.bind(&tape);
    let logits = forward(
        &tape,
        &bound,
        sample,
        cfg,
        stats,
        &mut ForwardMode::Train { dropout_rng },
    )?;
    let loss = logits.softmax_cross_entropy(sample.label)?;
    loss.backward()?;
    Ok(SampleResult {
        loss: loss.item(),
        grads: bound.gradients(),
    })
}

/// Train on `ds` for `opts.epochs` epochs. Metrics are recorded from an
/// eval-mode pass over the full set after each epoch. A non-finite loss
/// aborts with the epoch, batch and sample that produced it.
pub fn train(ds: &GraphDataset, cfg: &ModelConfig, opts: &TrainOptions) -> Result<TrainOutcome> {
    let cfg = &cfg.resolved_for(ds.feature_kind);
    cfg.validate()?;
    if opts.epochs == 0 || opts.batch == 0 {
        return Err(Error::InvalidArgument(
            "epochs and batch must be >= 1".into(),
        ));
    }
    let stats = if cfg.needs_edge_stats() {
        Some(compute_edge_stats(ds)?)
    } else {
        None
    };

    let mut init_rng = Rng::substream(opts.seed, "init", &[]);
    let mut params = ModelParams::init(cfg, ds.feature_width(), ds.num_classes(), &mut init_rng)?;
    let mut adam = AdamState::new(params.named().iter().map(|(_, m)| *m));

    let threads = opts.threads.max(1);
    let mut history = Vec::with_capacity(opts.epochs);

    for epoch in 1..=opts.epochs {
        let mut order: Vec<usize> = (0..ds.len()).collect();
        Rng::substream(opts.seed, "shuffle", &[epoch as u64]).shuffle(&mut order);

        for (batch_idx, batch) in order.chunks(opts.batch).enumerate() {
            let results = run_batch(
                &params,
                ds,
                cfg,
                stats.as_ref(),
                batch,
                opts.seed,
                epoch,
                batch_idx,
                threads,
            );

            let mut summed: Option<Vec<Matrix>> = None;
            for (pos, res) in results.into_iter().enumerate() {
                let res = res.map_err(|e| match e {
                    crate::error::TensorError::NonFinite { .. } => Error::NonFiniteLoss {
                        epoch,
                        batch: batch_idx,
                        sample: batch[pos],
                    },
                    other => Error::Tensor(other),
                })?;
                if !res.loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: batch_idx,
                        sample: batch[pos],
                    });
                }
                summed = Some(match summed {
                    None => res.grads,
                    Some(mut acc) => {
                        for (a, g) in acc.iter_mut().zip(&res.grads) {
                            for (x, y) in a.data_mut().iter_mut().zip(g.data()) {
                                *x += y;
                            }
                        }
                        acc
                    }
                });
            }

            let mut mean_grads = summed.expect("non-empty batch");
            let scale = 1.0 / batch.len() as f64;
            for g in &mut mean_grads {
                for x in g.data_mut() {
                    *x *= scale;
                }
            }
            adam_step(&mut params.flat_mut(), &mean_grads, &mut adam, &opts.adam)?;
        }

        let report = evaluate(ds, &params, cfg, stats.as_ref())?;
        history.push(EpochMetrics {
            epoch,
            loss: report.mean_loss,
            accuracy: report.accuracy,
        });
    }

    Ok(TrainOutcome {
        params,
        history,
        stats,
    })
}

/// Forward/backward for one batch, optionally across worker threads. Each
/// sample's dropout stream is derived from (epoch, batch, position), so the
/// outcome is identical for any worker count.
#[allow(clippy::too_many_arguments)]
fn run_batch(
    params: &ModelParams,
    ds: &GraphDataset,
    cfg: &ModelConfig,
    stats: Option<&EdgeStats>,
    batch: &[usize],
    seed: u64,
    epoch: usize,
    batch_idx: usize,
    threads: usize,
) -> Vec<SampleOutcome> {
    let seed_for = |pos: usize| {
        Rng::substream(
            seed,
            "dropout",
            &[epoch as u64, batch_idx as u64, pos as u64],
        )
    };

    if threads <= 1 || batch.len() <= 1 {
        return batch
            .iter()
            .enumerate()
            .map(|(pos, &idx)| run_sample(params, ds, cfg, stats, idx, &mut seed_for(pos)))
            .collect();
    }

    let workers = threads.min(batch.len());
    let chunk = batch.len().div_ceil(workers);
    let mut results: Vec<Option<SampleOutcome>> = (0..batch.len()).map(|_| None).collect();

    thread::scope(|scope| {
        let mut pending: Vec<(usize, &mut [Option<SampleOutcome>])> = Vec::new();
        let mut rest = results.as_mut_slice();
        let mut start = 0;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            pending.push((start, head));
            start += take;
            rest = tail;
        }
        for (offset, slot) in pending {
            scope.spawn(move || {
                for (i, out) in slot.iter_mut().enumerate() {
                    let pos = offset + i;
                    *out = Some(run_sample(
                        params,
                        ds,
                        cfg,
                        stats,
                        batch[pos],
                        &mut seed_for(pos),
                    ));
                }
            });
        }
    });

    results
        .into_iter()
        .map(|r| r.expect("worker filled slot"))
        .collect()
}

/// Eval-mode pass: overall accuracy (mean over instances), mean loss and the
/// confusion matrix.
pub fn evaluate(
    ds: &GraphDataset,
    params: &ModelParams,
    cfg: &ModelConfig,
    stats: Option<&EdgeStats>,
) -> Result<EvalReport> {
    let cfg = &cfg.resolved_for(ds.feature_kind);
    let classes = ds.num_classes();
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut loss_sum = 0.0;
    let mut correct = 0usize;

    for sample in &ds.samples {
        let tape = Tape::new();
        let bound = params.bind(&tape);
        let logits = forward(&tape, &bound, sample, cfg, stats, &mut ForwardMode::Eval)?;
        let loss = logits.softmax_cross_entropy(sample.label)?;
        loss_sum += loss.item();
        let pred = predicted_class(&logits.value());
        confusion[sample.label][pred] += 1;
        if pred == sample.label {
            correct += 1;
        }
    }

    Ok(EvalReport {
        accuracy: correct as f64 / ds.len() as f64,
        mean_loss: loss_sum / ds.len() as f64,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureKind, GraphSample};

    /// Tiny two-class set: class 0 graphs sit near the origin, class 1
    /// graphs are shifted and larger.
    fn toy_two_class(n_per_class: usize, seed: u64) -> GraphDataset {
        let mut rng = Rng::new(seed);
        let mut samples = Vec::new();
        for c in 0..2usize {
            for _ in 0..n_per_class {
                let nodes = if c == 0 { 3 } else { 5 };
                let base = if c == 0 { 0.0 } else { 1.5 };
                let spread = if c == 0 { 0.2 } else { 0.6 };
                let mut f = Matrix::zeros(nodes, 3);
                for v in f.data_mut() {
                    *v = base + rng.range_f64(-spread, spread);
                }
                let mut adj = Matrix::filled(nodes, nodes, 1.0);
                for i in 0..nodes {
                    adj[(i, i)] = 0.0;
                }
                samples.push(GraphSample::new(f, adj, c).unwrap());
            }
        }
        GraphDataset::new(
            samples,
            vec!["near".into(), "far".into()],
            FeatureKind::Position3d,
        )
        .unwrap()
    }

    #[test]
    fn overfits_ten_sample_toy_set() {
        let ds = toy_two_class(5, 21);
        let cfg = ModelConfig {
            z: 10,
            ..ModelConfig::default()
        };
        let opts = TrainOptions {
            epochs: 200,
            batch: 20,
            seed: 1,
            ..TrainOptions::default()
        };
        let outcome = train(&ds, &cfg, &opts).unwrap();
        let best = outcome
            .history
            .iter()
            .map(|m| m.accuracy)
            .fold(0.0, f64::max);
        assert_eq!(best, 1.0, "never reached 100% training accuracy");
        // Later loss beats the first epoch's.
        assert!(outcome.history.last().unwrap().loss < outcome.history[0].loss);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let ds = toy_two_class(4, 22);
        let cfg = ModelConfig {
            z: 10,
            ..ModelConfig::default()
        };
        let opts = TrainOptions {
            epochs: 5,
            batch: 4,
            seed: 7,
            ..TrainOptions::default()
        };
        let a = train(&ds, &cfg, &opts).unwrap();
        let b = train(&ds, &cfg, &opts).unwrap();
        for (x, y) in a.history.iter().zip(&b.history) {
            assert_eq!(x.loss.to_bits(), y.loss.to_bits());
            assert_eq!(x.accuracy, y.accuracy);
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let ds = toy_two_class(6, 23);
        let cfg = ModelConfig {
            z: 10,
            ..ModelConfig::default()
        };
        let base = TrainOptions {
            epochs: 3,
            batch: 4,
            seed: 9,
            ..TrainOptions::default()
        };
        let seq = train(&ds, &cfg, &base).unwrap();
        let par = train(&ds, &cfg, &TrainOptions { threads: 4, ..base }).unwrap();
        for (x, y) in seq.history.iter().zip(&par.history) {
            assert_eq!(x.loss.to_bits(), y.loss.to_bits());
        }
    }

    #[test]
    fn one_hot_datasets_get_default_input_adjacency() {
        // Two one-hot nodes with different labels: exp_l2 at the input
        // would weight the edge e^sqrt(2), the default input feature
        // weights it 1. evaluate() must resolve to the latter.
        let features = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let mut adj = Matrix::zeros(2, 2);
        adj[(0, 1)] = 1.0;
        adj[(1, 0)] = 1.0;
        let sample = GraphSample::new(features, adj, 0).unwrap();
        let ds = GraphDataset::new(
            vec![sample.clone()],
            vec!["a".into(), "b".into()],
            FeatureKind::OneHot,
        )
        .unwrap();

        let cfg = ModelConfig {
            z: 10,
            ..ModelConfig::default()
        };
        let params = ModelParams::init(&cfg, 2, 2, &mut Rng::new(1)).unwrap();
        let auto = evaluate(&ds, &params, &cfg, None).unwrap();

        let logits_with = |input: crate::gnn::EdgeScheme| {
            let pinned = ModelConfig {
                input_scheme: Some(input),
                ..cfg.clone()
            };
            let tape = crate::tensor::Tape::new();
            let bound = params.bind(&tape);
            let logits = forward(
                &tape,
                &bound,
                &sample,
                &pinned,
                None,
                &mut ForwardMode::Eval,
            )
            .unwrap();
            logits.softmax_cross_entropy(0).unwrap().item()
        };
        let default_one = logits_with(crate::gnn::EdgeScheme::DefaultOne);
        let exp_l2 = logits_with(crate::gnn::EdgeScheme::ExpL2);
        assert_ne!(default_one.to_bits(), exp_l2.to_bits());
        assert_eq!(auto.mean_loss.to_bits(), default_one.to_bits());
    }

    #[test]
    fn non_finite_loss_aborts_with_location() {
        // Rows far enough apart that e^{||.||^2} overflows in the forward
        // pass; the abort must carry the epoch/batch/sample coordinates.
        let huge = Matrix::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![40.0, 40.0, 40.0],
            vec![80.0, 80.0, 80.0],
        ]);
        let small = Matrix::filled(3, 3, 0.1);
        let mut adj = Matrix::filled(3, 3, 1.0);
        for i in 0..3 {
            adj[(i, i)] = 0.0;
        }
        let ds = GraphDataset::new(
            vec![
                GraphSample::new(small, adj.clone(), 0).unwrap(),
                GraphSample::new(huge, adj, 1).unwrap(),
            ],
            vec!["a".into(), "b".into()],
            FeatureKind::Position3d,
        )
        .unwrap();
        let cfg = ModelConfig {
            z: 10,
            edge_scheme: crate::gnn::EdgeScheme::ExpL2Squared,
            ..ModelConfig::default()
        };
        let opts = TrainOptions {
            epochs: 1,
            batch: 2,
            seed: 0,
            ..TrainOptions::default()
        };
        match train(&ds, &cfg, &opts) {
            Err(Error::NonFiniteLoss {
                epoch,
                batch,
                sample,
            }) => {
                assert_eq!(epoch, 1);
                assert_eq!(batch, 0);
                assert!(sample < 2);
            }
            other => panic!("expected NonFiniteLoss, got {other:?}"),
        }
    }

    #[test]
    fn evaluate_counts_confusion() {
        let ds = toy_two_class(3, 24);
        let cfg = ModelConfig {
            z: 10,
            ..ModelConfig::default()
        };
        let params = ModelParams::init(&cfg, 3, 2, &mut Rng::substream(0, "init", &[])).unwrap();
        let report = evaluate(&ds, &params, &cfg, None).unwrap();
        let total: usize = report.confusion.iter().flatten().sum();
        assert_eq!(total, ds.len());
        assert!((0.0..=1.0).contains(&report.accuracy));
    }
}
