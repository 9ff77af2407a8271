//! Shared helpers for the CLI integration and acceptance suites: synthetic
//! data generators and an independently coded backbone forward pass used as
//! the reference for the default configuration.

#![allow(dead_code)]

use semgraph_core::data::{FeatureKind, GraphDataset, GraphSample};
use semgraph_core::gnn::{ModelConfig, ModelParams};
use semgraph_core::matrix::Matrix;
use semgraph_core::pointcloud::{Point3, PointCloud};
use semgraph_core::registration::Mat3;
use semgraph_core::rng::Rng;

pub fn random_unit_ball_cloud(rng: &mut Rng, n: usize) -> Vec<Point3> {
    (0..n)
        .map(|_| loop {
            let p = Point3::new(
                rng.range_f64(-1.0, 1.0),
                rng.range_f64(-1.0, 1.0),
                rng.range_f64(-1.0, 1.0),
            );
            if p.norm() <= 1.0 {
                break p;
            }
        })
        .collect()
}

/// Object-like cloud: uniform in a box with distinct side lengths, randomly
/// oriented. Real scans are anisotropic; a perfectly isotropic ball is the
/// one shape whose principal axes carry no orientation signal.
pub fn random_object_cloud(rng: &mut Rng, n: usize) -> Vec<Point3> {
    let pose = random_rotation(rng, std::f64::consts::PI);
    (0..n)
        .map(|_| {
            pose.apply(Point3::new(
                rng.range_f64(-1.0, 1.0),
                rng.range_f64(-0.55, 0.55),
                rng.range_f64(-0.3, 0.3),
            ))
        })
        .collect()
}

/// Connected sparse graph: a ring plus a few random chords.
pub fn ring_with_chords(rng: &mut Rng, n: usize) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
    }
    for _ in 0..n / 3 {
        let i = rng.below(n);
        let j = rng.below(n);
        if i != j {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
    }
    a
}

pub fn random_rotation(rng: &mut Rng, max_angle: f64) -> Mat3 {
    let axis = loop {
        let a = Point3::new(rng.normal(), rng.normal(), rng.normal());
        if a.norm() > 1e-6 {
            break a;
        }
    };
    Mat3::rotation(axis, rng.range_f64(0.0, max_angle))
}

pub fn random_translation(rng: &mut Rng, max_norm: f64) -> Point3 {
    let dir = loop {
        let d = Point3::new(rng.normal(), rng.normal(), rng.normal());
        if d.norm() > 1e-6 {
            break d.scale(1.0 / d.norm());
        }
    };
    dir.scale(rng.range_f64(0.0, max_norm))
}

/// Multi-part labeled cloud: `parts` well-separated blobs, each with its own
/// part label, plus per-point ground truth.
pub fn labeled_blob_cloud(rng: &mut Rng, parts: usize, points_per_part: usize) -> PointCloud {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for part in 0..parts {
        let center = Point3::new(3.0 * part as f64, 0.5 * (part % 2) as f64, 0.0);
        for _ in 0..points_per_part {
            points.push(center.add(Point3::new(
                rng.range_f64(-0.35, 0.35),
                rng.range_f64(-0.35, 0.35),
                rng.range_f64(-0.35, 0.35),
            )));
            labels.push(part as i64);
        }
    }
    PointCloud::with_labels(points, labels).unwrap()
}

fn complete_adjacency(n: usize) -> Matrix {
    let mut a = Matrix::filled(n, n, 1.0);
    for i in 0..n {
        a[(i, i)] = 0.0;
    }
    a
}

pub fn complete_sample(features: Matrix, label: usize) -> GraphSample {
    let n = features.rows();
    GraphSample::new(features, complete_adjacency(n), label).unwrap()
}

/// Two separable graph families: class 0 graphs are small and tight, class 1
/// graphs have more nodes and a wider spread.
pub fn separable_families(rng: &mut Rng, per_class: usize) -> GraphDataset {
    let mut samples = Vec::new();
    for class in 0..2usize {
        for _ in 0..per_class {
            let (nodes, spread, base) = if class == 0 {
                (4 + rng.below(3), 0.25, 0.0)
            } else {
                (8 + rng.below(3), 0.9, 0.4)
            };
            let mut f = Matrix::zeros(nodes, 3);
            for v in f.data_mut() {
                *v = base + rng.range_f64(-spread, spread);
            }
            samples.push(complete_sample(f, class));
        }
    }
    GraphDataset::new(
        samples,
        vec!["tight".into(), "spread".into()],
        FeatureKind::Position3d,
    )
    .unwrap()
}

pub fn random_complete_sample(rng: &mut Rng, n: usize, label: usize) -> GraphSample {
    let mut f = Matrix::zeros(n, 3);
    for v in f.data_mut() {
        *v = rng.range_f64(-1.0, 1.0);
    }
    complete_sample(f, label)
}

// --- Independently coded backbone forward -------------------------------
//
// The reference path for edge_scheme = default_one, addon disabled, row
// normalization, tanh convolutions. Hand-rolled loops throughout (no tape,
// no shared matrix kernels beyond storage) with the same summation orders
// the engine documents, so agreement must be bit-for-bit.

fn bb_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0.0;
            for k in 0..a.cols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn bb_tanh(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for v in out.data_mut() {
        *v = v.tanh();
    }
    out
}

fn bb_relu_bias(m: &Matrix, bias: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m[(i, j)] + bias[(0, j)];
            out[(i, j)] = if v > 0.0 { v } else { 0.0 };
        }
    }
    out
}

pub fn backbone_forward(sample: &GraphSample, params: &ModelParams, cfg: &ModelConfig) -> Matrix {
    let n = sample.node_count();

    // Self-loop-augmented binary adjacency, row normalized: a[i][j] / deg[i].
    let mut mask = sample.base_adjacency.clone();
    for i in 0..n {
        mask[(i, i)] = 1.0;
    }
    let mut an = Matrix::zeros(n, n);
    for i in 0..n {
        let mut deg = 0.0;
        for j in 0..n {
            deg += mask[(i, j)];
        }
        for j in 0..n {
            an[(i, j)] = mask[(i, j)] / deg;
        }
    }

    // Stacked convolutions H_{k+1} = tanh((An . H) . W).
    let mut hidden: Vec<Matrix> = Vec::new();
    let mut h = sample.node_features.clone();
    for w in &params.conv_w {
        h = bb_tanh(&bb_matmul(&bb_matmul(&an, &h), w));
        hidden.push(h.clone());
    }

    // Column-wise concatenation.
    let total_width: usize = hidden.iter().map(|m| m.cols()).sum();
    let mut concat = Matrix::zeros(n, total_width);
    let mut offset = 0;
    for m in &hidden {
        for i in 0..n {
            for j in 0..m.cols() {
                concat[(i, offset + j)] = m[(i, j)];
            }
        }
        offset += m.cols();
    }

    // SortPooling: descending lexicographic from the last column, then
    // original index; pad with zero rows up to z.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        for c in (0..total_width).rev() {
            match concat[(b, c)].partial_cmp(&concat[(a, c)]).unwrap() {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        a.cmp(&b)
    });
    let mut pooled = Matrix::zeros(cfg.z, total_width);
    for (r, &src) in order.iter().take(cfg.z).enumerate() {
        for j in 0..total_width {
            pooled[(r, j)] = concat[(src, j)];
        }
    }

    // Readout: width-F conv as a row-wise linear map, maxpool over adjacent
    // rows, kernel-5 conv across positions, dense, output.
    let c1 = bb_relu_bias(&bb_matmul(&pooled, &params.conv1_w), &params.conv1_b);

    let half = c1.rows() / 2;
    let mut p1 = Matrix::zeros(half, c1.cols());
    for r in 0..half {
        for j in 0..c1.cols() {
            let a = c1[(2 * r, j)];
            let b = c1[(2 * r + 1, j)];
            p1[(r, j)] = if b > a { b } else { a };
        }
    }

    let kernel = 5;
    let out_len = p1.rows() + 1 - kernel;
    let chans = p1.cols();
    let mut windows = Matrix::zeros(out_len, kernel * chans);
    for r in 0..out_len {
        for d in 0..kernel {
            for c in 0..chans {
                windows[(r, d * chans + c)] = p1[(r + d, c)];
            }
        }
    }
    let c2 = bb_relu_bias(&bb_matmul(&windows, &params.conv2_w), &params.conv2_b);

    let mut flat = Matrix::zeros(1, out_len * c2.cols());
    for r in 0..out_len {
        for c in 0..c2.cols() {
            flat[(0, r * c2.cols() + c)] = c2[(r, c)];
        }
    }
    let d1 = bb_relu_bias(&bb_matmul(&flat, &params.dense_w), &params.dense_b);

    let mut logits = bb_matmul(&d1, &params.out_w);
    for j in 0..logits.cols() {
        logits[(0, j)] += params.out_b[(0, j)];
    }
    logits
}
