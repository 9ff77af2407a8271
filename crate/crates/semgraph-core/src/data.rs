//! Graph dataset types, serialization, TU-format ingestion and k-fold
//! cross-validation plans.
//!
//! Constructed datasets are stored in the line-oriented `SEMGRAPH v1` text
//! format:
//!
//! ```text
//! SEMGRAPH v1
//! classes <C>
//! class <name>            (optional, C lines; defaults to "0".."C-1")
//! features <kind>         (optional: position3d | one_hot; default position3d)
//! graph <n> <label>
//! <n node feature lines, whitespace-separated reals>
//! complete                (or n adjacency rows of 0/1)
//! ...
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::partition::SemanticGraph;
use crate::rng::Rng;

/// What the node feature rows mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    /// 3-D part-centroid positions from constructed graphs.
    Position3d,
    /// One-hot encoded node labels (TU datasets).
    OneHot,
}

impl FeatureKind {
    fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Position3d => "position3d",
            FeatureKind::OneHot => "one_hot",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "position3d" => Some(FeatureKind::Position3d),
            "one_hot" => Some(FeatureKind::OneHot),
            _ => None,
        }
    }
}

/// One graph: node features, binary base adjacency (zero diagonal; the
/// model adds self-loops) and a class label.
#[derive(Clone, Debug)]
pub struct GraphSample {
    pub node_features: Matrix,
    pub base_adjacency: Matrix,
    pub label: usize,
}

impl GraphSample {
    pub fn new(node_features: Matrix, base_adjacency: Matrix, label: usize) -> Result<Self> {
        let n = node_features.rows();
        if n == 0 {
            return Err(Error::InvalidArgument("graph with no nodes".into()));
        }
        if base_adjacency.shape() != (n, n) {
            return Err(Error::InvalidArgument(format!(
                "adjacency {:?} does not match {n} nodes",
                base_adjacency.shape()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = base_adjacency[(i, j)];
                if i == j && v != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "self-loop on node {i}; base adjacency must have a zero diagonal"
                    )));
                }
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "adjacency entry ({i},{j}) = {v} is not binary"
                    )));
                }
            }
        }
        if !node_features.is_finite() {
            return Err(Error::InvalidArgument("non-finite node features".into()));
        }
        Ok(GraphSample {
            node_features,
            base_adjacency,
            label,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_features.rows()
    }
}

#[derive(Clone, Debug)]
pub struct GraphDataset {
    pub samples: Vec<GraphSample>,
    pub class_names: Vec<String>,
    pub feature_kind: FeatureKind,
}

impl GraphDataset {
    pub fn new(
        samples: Vec<GraphSample>,
        class_names: Vec<String>,
        feature_kind: FeatureKind,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("empty dataset".into()));
        }
        if class_names.is_empty() {
            return Err(Error::InvalidArgument("no classes".into()));
        }
        let width = samples[0].node_features.cols();
        for (i, s) in samples.iter().enumerate() {
            if s.label >= class_names.len() {
                return Err(Error::InvalidArgument(format!(
                    "graph {i}: label {} out of range for {} classes",
                    s.label,
                    class_names.len()
                )));
            }
            if s.node_features.cols() != width {
                return Err(Error::InvalidArgument(format!(
                    "graph {i}: feature width {} differs from {width}",
                    s.node_features.cols()
                )));
            }
        }
        if feature_kind == FeatureKind::Position3d && width != 3 {
            return Err(Error::InvalidArgument(format!(
                "position3d features must have width 3, got {width}"
            )));
        }
        Ok(GraphDataset {
            samples,
            class_names,
            feature_kind,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_width(&self) -> usize {
        self.samples[0].node_features.cols()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: non-empty
    }
}

fn canonical_names(c: usize) -> Vec<String> {
    (0..c).map(|i| i.to_string()).collect()
}

/// Position-feature dataset from constructed semantic graphs.
pub fn dataset_from_graphs(
    graphs: &[SemanticGraph],
    class_names: Vec<String>,
) -> Result<GraphDataset> {
    let samples = graphs
        .iter()
        .map(|g| {
            let mut f = Matrix::zeros(g.node_count(), 3);
            for (i, p) in g.node_positions.iter().enumerate() {
                f[(i, 0)] = p.x;
                f[(i, 1)] = p.y;
                f[(i, 2)] = p.z;
            }
            GraphSample::new(f, g.adjacency.clone(), g.class_label)
        })
        .collect::<Result<Vec<_>>>()?;
    GraphDataset::new(samples, class_names, FeatureKind::Position3d)
}

fn is_complete(adj: &Matrix) -> bool {
    let n = adj.rows();
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 0.0 } else { 1.0 };
            if adj[(i, j)] != expect {
                return false;
            }
        }
    }
    true
}

pub fn save_dataset(ds: &GraphDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    writeln!(out, "SEMGRAPH v1").expect("string write");
    writeln!(out, "classes {}", ds.num_classes()).expect("string write");
    if ds.class_names != canonical_names(ds.num_classes()) {
        for name in &ds.class_names {
            writeln!(out, "class {name}").expect("string write");
        }
    }
    if ds.feature_kind != FeatureKind::Position3d {
        writeln!(out, "features {}", ds.feature_kind.as_str()).expect("string write");
    }
    for s in &ds.samples {
        writeln!(out, "graph {} {}", s.node_count(), s.label).expect("string write");
        for i in 0..s.node_count() {
            let row = s
                .node_features
                .row(i)
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(out, "{row}").expect("string write");
        }
        if is_complete(&s.base_adjacency) {
            writeln!(out, "complete").expect("string write");
        } else {
            for i in 0..s.node_count() {
                let row = s
                    .base_adjacency
                    .row(i)
                    .iter()
                    .map(|v| (*v as i64).to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                writeln!(out, "{row}").expect("string write");
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<GraphDataset> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(name.clone(), e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();

    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(&name, 1, "empty file"))?;
    if header != "SEMGRAPH v1" {
        if header.starts_with("SEMGRAPH") {
            return Err(Error::parse(
                &name,
                hline,
                format!("unsupported version {header:?}"),
            ));
        }
        return Err(Error::parse(&name, hline, "missing SEMGRAPH header"));
    }

    let (cline, classes_line) = lines
        .next()
        .ok_or_else(|| Error::parse(&name, hline, "missing classes line"))?;
    let classes: usize = classes_line
        .strip_prefix("classes ")
        .and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| Error::parse(&name, cline, "expected `classes <count>`"))?;
    if classes == 0 {
        return Err(Error::parse(&name, cline, "classes must be >= 1"));
    }

    let mut class_names = Vec::new();
    let mut feature_kind = FeatureKind::Position3d;
    loop {
        match lines.peek() {
            Some(&(lno, l)) if l.starts_with("class ") => {
                class_names.push(l["class ".len()..].trim().to_string());
                if class_names.len() > classes {
                    return Err(Error::parse(&name, lno, "more class names than classes"));
                }
                lines.next();
            }
            Some(&(lno, l)) if l.starts_with("features ") => {
                feature_kind = FeatureKind::parse(l["features ".len()..].trim())
                    .ok_or_else(|| Error::parse(&name, lno, "unknown feature kind"))?;
                lines.next();
            }
            _ => break,
        }
    }
    if class_names.is_empty() {
        class_names = canonical_names(classes);
    } else if class_names.len() != classes {
        return Err(Error::parse(
            &name,
            cline,
            format!("{} class names for {classes} classes", class_names.len()),
        ));
    }

    let mut samples = Vec::new();
    while let Some((gline, gheader)) = lines.next() {
        let fields: Vec<&str> = gheader.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "graph" {
            return Err(Error::parse(&name, gline, "expected `graph <n> <label>`"));
        }
        let n: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(&name, gline, "invalid node count"))?;
        if n == 0 {
            return Err(Error::parse(&name, gline, "graph with zero nodes"));
        }
        let label: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(&name, gline, "invalid label"))?;
        if label >= classes {
            return Err(Error::parse(
                &name,
                gline,
                format!(
                    "graph {}: label {label} out of range for {classes} classes",
                    samples.len()
                ),
            ));
        }

        let mut feature_rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        for _ in 0..n {
            let (fline, frow) = lines
                .next()
                .ok_or_else(|| Error::parse(&name, gline, "truncated node block"))?;
            let row = frow
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::parse(&name, fline, format!("invalid feature {v:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = feature_rows.first() {
                if row.len() != first.len() {
                    return Err(Error::parse(&name, fline, "ragged feature rows"));
                }
            }
            feature_rows.push(row);
        }
        let features = Matrix::from_rows(&feature_rows);

        let (aline, arow) = lines
            .next()
            .ok_or_else(|| Error::parse(&name, gline, "truncated adjacency block"))?;
        let adjacency = if arow == "complete" {
            let mut a = Matrix::filled(n, n, 1.0);
            for i in 0..n {
                a[(i, i)] = 0.0;
            }
            a
        } else {
            let mut a = Matrix::zeros(n, n);
            let fill_row = |i: usize, lno: usize, row: &str, a: &mut Matrix| -> Result<()> {
                let vals: Vec<&str> = row.split_whitespace().collect();
                if vals.len() != n {
                    return Err(Error::parse(
                        &name,
                        lno,
                        format!("expected {n} adjacency entries, found {}", vals.len()),
                    ));
                }
                for (j, v) in vals.iter().enumerate() {
                    a[(i, j)] = match *v {
                        "0" => 0.0,
                        "1" => 1.0,
                        other => {
                            return Err(Error::parse(
                                &name,
                                lno,
                                format!("non-binary entry {other:?}"),
                            ))
                        }
                    };
                }
                Ok(())
            };
            fill_row(0, aline, arow, &mut a)?;
            for i in 1..n {
                let (lno, row) = lines
                    .next()
                    .ok_or_else(|| Error::parse(&name, aline, "truncated adjacency block"))?;
                fill_row(i, lno, row, &mut a)?;
            }
            a
        };

        samples.push(
            GraphSample::new(features, adjacency, label)
                .map_err(|e| Error::parse(&name, gline, e.to_string()))?,
        );
    }

    GraphDataset::new(samples, class_names, feature_kind)
}

/// A TU-format load: the dataset plus non-fatal warnings (self-loop edges
/// dropped, labels outside a declared alphabet).
#[derive(Debug)]
pub struct TuLoad {
    pub dataset: GraphDataset,
    pub warnings: Vec<String>,
}

/// Load a TU Dortmund benchmark dataset from `dir`, reading
/// `<name>_A.txt`, `<name>_graph_indicator.txt`, `<name>_graph_labels.txt`
/// and `<name>_node_labels.txt`. Node labels are one-hot encoded over the
/// observed alphabet, graph labels are remapped to dense 0-based indices and
/// edges are symmetrized when listed once.
pub fn load_tu(dir: impl AsRef<Path>, name: &str) -> Result<TuLoad> {
    load_tu_with_alphabet(dir, name, None)
}

/// Like [`load_tu`] but with a declared node-label alphabet. Labels outside
/// the alphabet widen the one-hot encoding and emit a warning.
pub fn load_tu_with_alphabet(
    dir: impl AsRef<Path>,
    name: &str,
    alphabet: Option<&[i64]>,
) -> Result<TuLoad> {
    let dir = dir.as_ref();
    let read = |suffix: &str| -> Result<(String, String)> {
        let path = dir.join(format!("{name}_{suffix}.txt"));
        let text =
            fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok((path.display().to_string(), text))
    };

    let (a_name, a_text) = read("A")?;
    let (ind_name, ind_text) = read("graph_indicator")?;
    let (gl_name, gl_text) = read("graph_labels")?;
    let (nl_name, nl_text) = read("node_labels")?;

    let parse_ints = |fname: &str, text: &str| -> Result<Vec<i64>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::parse(fname, i + 1, format!("invalid integer {l:?}")))
            })
            .collect()
    };

    let indicator = parse_ints(&ind_name, &ind_text)?;
    let node_labels = parse_ints(&nl_name, &nl_text)?;
    let graph_labels = parse_ints(&gl_name, &gl_text)?;

    let n_nodes = indicator.len();
    if node_labels.len() != n_nodes {
        return Err(Error::InvalidArgument(format!(
            "{nl_name}: {} node labels for {n_nodes} nodes",
            node_labels.len()
        )));
    }
    let n_graphs = graph_labels.len();
    for (i, &g) in indicator.iter().enumerate() {
        if g < 1 || g as usize > n_graphs {
            return Err(Error::parse(
                &ind_name,
                i + 1,
                format!("graph indicator {g} outside 1..={n_graphs}"),
            ));
        }
    }

    // Local node index within each graph, in global node order.
    let mut graph_sizes = vec![0usize; n_graphs];
    let mut local_index = vec![0usize; n_nodes];
    for (i, &g) in indicator.iter().enumerate() {
        let g = g as usize - 1;
        local_index[i] = graph_sizes[g];
        graph_sizes[g] += 1;
    }
    if let Some(empty) = graph_sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidArgument(format!(
            "{ind_name}: graph {} has no nodes",
            empty + 1
        )));
    }

    let mut warnings = Vec::new();

    // One-hot alphabet: declared or observed, widened on demand.
    let mut alpha: Vec<i64> = match alphabet {
        Some(a) => a.to_vec(),
        None => {
            let mut obs: Vec<i64> = node_labels.clone();
            obs.sort_unstable();
            obs.dedup();
            obs
        }
    };
    for &l in &node_labels {
        if !alpha.contains(&l) {
            warnings.push(format!(
                "node label {l} outside the declared alphabet; widening one-hot encoding"
            ));
            alpha.push(l);
        }
    }
    let hot = |label: i64| {
        alpha
            .iter()
            .position(|&a| a == label)
            .expect("label in alphabet")
    };

    let mut adjacencies: Vec<Matrix> = graph_sizes.iter().map(|&s| Matrix::zeros(s, s)).collect();
    let mut dropped_self_loops = 0usize;
    for (lineno, line) in a_text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cleaned = line.replace(',', " ");
        let fields: Vec<&str> = cleaned.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(&a_name, lineno + 1, "expected `u, v` edge"));
        }
        let parse_node = |f: &str| -> Result<usize> {
            let v: i64 = f
                .parse()
                .map_err(|_| Error::parse(&a_name, lineno + 1, format!("invalid node id {f:?}")))?;
            if v < 1 || v as usize > n_nodes {
                return Err(Error::parse(
                    &a_name,
                    lineno + 1,
                    format!("node id {v} outside 1..={n_nodes}"),
                ));
            }
            Ok(v as usize - 1)
        };
        let u = parse_node(fields[0])?;
        let v = parse_node(fields[1])?;
        if indicator[u] != indicator[v] {
            return Err(Error::parse(
                &a_name,
                lineno + 1,
                format!(
                    "edge {}-{} crosses graphs {} and {}",
                    u + 1,
                    v + 1,
                    indicator[u],
                    indicator[v]
                ),
            ));
        }
        if u == v {
            dropped_self_loops += 1;
            continue;
        }
        let g = indicator[u] as usize - 1;
        let (lu, lv) = (local_index[u], local_index[v]);
        adjacencies[g][(lu, lv)] = 1.0;
        adjacencies[g][(lv, lu)] = 1.0;
    }
    if dropped_self_loops > 0 {
        warnings.push(format!("dropped {dropped_self_loops} self-loop edges"));
    }

    // Dense 0-based class labels, ordered by value.
    let mut distinct: Vec<i64> = graph_labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let class_of = |l: i64| distinct.iter().position(|&d| d == l).expect("label seen");

    let mut features: Vec<Matrix> = graph_sizes
        .iter()
        .map(|&s| Matrix::zeros(s, alpha.len()))
        .collect();
    for (i, &l) in node_labels.iter().enumerate() {
        let g = indicator[i] as usize - 1;
        features[g][(local_index[i], hot(l))] = 1.0;
    }

    let samples = features
        .into_iter()
        .zip(adjacencies)
        .zip(&graph_labels)
        .map(|((f, a), &l)| GraphSample::new(f, a, class_of(l)))
        .collect::<Result<Vec<_>>>()?;

    let dataset = GraphDataset::new(
        samples,
        distinct.iter().map(|l| l.to_string()).collect(),
        FeatureKind::OneHot,
    )?;
    Ok(TuLoad { dataset, warnings })
}

/// Assignment of every sample to one of `k` folds.
#[derive(Clone, Debug)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

/// Seeded shuffle followed by round-robin assignment, so fold sizes differ
/// by at most one. `stratified` shuffles and round-robins within each class
/// instead, keeping per-class proportions balanced across folds.
pub fn make_folds(ds: &GraphDataset, k: usize, seed: u64, stratified: bool) -> Result<FoldPlan> {
    let n = ds.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "fold count {k} must be >= 2"
        )));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count {k} exceeds sample count {n}"
        )));
    }
    let mut assignments = vec![0usize; n];
    if stratified {
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in ds.samples.iter().enumerate() {
            by_class.entry(s.label).or_default().push(i);
        }
        let mut counter = 0usize;
        for (c, members) in by_class {
            let mut rng = Rng::substream(seed, "folds", &[c as u64]);
            let mut members = members;
            rng.shuffle(&mut members);
            for i in members {
                assignments[i] = counter % k;
                counter += 1;
            }
        }
    } else {
        let mut rng = Rng::substream(seed, "folds", &[]);
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        for (pos, &i) in order.iter().enumerate() {
            assignments[i] = pos % k;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Fold `i` becomes the test set, the rest the training set.
pub fn split_by_fold(
    ds: &GraphDataset,
    plan: &FoldPlan,
    fold: usize,
) -> Result<(GraphDataset, GraphDataset)> {
    if plan.assignments.len() != ds.len() {
        return Err(Error::InvalidArgument(format!(
            "fold plan covers {} samples, dataset has {}",
            plan.assignments.len(),
            ds.len()
        )));
    }
    if fold >= plan.k {
        return Err(Error::InvalidArgument(format!(
            "fold {fold} out of range for k = {}",
            plan.k
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (s, &f) in ds.samples.iter().zip(&plan.assignments) {
        if f == fold {
            test.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    Ok((
        GraphDataset::new(train, ds.class_names.clone(), ds.feature_kind)?,
        GraphDataset::new(test, ds.class_names.clone(), ds.feature_kind)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dataset(n: usize, classes: usize) -> GraphDataset {
        let samples: Vec<GraphSample> = (0..n)
            .map(|i| {
                let nodes = 2 + i % 3;
                let mut adj = Matrix::filled(nodes, nodes, 1.0);
                for d in 0..nodes {
                    adj[(d, d)] = 0.0;
                }
                let mut f = Matrix::zeros(nodes, 3);
                for r in 0..nodes {
                    f[(r, 0)] = i as f64 + r as f64 * 0.25;
                    f[(r, 1)] = -(r as f64);
                    f[(r, 2)] = 0.125;
                }
                GraphSample::new(f, adj, i % classes).unwrap()
            })
            .collect();
        GraphDataset::new(samples, canonical_names(classes), FeatureKind::Position3d).unwrap()
    }

    #[test]
    fn save_load_round_trip_structural_identity() {
        let ds = toy_dataset(5, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.semgraph");
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.len(), ds.len());
        assert_eq!(back.class_names, ds.class_names);
        assert_eq!(back.feature_kind, ds.feature_kind);
        for (a, b) in back.samples.iter().zip(&ds.samples) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.node_features, b.node_features);
            assert_eq!(a.base_adjacency, b.base_adjacency);
        }
    }

    #[test]
    fn round_trip_keeps_class_names_and_sparse_adjacency() {
        let mut adj = Matrix::zeros(3, 3);
        adj[(0, 1)] = 1.0;
        adj[(1, 0)] = 1.0;
        let s = GraphSample::new(Matrix::filled(3, 2, 0.5), adj, 1).unwrap();
        let ds = GraphDataset::new(
            vec![s],
            vec!["airplane".into(), "table".into()],
            FeatureKind::OneHot,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.semgraph");
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.class_names, ds.class_names);
        assert_eq!(back.feature_kind, FeatureKind::OneHot);
        assert_eq!(back.samples[0].base_adjacency, ds.samples[0].base_adjacency);
    }

    #[test]
    fn label_out_of_range_is_a_parse_error_naming_the_graph() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.semgraph");
        std::fs::write(
            &path,
            "SEMGRAPH v1\nclasses 2\ngraph 1 2\n0 0 0\ncomplete\n",
        )
        .unwrap();
        let err = load_dataset(&path).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("label 2 out of range"), "{text}");
        assert!(text.contains("graph 0"), "{text}");
    }

    #[test]
    fn version_mismatch_and_truncation_are_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let v2 = dir.path().join("v2.semgraph");
        std::fs::write(&v2, "SEMGRAPH v2\nclasses 1\n").unwrap();
        assert!(load_dataset(&v2)
            .unwrap_err()
            .to_string()
            .contains("unsupported version"));

        let trunc = dir.path().join("trunc.semgraph");
        std::fs::write(&trunc, "SEMGRAPH v1\nclasses 1\ngraph 2 0\n0 0 0\n").unwrap();
        assert!(load_dataset(&trunc)
            .unwrap_err()
            .to_string()
            .contains("truncated"));
    }

    fn write_tu_fixture(dir: &Path) {
        // Graph 1: triangle on nodes 1..3 (edges listed once), label 1.
        // Graph 2: single edge 4-5, label -1.
        std::fs::write(dir.join("TOY_A.txt"), "1, 2\n2, 3\n1, 3\n4, 5\n").unwrap();
        std::fs::write(dir.join("TOY_graph_indicator.txt"), "1\n1\n1\n2\n2\n").unwrap();
        std::fs::write(dir.join("TOY_graph_labels.txt"), "1\n-1\n").unwrap();
        std::fs::write(dir.join("TOY_node_labels.txt"), "0\n1\n0\n2\n1\n").unwrap();
    }

    #[test]
    fn tu_fixture_loads_exactly() {
        let dir = tempfile::tempdir().unwrap();
        write_tu_fixture(dir.path());
        let TuLoad { dataset, warnings } = load_tu(dir.path(), "TOY").unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(dataset.len(), 2);
        assert_eq!(dataset.class_names, vec!["-1", "1"]);
        assert_eq!(dataset.feature_kind, FeatureKind::OneHot);

        // Alphabet {0, 1, 2} -> width 3 one-hots.
        let g1 = &dataset.samples[0];
        assert_eq!(g1.label, 1); // original label 1 -> dense index 1
        assert_eq!(g1.node_features.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(g1.node_features.row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(g1.node_features.row(2), &[1.0, 0.0, 0.0]);
        // Triangle, symmetrized from single listings.
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            assert_eq!(g1.base_adjacency[(i, j)], 1.0);
            assert_eq!(g1.base_adjacency[(j, i)], 1.0);
        }
        assert_eq!(g1.base_adjacency[(0, 0)], 0.0);

        let g2 = &dataset.samples[1];
        assert_eq!(g2.label, 0); // original label -1 -> dense index 0
        assert_eq!(g2.node_features.row(0), &[0.0, 0.0, 1.0]);
        assert_eq!(g2.node_features.row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(g2.base_adjacency[(0, 1)], 1.0);
        assert_eq!(g2.base_adjacency[(1, 0)], 1.0);
    }

    #[test]
    fn tu_edge_order_does_not_matter() {
        let d1 = tempfile::tempdir().unwrap();
        write_tu_fixture(d1.path());
        let d2 = tempfile::tempdir().unwrap();
        write_tu_fixture(d2.path());
        std::fs::write(d2.path().join("TOY_A.txt"), "4, 5\n1, 3\n2, 3\n1, 2\n").unwrap();
        let a = load_tu(d1.path(), "TOY").unwrap().dataset;
        let b = load_tu(d2.path(), "TOY").unwrap().dataset;
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.base_adjacency, y.base_adjacency);
            assert_eq!(x.node_features, y.node_features);
        }
    }

    #[test]
    fn tu_alphabet_widens_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        write_tu_fixture(dir.path());
        let TuLoad { dataset, warnings } =
            load_tu_with_alphabet(dir.path(), "TOY", Some(&[0, 1])).unwrap();
        assert_eq!(warnings.len(), 1, "{warnings:?}");
        assert!(warnings[0].contains("widening"));
        assert_eq!(dataset.feature_width(), 3); // widened to cover label 2
    }

    #[test]
    fn tu_missing_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_tu(dir.path(), "NOPE"), Err(Error::Io { .. })));
    }

    #[test]
    fn tu_crossing_edge_errors() {
        let dir = tempfile::tempdir().unwrap();
        write_tu_fixture(dir.path());
        std::fs::write(dir.path().join("TOY_A.txt"), "1, 4\n").unwrap();
        let err = load_tu(dir.path(), "TOY").unwrap_err();
        assert!(err.to_string().contains("crosses graphs"), "{err}");
    }

    #[test]
    fn folds_partition_and_balance() {
        let ds = toy_dataset(23, 2);
        let plan = make_folds(&ds, 10, 5, false).unwrap();
        assert_eq!(plan.assignments.len(), 23);

        let mut sizes = vec![0usize; 10];
        for &f in &plan.assignments {
            assert!(f < 10);
            sizes[f] += 1;
        }
        let mut sorted = sizes.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![2, 2, 2, 2, 2, 2, 2, 3, 3, 3]);

        // Union of test folds covers the dataset exactly once.
        let mut covered = 0;
        for fold in 0..10 {
            let (train, test) = split_by_fold(&ds, &plan, fold).unwrap();
            assert_eq!(train.len() + test.len(), 23);
            covered += test.len();
        }
        assert_eq!(covered, 23);
    }

    #[test]
    fn folds_one_sample_each_when_k_equals_n() {
        let ds = toy_dataset(10, 2);
        let plan = make_folds(&ds, 10, 0, false).unwrap();
        let mut sizes = vec![0usize; 10];
        for &f in &plan.assignments {
            sizes[f] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 1));
    }

    #[test]
    fn folds_reject_bad_k() {
        let ds = toy_dataset(5, 2);
        assert!(make_folds(&ds, 6, 0, false).is_err());
        assert!(make_folds(&ds, 1, 0, false).is_err());
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let ds = toy_dataset(40, 2); // alternating labels, 20 per class
        let plan = make_folds(&ds, 10, 3, true).unwrap();
        for fold in 0..10 {
            let (_, test) = split_by_fold(&ds, &plan, fold).unwrap();
            let c0 = test.samples.iter().filter(|s| s.label == 0).count();
            let c1 = test.samples.iter().filter(|s| s.label == 1).count();
            assert_eq!(c0, 2, "fold {fold}");
            assert_eq!(c1, 2, "fold {fold}");
        }
    }
}
