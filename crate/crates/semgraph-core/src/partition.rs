//! Splitting labeled parts into spatially connected sub-parts and
//! assembling the semantic graph.
//!
//! A part's points are adjacent when their distance is at most the threshold
//! tau. Depth-first search over that neighborhood relation yields the
//! sub-parts; each sub-part collapses to its centroid, which becomes one
//! node of a complete directed graph.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pointcloud::{Point3, PointCloud};

/// Binary adjacency of points within a part under threshold `tau`
/// (distance <= tau), diagonal fixed to 1.
#[derive(Clone, Debug)]
pub struct NeighborhoodMatrix {
    n: usize,
    entries: Vec<bool>,
    threshold: f64,
}

impl NeighborhoodMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }
}

pub fn build_neighborhood(part_points: &[Point3], tau: f64) -> Result<NeighborhoodMatrix> {
    if part_points.is_empty() {
        return Err(Error::InvalidArgument("empty part".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be > 0, got {tau}"
        )));
    }
    let n = part_points.len();
    let mut entries = vec![false; n * n];
    for i in 0..n {
        entries[i * n + i] = true;
        for j in (i + 1)..n {
            if part_points[i].dist(part_points[j]) <= tau {
                entries[i * n + j] = true;
                entries[j * n + i] = true;
            }
        }
    }
    Ok(NeighborhoodMatrix {
        n,
        entries,
        threshold: tau,
    })
}

/// Connected components of the neighborhood graph as sorted index lists,
/// ordered by smallest contained index. Iterative DFS with an explicit
/// stack; parts can hold the full 1,024-point clouds.
pub fn connected_components(m: &NeighborhoodMatrix) -> Vec<Vec<usize>> {
    let n = m.n();
    let mut visited = vec![false; n];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        stack.push(seed);
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..n {
                if m.is_adjacent(i, j) && !visited[j] {
                    visited[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// Split a part into its spatially connected sub-parts, each returned as the
/// original points. Component order follows the smallest original index.
pub fn split_subparts(part_points: &[Point3], tau: f64) -> Result<Vec<Vec<Point3>>> {
    let m = build_neighborhood(part_points, tau)?;
    Ok(connected_components(&m)
        .into_iter()
        .map(|comp| comp.into_iter().map(|i| part_points[i]).collect())
        .collect())
}

/// Arithmetic mean of the part's points.
pub fn extract_node(part_points: &[Point3]) -> Point3 {
    assert!(!part_points.is_empty(), "extract_node on empty part");
    let mut acc = Point3::zero();
    for &p in part_points {
        acc = acc.add(p);
    }
    acc.scale(1.0 / part_points.len() as f64)
}

/// Part-centroid graph: one node per (label, connected sub-part) pair, with
/// a complete directed adjacency (self-loops excluded; the model adds them).
/// `part_labels` keeps each node's originating part label as metadata; node
/// features are the positions only.
#[derive(Clone, Debug)]
pub struct SemanticGraph {
    pub node_positions: Vec<Point3>,
    pub part_labels: Vec<i64>,
    pub class_label: usize,
    pub adjacency: Matrix,
}

impl SemanticGraph {
    pub fn node_count(&self) -> usize {
        self.node_positions.len()
    }
}

fn complete_adjacency(n: usize) -> Matrix {
    let mut a = Matrix::filled(n, n, 1.0);
    for i in 0..n {
        a[(i, i)] = 0.0;
    }
    a
}

/// Group a labeled cloud by part label, split every group into connected
/// sub-parts under `tau`, and take one centroid node per sub-part.
pub fn build_graph(cloud: &PointCloud, tau: f64, class_label: usize) -> Result<SemanticGraph> {
    let labels = cloud
        .labels()
        .ok_or_else(|| Error::InvalidArgument("cloud has no part labels".into()))?;

    // BTreeMap keeps label groups in ascending label order; within a group
    // points keep their original order, so component order is stable.
    let mut groups: BTreeMap<i64, Vec<Point3>> = BTreeMap::new();
    for (&p, &l) in cloud.points().iter().zip(labels) {
        groups.entry(l).or_default().push(p);
    }

    let mut node_positions = Vec::new();
    let mut part_labels = Vec::new();
    for (&label, points) in &groups {
        for subpart in split_subparts(points, tau)? {
            node_positions.push(extract_node(&subpart));
            part_labels.push(label);
        }
    }

    let n = node_positions.len();
    Ok(SemanticGraph {
        node_positions,
        part_labels,
        class_label,
        adjacency: complete_adjacency(n),
    })
}
