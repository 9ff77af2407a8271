//! Semantic-graph construction from point clouds and a spectral graph
//! convolutional classifier with per-layer learned edge features.
//!
//! The pipeline has two halves:
//!
//! 1. **Graph construction** - register an unlabeled point cloud against a
//!    part-labeled template with ICP ([`registration`]), transfer the part
//!    labels, split every part into spatially connected sub-parts and
//!    collapse each sub-part to its centroid ([`partition`]). The centroids
//!    become the nodes of a complete directed graph.
//! 2. **Classification** - a four-layer graph convolution network over a
//!    row-normalized weighted adjacency, where the edge weights are
//!    recomputed from the node representations at every layer and optionally
//!    adjusted by lightweight add-on layers ([`gnn`]). Training runs on a
//!    minimal reverse-mode autodiff engine ([`tensor`]).
//!
//! [`data`] covers dataset serialization, TU-format ingestion and k-fold
//! cross-validation plans.

pub mod data;
pub mod error;
pub mod gnn;
pub mod matrix;
pub mod partition;
pub mod pointcloud;
pub mod registration;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result, TensorError};
