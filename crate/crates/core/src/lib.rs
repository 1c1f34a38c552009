//! Collaborative filtering on learned sparse user graphs.
//!
//! The classic neighborhood recommender predicts ratings by a weighted sum
//! over a fixed-k nearest-neighbor user graph. This crate instead learns the
//! user graph: it starts from a very sparse kNN base graph and greedily adds
//! the edges that most increase a log-determinant / smoothness / l1
//! objective over the rating signals, yielding a graph that is sparse yet
//! informative. Prediction, error metrics, and a benchmark harness that
//! compares the learned graph against the kNN sweep complete the pipeline.
//!
//! Module map:
//! - [`ingest`]: rating-file parsing, index remapping, seeded splits, the
//!   sparse interaction matrix.
//! - [`graph`]: weighted graphs, Laplacian/precision operators, smoothness,
//!   the learning objective, effective resistance.
//! - [`learn`]: kNN base-graph construction, spectral embeddings, candidate
//!   scoring, and the refinement loop.
//! - [`predict`]: user-based and item-based rating prediction with explicit
//!   fallback semantics.
//! - [`evalbench`]: MAE/RMSE, the kNN sweep, the learned-graph experiment,
//!   report emission.
//! - [`synth`]: a seeded synthetic ratings generator for tests and
//!   benchmarks when no real dataset is on disk.

pub mod error;
pub mod evalbench;
pub mod graph;
pub mod ingest;
pub mod learn;
pub mod predict;
pub mod synth;

pub use error::{Error, Result};
