//! Spectral co-clustering for directed and bipartite graphs.
//!
//! The crate builds a regularized Laplacian from a sparse graph, extracts its
//! top singular subspaces with a seeded iterative solver, and clusters the
//! (optionally row-normalized) embeddings with k-means++ to produce separate
//! sending and receiving partitions. Alongside the estimation pipeline it
//! ships exact samplers for degree-corrected co-blockmodels and evaluators
//! for the population quantities those models imply, so estimated output can
//! be scored against planted structure.

pub mod error;
pub mod eval;
pub mod graph;
pub mod kmeans;
pub mod laplacian;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
pub use eval::{
    BoundConstants, BoundReport, ConcentrationReport, MisclusterReport,
};
pub use graph::{GraphKind, LoadOptions, LoadedGraph, SparseGraph, SparseMatrix};
pub use kmeans::KMeansResult;
pub use laplacian::{Laplacian, TauPolicy};
pub use model::{BlockModel, ModelSpec, Planted, PopulationObjects};
pub use pipeline::{
    BlockConnectivity, CoClustering, ConnectivityMode, DisimOptions, MovementReport, VariantRecord,
};
pub use spectral::Embedding;
pub use sweep::{SweepOutcome, SweepRow, SweepSpec};

/// Derives an independent child seed from a base seed and a salt, so nested
/// components (restarts, repetitions, sweep cells) get decorrelated streams.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut x = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
