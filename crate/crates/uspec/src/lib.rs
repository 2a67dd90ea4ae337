//! Scalable spectral and ensemble clustering over bipartite representative
//! graphs.
//!
//! The single-shot pipeline ([`uspec`]) selects a small set of
//! representatives, connects every object to its approximate K nearest
//! representatives with a sparse Gaussian affinity, and partitions the
//! resulting bipartite graph through a transfer cut that reduces the
//! (N+p)-node eigenproblem to a p-node one. The ensemble pipeline
//! ([`usenc`]) runs m diversified instances of the single-shot pipeline and
//! partitions the object-by-cluster consensus graph the same way.
//!
//! Everything is deterministic for a fixed master seed, independent of
//! thread count.

pub mod affinity;
pub mod config;
pub mod data;
pub mod datagen;
mod dist;
pub mod error;
pub mod eval;
pub mod kmeans;
pub mod represent;
pub mod rng;
pub mod sparse;
pub mod tcut;
pub mod usenc;
pub mod uspec;

pub use crate::affinity::{
    approx_knn, approx_knn_all, build_affinity, build_rep_index, build_rep_index_with_z1,
    exact_knn, KnnMode, NeighborLists, RepClusterIndex,
};
pub use crate::config::{EffectiveConfig, RunConfig};
pub use crate::data::{
    load_dataset, load_labels, save_dataset, save_labels, DataFormat, Dataset, Labeling,
};
pub use crate::datagen::{generate, Family, SyntheticSpec};
pub use crate::dist::sq_euclidean;
pub use crate::error::{Error, Result};
pub use crate::eval::{clustering_accuracy, nmi, run_report, ContingencyTable, RunReport};
pub use crate::kmeans::{kmeans, kmeanspp_init, KMeansOptions, KMeansResult};
pub use crate::represent::{
    select_hybrid, select_kmeans, select_random, RepresentativeSet, Selection,
};
pub use crate::rng::{derive_seed, run_seed};
pub use crate::sparse::SparseAffinity;
pub use crate::tcut::{
    discretize, lift, reduce, solve_reduced, tcut, tcut_with, SpectralEmbedding, TcutOptions,
    TransferCutProblem,
};
pub use crate::usenc::{
    build_consensus_graph, draw_member_k, generate_ensemble, member_k_from_tau, usenc, usenc_with,
    Ensemble,
};
pub use crate::uspec::{uspec, uspec_with, ClusteringResult, PhaseTiming, PipelineOptions};
