//! Language networks induced from word-embedding spaces.
//!
//! Words become nodes; edges join each word to its exact nearest neighbors
//! ([`graph::induce_knn_graph`]) or to every word within a distance threshold
//! ([`graph::induce_proximity_graph`]). The [`metrics`] and [`community`]
//! modules measure the resulting networks against random baselines.

pub mod cli;
pub mod community;
pub mod embedding;
pub mod error;
pub mod export;
pub mod graph;
pub mod metrics;
pub mod neighbors;

pub use community::{compare_partitions, louvain, modularity, Partition};
pub use embedding::{EmbeddingMatrix, EmbeddingStats, Vocabulary};
pub use error::{Error, Result};
pub use graph::UndirectedGraph;
pub use neighbors::{NeighborTable, QueryMode};
