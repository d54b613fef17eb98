//! Node embeddings from hop-prioritized neighborhood sentences.
//!
//! The pipeline is: load a [`Graph`], build a [`Corpus`] of center-plus-neighbors
//! sentences with [`generate_corpus`], learn vectors with skip-gram negative
//! sampling ([`train`]), then smooth them over the graph with [`propagate`].
//! The [`eval`] module scores embeddings on node classification and link
//! prediction with a small MLP.

pub mod embedding;
pub mod error;
pub mod eval;
pub mod generators;
pub mod graph;
pub mod pipeline;
pub mod propagation;
pub mod sampler;
pub mod seed;
pub mod sgns;

pub use embedding::EmbeddingMatrix;
pub use error::{Error, Result};
pub use graph::{load_edge_list, Direction, Graph, IngestOptions, NodeId, NodeIdMap};
pub use propagation::{propagate, AggregationMethod, PropagationConfig};
pub use sampler::{baseline_random_walk_corpus, generate_corpus, sample_neighborhood, Corpus, Sentence};
pub use sgns::{train, TrainConfig};
