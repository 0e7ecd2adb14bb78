//! Embeddings of directed networks whose nodes carry text and labels.
//!
//! Two architectures are provided. [`model::Architecture::Pctadw1`] ties each
//! node's child-role and parent-role vectors into one vector;
//! [`model::Architecture::Pctadw2`] keeps them apart and represents a node by
//! their concatenation. Both are trained by predicting, for every focus node,
//! a word of its document, a node it reaches within `s` hops, and a node that
//! reaches it within `s` hops.
//!
//! The crate is organised along the pipeline:
//!
//! * [`dataset`] loads the TSV graph/document/label triple and builds the vocabulary.
//! * [`sampler`] draws the per-epoch training samples via directed random walks.
//! * [`model`] holds the parameters, the three prediction heads and sparse Adam.
//! * [`trainer`] runs epochs, logs losses and writes checkpoints.
//! * [`eval`] scores node vectors: one-vs-rest classification, analogy ranks, PCA.

pub mod dataset;
pub mod embeddings;
pub mod eval;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod trainer;

pub use dataset::{Dataset, DatasetError, DirectedGraph, LabelSet, NodeDocument, TokenizerConfig, Vocabulary};
pub use embeddings::Embeddings;
pub use model::{Architecture, EmbeddingModel, LossMode, ModelConfig, ModelError};
pub use sampler::{SamplerConfig, TrainingSample, WalkCounts};
pub use trainer::{TrainConfig, TrainError, TrainOutcome};
