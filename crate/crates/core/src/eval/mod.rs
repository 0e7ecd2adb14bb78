//! Evaluation of node vectors: reversed k-fold one-vs-rest logistic
//! regression with micro-F1, analogy ranks, and PCA projection.

mod analogy;
mod classify;
mod pca;

use thiserror::Error;

pub use analogy::{analogy_all_pairs, analogy_rank, analogy_with_anchor, AnalogyResult, AnalogyTest, Distance};
pub use classify::{
    classify, folds_for_fraction, stratified_folds, ClassificationReport, FractionReport, LogRegConfig, MicroF1,
    TRAINING_FRACTIONS,
};
pub use pca::{pca_project, PcaProjection};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("{0}")]
    Invalid(String),
    #[error("representation/label mismatch: {0}")]
    Mismatch(String),
}
