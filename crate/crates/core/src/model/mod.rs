//! Trainable parameters for both architectures, the three prediction heads,
//! sparse Adam and checkpoint I/O.
//!
//! Parameter layout. Every node owns one input row of width `dim`:
//!
//! * `Pctadw1`: the row is the node's single vector; it serves as both the
//!   child-role and the parent-role vector.
//! * `Pctadw2`: the row is `[v_c | v_p]`, each half `dim / 2` wide.
//!
//! Either way the node representation is the whole row. The child head (which
//! predicts an `s`-child of the focus node) reads the parent-role slice, the
//! parent head reads the child-role slice and the word head reads the whole
//! row. Node output rows are as wide as the slice they score against; word
//! output rows are `dim` wide.

mod adam;
mod checkpoint;
mod objective;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{adam_step, AdamConfig};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use objective::{
    loss_and_grads, sample_loss_and_grads, GradRow, HeadLoss, NegativeDraws, NoiseTables, Objective, SparseGrads,
};

/// Scalar type of the parameters. Training uses `f32`; gradient checks use `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::ops::AddAssign
    + std::ops::SubAssign
    + Default
    + fmt::Debug
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("{kind} id {id} out of range (< {bound})")]
    Index {
        kind: &'static str,
        id: usize,
        bound: usize,
    },
    #[error("checkpoint incompatible: {field} is {checkpoint} in the checkpoint but {expected} was expected")]
    Incompatible {
        field: &'static str,
        checkpoint: String,
        expected: String,
    },
    #[error("bad checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Pctadw1,
    Pctadw2,
}

impl Architecture {
    pub fn code(self) -> u32 {
        match self {
            Architecture::Pctadw1 => 1,
            Architecture::Pctadw2 => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            1 => Some(Architecture::Pctadw1),
            2 => Some(Architecture::Pctadw2),
            _ => None,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Pctadw1 => "pctadw1",
            Architecture::Pctadw2 => "pctadw2",
        })
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "pctadw1" | "1" => Ok(Architecture::Pctadw1),
            "pctadw2" | "2" => Ok(Architecture::Pctadw2),
            _ => Err(format!("unknown architecture `{s}` (expected pctadw1 or pctadw2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    ExactSoftmax,
    NegativeSampling,
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossMode::ExactSoftmax => "exact",
            LossMode::NegativeSampling => "negative",
        })
    }
}

impl FromStr for LossMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" | "exact_softmax" | "softmax" => Ok(LossMode::ExactSoftmax),
            "negative" | "negative_sampling" | "ns" => Ok(LossMode::NegativeSampling),
            _ => Err(format!("unknown loss mode `{s}` (expected exact or negative)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// Width of the node representation.
    pub dim: usize,
    pub loss_mode: LossMode,
    /// Noise draws per head in negative-sampling mode.
    pub negatives: usize,
    pub adam: AdamConfig,
    /// Inputs start uniform in `[-init_scale / dim, init_scale / dim]`.
    pub init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Pctadw2,
            dim: 128,
            loss_mode: LossMode::NegativeSampling,
            negatives: 5,
            adam: AdamConfig::default(),
            init_scale: 0.5,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dim == 0 {
            return Err(ModelError::Config("dim must be positive".into()));
        }
        if self.architecture == Architecture::Pctadw2 && !self.dim.is_multiple_of(2) {
            return Err(ModelError::Config(format!(
                "pctadw2 splits the representation in two halves, dim {} is odd",
                self.dim
            )));
        }
        if self.loss_mode == LossMode::NegativeSampling && self.negatives == 0 {
            return Err(ModelError::Config(
                "negative sampling needs at least one negative".into(),
            ));
        }
        Ok(())
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn cast<G: Real>(&self) -> Matrix<G> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|x| G::from_f64(x.to_f64().unwrap()).unwrap())
                .collect(),
        }
    }
}

/// The four parameter blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamBlock {
    /// Node input rows (`v_c`/`v_p`).
    Input,
    /// Node output rows scored when predicting a child.
    ChildOut,
    /// Node output rows scored when predicting a parent.
    ParentOut,
    /// Word output rows.
    WordOut,
}

impl ParamBlock {
    pub const ALL: [ParamBlock; 4] = [
        ParamBlock::Input,
        ParamBlock::ChildOut,
        ParamBlock::ParentOut,
        ParamBlock::WordOut,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// First and second Adam moments of one block.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<F> {
    pub first: Matrix<F>,
    pub second: Matrix<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel<F> {
    architecture: Architecture,
    dim: usize,
    blocks: [Matrix<F>; 4],
    moments: [Moments<F>; 4],
    /// Adam steps taken so far.
    pub step: u64,
}

impl<F: Real> EmbeddingModel<F> {
    /// All-zero model (including inputs).
    pub fn zeros(
        architecture: Architecture,
        dim: usize,
        node_count: usize,
        vocab_size: usize,
    ) -> Result<Self, ModelError> {
        ModelConfig {
            architecture,
            dim,
            ..ModelConfig::default()
        }
        .validate()?;
        if node_count == 0 {
            return Err(ModelError::Config("model needs at least one node".into()));
        }
        let head = match architecture {
            Architecture::Pctadw1 => dim,
            Architecture::Pctadw2 => dim / 2,
        };
        let shapes = [
            (node_count, dim),
            (node_count, head),
            (node_count, head),
            (vocab_size, dim),
        ];
        let blocks = shapes.map(|(r, c)| Matrix::zeros(r, c));
        let moments = shapes.map(|(r, c)| Moments {
            first: Matrix::zeros(r, c),
            second: Matrix::zeros(r, c),
        });
        Ok(Self {
            architecture,
            dim,
            blocks,
            moments,
            step: 0,
        })
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Width of the child-role and parent-role vectors.
    pub fn head_dim(&self) -> usize {
        self.blocks[ParamBlock::ChildOut.index()].cols()
    }

    pub fn node_count(&self) -> usize {
        self.blocks[ParamBlock::Input.index()].rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.blocks[ParamBlock::WordOut.index()].rows()
    }

    pub fn block(&self, block: ParamBlock) -> &Matrix<F> {
        &self.blocks[block.index()]
    }

    pub fn block_mut(&mut self, block: ParamBlock) -> &mut Matrix<F> {
        &mut self.blocks[block.index()]
    }

    pub fn moments(&self, block: ParamBlock) -> &Moments<F> {
        &self.moments[block.index()]
    }

    pub fn moments_mut(&mut self, block: ParamBlock) -> &mut Moments<F> {
        &mut self.moments[block.index()]
    }

    /// Columns of an input row holding the child-role vector `v_c`.
    pub fn child_role_range(&self) -> Range<usize> {
        match self.architecture {
            Architecture::Pctadw1 => 0..self.dim,
            Architecture::Pctadw2 => 0..self.dim / 2,
        }
    }

    /// Columns of an input row holding the parent-role vector `v_p`.
    pub fn parent_role_range(&self) -> Range<usize> {
        match self.architecture {
            Architecture::Pctadw1 => 0..self.dim,
            Architecture::Pctadw2 => self.dim / 2..self.dim,
        }
    }

    pub fn child_vector(&self, v: usize) -> &[F] {
        &self.block(ParamBlock::Input).row(v)[self.child_role_range()]
    }

    pub fn parent_vector(&self, v: usize) -> &[F] {
        &self.block(ParamBlock::Input).row(v)[self.parent_role_range()]
    }

    /// The node representation used downstream.
    pub fn representation(&self, v: usize) -> &[F] {
        self.block(ParamBlock::Input).row(v)
    }

    /// Exact softmax over all nodes of the child head for focus `u`.
    pub fn child_distribution(&self, u: usize) -> Vec<f64> {
        softmax(self.block(ParamBlock::ChildOut), self.parent_vector(u))
    }

    /// Exact softmax over all nodes of the parent head for focus `v`.
    pub fn parent_distribution(&self, v: usize) -> Vec<f64> {
        softmax(self.block(ParamBlock::ParentOut), self.child_vector(v))
    }

    /// Exact softmax over the vocabulary of the word head for node `v`.
    pub fn word_distribution(&self, v: usize) -> Vec<f64> {
        softmax(self.block(ParamBlock::WordOut), self.representation(v))
    }

    /// Probability that `v` is the sampled `s`-child of `u`.
    pub fn prob_child(&self, u: usize, v: usize) -> f64 {
        self.child_distribution(u)[v]
    }

    /// Probability that `u` is the sampled `s`-parent of `v`.
    pub fn prob_parent(&self, v: usize, u: usize) -> f64 {
        self.parent_distribution(v)[u]
    }

    pub fn prob_word(&self, v: usize, word: usize) -> f64 {
        self.word_distribution(v)[word]
    }

    pub fn cast<G: Real>(&self) -> EmbeddingModel<G> {
        EmbeddingModel {
            architecture: self.architecture,
            dim: self.dim,
            blocks: std::array::from_fn(|i| self.blocks[i].cast()),
            moments: std::array::from_fn(|i| Moments {
                first: self.moments[i].first.cast(),
                second: self.moments[i].second.cast(),
            }),
            step: self.step,
        }
    }
}

pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

fn softmax<F: Real>(out: &Matrix<F>, input: &[F]) -> Vec<f64> {
    let logits: Vec<f64> = (0..out.rows())
        .map(|j| dot(out.row(j), input).to_f64().unwrap())
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Inputs uniform in `[-init_scale / dim, init_scale / dim]`, everything else zero.
pub fn init_model<F: Real, R: Rng + ?Sized>(
    config: &ModelConfig,
    node_count: usize,
    vocab_size: usize,
    rng: &mut R,
) -> Result<EmbeddingModel<F>, ModelError> {
    config.validate()?;
    let mut model = EmbeddingModel::zeros(config.architecture, config.dim, node_count, vocab_size)?;
    let bound = config.init_scale / config.dim as f64;
    for x in model.block_mut(ParamBlock::Input).as_mut_slice() {
        *x = F::from_f64(rng.random_range(-bound..=bound)).unwrap();
    }
    Ok(model)
}
