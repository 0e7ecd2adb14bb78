//! Per-sample losses and gradients of the word, child and parent heads.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;

use super::{dot, EmbeddingModel, LossMode, ModelConfig, ModelError, ParamBlock, Real};
use crate::dataset::{DirectedGraph, Vocabulary};
use crate::sampler::TrainingSample;

/// Negative log-likelihood of each head; `None` marks a skipped head.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HeadLoss {
    pub word: Option<f64>,
    pub child: Option<f64>,
    pub parent: Option<f64>,
}

impl HeadLoss {
    pub fn word_loss(&self) -> f64 {
        self.word.unwrap_or(0.0)
    }

    pub fn child_loss(&self) -> f64 {
        self.child.unwrap_or(0.0)
    }

    pub fn parent_loss(&self) -> f64 {
        self.parent.unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.word_loss() + self.child_loss() + self.parent_loss()
    }
}

/// Gradient for one parameter row. `values` spans the full row; only the
/// columns in `cols` were touched.
#[derive(Debug, Clone, PartialEq)]
pub struct GradRow<F> {
    pub block: ParamBlock,
    pub row: usize,
    pub cols: Range<usize>,
    pub values: Vec<F>,
}

/// Gradients of the rows touched by one sample, keyed by (block, row).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGrads<F> {
    rows: BTreeMap<(ParamBlock, usize), GradRow<F>>,
}

impl<F: Real> Default for SparseGrads<F> {
    fn default() -> Self {
        Self { rows: BTreeMap::new() }
    }
}

impl<F: Real> SparseGrads<F> {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, block: ParamBlock, row: usize) -> Option<&GradRow<F>> {
        self.rows.get(&(block, row))
    }

    pub fn iter(&self) -> impl Iterator<Item = &GradRow<F>> {
        self.rows.values()
    }

    /// Gradient of a single scalar parameter (zero when untouched).
    pub fn value(&self, block: ParamBlock, row: usize, col: usize) -> F {
        self.get(block, row)
            .filter(|g| g.cols.contains(&col))
            .map_or(F::zero(), |g| g.values[col])
    }

    /// `row[offset..offset + src.len()] += scale * src`.
    pub fn add_scaled(&mut self, block: ParamBlock, row: usize, width: usize, offset: usize, scale: F, src: &[F]) {
        let end = offset + src.len();
        let entry = self.rows.entry((block, row)).or_insert_with(|| GradRow {
            block,
            row,
            cols: offset..end,
            values: vec![F::zero(); width],
        });
        entry.cols = entry.cols.start.min(offset)..entry.cols.end.max(end);
        for (g, &x) in entry.values[offset..end].iter_mut().zip(src) {
            *g += scale * x;
        }
    }
}

/// Noise draws per head for negative sampling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NegativeDraws {
    pub word: Vec<usize>,
    pub child: Vec<usize>,
    pub parent: Vec<usize>,
}

/// How each present head is scored.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Full softmax over all nodes or words.
    Exact,
    /// Logistic loss on the target plus the given noise draws. Draws equal to
    /// the target are skipped.
    Sampled(&'a NegativeDraws),
}

/// Unigram-style noise distributions: words by `count^0.75`, child targets by
/// `(in_degree + 1)^0.75`, parent targets by `(out_degree + 1)^0.75`.
#[derive(Debug, Clone)]
pub struct NoiseTables {
    word: Option<WeightedIndex<f64>>,
    child: WeightedIndex<f64>,
    parent: WeightedIndex<f64>,
}

impl NoiseTables {
    pub fn new(word_counts: &[u64], in_degrees: &[usize], out_degrees: &[usize]) -> Self {
        let pow = |x: f64| x.powf(0.75);
        let word = if word_counts.is_empty() {
            None
        } else {
            Some(WeightedIndex::new(word_counts.iter().map(|&c| pow(c as f64))).expect("positive word counts"))
        };
        let child = WeightedIndex::new(in_degrees.iter().map(|&d| pow(d as f64 + 1.0))).expect("non-empty graph");
        let parent = WeightedIndex::new(out_degrees.iter().map(|&d| pow(d as f64 + 1.0))).expect("non-empty graph");
        Self { word, child, parent }
    }

    pub fn from_graph(graph: &DirectedGraph, vocab: &Vocabulary) -> Self {
        let n = graph.node_count();
        let ins: Vec<usize> = (0..n).map(|v| graph.in_degree(v)).collect();
        let outs: Vec<usize> = (0..n).map(|v| graph.out_degree(v)).collect();
        Self::new(vocab.counts(), &ins, &outs)
    }

    /// `k` draws for every head present in `sample`.
    pub fn draw<R: Rng + ?Sized>(&self, sample: &TrainingSample, k: usize, rng: &mut R) -> NegativeDraws {
        let mut draws = NegativeDraws::default();
        if sample.word.is_some() {
            if let Some(word) = &self.word {
                draws.word = (0..k).map(|_| rng.sample(word)).collect();
            }
        }
        if sample.child.is_some() {
            draws.child = (0..k).map(|_| rng.sample(&self.child)).collect();
        }
        if sample.parent.is_some() {
            draws.parent = (0..k).map(|_| rng.sample(&self.parent)).collect();
        }
        draws
    }
}

fn check(kind: &'static str, id: usize, bound: usize) -> Result<(), ModelError> {
    if id < bound {
        Ok(())
    } else {
        Err(ModelError::Index { kind, id, bound })
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn to_f64<F: Real>(x: F) -> f64 {
    x.to_f64().unwrap()
}

fn from_f64<F: Real>(x: f64) -> F {
    F::from_f64(x).unwrap()
}

/// One softmax head fed by columns `range` of the focus node's input row.
fn head<F: Real>(
    model: &EmbeddingModel<F>,
    grads: &mut SparseGrads<F>,
    focus: usize,
    range: Range<usize>,
    out_block: ParamBlock,
    target: usize,
    negatives: Option<&[usize]>,
) -> f64 {
    let input = &model.block(ParamBlock::Input).row(focus)[range.clone()];
    let out = model.block(out_block);
    let width = out.cols();
    let mut input_grad = vec![F::zero(); range.len()];
    let mut accumulate = |grads: &mut SparseGrads<F>, row: usize, coef: f64| {
        let coef = from_f64::<F>(coef);
        grads.add_scaled(out_block, row, width, 0, coef, input);
        for (g, &w) in input_grad.iter_mut().zip(out.row(row)) {
            *g += coef * w;
        }
    };

    let loss = match negatives {
        None => {
            let logits: Vec<f64> = (0..out.rows()).map(|j| to_f64(dot(out.row(j), input))).collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
            let log_norm = max + sum.ln();
            for (j, z) in logits.iter().enumerate() {
                let p = (z - log_norm).exp();
                accumulate(grads, j, if j == target { p - 1.0 } else { p });
            }
            log_norm - logits[target]
        }
        Some(noise) => {
            let z = to_f64(dot(out.row(target), input));
            accumulate(grads, target, sigmoid(z) - 1.0);
            let mut loss = softplus(-z);
            for &n in noise.iter().filter(|&&n| n != target) {
                let z = to_f64(dot(out.row(n), input));
                accumulate(grads, n, sigmoid(z));
                loss += softplus(z);
            }
            loss
        }
    };
    grads.add_scaled(
        ParamBlock::Input,
        focus,
        model.dim(),
        range.start,
        F::one(),
        &input_grad,
    );
    loss
}

/// Loss and gradients of one sample. Absent word/child/parent heads are
/// skipped entirely: they add no loss and touch no parameters.
pub fn loss_and_grads<F: Real>(
    model: &EmbeddingModel<F>,
    sample: &TrainingSample,
    objective: Objective<'_>,
) -> Result<(HeadLoss, SparseGrads<F>), ModelError> {
    let n = model.node_count();
    check("node", sample.focus, n)?;
    if let Some(w) = sample.word {
        check("word", w, model.vocab_size())?;
    }
    if let Some(c) = sample.child {
        check("node", c, n)?;
    }
    if let Some(p) = sample.parent {
        check("node", p, n)?;
    }
    let (word_noise, child_noise, parent_noise) = match objective {
        Objective::Exact => (None, None, None),
        Objective::Sampled(d) => {
            for &w in &d.word {
                check("word", w, model.vocab_size())?;
            }
            for &v in d.child.iter().chain(&d.parent) {
                check("node", v, n)?;
            }
            (
                Some(d.word.as_slice()),
                Some(d.child.as_slice()),
                Some(d.parent.as_slice()),
            )
        }
    };

    let mut grads = SparseGrads::default();
    let mut loss = HeadLoss::default();
    let focus = sample.focus;
    if let Some(word) = sample.word {
        loss.word = Some(head(
            model,
            &mut grads,
            focus,
            0..model.dim(),
            ParamBlock::WordOut,
            word,
            word_noise,
        ));
    }
    if let Some(child) = sample.child {
        let range = model.parent_role_range();
        loss.child = Some(head(
            model,
            &mut grads,
            focus,
            range,
            ParamBlock::ChildOut,
            child,
            child_noise,
        ));
    }
    if let Some(parent) = sample.parent {
        let range = model.child_role_range();
        loss.parent = Some(head(
            model,
            &mut grads,
            focus,
            range,
            ParamBlock::ParentOut,
            parent,
            parent_noise,
        ));
    }
    Ok((loss, grads))
}

/// Draws negatives when the configured mode asks for them, then evaluates the sample.
pub fn sample_loss_and_grads<F: Real, R: Rng + ?Sized>(
    model: &EmbeddingModel<F>,
    sample: &TrainingSample,
    config: &ModelConfig,
    noise: &NoiseTables,
    rng: &mut R,
) -> Result<(HeadLoss, SparseGrads<F>), ModelError> {
    match config.loss_mode {
        LossMode::ExactSoftmax => loss_and_grads(model, sample, Objective::Exact),
        LossMode::NegativeSampling => {
            let draws = noise.draw(sample, config.negatives, rng);
            loss_and_grads(model, sample, Objective::Sampled(&draws))
        }
    }
}
