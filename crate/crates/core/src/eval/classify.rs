use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dataset::LabelSet;
use crate::embeddings::Embeddings;
use crate::rng::{self, TAG_EVAL};

/// Training fractions reported in the classification table.
pub const TRAINING_FRACTIONS: [f64; 6] = [0.05, 0.10, 0.20, 0.25, 0.33, 0.50];

/// Fold count for a training fraction under reversed k-fold: `round(1 / f)`.
pub fn folds_for_fraction(fraction: f64) -> usize {
    (1.0 / fraction).round() as usize
}

/// Full-batch gradient descent on the mean logistic loss, no regularization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// A label is predicted when its probability exceeds this.
    pub threshold: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 100,
            threshold: 0.5,
        }
    }
}

/// Pooled binary decision counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroF1 {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl MicroF1 {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.true_positives += 1,
            (true, false) => self.false_positives += 1,
            (false, true) => self.false_negatives += 1,
            (false, false) => {}
        }
    }

    /// `2TP / (2TP + FP + FN)`; 1 when there was nothing to find and nothing predicted.
    pub fn score(&self) -> f64 {
        let denom = 2 * self.true_positives + self.false_positives + self.false_negatives;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.true_positives as f64 / denom as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionReport {
    pub fraction: f64,
    pub folds: usize,
    /// Micro-F1 of each fold, trained on that fold and tested on the rest.
    pub fold_scores: Vec<f64>,
    pub micro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub fractions: Vec<FractionReport>,
}

impl ClassificationReport {
    pub fn get(&self, fraction: f64) -> Option<&FractionReport> {
        self.fractions.iter().find(|f| (f.fraction - fraction).abs() < 1e-9)
    }

    /// `fraction,fold,micro_f1` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,fold,micro_f1\n");
        for f in &self.fractions {
            for (i, s) in f.fold_scores.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", f.fraction, i, s));
            }
        }
        out
    }
}

/// Fold index per item. Items are grouped by label signature, each group is
/// shuffled, and groups are dealt round-robin so every fold receives a near
/// equal share of every signature.
pub fn stratified_folds<R: Rng + ?Sized>(signatures: &[Vec<usize>], k: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..signatures.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| signatures[a].cmp(&signatures[b]));
    let mut folds = vec![0; signatures.len()];
    let offset = if k > 0 { rng.random_range(0..k) } else { 0 };
    for (pos, &item) in order.iter().enumerate() {
        folds[item] = (pos + offset) % k;
    }
    folds
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Binary {
    weights: Vec<f64>,
    bias: f64,
}

impl Binary {
    fn fit(features: &[&[f64]], targets: &[bool], config: &LogRegConfig) -> Option<Self> {
        if !targets.iter().any(|&t| t) {
            return None;
        }
        let dim = features.first().map_or(0, |f| f.len());
        let n = features.len() as f64;
        let mut model = Binary {
            weights: vec![0.0; dim],
            bias: 0.0,
        };
        let mut grad = vec![0.0; dim];
        for _ in 0..config.epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_bias = 0.0;
            for (x, &y) in features.iter().zip(targets) {
                let err = model.probability(x) - if y { 1.0 } else { 0.0 };
                for (g, xi) in grad.iter_mut().zip(x.iter()) {
                    *g += err * xi;
                }
                grad_bias += err;
            }
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= config.learning_rate * g / n;
            }
            model.bias -= config.learning_rate * grad_bias / n;
        }
        Some(model)
    }

    fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.bias)
    }
}

/// Trains one-vs-rest on `train`, predicts `test`, returns pooled counts.
fn evaluate_fold(
    features: &[Vec<f64>],
    labels: &[Vec<bool>],
    train: &[usize],
    test: &[usize],
    config: &LogRegConfig,
) -> MicroF1 {
    let label_count = labels.first().map_or(0, Vec::len);
    let train_x: Vec<&[f64]> = train.iter().map(|&i| features[i].as_slice()).collect();
    let classifiers: Vec<Option<Binary>> = (0..label_count)
        .map(|l| {
            let y: Vec<bool> = train.iter().map(|&i| labels[i][l]).collect();
            Binary::fit(&train_x, &y, config)
        })
        .collect();

    let mut counts = MicroF1::default();
    for &i in test {
        let scores: Vec<f64> = classifiers
            .iter()
            .map(|c| c.as_ref().map_or(f64::NEG_INFINITY, |c| c.probability(&features[i])))
            .collect();
        let mut predicted: Vec<bool> = scores.iter().map(|&p| p > config.threshold).collect();
        if !predicted.iter().any(|&p| p) {
            let best =
                scores
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.is_finite())
                    .fold(None::<(usize, f64)>, |best, (l, &s)| match best {
                        Some((_, b)) if b >= s => best,
                        _ => Some((l, s)),
                    });
            if let Some((l, _)) = best {
                predicted[l] = true;
            }
        }
        for (l, &p) in predicted.iter().enumerate() {
            counts.record(p, labels[i][l]);
        }
    }
    counts
}

/// Reversed k-fold cross validation per training fraction: train on one fold,
/// test on the remaining `k - 1`. Row `v` of `representations` belongs to node
/// `v` of `labels`; unlabeled nodes are left out.
pub fn classify(
    representations: &Embeddings,
    labels: &LabelSet,
    fractions: &[f64],
    config: &LogRegConfig,
    seed: u64,
) -> Result<ClassificationReport, EvalError> {
    if representations.len() != labels.node_count() {
        return Err(EvalError::Mismatch(format!(
            "{} vectors for {} nodes",
            representations.len(),
            labels.node_count()
        )));
    }
    let nodes: Vec<usize> = (0..labels.node_count()).filter(|&v| labels.is_labeled(v)).collect();
    if nodes.is_empty() {
        return Err(EvalError::Invalid("no labeled nodes".into()));
    }
    for &f in fractions {
        if !(f > 0.0 && f <= 0.5) {
            return Err(EvalError::Invalid(format!("training fraction {f} outside (0, 0.5]")));
        }
        if folds_for_fraction(f) > nodes.len() {
            return Err(EvalError::Invalid(format!("fraction {f} needs more labeled nodes")));
        }
    }
    let features: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&v| representations.row(v).iter().map(|&x| x as f64).collect())
        .collect();
    let label_rows: Vec<Vec<bool>> = nodes.iter().map(|&v| labels.row(v).to_vec()).collect();
    let signatures: Vec<Vec<usize>> = nodes.iter().map(|&v| labels.labels_of(v).collect()).collect();

    let reports = fractions
        .iter()
        .enumerate()
        .map(|(fi, &fraction)| {
            let k = folds_for_fraction(fraction);
            let folds = stratified_folds(&signatures, k, &mut rng::stream(seed, TAG_EVAL, fi as u64, 0));
            let fold_scores: Vec<f64> = (0..k)
                .into_par_iter()
                .map(|fold| {
                    let (train, test): (Vec<usize>, Vec<usize>) = (0..nodes.len()).partition(|&i| folds[i] == fold);
                    evaluate_fold(&features, &label_rows, &train, &test, config).score()
                })
                .collect();
            let micro_f1 = fold_scores.iter().sum::<f64>() / k as f64;
            FractionReport {
                fraction,
                folds: k,
                fold_scores,
                micro_f1,
            }
        })
        .collect();
    Ok(ClassificationReport { fractions: reports })
}
