use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::embeddings::Embeddings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Euclidean,
    /// `1 - cos`.
    Cosine,
}

impl FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euclidean" => Ok(Distance::Euclidean),
            "cosine" => Ok(Distance::Cosine),
            _ => Err(format!("unknown distance `{s}` (expected euclidean or cosine)")),
        }
    }
}

impl Distance {
    fn between(self, a: &[f32], q: &[f64], q_norm: f64) -> f64 {
        match self {
            Distance::Euclidean => a
                .iter()
                .zip(q)
                .map(|(&x, y)| (x as f64 - y).powi(2))
                .sum::<f64>()
                .sqrt(),
            Distance::Cosine => {
                let (mut dot, mut norm) = (0.0, 0.0);
                for (&x, y) in a.iter().zip(q) {
                    dot += x as f64 * y;
                    norm += (x as f64) * (x as f64);
                }
                let denom = norm.sqrt() * q_norm;
                if denom == 0.0 {
                    1.0
                } else {
                    1.0 - dot / denom
                }
            }
        }
    }
}

/// One query `a2 - a1 + b1` and the rank of `b2` among all other vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyTest {
    pub a1: usize,
    pub a2: usize,
    pub b1: usize,
    pub b2: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyResult {
    pub node_count: usize,
    pub tests: Vec<AnalogyTest>,
}

impl AnalogyResult {
    pub fn ranks(&self) -> Vec<usize> {
        self.tests.iter().map(|t| t.rank).collect()
    }

    /// Tests whose rank is at most `threshold`.
    pub fn cumulative(&self, threshold: usize) -> usize {
        self.tests.iter().filter(|t| t.rank <= threshold).count()
    }

    /// `(rank, tests with rank <= rank)` at every observed rank, closed with
    /// the point at `node_count`.
    pub fn histogram(&self) -> Vec<(usize, usize)> {
        let mut by_rank: BTreeMap<usize, usize> = BTreeMap::new();
        for t in &self.tests {
            *by_rank.entry(t.rank).or_default() += 1;
        }
        let mut total = 0;
        let mut points: Vec<(usize, usize)> = by_rank
            .into_iter()
            .map(|(r, c)| {
                total += c;
                (r, total)
            })
            .collect();
        if points.last().is_none_or(|&(r, _)| r < self.node_count) {
            points.push((self.node_count, total));
        }
        points
    }

    /// `test_id,rank` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("test_id,rank\n");
        for (i, t) in self.tests.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", t.rank));
        }
        out
    }
}

/// Rank of `b2` when every vector except `a1`, `a2`, `b1` is sorted by
/// distance to `a2 - a1 + b1`, ties broken by row index.
pub fn analogy_rank(reps: &Embeddings, a1: usize, a2: usize, b1: usize, b2: usize, metric: Distance) -> usize {
    let q: Vec<f64> = (0..reps.dim())
        .map(|i| reps.row(a2)[i] as f64 - reps.row(a1)[i] as f64 + reps.row(b1)[i] as f64)
        .collect();
    let q_norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = metric.between(reps.row(b2), &q, q_norm);
    1 + (0..reps.len())
        .filter(|&c| c != a1 && c != a2 && c != b1 && c != b2)
        .filter(|&c| {
            let d = metric.between(reps.row(c), &q, q_norm);
            d < target || (d == target && c < b2)
        })
        .count()
}

fn resolve<S: AsRef<str>>(reps: &Embeddings, pairs: &[(S, S)]) -> Result<Vec<(usize, usize)>, EvalError> {
    let id = |n: &S| {
        reps.index_of(n.as_ref())
            .ok_or_else(|| EvalError::UnknownNode(n.as_ref().to_owned()))
    };
    pairs.iter().map(|(a, b)| Ok((id(a)?, id(b)?))).collect()
}

fn run(reps: &Embeddings, queries: Vec<((usize, usize), (usize, usize))>, metric: Distance) -> AnalogyResult {
    let tests = queries
        .into_par_iter()
        .map(|((a1, a2), (b1, b2))| AnalogyTest {
            a1,
            a2,
            b1,
            b2,
            rank: analogy_rank(reps, a1, a2, b1, b2, metric),
        })
        .collect();
    AnalogyResult {
        node_count: reps.len(),
        tests,
    }
}

/// Every ordered pair of distinct pairs `(a1, a2)`, `(b1, b2)` from `pairs`.
pub fn analogy_all_pairs<S: AsRef<str>>(
    reps: &Embeddings,
    pairs: &[(S, S)],
    metric: Distance,
) -> Result<AnalogyResult, EvalError> {
    let ids = resolve(reps, pairs)?;
    let queries = ids
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| {
            ids.iter()
                .enumerate()
                .filter(move |&(j, _)| j != i)
                .map(move |(_, &b)| (a, b))
        })
        .collect();
    Ok(run(reps, queries, metric))
}

/// Every pair of `pairs` other than `anchor`, tested against the fixed `anchor` as `(a1, a2)`.
pub fn analogy_with_anchor<S: AsRef<str>>(
    reps: &Embeddings,
    pairs: &[(S, S)],
    anchor: (&str, &str),
    metric: Distance,
) -> Result<AnalogyResult, EvalError> {
    let ids = resolve(reps, pairs)?;
    let anchor = resolve(reps, &[anchor])?[0];
    let queries = ids.into_iter().filter(|&b| b != anchor).map(|b| (anchor, b)).collect();
    Ok(run(reps, queries, metric))
}
