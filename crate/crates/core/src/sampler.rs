//! Per-epoch training samples drawn by directed random walks.
//!
//! Every node `v` with at least one `s`-parent or `s`-child is fed
//! `t_v = min(max(n_p(v), n_c(v)), m)` times per epoch. Each feed carries a
//! word drawn uniformly from the node's token occurrences, an `s`-child picked
//! uniformly from a forward walk of up to `s` steps, and an `s`-parent picked
//! the same way from a backward walk.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{DirectedGraph, NodeDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    /// Walk length `s`.
    pub walk_length: usize,
    /// Cap `m` on per-node repeats.
    pub max_repeats: usize,
    /// Master seed for every random stream of a run.
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            walk_length: 2,
            max_repeats: 5,
            seed: 0,
        }
    }
}

/// One feed of a focus node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrainingSample {
    pub focus: usize,
    pub word: Option<usize>,
    pub child: Option<usize>,
    pub parent: Option<usize>,
}

impl TrainingSample {
    pub fn bare(focus: usize) -> Self {
        Self {
            focus,
            word: None,
            child: None,
            parent: None,
        }
    }
}

/// Distinct `s`-parent / `s`-child counts and the derived repeat count per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCounts {
    pub walk_length: usize,
    pub parents: Vec<usize>,
    pub children: Vec<usize>,
    pub repeats: Vec<usize>,
}

impl WalkCounts {
    /// Samples per epoch, `sum_v t_v`.
    pub fn total(&self) -> usize {
        self.repeats.iter().sum()
    }
}

/// Nodes at distance `1..=s` from `v` following `next`.
fn reachable_within<'g>(node_count: usize, v: usize, s: usize, next: impl Fn(usize) -> &'g [usize]) -> usize {
    let mut dist = vec![usize::MAX; node_count];
    dist[v] = 0;
    let mut queue = VecDeque::from([v]);
    let mut count = 0;
    while let Some(x) = queue.pop_front() {
        if dist[x] == s {
            continue;
        }
        for &y in next(x) {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                count += 1;
                queue.push_back(y);
            }
        }
    }
    count
}

pub fn compute_walk_counts(graph: &DirectedGraph, config: &SamplerConfig) -> WalkCounts {
    let n = graph.node_count();
    let s = config.walk_length;
    let children: Vec<usize> = (0..n)
        .map(|v| reachable_within(n, v, s, |x| graph.out_neighbors(x)))
        .collect();
    let parents: Vec<usize> = (0..n)
        .map(|v| reachable_within(n, v, s, |x| graph.in_neighbors(x)))
        .collect();
    let repeats = parents
        .iter()
        .zip(&children)
        .map(|(&p, &c)| p.max(c).min(config.max_repeats))
        .collect();
    WalkCounts {
        walk_length: s,
        parents,
        children,
        repeats,
    }
}

/// Walks up to `s` steps, stopping at a dead end, then picks uniformly among
/// the visited nodes other than `v` itself.
fn walk_and_pick<'g, R: Rng + ?Sized>(
    v: usize,
    s: usize,
    rng: &mut R,
    next: impl Fn(usize) -> &'g [usize],
) -> Option<usize> {
    let mut path = Vec::with_capacity(s);
    let mut current = v;
    for _ in 0..s {
        let nbrs = next(current);
        if nbrs.is_empty() {
            break;
        }
        current = nbrs[rng.random_range(0..nbrs.len())];
        if current != v {
            path.push(current);
        }
    }
    if path.is_empty() {
        None
    } else {
        Some(path[rng.random_range(0..path.len())])
    }
}

pub fn sample_child<R: Rng + ?Sized>(graph: &DirectedGraph, v: usize, s: usize, rng: &mut R) -> Option<usize> {
    walk_and_pick(v, s, rng, |x| graph.out_neighbors(x))
}

pub fn sample_parent<R: Rng + ?Sized>(graph: &DirectedGraph, v: usize, s: usize, rng: &mut R) -> Option<usize> {
    walk_and_pick(v, s, rng, |x| graph.in_neighbors(x))
}

/// Uniform over token occurrences.
pub fn sample_word<R: Rng + ?Sized>(doc: &NodeDocument, rng: &mut R) -> Option<usize> {
    if doc.tokens.is_empty() {
        None
    } else {
        Some(doc.tokens[rng.random_range(0..doc.tokens.len())])
    }
}

/// A seeded permutation of the nodes with `t_v > 0`.
pub fn epoch_order<R: Rng + ?Sized>(counts: &WalkCounts, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.repeats.len()).filter(|&v| counts.repeats[v] > 0).collect();
    order.shuffle(rng);
    order
}

/// Samples for the given node order, each node repeated `t_v` times in a row.
pub struct SampleStream<'a, R> {
    graph: &'a DirectedGraph,
    docs: &'a [NodeDocument],
    counts: &'a WalkCounts,
    order: Vec<usize>,
    position: usize,
    emitted_for_current: usize,
    rng: R,
}

impl<'a, R: Rng> SampleStream<'a, R> {
    pub fn new(
        graph: &'a DirectedGraph,
        docs: &'a [NodeDocument],
        counts: &'a WalkCounts,
        order: Vec<usize>,
        rng: R,
    ) -> Self {
        Self {
            graph,
            docs,
            counts,
            order,
            position: 0,
            emitted_for_current: 0,
            rng,
        }
    }

    pub fn into_rng(self) -> R {
        self.rng
    }
}

impl<R: Rng> Iterator for SampleStream<'_, R> {
    type Item = TrainingSample;

    fn next(&mut self) -> Option<TrainingSample> {
        loop {
            let &focus = self.order.get(self.position)?;
            if self.emitted_for_current < self.counts.repeats[focus] {
                self.emitted_for_current += 1;
                let s = self.counts.walk_length;
                let word = self.docs.get(focus).and_then(|d| sample_word(d, &mut self.rng));
                let child = sample_child(self.graph, focus, s, &mut self.rng);
                let parent = sample_parent(self.graph, focus, s, &mut self.rng);
                return Some(TrainingSample {
                    focus,
                    word,
                    child,
                    parent,
                });
            }
            self.position += 1;
            self.emitted_for_current = 0;
        }
    }
}

/// One epoch of samples: a seeded node permutation, then `t_v` samples per node.
pub fn epoch_samples<'a, R: Rng>(
    graph: &'a DirectedGraph,
    docs: &'a [NodeDocument],
    counts: &'a WalkCounts,
    mut rng: R,
) -> SampleStream<'a, R> {
    let order = epoch_order(counts, &mut rng);
    SampleStream::new(graph, docs, counts, order, rng)
}
