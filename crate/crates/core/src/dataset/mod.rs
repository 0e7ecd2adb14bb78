//! Directed graph, node documents, vocabulary and multi-label sets.
//!
//! A dataset lives in a directory of three UTF-8 TSV files plus a JSON
//! manifest:
//!
//! * `edges.tsv`: `parent<TAB>child` per line (a line holding only a name
//!   declares a node without edges),
//! * `docs.tsv`: `node<TAB>raw text`,
//! * `labels.tsv`: `node<TAB>label1,label2,...`,
//! * `manifest.json`: counts and the id maps.
//!
//! Node ids are assigned in order of first appearance in `edges.tsv`; label
//! ids follow the sorted label names; word ids follow first appearance when
//! documents are scanned in node-id order.

mod cycles;
mod graph;
mod io;
mod tokenize;

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

pub use cycles::{break_cycles, cycle_edges, detect_cycles};
pub use graph::DirectedGraph;
pub use io::{
    load_dataset, load_dataset_dir, save_dataset, Manifest, DOCS_FILE, EDGES_FILE, LABELS_FILE, MANIFEST_FILE,
};
pub use tokenize::{tokenize, TokenizerConfig, ENGLISH_STOPWORDS};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}:{line}: node `{name}` does not appear in the graph", path.display())]
    DanglingNode { path: PathBuf, line: usize, name: String },
    #[error("self-loops on: {}", .0.join(", "))]
    SelfLoops(Vec<String>),
    #[error("duplicate edges: {}", .0.iter().map(|(u, v)| format!("{u} -> {v}")).collect::<Vec<_>>().join(", "))]
    DuplicateEdges(Vec<(String, String)>),
    #[error("node id {id} is out of range for a graph of {node_count} nodes")]
    NodeOutOfRange { id: usize, node_count: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("manifest disagrees with data: {field} is {actual}, manifest says {expected}")]
    ManifestMismatch {
        field: &'static str,
        expected: String,
        actual: String,
    },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

/// A node's tokenized text, as word ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeDocument {
    pub node: usize,
    pub tokens: Vec<usize>,
}

impl NodeDocument {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Occurrences of `word` in this document.
    pub fn count(&self, word: usize) -> usize {
        self.tokens.iter().filter(|&&w| w == word).count()
    }
}

/// Word string to dense id, with corpus frequencies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    counts: Vec<u64>,
}

impl Vocabulary {
    /// Builds the vocabulary from token lists, keeping words with at least
    /// `min_count` occurrences, and maps each list to word ids.
    pub fn build(token_lists: &[Vec<String>], min_count: u64) -> (Self, Vec<Vec<usize>>) {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for tokens in token_lists {
            for t in tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut vocab = Vocabulary::default();
        let ids = token_lists
            .iter()
            .map(|tokens| {
                tokens
                    .iter()
                    .filter_map(|t| {
                        let count = counts[t.as_str()];
                        if count < min_count {
                            return None;
                        }
                        Some(*vocab.index.entry(t.clone()).or_insert_with(|| {
                            vocab.words.push(t.clone());
                            vocab.counts.push(count);
                            vocab.words.len() - 1
                        }))
                    })
                    .collect()
            })
            .collect();
        (vocab, ids)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Label names and a per-node membership bitset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
    node_count: usize,
    membership: Vec<bool>,
}

impl LabelSet {
    /// `assignments[v]` lists label names of node `v`; ids follow sorted names.
    pub fn new(node_count: usize, assignments: &[Vec<String>]) -> Self {
        let mut names: Vec<String> = assignments.iter().flatten().cloned().collect();
        names.sort();
        names.dedup();
        let index: HashMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut membership = vec![false; node_count * names.len()];
        for (v, labels) in assignments.iter().enumerate() {
            for l in labels {
                membership[v * names.len() + index[l]] = true;
            }
        }
        Self {
            names,
            index,
            node_count,
            membership,
        }
    }

    /// From label ids directly; `rows[v]` lists the label ids of node `v`.
    pub fn from_ids(label_count: usize, rows: &[Vec<usize>]) -> Self {
        let names: Vec<String> = (0..label_count).map(|i| i.to_string()).collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut membership = vec![false; rows.len() * label_count];
        for (v, labels) in rows.iter().enumerate() {
            for &l in labels {
                membership[v * label_count + l] = true;
            }
        }
        Self {
            names,
            index,
            node_count: rows.len(),
            membership,
        }
    }

    pub fn label_count(&self) -> usize {
        self.names.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn has(&self, node: usize, label: usize) -> bool {
        self.membership[node * self.names.len() + label]
    }

    /// Membership bits of one node, one per label.
    pub fn row(&self, node: usize) -> &[bool] {
        let w = self.names.len();
        &self.membership[node * w..(node + 1) * w]
    }

    pub fn labels_of(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(node).iter().enumerate().filter(|(_, &b)| b).map(|(l, _)| l)
    }

    pub fn is_labeled(&self, node: usize) -> bool {
        self.row(node).iter().any(|&b| b)
    }
}

/// Everything loaded from a dataset directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub node_names: Vec<String>,
    pub node_index: HashMap<String, usize>,
    pub graph: DirectedGraph,
    pub docs: Vec<NodeDocument>,
    /// Raw text per node as read, `None` for nodes without a document line.
    pub raw_docs: Vec<Option<String>>,
    pub vocab: Vocabulary,
    pub labels: LabelSet,
}

impl Dataset {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            node_count: self.node_count(),
            edge_count: self.graph.edge_count(),
            label_count: self.labels.label_count(),
            vocab_size: self.vocab.len(),
            nodes: self.node_names.clone(),
            labels: self.labels.names().to_vec(),
        }
    }

    /// Drops the edges that close cycles (see [`break_cycles`]) and returns them.
    pub fn break_cycles(&mut self) -> Vec<(usize, usize)> {
        let (graph, dropped) = break_cycles(&self.graph, &self.node_names);
        self.graph = graph;
        dropped
    }
}
