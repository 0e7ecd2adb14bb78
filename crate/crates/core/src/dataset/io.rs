use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{tokenize, Dataset, DatasetError, DirectedGraph, LabelSet, NodeDocument, TokenizerConfig, Vocabulary};

pub const EDGES_FILE: &str = "edges.tsv";
pub const DOCS_FILE: &str = "docs.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Sidecar summary of a dataset directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub node_count: usize,
    pub edge_count: usize,
    pub label_count: usize,
    pub vocab_size: usize,
    /// Node names by id.
    pub nodes: Vec<String>,
    /// Label names by id.
    pub labels: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|source| DatasetError::Json {
            path: path.to_owned(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|source| DatasetError::Json {
            path: path.to_owned(),
            source,
        })?;
        text.push('\n');
        write(path, &text)
    }

    /// Checks the counts against a loaded dataset. Vocabulary size is not
    /// compared since it depends on the tokenizer settings.
    pub fn check(&self, dataset: &Dataset) -> Result<(), DatasetError> {
        let actual = dataset.manifest();
        let pairs = [
            ("node_count", self.node_count, actual.node_count),
            ("edge_count", self.edge_count, actual.edge_count),
            ("label_count", self.label_count, actual.label_count),
        ];
        for (field, expected, actual) in pairs {
            if expected != actual {
                return Err(DatasetError::ManifestMismatch {
                    field,
                    expected: expected.to_string(),
                    actual: actual.to_string(),
                });
            }
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), DatasetError> {
    fs::write(path, text).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Non-blank lines with their 1-based line numbers, `\r` stripped.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Node names in order of first appearance, and edges as id pairs.
type ParsedEdges = (Vec<String>, Vec<(usize, usize)>);

fn parse_edges(path: &Path, text: &str) -> Result<ParsedEdges, DatasetError> {
    let mut names = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |name: &str| -> usize {
        *index.entry(name.to_owned()).or_insert_with(|| {
            names.push(name.to_owned());
            names.len() - 1
        })
    };
    let mut edges = Vec::new();
    for (line, content) in lines(text) {
        let fields: Vec<&str> = content.split('\t').collect();
        if fields.iter().any(|f| f.is_empty()) {
            return Err(DatasetError::Parse {
                path: path.to_owned(),
                line,
                message: "empty node name".into(),
            });
        }
        match fields.as_slice() {
            [node] => {
                intern(node);
            }
            [parent, child] => {
                let u = intern(parent);
                let v = intern(child);
                edges.push((u, v));
            }
            _ => {
                return Err(DatasetError::Parse {
                    path: path.to_owned(),
                    line,
                    message: format!("expected `parent<TAB>child`, found {} fields", fields.len()),
                })
            }
        }
    }
    Ok((names, edges))
}

/// Per-node second column of a `node<TAB>value` file.
fn parse_node_column(
    path: &Path,
    text: &str,
    index: &HashMap<String, usize>,
) -> Result<Vec<Option<String>>, DatasetError> {
    let mut values = vec![None; index.len()];
    for (line, content) in lines(text) {
        let (name, value) = content.split_once('\t').unwrap_or((content, ""));
        let node = *index.get(name).ok_or_else(|| DatasetError::DanglingNode {
            path: path.to_owned(),
            line,
            name: name.to_owned(),
        })?;
        if values[node].is_some() {
            return Err(DatasetError::Parse {
                path: path.to_owned(),
                line,
                message: format!("second entry for node `{name}`"),
            });
        }
        values[node] = Some(value.to_owned());
    }
    Ok(values)
}

fn map_graph_error(err: DatasetError, names: &[String]) -> DatasetError {
    let name = |s: &String| names[s.parse::<usize>().expect("graph errors carry ids")].clone();
    match err {
        DatasetError::SelfLoops(ids) => DatasetError::SelfLoops(ids.iter().map(name).collect()),
        DatasetError::DuplicateEdges(pairs) => {
            DatasetError::DuplicateEdges(pairs.iter().map(|(u, v)| (name(u), name(v))).collect())
        }
        other => other,
    }
}

/// Loads and validates a dataset from its three TSV files.
pub fn load_dataset(
    graph_path: &Path,
    docs_path: &Path,
    labels_path: &Path,
    tokenizer: &TokenizerConfig,
) -> Result<Dataset, DatasetError> {
    let (node_names, edges) = parse_edges(graph_path, &read(graph_path)?)?;
    let graph = DirectedGraph::from_edges(node_names.len(), edges).map_err(|e| map_graph_error(e, &node_names))?;
    let node_index: HashMap<String, usize> = node_names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();

    let raw_docs = parse_node_column(docs_path, &read(docs_path)?, &node_index)?;
    let token_lists: Vec<Vec<String>> = raw_docs
        .iter()
        .map(|raw| raw.as_deref().map(|t| tokenize(t, tokenizer)).unwrap_or_default())
        .collect();
    let (vocab, ids) = Vocabulary::build(&token_lists, tokenizer.min_count);
    let docs = ids
        .into_iter()
        .enumerate()
        .map(|(node, tokens)| NodeDocument { node, tokens })
        .collect();

    let raw_labels = parse_node_column(labels_path, &read(labels_path)?, &node_index)?;
    let assignments: Vec<Vec<String>> = raw_labels
        .iter()
        .map(|raw| {
            raw.as_deref()
                .map(|r| {
                    r.split(',')
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(str::to_owned)
                        .collect()
                })
                .unwrap_or_default()
        })
        .collect();
    let labels = LabelSet::new(node_names.len(), &assignments);

    Ok(Dataset {
        node_names,
        node_index,
        graph,
        docs,
        raw_docs,
        vocab,
        labels,
    })
}

/// Loads `edges.tsv`, `docs.tsv` and `labels.tsv` from `dir`. When a
/// `manifest.json` is present its counts must agree with the data.
pub fn load_dataset_dir(dir: &Path, tokenizer: &TokenizerConfig) -> Result<Dataset, DatasetError> {
    let dataset = load_dataset(
        &dir.join(EDGES_FILE),
        &dir.join(DOCS_FILE),
        &dir.join(LABELS_FILE),
        tokenizer,
    )?;
    let manifest_path: PathBuf = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        Manifest::read(&manifest_path)?.check(&dataset)?;
    }
    Ok(dataset)
}

/// Writes a dataset in canonical form: edges sorted by (parent, child) name
/// followed by edgeless nodes, documents and label lines sorted by node name,
/// labels within a line sorted.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let names = &dataset.node_names;
    let graph = &dataset.graph;

    let mut edges: Vec<(&str, &str)> = graph
        .edges()
        .iter()
        .map(|&(u, v)| (names[u].as_str(), names[v].as_str()))
        .collect();
    edges.sort_unstable();
    let mut isolated: Vec<&str> = (0..graph.node_count())
        .filter(|&v| graph.in_degree(v) == 0 && graph.out_degree(v) == 0)
        .map(|v| names[v].as_str())
        .collect();
    isolated.sort_unstable();
    let mut text = String::new();
    for (u, v) in edges {
        text.push_str(&format!("{u}\t{v}\n"));
    }
    for v in isolated {
        text.push_str(v);
        text.push('\n');
    }
    write(&dir.join(EDGES_FILE), &text)?;

    let mut order: Vec<usize> = (0..graph.node_count()).collect();
    order.sort_unstable_by(|&a, &b| names[a].cmp(&names[b]));

    let mut text = String::new();
    for &v in &order {
        if let Some(raw) = &dataset.raw_docs[v] {
            text.push_str(&format!("{}\t{raw}\n", names[v]));
        }
    }
    write(&dir.join(DOCS_FILE), &text)?;

    let mut text = String::new();
    for &v in &order {
        let mut labels: Vec<&str> = dataset
            .labels
            .labels_of(v)
            .map(|l| dataset.labels.names()[l].as_str())
            .collect();
        if labels.is_empty() {
            continue;
        }
        labels.sort_unstable();
        text.push_str(&format!("{}\t{}\n", names[v], labels.join(",")));
    }
    write(&dir.join(LABELS_FILE), &text)?;

    dataset.manifest().write(&dir.join(MANIFEST_FILE))
}
