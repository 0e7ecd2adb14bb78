//! Named node vectors and the word2vec text format.
//!
//! The text format is a `count dim` header line followed by one
//! `name f1 ... fD` line per vector. Names may contain spaces: the last `dim`
//! fields of a line are the vector and everything before them is the name.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::EmbeddingModel;

#[derive(Debug, Error)]
pub enum EmbeddingsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("expected {expected} values, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("duplicate vector name `{0}`")]
    DuplicateName(String),
    #[error("invalid vector name {0:?}")]
    InvalidName(String),
    #[error("no vector for: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    names: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    data: Vec<f32>,
}

impl Embeddings {
    pub fn new(names: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self, EmbeddingsError> {
        if data.len() != names.len() * dim {
            return Err(EmbeddingsError::Shape {
                expected: names.len() * dim,
                found: data.len(),
            });
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() || name.contains(['\n', '\r']) || name.trim() != name {
                return Err(EmbeddingsError::InvalidName(name.clone()));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(EmbeddingsError::DuplicateName(name.clone()));
            }
        }
        Ok(Self {
            names,
            index,
            dim,
            data,
        })
    }

    /// Unnamed vectors, named by their row index.
    pub fn from_rows(rows: &[Vec<f32>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let names = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(names, dim, rows.concat()).expect("rows of equal length")
    }

    /// Node representations of a trained model, row `v` named `names[v]`.
    pub fn from_model(model: &EmbeddingModel<f32>, names: &[String]) -> Result<Self, EmbeddingsError> {
        if names.len() != model.node_count() {
            return Err(EmbeddingsError::Shape {
                expected: model.node_count(),
                found: names.len(),
            });
        }
        let data = (0..model.node_count())
            .flat_map(|v| model.representation(v).iter().copied())
            .collect();
        Self::new(names.to_vec(), model.dim(), data)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.names.len())
    }

    /// Reorders to `names`; every name must have a vector.
    pub fn aligned_to(&self, names: &[String]) -> Result<Self, EmbeddingsError> {
        let missing: Vec<String> = names.iter().filter(|n| !self.index.contains_key(*n)).cloned().collect();
        if !missing.is_empty() {
            return Err(EmbeddingsError::Missing(missing));
        }
        let data = names
            .iter()
            .flat_map(|n| self.row(self.index[n]).iter().copied())
            .collect();
        Self::new(names.to_vec(), self.dim, data)
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (name, row) in self.names.iter().zip(self.rows()) {
            w.write_all(name.as_bytes())?;
            for x in row {
                write!(w, " {x}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self, EmbeddingsError> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or(EmbeddingsError::Parse {
            line: 1,
            message: "empty file".into(),
        })?;
        let header = header?;
        let parse_header = || -> Option<(usize, usize)> {
            let mut it = header.split_whitespace();
            let n = it.next()?.parse().ok()?;
            let d = it.next()?.parse().ok()?;
            it.next().is_none().then_some((n, d))
        };
        let (count, dim) = parse_header().ok_or_else(|| EmbeddingsError::Parse {
            line: 1,
            message: format!("expected `count dim` header, found {header:?}"),
        })?;

        let mut names = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (i, line) in lines {
            let line = line?;
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.rsplitn(dim + 1, ' ').collect();
            if fields.len() != dim + 1 || fields[dim].is_empty() {
                return Err(EmbeddingsError::Parse {
                    line: line_no,
                    message: format!("expected a name and {dim} values"),
                });
            }
            for f in fields[..dim].iter().rev() {
                data.push(f.parse::<f32>().map_err(|e| EmbeddingsError::Parse {
                    line: line_no,
                    message: format!("bad value {f:?}: {e}"),
                })?);
            }
            names.push(fields[dim].to_owned());
        }
        if names.len() != count {
            return Err(EmbeddingsError::Parse {
                line: 1,
                message: format!("header announces {count} vectors, file has {}", names.len()),
            });
        }
        Self::new(names, dim, data)
    }

    pub fn save_text(&self, path: &Path) -> Result<(), EmbeddingsError> {
        self.write_text(BufWriter::new(File::create(path)?))?;
        Ok(())
    }

    pub fn load_text(path: &Path) -> Result<Self, EmbeddingsError> {
        Self::read_text(BufReader::new(File::open(path)?))
    }
}
