//! Binary checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic            8 bytes  "PCTADWCK"
//! version          u32      1
//! architecture     u32      1 = pctadw1, 2 = pctadw2
//! dim              u32
//! node_count       u64
//! vocab_size       u64
//! step             u64      Adam steps taken
//! epochs_completed u64
//! parameters       f32 matrices, row-major: input (node_count x dim),
//!                  child output (node_count x head), parent output
//!                  (node_count x head), word output (vocab_size x dim)
//! first moments    same four matrices
//! second moments   same four matrices
//! ```
//!
//! `head` is `dim` for pctadw1 and `dim / 2` for pctadw2.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{Architecture, EmbeddingModel, ModelError, ParamBlock};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"PCTADWCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub version: u32,
    pub architecture: Architecture,
    pub dim: usize,
    pub node_count: usize,
    pub vocab_size: usize,
    pub step: u64,
    pub epochs_completed: u64,
}

impl CheckpointHeader {
    pub fn read_from<R: Read>(reader: &mut R) -> Result<Self, ModelError> {
        let mut magic = [0u8; 8];
        reader.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(ModelError::Format("not a checkpoint (bad magic)".into()));
        }
        let version = read_u32(reader)?;
        if version != CHECKPOINT_VERSION {
            return Err(ModelError::Format(format!("unsupported checkpoint version {version}")));
        }
        let code = read_u32(reader)?;
        let architecture = Architecture::from_code(code)
            .ok_or_else(|| ModelError::Format(format!("unknown architecture code {code}")))?;
        Ok(Self {
            version,
            architecture,
            dim: read_u32(reader)? as usize,
            node_count: read_u64(reader)? as usize,
            vocab_size: read_u64(reader)? as usize,
            step: read_u64(reader)?,
            epochs_completed: read_u64(reader)?,
        })
    }

    pub fn read(path: &Path) -> Result<Self, ModelError> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    /// Fails naming the first field that differs from the expected shape.
    pub fn check_compatible(
        &self,
        architecture: Architecture,
        dim: usize,
        node_count: usize,
        vocab_size: usize,
    ) -> Result<(), ModelError> {
        let mismatch = |field, checkpoint: String, expected: String| ModelError::Incompatible {
            field,
            checkpoint,
            expected,
        };
        if self.architecture != architecture {
            return Err(mismatch(
                "architecture",
                self.architecture.to_string(),
                architecture.to_string(),
            ));
        }
        if self.dim != dim {
            return Err(mismatch("dim", self.dim.to_string(), dim.to_string()));
        }
        if self.node_count != node_count {
            return Err(mismatch(
                "node_count",
                self.node_count.to_string(),
                node_count.to_string(),
            ));
        }
        if self.vocab_size != vocab_size {
            return Err(mismatch(
                "vocab_size",
                self.vocab_size.to_string(),
                vocab_size.to_string(),
            ));
        }
        Ok(())
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn write_floats<W: Write>(w: &mut W, data: &[f32]) -> io::Result<()> {
    for x in data {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_floats<R: Read>(r: &mut R, out: &mut [f32]) -> io::Result<()> {
    let mut b = [0u8; 4];
    for x in out {
        r.read_exact(&mut b)?;
        *x = f32::from_le_bytes(b);
    }
    Ok(())
}

fn write_model<W: Write>(w: &mut W, model: &EmbeddingModel<f32>, epochs_completed: u64) -> io::Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&model.architecture().code().to_le_bytes())?;
    w.write_all(&(model.dim() as u32).to_le_bytes())?;
    w.write_all(&(model.node_count() as u64).to_le_bytes())?;
    w.write_all(&(model.vocab_size() as u64).to_le_bytes())?;
    w.write_all(&model.step.to_le_bytes())?;
    w.write_all(&epochs_completed.to_le_bytes())?;
    for b in ParamBlock::ALL {
        write_floats(w, model.block(b).as_slice())?;
    }
    for b in ParamBlock::ALL {
        write_floats(w, model.moments(b).first.as_slice())?;
    }
    for b in ParamBlock::ALL {
        write_floats(w, model.moments(b).second.as_slice())?;
    }
    w.flush()
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes to a sibling `.partial` file and renames it into place; the partial
/// file is removed if anything fails.
pub fn save_checkpoint(model: &EmbeddingModel<f32>, epochs_completed: u64, path: &Path) -> Result<(), ModelError> {
    let tmp = partial_path(path);
    let result = File::create(&tmp)
        .and_then(|f| {
            let mut w = BufWriter::new(f);
            write_model(&mut w, model, epochs_completed)?;
            w.into_inner().map_err(|e| e.into_error())?.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(EmbeddingModel<f32>, CheckpointHeader), ModelError> {
    let mut r = BufReader::new(File::open(path)?);
    let header = CheckpointHeader::read_from(&mut r)?;
    let mut model = EmbeddingModel::zeros(header.architecture, header.dim, header.node_count, header.vocab_size)?;
    let truncated = |e: io::Error| match e.kind() {
        io::ErrorKind::UnexpectedEof => ModelError::Format("checkpoint is truncated".into()),
        _ => e.into(),
    };
    for b in ParamBlock::ALL {
        read_floats(&mut r, model.block_mut(b).as_mut_slice()).map_err(truncated)?;
    }
    for b in ParamBlock::ALL {
        read_floats(&mut r, model.moments_mut(b).first.as_mut_slice()).map_err(truncated)?;
    }
    for b in ParamBlock::ALL {
        read_floats(&mut r, model.moments_mut(b).second.as_mut_slice()).map_err(truncated)?;
    }
    if r.read(&mut [0u8])? != 0 {
        return Err(ModelError::Format("trailing bytes after checkpoint data".into()));
    }
    model.step = header.step;
    Ok((model, header))
}
