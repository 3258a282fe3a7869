//! Binary model checkpoints.
//!
//! ```text
//! magic      8 bytes  "CBRCKPT\0"
//! version    u32 LE
//! endianness u8       1 = little endian (the only layout written)
//! width      u8       4 (f32) or 8 (f64)
//! meta_len   u64 LE, then meta_len bytes of UTF-8 TOML (see CheckpointMeta)
//! n_tensors  u32 LE, then per tensor:
//!   name_len u32 LE, name bytes, rows u64 LE, cols u64 LE,
//!   rows * cols values, row-major
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DatasetFingerprint;
use crate::models::{CollabModel, ModelError, ModelKind};
use crate::nn::{Branch, LinearLayer};
use crate::scalar::Scalar;
use crate::training::TrainConfig;

pub const MAGIC: &[u8; 8] = b"CBRCKPT\0";
pub const VERSION: u32 = 1;
const LITTLE_ENDIAN: u8 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("unsupported layout: {0}")]
    Layout(String),
    #[error("checkpoint metadata: {0}")]
    Meta(String),
    #[error("checkpoint tensors: {0}")]
    Tensor(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, CheckpointError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub kind: ModelKind,
    pub layer_sizes: Vec<usize>,
    pub dropout: f64,
    pub n_users: usize,
    pub n_items: usize,
    /// `f32` or `f64`, the precision the model was trained in.
    pub scalar: String,
    pub fingerprint: DatasetFingerprint,
    pub train_config: Option<TrainConfig>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint<T> {
    pub meta: CheckpointMeta,
    pub model: CollabModel<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(model: CollabModel<T>, fingerprint: DatasetFingerprint, train_config: Option<TrainConfig>) -> Self {
        let meta = CheckpointMeta {
            kind: model.kind(),
            layer_sizes: model.layer_sizes(),
            dropout: model.user_branch().dropout(),
            n_users: model.n_users(),
            n_items: model.n_items(),
            scalar: T::NAME.to_string(),
            fingerprint,
            train_config,
        };
        Checkpoint { meta, model }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u8(LITTLE_ENDIAN)?;
        w.write_u8(T::WIDTH)?;
        let meta = toml::to_string(&self.meta).map_err(|e| CheckpointError::Meta(e.to_string()))?;
        w.write_u64::<LittleEndian>(meta.len() as u64)?;
        w.write_all(meta.as_bytes())?;
        let tensors = self.model.parameters();
        w.write_u32::<LittleEndian>(tensors.len() as u32)?;
        for (name, (rows, cols), data) in tensors {
            w.write_u32::<LittleEndian>(name.len() as u32)?;
            w.write_all(name.as_bytes())?;
            w.write_u64::<LittleEndian>(rows as u64)?;
            w.write_u64::<LittleEndian>(cols as u64)?;
            for &v in data {
                v.write_le(&mut w)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    /// Reads a checkpoint of either width, converting values to `T`.
    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let endian = r.read_u8()?;
        if endian != LITTLE_ENDIAN {
            return Err(CheckpointError::Layout(format!("endianness flag {endian}")));
        }
        let width = r.read_u8()?;
        let read_value: fn(&mut R) -> io::Result<T> = match width {
            4 => |r| f32::read_le(r).map(|v| T::of(v as f64)),
            8 => |r| f64::read_le(r).map(T::of),
            w => return Err(CheckpointError::Layout(format!("scalar width {w}"))),
        };
        let meta_len = r.read_u64::<LittleEndian>()?;
        let mut meta = vec![0u8; meta_len as usize];
        r.read_exact(&mut meta)?;
        let meta = String::from_utf8(meta).map_err(|e| CheckpointError::Meta(e.to_string()))?;
        let meta: CheckpointMeta = toml::from_str(&meta).map_err(|e| CheckpointError::Meta(e.to_string()))?;

        let n = r.read_u32::<LittleEndian>()? as usize;
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|e| CheckpointError::Tensor(e.to_string()))?;
            let rows = r.read_u64::<LittleEndian>()? as usize;
            let cols = r.read_u64::<LittleEndian>()? as usize;
            let data = (0..rows * cols).map(|_| read_value(&mut r)).collect::<io::Result<Vec<T>>>()?;
            tensors.push((name, rows, cols, data));
        }
        let model = assemble(&meta, tensors)?;
        Ok(Checkpoint { meta, model })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

fn assemble<T: Scalar>(meta: &CheckpointMeta, tensors: Vec<(String, usize, usize, Vec<T>)>) -> Result<CollabModel<T>> {
    let mut it = tensors.into_iter();
    let mut layer = |prefix: &str| -> Result<LinearLayer<T>> {
        let (wn, rows, cols, w) = it
            .next()
            .ok_or_else(|| CheckpointError::Tensor(format!("missing {prefix}.weight")))?;
        let (bn, brows, bcols, b) = it
            .next()
            .ok_or_else(|| CheckpointError::Tensor(format!("missing {prefix}.bias")))?;
        if wn != format!("{prefix}.weight") || bn != format!("{prefix}.bias") {
            return Err(CheckpointError::Tensor(format!("expected {prefix}.weight/bias, found {wn}/{bn}")));
        }
        if brows != 1 || bcols != cols {
            return Err(CheckpointError::Tensor(format!("{bn} has shape {brows}x{bcols}")));
        }
        LinearLayer::from_parts(rows, cols, w, b).map_err(|e| CheckpointError::Model(e.into()))
    };
    let user_proj = layer("user_proj")?;
    let item_proj = layer("item_proj")?;
    let depth = meta.layer_sizes.len().saturating_sub(1);
    let mut branch = |name: &str| -> Result<Branch<T>> {
        let layers = (0..depth).map(|l| layer(&format!("{name}.{l}"))).collect::<Result<Vec<_>>>()?;
        Branch::new(layers, meta.dropout).map_err(|e| CheckpointError::Model(e.into()))
    };
    let model = match meta.kind {
        ModelKind::CoBraR => {
            let g = branch("g")?;
            CollabModel::cobrar(user_proj, item_proj, g)?
        }
        ModelKind::DeepMF => {
            let g_u = branch("g_user")?;
            let g_v = branch("g_item")?;
            CollabModel::deepmf(user_proj, item_proj, g_u, g_v)?
        }
    };
    if it.next().is_some() {
        return Err(CheckpointError::Tensor("unexpected trailing tensors".into()));
    }
    if model.layer_sizes() != meta.layer_sizes || model.n_users() != meta.n_users || model.n_items() != meta.n_items {
        return Err(CheckpointError::Tensor("tensor shapes disagree with metadata".into()));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fingerprint() -> DatasetFingerprint {
        DatasetFingerprint {
            n_users: 3,
            n_items: 4,
            n_interactions: 7,
            split_seed: 11,
        }
    }

    #[test]
    fn round_trip_both_kinds() {
        for kind in [ModelKind::CoBraR, ModelKind::DeepMF] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let model = CollabModel::<f64>::new(kind, 3, 4, &[6, 5, 2], 0.5, &mut rng).unwrap();
            let ck = Checkpoint::new(model.clone(), fingerprint(), Some(TrainConfig::default()));
            let mut buf = Vec::new();
            ck.write(&mut buf).unwrap();
            let back = Checkpoint::<f64>::read(&buf[..]).unwrap();
            assert_eq!(back.model, model);
            assert_eq!(back.meta, ck.meta);
        }
    }

    #[test]
    fn width_conversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = CollabModel::<f32>::new(ModelKind::CoBraR, 3, 4, &[4, 2], 0.0, &mut rng).unwrap();
        let mut buf = Vec::new();
        Checkpoint::new(model.clone(), fingerprint(), None).write(&mut buf).unwrap();
        let wide = Checkpoint::<f64>::read(&buf[..]).unwrap();
        assert_eq!(wide.meta.scalar, "f32");
        let orig = model.parameters();
        for ((_, _, a), (_, _, b)) in orig.iter().zip(wide.model.parameters()) {
            assert!(a.iter().zip(b).all(|(x, y)| *x as f64 == *y));
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(Checkpoint::<f64>::read(&b"NOTACKPTxxxx"[..]), Err(CheckpointError::BadMagic)));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = CollabModel::<f64>::new(ModelKind::CoBraR, 3, 4, &[4, 2], 0.0, &mut rng).unwrap();
        let mut buf = Vec::new();
        Checkpoint::new(model, fingerprint(), None).write(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(Checkpoint::<f64>::read(&buf[..]), Err(CheckpointError::Io(_))));
    }
}
