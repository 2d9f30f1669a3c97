//! Model checkpoint format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "VEMP" | version u32 = 1 | d_in u32 | d_hidden u32 | d_out u32
//! activation u8 (0 = relu, 1 = identity) | d_out label tags u8
//! w1 (d_in * d_hidden f32) | b1 (d_hidden) | w2 (d_hidden * d_out) | b2 (d_out)
//! ```

use std::fs;
use std::path::Path;

use synthve_core::mlp::{Activation, Mlp, Params};
use synthve_core::Label;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"VEMP";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 21;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated header")]
    TruncatedHeader,
    #[error("unknown activation tag {0}")]
    UnknownActivation(u8),
    #[error("unknown label tag {0}")]
    UnknownLabel(u8),
    #[error("shape mismatch: header implies {expected} bytes, file has {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Invalid(#[from] synthve_core::Error),
}

pub fn encode_model(model: &Mlp<f32>) -> Vec<u8> {
    let p = model.params();
    let mut out = Vec::with_capacity(HEADER_LEN + model.d_out() + 4 * p.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [model.d_in(), model.d_hidden(), model.d_out()] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.push(model.activation().tag());
    out.extend(model.labels().iter().map(|l| l.tag()));
    for block in p.blocks() {
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<Mlp<f32>, CheckpointError> {
    if bytes.len() < 4 {
        return Err(CheckpointError::TruncatedHeader);
    }
    if bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(CheckpointError::TruncatedHeader);
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let version = u32_at(4) as u32;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let (d_in, d_hidden, d_out) = (u32_at(8), u32_at(12), u32_at(16));
    let activation = Activation::from_tag(bytes[20]).ok_or(CheckpointError::UnknownActivation(bytes[20]))?;

    let n_params = [d_in * d_hidden, d_hidden, d_hidden * d_out, d_out];
    let expected = HEADER_LEN + d_out + 4 * n_params.iter().sum::<usize>();
    if bytes.len() != expected {
        return Err(CheckpointError::ShapeMismatch { expected, found: bytes.len() });
    }
    let labels = bytes[HEADER_LEN..HEADER_LEN + d_out]
        .iter()
        .map(|&t| Label::from_tag(t).ok_or(CheckpointError::UnknownLabel(t)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut floats = bytes[HEADER_LEN + d_out..].chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()));
    let mut take = |n: usize| floats.by_ref().take(n).collect::<Vec<f32>>();
    let params = Params { w1: take(n_params[0]), b1: take(n_params[1]), w2: take(n_params[2]), b2: take(n_params[3]) };
    Ok(Mlp::new(d_in, d_hidden, labels, activation, params)?)
}

pub fn save_model(model: &Mlp<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)).map_err(|source| Error::Write { path: path.into(), source })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Mlp<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Read { path: path.into(), source })?;
    decode_model(&bytes).map_err(|source| Error::Checkpoint { path: path.into(), source })
}
