//! Binary embedding store format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "VEEM" | version u32 = 1 | count u64 | dim u32
//! count * dim f32, row-major
//! count * (u16 byte length, UTF-8 id)
//! ```
//!
//! The header is 20 bytes; an empty store is exactly the header.

use std::fs;
use std::path::Path;

use synthve_core::EmbeddingStore;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"VEEM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated header")]
    TruncatedHeader,
    #[error("truncated payload")]
    TruncatedPayload,
    #[error("truncated id table")]
    TruncatedIds,
    #[error("id of row {0} is not valid UTF-8")]
    InvalidId(usize),
    #[error("id of row {0} exceeds 65535 bytes")]
    IdTooLong(usize),
    #[error("{0} trailing bytes after id table")]
    TrailingBytes(usize),
    #[error("size overflow")]
    Overflow,
    #[error(transparent)]
    Invalid(#[from] synthve_core::Error),
}

pub fn encode_store(store: &EmbeddingStore) -> Result<Vec<u8>, FormatError> {
    let dim = u32::try_from(store.dim()).map_err(|_| FormatError::Overflow)?;
    let ids_len: usize = store.ids().iter().map(|id| 2 + id.len()).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + store.as_slice().len() * 4 + ids_len);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(store.len() as u64).to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for v in store.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for (row, id) in store.ids().iter().enumerate() {
        let len = u16::try_from(id.len()).map_err(|_| FormatError::IdTooLong(row))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
    }
    Ok(out)
}

pub fn decode_store(bytes: &[u8]) -> Result<EmbeddingStore, FormatError> {
    if bytes.len() < 4 {
        return Err(FormatError::TruncatedHeader);
    }
    if bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::TruncatedHeader);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    let count = usize::try_from(count).map_err(|_| FormatError::Overflow)?;
    let values = count.checked_mul(dim).ok_or(FormatError::Overflow)?;
    let payload_end = values.checked_mul(4).and_then(|n| n.checked_add(HEADER_LEN)).ok_or(FormatError::Overflow)?;
    if bytes.len() < payload_end {
        return Err(FormatError::TruncatedPayload);
    }
    let data: Vec<f32> = bytes[HEADER_LEN..payload_end]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();

    let mut ids = Vec::with_capacity(count);
    let mut pos = payload_end;
    for row in 0..count {
        let len_bytes = bytes.get(pos..pos + 2).ok_or(FormatError::TruncatedIds)?;
        let len = u16::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        pos += 2;
        let raw = bytes.get(pos..pos + len).ok_or(FormatError::TruncatedIds)?;
        ids.push(String::from_utf8(raw.to_vec()).map_err(|_| FormatError::InvalidId(row))?);
        pos += len;
    }
    if pos != bytes.len() {
        return Err(FormatError::TrailingBytes(bytes.len() - pos));
    }
    Ok(EmbeddingStore::new(dim, ids, data)?)
}

pub fn read_store(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Read { path: path.into(), source })?;
    decode_store(&bytes).map_err(|source| Error::Store { path: path.into(), source })
}

pub fn write_store(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_store(store).map_err(|source| Error::Store { path: path.into(), source })?;
    fs::write(path, bytes).map_err(|source| Error::Write { path: path.into(), source })
}

/// Validates raw rows and writes them; nothing is written if validation
/// fails.
pub fn write_rows(path: impl AsRef<Path>, dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let store = EmbeddingStore::new(dim, ids, data)
        .map_err(|e| Error::Store { path: path.into(), source: FormatError::Invalid(e) })?;
    write_store(&store, path)?;
    Ok(store)
}
