//! Fixed-dimension embedding matrix with stable string ids.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major `count x dim` matrix of `f32` feature vectors keyed by unique
/// string ids.
///
/// Vectors are kept exactly as given (no normalization). L2 norms are
/// computed once at construction, and every row gets an `id_rank`: its
/// position when ids are sorted ascending. Ranking code uses that rank to
/// break score ties without comparing strings.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    norms: Vec<f64>,
    id_rank: Vec<u32>,
    index: BTreeMap<String, usize>,
}

impl EmbeddingStore {
    pub fn new(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != ids.len() * dim {
            return Err(Error::ShapeMismatch { rows: ids.len(), dim, values: data.len() });
        }
        let mut index = BTreeMap::new();
        for (row, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), row).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        let mut norms = Vec::with_capacity(ids.len());
        for (row, values) in data.chunks_exact(dim).enumerate() {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row });
            }
            norms.push(num_traits::Float::sqrt(dot(values, values)));
        }
        let mut id_rank = alloc::vec![0u32; ids.len()];
        for (rank, &row) in index.values().enumerate() {
            id_rank[row] = rank as u32;
        }
        Ok(Self { dim, ids, data, norms, id_rank, index })
    }

    /// Builds a store from `(id, vector)` rows.
    pub fn from_rows<I>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (id, values) in rows {
            if values.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: values.len() });
            }
            ids.push(id);
            data.extend_from_slice(&values);
        }
        Self::new(dim, ids, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    /// Raw row-major values.
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn vector(&self, id: &str) -> Option<&[f32]> {
        self.row_of(id).map(|r| self.row(r))
    }

    pub fn norm(&self, row: usize) -> f64 {
        self.norms[row]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub(crate) fn id_rank(&self, row: usize) -> u32 {
        self.id_rank[row]
    }
}

impl PartialEq for EmbeddingStore {
    /// Bitwise equality of the stored values.
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.ids == other.ids
            && self.data.len() == other.data.len()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Dot product of two `f32` slices accumulated in `f64`.
///
/// Each `f32 * f32` product is exact in `f64`; only the additions round. The
/// summation order is fixed (eight interleaved lanes, then the tail), so a
/// given pair of slices always yields the same bits.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for i in 0..8 {
            lanes[i] += x[i] as f64 * y[i] as f64;
        }
    }
    let mut tail = 0.0f64;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += *x as f64 * *y as f64;
    }
    ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))
        + tail
}
