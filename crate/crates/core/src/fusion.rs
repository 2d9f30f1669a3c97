//! Five-block fusion of a premise vector and a hypothesis vector.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `[v1 | v2 | v1 + v2 | v1 - v2 | v1 * v2]`, each block of length `d`; the
/// product is elementwise.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedVector(Vec<f32>);

impl FusedVector {
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn block_len(&self) -> usize {
        self.0.len() / 5
    }

    /// Block `i` of the layout (0 = premise .. 4 = product).
    pub fn block(&self, i: usize) -> &[f32] {
        let d = self.block_len();
        &self.0[i * d..(i + 1) * d]
    }

    /// Recovers `(v1, v2)` from the first two blocks.
    pub fn inputs(&self) -> (&[f32], &[f32]) {
        (self.block(0), self.block(1))
    }
}

pub fn fuse(v1: &[f32], v2: &[f32]) -> Result<FusedVector> {
    let mut out = alloc::vec![0.0; 5 * v1.len()];
    fuse_into(v1, v2, &mut out)?;
    Ok(FusedVector(out))
}

/// Writes the fused vector into `out`, which must have length `5 * d`.
pub fn fuse_into<T: From<f32> + Copy>(v1: &[f32], v2: &[f32], out: &mut [T]) -> Result<()> {
    let d = v1.len();
    if v2.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: v2.len() });
    }
    if out.len() != 5 * d {
        return Err(Error::DimensionMismatch { expected: 5 * d, found: out.len() });
    }
    let (a, rest) = out.split_at_mut(d);
    let (b, rest) = rest.split_at_mut(d);
    let (sum, rest) = rest.split_at_mut(d);
    let (diff, prod) = rest.split_at_mut(d);
    for i in 0..d {
        let (x, y) = (v1[i], v2[i]);
        a[i] = x.into();
        b[i] = y.into();
        sum[i] = (x + y).into();
        diff[i] = (x - y).into();
        prod[i] = (x * y).into();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn two_dim_layout() {
        let f = fuse(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(f.as_slice(), &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn identical_inputs() {
        let v = [0.5f32, -2.0, 3.0];
        let f = fuse(&v, &v).unwrap();
        assert_eq!(f.block(0), &v);
        assert_eq!(f.block(1), &v);
        assert_eq!(f.block(2), &[1.0, -4.0, 6.0]);
        assert_eq!(f.block(3), &[0.0, 0.0, 0.0]);
        assert_eq!(f.block(4), &[0.25, 4.0, 9.0]);
    }

    #[test]
    fn rejects_mismatch() {
        assert!(matches!(fuse(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        let mut short = vec![0.0f32; 4];
        assert!(fuse_into(&[1.0], &[1.0], &mut short).is_err());
    }

    #[test]
    fn widens_to_f64() {
        let mut out = vec![0.0f64; 5];
        fuse_into(&[0.1], &[0.2], &mut out).unwrap();
        assert_eq!(out[4], (0.1f32 * 0.2f32) as f64);
    }
}
