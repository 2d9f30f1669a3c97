//! Execution strategy for data-parallel loops.
//!
//! Every parallel computation in this crate is split into a fixed number of
//! tasks whose boundaries depend only on the input size, never on the worker
//! count. Results come back in task order and are reduced serially, so the
//! output is bit-identical for any executor.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0), f(1), .., f(n - 1)` and returns the results in index
    /// order.
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every task on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Number of fixed-size chunks needed to cover `len` items.
pub(crate) fn chunk_count(len: usize, chunk: usize) -> usize {
    len.div_ceil(chunk)
}

pub(crate) fn chunk_range(len: usize, chunk: usize, i: usize) -> core::ops::Range<usize> {
    let start = i * chunk;
    start..(start + chunk).min(len)
}
