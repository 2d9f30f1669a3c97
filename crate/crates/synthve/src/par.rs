//! Thread-pool executor.

use rayon::prelude::*;
use synthve_core::Executor;

/// Runs tasks on the global rayon pool. Task boundaries are chosen by the
/// core algorithms, so results match [`synthve_core::Serial`] exactly.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Caps the global pool at `threads` workers. Only the first call has an
/// effect.
pub fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads.filter(|&n| n > 0) {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialised");
        }
    }
}
