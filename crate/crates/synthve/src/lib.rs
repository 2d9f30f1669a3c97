//! File formats, a thread-pool executor and the `synthve` command line
//! for [`synthve_core`].
//!
//! The binary store, JSONL manifest and pair formats live in
//! [`store_io`] and [`jsonl`]; classifier checkpoints in [`checkpoint`].

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod jsonl;
pub mod output;
pub mod par;
pub mod store_io;
pub mod synthetic;

pub use error::{Error, Result};
pub use par::Rayon;
