//! Core algorithms for validating synthetic visual-entailment datasets in
//! embedding space.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO. It covers:
//!
//! - [`store`] and [`manifest`]: the in-memory embedding store, its
//!   per-vector metadata (roles, splits, parent/child links) and labelled
//!   premise/hypothesis pairs.
//! - [`similarity`]: exact cosine similarity, blocked top-k retrieval and
//!   streaming similarity-distribution statistics.
//! - [`retrieval`]: recall@k / precision@k curves for parent→children
//!   retrieval, including the seeded sampling protocol.
//! - [`fusion`], [`mlp`], [`train`]: the five-block feature fusion and a
//!   one-hidden-layer perceptron trained with Adam on softmax cross-entropy.
//! - [`metrics`] and [`transfer`]: accuracy / macro-F1 reports and
//!   cross-dataset scoring with a reduced label set.
//!
//! Parallel work is expressed through the [`exec::Executor`] trait so that
//! results are identical for any worker count. [`exec::Serial`] is provided
//! here; a thread-pool executor lives in the std companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod exec;
pub mod fusion;
pub mod label;
pub mod manifest;
pub mod metrics;
pub mod mlp;
pub mod retrieval;
pub mod similarity;
pub mod store;
pub mod train;
pub mod transfer;

pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use label::Label;
pub use manifest::{Manifest, ManifestEntry, PairExample, ResolvedPair, Role, Split};
pub use store::EmbeddingStore;
