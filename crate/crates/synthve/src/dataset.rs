//! A store, its manifest and optionally its pairs, loaded together.

use std::path::Path;

use serde::{Deserialize, Serialize};
use synthve_core::{EmbeddingStore, Manifest, ResolvedPair, Role, Split};

use crate::error::Result;
use crate::jsonl::{read_manifest, read_pairs, PairSet};
use crate::store_io::read_store;

/// Which premises a pair subset keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PremiseRole {
    #[default]
    Original,
    Generated,
    Any,
}

impl PremiseRole {
    pub fn accepts(self, role: Role) -> bool {
        match self {
            PremiseRole::Original => role == Role::OriginalImage,
            PremiseRole::Generated => role == Role::GeneratedImage,
            PremiseRole::Any => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PremiseRole::Original => "original",
            PremiseRole::Generated => "generated",
            PremiseRole::Any => "any",
        }
    }
}

#[derive(Debug)]
pub struct Dataset {
    pub store: EmbeddingStore,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn load(store: &Path, manifest: &Path) -> Result<Self> {
        let store = read_store(store)?;
        log::info!("loaded {} vectors of dimension {}", store.len(), store.dim());
        let manifest = read_manifest(manifest, &store)?;
        log::info!("loaded {} manifest entries", manifest.len());
        Ok(Self { store, manifest })
    }

    pub fn pairs(&self, path: &Path) -> Result<PairSet> {
        let pairs = read_pairs(path, &self.store, &self.manifest)?;
        log::info!("loaded {} pairs", pairs.resolved.len());
        Ok(pairs)
    }
}

/// Pairs of `split` (every split when `None`) whose premise role matches.
pub fn select_pairs(pairs: &[ResolvedPair], split: Option<Split>, premise: PremiseRole) -> Vec<ResolvedPair> {
    pairs
        .iter()
        .filter(|p| split.is_none_or(|s| p.split == s) && premise.accepts(p.premise_role))
        .cloned()
        .collect()
}
