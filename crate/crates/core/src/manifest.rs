//! Per-vector metadata and labelled premise/hypothesis pairs.

use core::fmt;
use core::str::FromStr;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::label::Label;
use crate::store::EmbeddingStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Role {
    OriginalImage,
    GeneratedImage,
    HypothesisText,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::OriginalImage, Role::GeneratedImage, Role::HypothesisText];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::OriginalImage => "original_image",
            Role::GeneratedImage => "generated_image",
            Role::HypothesisText => "hypothesis_text",
        }
    }

    pub fn is_image(self) -> bool {
        !matches!(self, Role::HypothesisText)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnknownRole(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::UnknownSplit(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManifestEntry {
    pub id: String,
    pub role: Role,
    pub split: Split,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub parent_id: Option<String>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub caption: Option<String>,
}

/// Validated manifest indexed by id, role, split and parent link.
///
/// Every entry refers to a row of the store it was validated against. A
/// generated image always points at an original image of the same split;
/// no other role carries a parent.
#[derive(Debug, Clone)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
    by_id: BTreeMap<String, usize>,
    rows: Vec<usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    entry_of_row: Vec<Option<usize>>,
}

impl Manifest {
    /// Validates `entries` against `store`. Errors are wrapped in
    /// [`Error::AtRecord`] carrying the offending entry index.
    pub fn new(entries: Vec<ManifestEntry>, store: &EmbeddingStore) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        let mut rows = Vec::with_capacity(entries.len());
        let mut entry_of_row = alloc::vec![None; store.len()];
        for (i, e) in entries.iter().enumerate() {
            let row = store.row_of(&e.id).ok_or_else(|| Error::at(i, Error::UnknownId(e.id.clone())))?;
            if by_id.insert(e.id.clone(), i).is_some() {
                return Err(Error::at(i, Error::DuplicateId(e.id.clone())));
            }
            rows.push(row);
            entry_of_row[row] = Some(i);
        }

        let mut parent = alloc::vec![None; entries.len()];
        let mut children = alloc::vec![Vec::new(); entries.len()];
        for (i, e) in entries.iter().enumerate() {
            match (e.role, &e.parent_id) {
                (Role::GeneratedImage, None) => return Err(Error::at(i, Error::MissingParent)),
                (Role::GeneratedImage, Some(pid)) => {
                    let p = *by_id
                        .get(pid)
                        .ok_or_else(|| Error::at(i, Error::DanglingParent { parent: pid.clone() }))?;
                    if entries[p].role != Role::OriginalImage {
                        return Err(Error::at(i, Error::ParentNotOriginal { parent: pid.clone() }));
                    }
                    if entries[p].split != e.split {
                        return Err(Error::at(i, Error::SplitMismatch { parent: pid.clone() }));
                    }
                    parent[i] = Some(p);
                    children[p].push(i);
                }
                (_, Some(_)) => return Err(Error::at(i, Error::UnexpectedParent)),
                (_, None) => {}
            }
        }
        Ok(Self { entries, by_id, rows, parent, children, entry_of_row })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.index_of(id).map(|i| &self.entries[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Store row holding the vector of entry `index`.
    pub fn store_row(&self, index: usize) -> usize {
        self.rows[index]
    }

    pub fn entry_of_row(&self, row: usize) -> Option<usize> {
        self.entry_of_row.get(row).copied().flatten()
    }

    pub fn parent_index(&self, index: usize) -> Option<usize> {
        self.parent[index]
    }

    pub fn parent_of(&self, id: &str) -> Option<&str> {
        let p = self.parent[self.index_of(id)?]?;
        Some(&self.entries[p].id)
    }

    pub fn child_indices(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    /// Ids of the generated children of `id`, in manifest order.
    pub fn children(&self, id: &str) -> Result<Vec<&str>> {
        let i = self.index_of(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
        Ok(self.children[i].iter().map(|&c| self.entries[c].id.as_str()).collect())
    }

    /// Entry indices with the given role, optionally restricted to a split,
    /// in manifest order.
    pub fn select(&self, role: Role, split: Option<Split>) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.role == role && split.is_none_or(|s| s == e.split))
            .map(|(i, _)| i)
            .collect()
    }

    /// Entry counts keyed by `(role, split)`.
    pub fn counts(&self) -> BTreeMap<(Role, Split), usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry((e.role, e.split)).or_insert(0) += 1;
        }
        out
    }
}

/// One classification instance as read from a pairs file.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairExample {
    pub premise_id: String,
    pub hypothesis_id: String,
    pub label: Label,
}

/// A pair with both ids resolved to store rows. The split is that of the
/// premise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedPair {
    pub premise_row: usize,
    pub hypothesis_row: usize,
    pub label: Label,
    pub premise_role: Role,
    pub split: Split,
}

/// Resolves pairs against the store and manifest, preserving order.
pub fn resolve_pairs(
    pairs: &[PairExample],
    store: &EmbeddingStore,
    manifest: &Manifest,
) -> Result<Vec<ResolvedPair>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| resolve_pair(p, store, manifest).map_err(|e| Error::at(i, e)))
        .collect()
}

fn resolve_pair(p: &PairExample, store: &EmbeddingStore, manifest: &Manifest) -> Result<ResolvedPair> {
    let premise = manifest.get(&p.premise_id).ok_or_else(|| Error::UnknownId(p.premise_id.clone()))?;
    if !premise.role.is_image() {
        return Err(Error::RoleMismatch {
            id: p.premise_id.clone(),
            expected: "an image role",
            found: premise.role,
        });
    }
    let hyp = manifest.get(&p.hypothesis_id).ok_or_else(|| Error::UnknownId(p.hypothesis_id.clone()))?;
    if hyp.role != Role::HypothesisText {
        return Err(Error::RoleMismatch {
            id: p.hypothesis_id.clone(),
            expected: "hypothesis_text",
            found: hyp.role,
        });
    }
    // Manifest validation guarantees both ids are store rows.
    Ok(ResolvedPair {
        premise_row: store.row_of(&p.premise_id).expect("manifest ids are in the store"),
        hypothesis_row: store.row_of(&p.hypothesis_id).expect("manifest ids are in the store"),
        label: p.label,
        premise_role: premise.role,
        split: premise.split,
    })
}
