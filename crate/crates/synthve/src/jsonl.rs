//! JSONL manifests and pair files.
//!
//! Manifest lines: `{"id", "role", "split", "parent_id"?, "caption"?}`.
//! Pair lines: `{"premise_id", "hypothesis_id", "label"}`. Blank lines are
//! ignored; diagnostics carry 1-based line numbers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use synthve_core::manifest::resolve_pairs;
use synthve_core::{EmbeddingStore, Label, Manifest, ManifestEntry, PairExample, ResolvedPair};

use crate::error::{Error, Result};

fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, Vec<usize>)> {
    let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.into(), source })?;
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| Error::Record {
            path: path.into(),
            line: i + 1,
            message: format!("malformed record: {e}"),
        })?;
        records.push(record);
        lines.push(i + 1);
    }
    Ok((records, lines))
}

/// Attaches a file line number to a core error raised for record `index`.
fn at_line(path: &Path, lines: &[usize], err: synthve_core::Error) -> Error {
    match err {
        synthve_core::Error::AtRecord { index, source } => Error::Record {
            path: path.into(),
            line: lines.get(index).copied().unwrap_or(0),
            message: source.to_string(),
        },
        other => Error::Core(other),
    }
}

pub fn read_manifest(path: impl AsRef<Path>, store: &EmbeddingStore) -> Result<Manifest> {
    let path = path.as_ref();
    let (entries, lines) = read_lines::<ManifestEntry>(path)?;
    Manifest::new(entries, store).map_err(|e| at_line(path, &lines, e))
}

#[derive(Debug, Deserialize, Serialize)]
struct PairRecord {
    premise_id: String,
    hypothesis_id: String,
    label: String,
}

/// Pairs as read, plus their resolution against a store and manifest.
#[derive(Debug, Clone)]
pub struct PairSet {
    pub examples: Vec<PairExample>,
    pub resolved: Vec<ResolvedPair>,
}

pub fn read_pairs(path: impl AsRef<Path>, store: &EmbeddingStore, manifest: &Manifest) -> Result<PairSet> {
    let path = path.as_ref();
    let (records, lines) = read_lines::<PairRecord>(path)?;
    if records.is_empty() {
        return Err(Error::Input(format!("{}: no pairs", path.display())));
    }
    let examples = records
        .into_iter()
        .zip(&lines)
        .map(|(r, &line)| {
            let label: Label = r.label.parse().map_err(|e: synthve_core::Error| Error::Record {
                path: path.into(),
                line,
                message: e.to_string(),
            })?;
            Ok(PairExample { premise_id: r.premise_id, hypothesis_id: r.hypothesis_id, label })
        })
        .collect::<Result<Vec<_>>>()?;
    let resolved = resolve_pairs(&examples, store, manifest).map_err(|e| at_line(path, &lines, e))?;
    Ok(PairSet { examples, resolved })
}

fn write_lines<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let wrap = |source| Error::Write { path: path.into(), source };
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    for r in records {
        serde_json::to_writer(&mut w, &r).map_err(|e| Error::Internal(e.to_string()))?;
        w.write_all(b"\n").map_err(wrap)?;
    }
    w.flush().map_err(wrap)
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    write_lines(path.as_ref(), entries)
}

pub fn write_pairs(path: impl AsRef<Path>, pairs: &[PairExample]) -> Result<()> {
    write_lines(path.as_ref(), pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use synthve_core::{Role, Split};

    fn store() -> EmbeddingStore {
        let ids = ["p", "g1", "g2", "h"].map(String::from).to_vec();
        EmbeddingStore::new(2, ids, vec![1.0; 8]).unwrap()
    }

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    const MANIFEST: &str = r#"{"id":"p","role":"original_image","split":"train","caption":"A wedding party."}
{"id":"g1","role":"generated_image","split":"train","parent_id":"p"}

{"id":"g2","role":"generated_image","split":"train","parent_id":"p"}
{"id":"h","role":"hypothesis_text","split":"train"}
"#;

    #[test]
    fn reads_manifest_and_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let s = store();
        let m = read_manifest(write(dir.path(), "m.jsonl", MANIFEST), &s).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m.children("p").unwrap(), ["g1", "g2"]);
        assert_eq!(m.get("p").unwrap().caption.as_deref(), Some("A wedding party."));

        let pairs = r#"{"premise_id":"p","hypothesis_id":"h","label":"entailment"}
{"premise_id":"g1","hypothesis_id":"h","label":"contradiction"}
"#;
        let set = read_pairs(write(dir.path(), "p.jsonl", pairs), &s, &m).unwrap();
        assert_eq!(set.resolved.len(), 2);
        assert_eq!(set.resolved[1].premise_role, Role::GeneratedImage);
        assert_eq!(set.resolved[1].split, Split::Train);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let s = store();
        let dangling = MANIFEST.replace(r#""parent_id":"p"}"#, r#""parent_id":"missing"}"#);
        let err = read_manifest(write(dir.path(), "m.jsonl", &dangling), &s).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2: dangling parent `missing`"), "{msg}");

        let err = read_manifest(write(dir.path(), "bad.jsonl", "{\"id\":\"p\"\n"), &s).unwrap_err();
        assert!(err.to_string().contains(":1: malformed record"), "{err}");

        let m = read_manifest(write(dir.path(), "m.jsonl", MANIFEST), &s).unwrap();
        let pairs = "{\"premise_id\":\"p\",\"hypothesis_id\":\"h\",\"label\":\"entailment\"}\n{\"premise_id\":\"h\",\"hypothesis_id\":\"h\",\"label\":\"neutral\"}\n";
        let err = read_pairs(write(dir.path(), "p.jsonl", pairs), &s, &m).unwrap_err();
        assert!(err.to_string().contains(":2: role mismatch"), "{err}");

        let pairs = "{\"premise_id\":\"p\",\"hypothesis_id\":\"h\",\"label\":\"maybe\"}\n";
        let err = read_pairs(write(dir.path(), "p.jsonl", pairs), &s, &m).unwrap_err();
        assert!(err.to_string().contains(":1: unknown label `maybe`"), "{err}");

        let err = read_pairs(write(dir.path(), "empty.jsonl", "\n"), &s, &m).unwrap_err();
        assert!(err.to_string().contains("no pairs"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let s = store();
        let m = read_manifest(write(dir.path(), "m.jsonl", MANIFEST), &s).unwrap();
        let out = dir.path().join("copy.jsonl");
        write_manifest(&out, m.entries()).unwrap();
        assert_eq!(read_manifest(&out, &s).unwrap().entries(), m.entries());
    }
}
