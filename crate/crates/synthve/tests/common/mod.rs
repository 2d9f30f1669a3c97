#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use synthve::jsonl::{write_manifest, write_pairs};
use synthve::store_io::write_store;
use synthve::synthetic::{generate, SyntheticSpec};

pub struct Files {
    pub store: PathBuf,
    pub manifest: PathBuf,
    pub pairs: PathBuf,
}

impl Files {
    pub fn args(&self) -> Vec<String> {
        vec![
            "--store".into(),
            self.store.display().to_string(),
            "--manifest".into(),
            self.manifest.display().to_string(),
            "--pairs".into(),
            self.pairs.display().to_string(),
        ]
    }
}

pub fn write_synthetic(dir: &Path, spec: &SyntheticSpec) -> Files {
    std::fs::create_dir_all(dir).unwrap();
    let ds = generate(spec).unwrap();
    let files = Files { store: dir.join("store.veem"), manifest: dir.join("manifest.jsonl"), pairs: dir.join("pairs.jsonl") };
    write_store(&ds.store, &files.store).unwrap();
    write_manifest(&files.manifest, &ds.entries).unwrap();
    write_pairs(&files.pairs, &ds.pairs).unwrap();
    files
}

pub fn synthve<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthve")).args(args).output().unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
