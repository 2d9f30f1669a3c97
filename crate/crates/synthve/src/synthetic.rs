//! Seeded synthetic datasets with the parent / child / hypothesis topology.
//!
//! Each original image is a standard-normal vector. Every caption of it
//! yields one generated child (the parent plus Gaussian noise, or an
//! unrelated random vector when `random_children` is set) and one
//! hypothesis per label. A hypothesis is the parent shifted by one of a few
//! label-specific offsets plus noise, so the premise-minus-hypothesis block
//! of the fused vector separates the labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use synthve_core::{EmbeddingStore, Label, ManifestEntry, PairExample, Role, Split};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub dim: usize,
    /// Original images per split, in train/dev/test order.
    pub originals: [usize; 3],
    /// Captions (hence generated children) per original.
    pub children: usize,
    pub child_noise: f32,
    pub random_children: bool,
    /// One hypothesis per caption for each of these labels.
    pub labels: Vec<Label>,
    /// Offset centres per label.
    pub clusters_per_label: usize,
    /// Norm of each label offset.
    pub separation: f32,
    pub hypothesis_noise: f32,
    /// Seeds the label offsets only, so datasets drawn with different
    /// `seed`s share their label geometry.
    pub label_seed: u64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dim: 32,
            originals: [200, 40, 40],
            children: 5,
            child_noise: 0.01,
            random_children: false,
            labels: Label::ALL.to_vec(),
            clusters_per_label: 2,
            separation: 3.0,
            hypothesis_noise: 0.3,
            label_seed: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub store: EmbeddingStore,
    pub entries: Vec<ManifestEntry>,
    pub pairs: Vec<PairExample>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    if spec.dim == 0 || spec.children == 0 || spec.labels.is_empty() || spec.clusters_per_label == 0 {
        return Err(Error::Input("synthetic spec needs positive dim, children, labels and clusters".into()));
    }
    let child_noise = Normal::new(0.0f32, spec.child_noise).map_err(|e| Error::Input(e.to_string()))?;
    let hyp_noise = Normal::new(0.0f32, spec.hypothesis_noise).map_err(|e| Error::Input(e.to_string()))?;
    let mut label_rng = ChaCha8Rng::seed_from_u64(spec.label_seed);
    let offsets: Vec<Vec<Vec<f32>>> = spec
        .labels
        .iter()
        .map(|_| {
            (0..spec.clusters_per_label)
                .map(|_| {
                    let v = gaussian(&mut label_rng, spec.dim);
                    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
                    v.into_iter().map(|x| x * spec.separation / norm).collect()
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows: Vec<(String, Vec<f32>)> = Vec::new();
    let mut entries = Vec::new();
    let mut pairs = Vec::new();
    for (split, &count) in Split::ALL.iter().zip(&spec.originals) {
        for i in 0..count {
            let pid = format!("{split}-{i:06}");
            let parent = gaussian(&mut rng, spec.dim);
            entries.push(ManifestEntry { id: pid.clone(), role: Role::OriginalImage, split: *split, parent_id: None, caption: None });
            for c in 0..spec.children {
                let cid = format!("{pid}-c{c}");
                let child = if spec.random_children {
                    gaussian(&mut rng, spec.dim)
                } else {
                    parent.iter().map(|x| x + child_noise.sample(&mut rng)).collect()
                };
                rows.push((cid.clone(), child));
                entries.push(ManifestEntry {
                    id: cid.clone(),
                    role: Role::GeneratedImage,
                    split: *split,
                    parent_id: Some(pid.clone()),
                    caption: Some(format!("caption {c} of {pid}")),
                });
                for (l, &label) in spec.labels.iter().enumerate() {
                    let centre = &offsets[l][rng.random_range(0..spec.clusters_per_label)];
                    let hid = format!("{cid}-{label}");
                    let h = parent.iter().zip(centre).map(|(p, o)| p + o + hyp_noise.sample(&mut rng)).collect();
                    rows.push((hid.clone(), h));
                    entries.push(ManifestEntry { id: hid.clone(), role: Role::HypothesisText, split: *split, parent_id: None, caption: None });
                    pairs.push(PairExample { premise_id: pid.clone(), hypothesis_id: hid.clone(), label });
                    pairs.push(PairExample { premise_id: cid.clone(), hypothesis_id: hid, label });
                }
            }
            rows.push((pid, parent));
        }
    }
    let store = EmbeddingStore::from_rows(spec.dim, rows)?;
    Ok(SyntheticDataset { store, entries, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use synthve_core::Manifest;

    #[test]
    fn topology() {
        let spec = SyntheticSpec { originals: [3, 2, 1], ..Default::default() };
        let ds = generate(&spec).unwrap();
        let m = Manifest::new(ds.entries.clone(), &ds.store).unwrap();
        assert_eq!(m.select(Role::OriginalImage, None).len(), 6);
        assert_eq!(m.select(Role::GeneratedImage, Some(Split::Dev)).len(), 10);
        assert_eq!(m.children("train-000001").unwrap().len(), 5);
        // 6 originals * 5 captions * 3 labels, once per premise role.
        assert_eq!(ds.pairs.len(), 180);
        assert_eq!(ds.store.len(), 6 + 30 + 90);
    }

    #[test]
    fn seeded() {
        let spec = SyntheticSpec { originals: [2, 1, 1], ..Default::default() };
        assert_eq!(generate(&spec).unwrap().store, generate(&spec).unwrap().store);
        let other = SyntheticSpec { seed: 1, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap().store, generate(&other).unwrap().store);
    }
}
