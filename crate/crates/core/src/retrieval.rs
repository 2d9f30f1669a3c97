//! Recall@k and precision@k for parent→children retrieval.
//!
//! A query is an original image; candidates are generated images; a
//! candidate is relevant exactly when the query is its parent.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::manifest::{Manifest, Role, Split};
use crate::similarity::{top_k_batch, RankedList};
use crate::store::EmbeddingStore;

/// 1 when `candidate` was generated from `query`, else 0.
pub fn relevance(query_id: &str, candidate_id: &str, manifest: &Manifest) -> Result<u8> {
    let q = manifest.get(query_id).ok_or_else(|| Error::UnknownId(query_id.to_string()))?;
    if q.role != Role::OriginalImage {
        return Err(Error::RoleMismatch { id: query_id.to_string(), expected: "original_image", found: q.role });
    }
    let c = manifest.get(candidate_id).ok_or_else(|| Error::UnknownId(candidate_id.to_string()))?;
    if c.role != Role::GeneratedImage {
        return Err(Error::RoleMismatch {
            id: candidate_id.to_string(),
            expected: "generated_image",
            found: c.role,
        });
    }
    Ok(u8::from(c.parent_id.as_deref() == Some(query_id)))
}

/// Number of relevant ids among the first `k` entries of `ranked`.
pub fn hits_at_k(ranked: &RankedList, relevant: &BTreeSet<String>, k: usize) -> Result<usize> {
    if k == 0 || k > ranked.k() {
        return Err(Error::InvalidArgument(alloc::format!("k = {k} outside 1..={}", ranked.k())));
    }
    Ok(ranked.entries[..k].iter().filter(|e| relevant.contains(&e.id)).count())
}

pub fn recall_at_k(ranked: &RankedList, relevant: &BTreeSet<String>, k: usize) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::Empty("relevant set"));
    }
    Ok(hits_at_k(ranked, relevant, k)? as f64 / relevant.len() as f64)
}

pub fn precision_at_k(ranked: &RankedList, relevant: &BTreeSet<String>, k: usize) -> Result<f64> {
    Ok(hits_at_k(ranked, relevant, k)? as f64 / k as f64)
}

/// Cumulative hit counts of one query: `hits[k - 1]` relevant items in the
/// top `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryHits {
    pub query_id: String,
    pub relevant: usize,
    pub hits: Vec<u32>,
}

impl QueryHits {
    pub fn recall(&self, k: usize) -> f64 {
        self.hits[k - 1] as f64 / self.relevant as f64
    }

    pub fn precision(&self, k: usize) -> f64 {
        self.hits[k - 1] as f64 / k as f64
    }
}

/// Per-k averages over a set of queries (or, for an aggregate, over
/// samples). `ks` is `1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricCurve {
    pub ks: Vec<usize>,
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    /// Mean number of relevant items in the top k.
    pub mean_hits: Vec<f64>,
    pub n_queries: usize,
    pub std_recall: Option<Vec<f64>>,
    pub std_precision: Option<Vec<f64>>,
}

impl MetricCurve {
    /// Averages per-query curves. All queries must have the same length;
    /// the std bands are population standard deviations across queries.
    pub fn from_hits(per_query: &[QueryHits]) -> Result<Self> {
        let first = per_query.first().ok_or(Error::Empty("queries"))?;
        let k_max = first.hits.len();
        if let Some(q) = per_query.iter().find(|q| q.hits.len() != k_max) {
            return Err(Error::LengthMismatch { left: k_max, right: q.hits.len() });
        }
        let n = per_query.len() as f64;
        let mut curve = MetricCurve::empty(k_max, per_query.len());
        let mut var_r = alloc::vec![0.0; k_max];
        let mut var_p = alloc::vec![0.0; k_max];
        for k in 1..=k_max {
            let (mut sr, mut sp, mut sh) = (0.0, 0.0, 0.0);
            for q in per_query {
                sr += q.recall(k);
                sp += q.precision(k);
                sh += q.hits[k - 1] as f64;
            }
            let (mr, mp) = (sr / n, sp / n);
            let (mut vr, mut vp) = (0.0, 0.0);
            for q in per_query {
                vr += (q.recall(k) - mr) * (q.recall(k) - mr);
                vp += (q.precision(k) - mp) * (q.precision(k) - mp);
            }
            curve.recall[k - 1] = mr;
            curve.precision[k - 1] = mp;
            curve.mean_hits[k - 1] = sh / n;
            var_r[k - 1] = Float::sqrt(vr / n);
            var_p[k - 1] = Float::sqrt(vp / n);
        }
        curve.std_recall = Some(var_r);
        curve.std_precision = Some(var_p);
        Ok(curve)
    }

    fn empty(k_max: usize, n_queries: usize) -> Self {
        MetricCurve {
            ks: (1..=k_max).collect(),
            recall: alloc::vec![0.0; k_max],
            precision: alloc::vec![0.0; k_max],
            mean_hits: alloc::vec![0.0; k_max],
            n_queries,
            std_recall: None,
            std_precision: None,
        }
    }

    pub fn k_max(&self) -> usize {
        self.ks.len()
    }
}

/// What to do with a query that has no children in the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MissingChildren {
    #[default]
    Fail,
    Skip,
}

fn resolve_ids<S: AsRef<str>>(manifest: &Manifest, ids: &[S], role: Role) -> Result<Vec<usize>> {
    ids.iter()
        .map(|id| {
            let id = id.as_ref();
            let i = manifest.index_of(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
            let found = manifest.entries()[i].role;
            if found != role {
                return Err(Error::RoleMismatch { id: id.to_string(), expected: role.as_str(), found });
            }
            Ok(i)
        })
        .collect()
}

/// Per-query cumulative hit counts for `queries` (original-image ids)
/// ranked against `corpus` (generated-image ids).
///
/// The curve length is `min(k_max, |corpus|)`. The relevant set of a query
/// is its children that are present in the corpus.
pub fn query_hits<S: AsRef<str>, E: Executor>(
    store: &EmbeddingStore,
    manifest: &Manifest,
    queries: &[S],
    corpus: &[S],
    k_max: usize,
    missing: MissingChildren,
    exec: &E,
) -> Result<Vec<QueryHits>> {
    let q_entries = resolve_ids(manifest, queries, Role::OriginalImage)?;
    let c_entries = resolve_ids(manifest, corpus, Role::GeneratedImage)?;
    query_hits_by_entry(store, manifest, &q_entries, &c_entries, k_max, missing, exec)
}

fn query_hits_by_entry<E: Executor>(
    store: &EmbeddingStore,
    manifest: &Manifest,
    queries: &[usize],
    corpus: &[usize],
    k_max: usize,
    missing: MissingChildren,
    exec: &E,
) -> Result<Vec<QueryHits>> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be positive".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    let k = k_max.min(corpus.len());
    let in_corpus: BTreeSet<usize> = corpus.iter().copied().collect();

    let mut kept = Vec::with_capacity(queries.len());
    let mut relevant_counts = Vec::with_capacity(queries.len());
    for &q in queries {
        let rel = manifest.child_indices(q).iter().filter(|c| in_corpus.contains(c)).count();
        if rel == 0 {
            match missing {
                MissingChildren::Fail => return Err(Error::NoRelevant(manifest.entries()[q].id.clone())),
                MissingChildren::Skip => continue,
            }
        }
        kept.push(q);
        relevant_counts.push(rel);
    }
    if kept.is_empty() {
        return Err(Error::Empty("queries"));
    }

    let q_rows: Vec<usize> = kept.iter().map(|&q| manifest.store_row(q)).collect();
    let c_rows: Vec<usize> = corpus.iter().map(|&c| manifest.store_row(c)).collect();
    let ranked = top_k_batch(store, &q_rows, &c_rows, k, exec)?;

    Ok(kept
        .iter()
        .zip(&ranked)
        .zip(&relevant_counts)
        .map(|((&q, list), &relevant)| {
            let mut hits = Vec::with_capacity(k);
            let mut acc = 0u32;
            for i in 0..k {
                if let Some(s) = list.get(i) {
                    let cand = manifest.entry_of_row(s.row).expect("corpus rows come from the manifest");
                    if manifest.parent_index(cand) == Some(q) {
                        acc += 1;
                    }
                }
                hits.push(acc);
            }
            QueryHits { query_id: manifest.entries()[q].id.clone(), relevant, hits }
        })
        .collect())
}

/// Mean recall/precision curve of `queries` ranked against `corpus`.
pub fn curve<S: AsRef<str>, E: Executor>(
    store: &EmbeddingStore,
    manifest: &Manifest,
    queries: &[S],
    corpus: &[S],
    k_max: usize,
    missing: MissingChildren,
    exec: &E,
) -> Result<MetricCurve> {
    MetricCurve::from_hits(&query_hits(store, manifest, queries, corpus, k_max, missing, exec)?)
}

/// Full-corpus curve for one split: every original image of the split
/// against every generated image of `corpus_split` (all splits when `None`).
pub fn split_curve<E: Executor>(
    store: &EmbeddingStore,
    manifest: &Manifest,
    split: Option<Split>,
    corpus_split: Option<Split>,
    k_max: usize,
    missing: MissingChildren,
    exec: &E,
) -> Result<MetricCurve> {
    let queries = manifest.select(Role::OriginalImage, split);
    let corpus = manifest.select(Role::GeneratedImage, corpus_split);
    MetricCurve::from_hits(&query_hits_by_entry(store, manifest, &queries, &corpus, k_max, missing, exec)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingConfig {
    pub sample_size: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub k_max: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { sample_size: 1000, n_samples: 30, seed: 0, k_max: 100 }
    }
}

/// Curves of each sample plus their per-k mean. The aggregate's std bands
/// are taken across samples; each sample curve keeps its across-query
/// bands.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampledCurves {
    pub samples: Vec<MetricCurve>,
    pub aggregate: MetricCurve,
}

/// Seeded sampling protocol: draw `sample_size` originals of `split`
/// without replacement, rank them against exactly their own children, and
/// repeat `n_samples` times.
///
/// When the split holds exactly `sample_size` originals there is a single
/// possible sample and exactly one curve is produced.
pub fn sampled_curves<E: Executor>(
    store: &EmbeddingStore,
    manifest: &Manifest,
    split: Split,
    cfg: &SamplingConfig,
    exec: &E,
) -> Result<SampledCurves> {
    if cfg.sample_size == 0 || cfg.n_samples == 0 {
        return Err(Error::InvalidArgument("sample_size and n_samples must be positive".into()));
    }
    let originals = manifest.select(Role::OriginalImage, Some(split));
    if cfg.sample_size > originals.len() {
        return Err(Error::InvalidArgument(alloc::format!(
            "sample size {} exceeds the {} original images of split {split}",
            cfg.sample_size,
            originals.len()
        )));
    }
    let n_samples = if cfg.sample_size == originals.len() { 1 } else { cfg.n_samples };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws: Vec<Vec<usize>> = (0..n_samples)
        .map(|_| {
            let mut picked: Vec<usize> =
                index::sample(&mut rng, originals.len(), cfg.sample_size).into_iter().map(|i| originals[i]).collect();
            picked.sort_unstable();
            picked
        })
        .collect();

    let mut samples = Vec::with_capacity(draws.len());
    for queries in &draws {
        let corpus: Vec<usize> = queries.iter().flat_map(|&q| manifest.child_indices(q).iter().copied()).collect();
        let hits = query_hits_by_entry(store, manifest, queries, &corpus, cfg.k_max, MissingChildren::Fail, exec)?;
        samples.push(MetricCurve::from_hits(&hits)?);
    }
    let aggregate = aggregate_samples(&samples)?;
    Ok(SampledCurves { samples, aggregate })
}

/// Per-k mean and population std across sample curves, truncated to the
/// shortest curve.
pub fn aggregate_samples(samples: &[MetricCurve]) -> Result<MetricCurve> {
    let k_max = samples.iter().map(MetricCurve::k_max).min().ok_or(Error::Empty("samples"))?;
    let n = samples.len() as f64;
    let mut out = MetricCurve::empty(k_max, samples.iter().map(|s| s.n_queries).sum());
    let mut std_r = alloc::vec![0.0; k_max];
    let mut std_p = alloc::vec![0.0; k_max];
    for i in 0..k_max {
        let mr = samples.iter().map(|s| s.recall[i]).sum::<f64>() / n;
        let mp = samples.iter().map(|s| s.precision[i]).sum::<f64>() / n;
        out.recall[i] = mr;
        out.precision[i] = mp;
        out.mean_hits[i] = samples.iter().map(|s| s.mean_hits[i]).sum::<f64>() / n;
        std_r[i] = Float::sqrt(samples.iter().map(|s| (s.recall[i] - mr) * (s.recall[i] - mr)).sum::<f64>() / n);
        std_p[i] = Float::sqrt(samples.iter().map(|s| (s.precision[i] - mp) * (s.precision[i] - mp)).sum::<f64>() / n);
    }
    out.std_recall = Some(std_r);
    out.std_precision = Some(std_p);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::ManifestEntry;
    use crate::similarity::RankedEntry;
    use crate::Serial;
    use alloc::vec;

    fn ranked(ids: &[&str]) -> RankedList {
        RankedList {
            query_id: "q".into(),
            entries: ids.iter().map(|id| RankedEntry { id: id.to_string(), score: 0.0 }).collect(),
        }
    }

    fn set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn recall_and_precision_definitions() {
        let mut ids: Vec<String> = (0..100).map(|i| alloc::format!("d{i}")).collect();
        ids[10] = "c1".into();
        ids[70] = "c2".into();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let r = ranked(&refs);
        let rel = set(&["c1", "c2", "c3", "c4", "c5"]);
        assert_eq!(recall_at_k(&r, &rel, 100).unwrap(), 0.4);
        assert_eq!(precision_at_k(&r, &rel, 100).unwrap(), 0.02);
        assert_eq!(hits_at_k(&r, &rel, 11).unwrap(), 1);

        let top = ranked(&["c1", "c2", "c3", "c4", "c5", "x"]);
        assert_eq!(recall_at_k(&top, &rel, 5).unwrap(), 1.0);
        assert_eq!(precision_at_k(&top, &rel, 5).unwrap(), 1.0);

        assert_eq!(recall_at_k(&top, &set(&[]), 1).unwrap_err(), Error::Empty("relevant set"));
        assert!(precision_at_k(&top, &rel, 0).is_err());
        assert!(precision_at_k(&top, &rel, 7).is_err());
    }

    fn planted() -> (EmbeddingStore, Manifest) {
        // Query "p" along e0; its five children are copies of it; "o" is an
        // unrelated parent along e1 with 200 distractor children.
        let dim = 3;
        let mut rows: Vec<(String, Vec<f32>)> = vec![("p".into(), vec![1.0, 0.0, 0.0]), ("o".into(), vec![0.0, 1.0, 0.0])];
        let mut entries = vec![
            ManifestEntry { id: "p".into(), role: Role::OriginalImage, split: Split::Dev, parent_id: None, caption: None },
            ManifestEntry { id: "o".into(), role: Role::OriginalImage, split: Split::Dev, parent_id: None, caption: None },
        ];
        for i in 0..5 {
            let id = alloc::format!("p{i}");
            rows.push((id.clone(), vec![1.0, 0.0, 0.001 * i as f32]));
            entries.push(ManifestEntry { id, role: Role::GeneratedImage, split: Split::Dev, parent_id: Some("p".into()), caption: None });
        }
        for i in 0..200 {
            let id = alloc::format!("o{i:03}");
            rows.push((id.clone(), vec![0.1, 1.0, (i as f32) * 0.01]));
            entries.push(ManifestEntry { id, role: Role::GeneratedImage, split: Split::Dev, parent_id: Some("o".into()), caption: None });
        }
        let store = EmbeddingStore::from_rows(dim, rows).unwrap();
        let manifest = Manifest::new(entries, &store).unwrap();
        (store, manifest)
    }

    #[test]
    fn planted_children_curve() {
        let (store, manifest) = planted();
        let corpus: Vec<String> = manifest.select(Role::GeneratedImage, None).iter().map(|&i| manifest.entries()[i].id.clone()).collect();
        let c = curve(&store, &manifest, &["p".to_string()], &corpus, 100, MissingChildren::Fail, &Serial).unwrap();
        assert_eq!(c.k_max(), 100);
        for k in 1..=100 {
            let h = k.min(5) as f64;
            assert_eq!(c.recall[k - 1], h / 5.0);
            assert_eq!(c.precision[k - 1], h / k as f64);
        }
        assert_eq!(c.std_recall.as_ref().unwrap()[0], 0.0);
    }

    #[test]
    fn relevance_roles() {
        let (_, m) = planted();
        assert_eq!(relevance("p", "p3", &m).unwrap(), 1);
        assert_eq!(relevance("p", "o007", &m).unwrap(), 0);
        assert!(matches!(relevance("p0", "p3", &m), Err(Error::RoleMismatch { .. })));
        assert!(matches!(relevance("p", "o", &m), Err(Error::RoleMismatch { .. })));
    }

    #[test]
    fn missing_children_policy() {
        let (store, m) = planted();
        let corpus: Vec<String> = (0..5).map(|i| alloc::format!("p{i}")).collect();
        let queries = vec!["p".to_string(), "o".to_string()];
        let err = query_hits(&store, &m, &queries, &corpus, 10, MissingChildren::Fail, &Serial).unwrap_err();
        assert_eq!(err, Error::NoRelevant("o".into()));
        let hits = query_hits(&store, &m, &queries, &corpus, 10, MissingChildren::Skip, &Serial).unwrap();
        assert_eq!(hits.len(), 1);
        // Curve length clamps to the corpus size.
        assert_eq!(hits[0].hits, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn sampling_whole_split_gives_one_sample() {
        let (store, m) = planted();
        let cfg = SamplingConfig { sample_size: 2, n_samples: 30, seed: 7, k_max: 10 };
        let out = sampled_curves(&store, &m, Split::Dev, &cfg, &Serial).unwrap();
        assert_eq!(out.samples.len(), 1);
        assert_eq!(out.aggregate.std_recall.as_ref().unwrap()[3], 0.0);
        let too_many = SamplingConfig { sample_size: 3, ..cfg };
        assert!(matches!(sampled_curves(&store, &m, Split::Dev, &too_many, &Serial), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sampling_is_seeded() {
        let (store, m) = planted();
        let cfg = SamplingConfig { sample_size: 1, n_samples: 6, seed: 3, k_max: 5 };
        let a = sampled_curves(&store, &m, Split::Dev, &cfg, &Serial).unwrap();
        let b = sampled_curves(&store, &m, Split::Dev, &cfg, &Serial).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 6);
        assert_eq!(a.aggregate.n_queries, 6);
    }
}
