//! Exact cosine similarity: single pairs, blocked top-k retrieval and
//! streaming distribution statistics.

use alloc::collections::BinaryHeap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::exec::{chunk_count, chunk_range, Executor};
use crate::store::{dot, EmbeddingStore};

/// Queries handled together by one task; each corpus panel is reused across
/// the whole block.
const QUERY_BLOCK: usize = 16;
/// Corpus rows per panel.
const CORPUS_PANEL: usize = 256;

/// Cosine similarity of two vectors, clamped to `[-1, 1]`.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    let nu = Float::sqrt(dot(u, u));
    let nv = Float::sqrt(dot(v, v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm(String::new()));
    }
    Ok(score(dot(u, v), nu, nv))
}

#[inline]
fn score(dot: f64, nu: f64, nv: f64) -> f64 {
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedEntry {
    pub id: String,
    pub score: f64,
}

/// Candidates for one query, best first. Equal scores are ordered by
/// ascending candidate id.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn k(&self) -> usize {
        self.entries.len()
    }
}

/// A scored store row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub row: usize,
    pub score: f64,
}

/// Heap item ordered so that the *worst* candidate is the maximum.
#[derive(Clone, Copy)]
struct Worst {
    score: f64,
    rank: u32,
    row: usize,
}

impl Worst {
    /// `Less` when `self` ranks ahead of `other`.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        other.score.total_cmp(&self.score).then(self.rank.cmp(&other.rank))
    }
}

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other) == Ordering::Equal
    }
}
impl Eq for Worst {}
impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

/// Bounded selection of the `k` best candidates.
struct TopK {
    k: usize,
    heap: BinaryHeap<Worst>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self { k, heap: BinaryHeap::with_capacity(k + 1) }
    }

    #[inline]
    fn offer(&mut self, item: Worst) {
        if self.heap.len() < self.k {
            self.heap.push(item);
        } else if let Some(mut top) = self.heap.peek_mut() {
            if item < *top {
                *top = item;
            }
        }
    }

    fn into_sorted(self) -> Vec<Scored> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|w| Scored { row: w.row, score: w.score })
            .collect()
    }
}

fn check_rows(store: &EmbeddingStore, rows: &[usize]) -> Result<()> {
    for &r in rows {
        if r >= store.len() {
            return Err(Error::InvalidArgument(alloc::format!("row {r} out of range")));
        }
        if store.norm(r) == 0.0 {
            return Err(Error::ZeroNorm(store.id(r).to_string()));
        }
    }
    Ok(())
}

/// The `k` corpus rows most similar to `query`, excluding the query row
/// itself. Returns the whole corpus (sorted) when it holds fewer than `k`
/// candidates.
pub fn top_k_rows(store: &EmbeddingStore, query: usize, corpus: &[usize], k: usize) -> Result<Vec<Scored>> {
    let mut out = top_k_batch(store, &[query], corpus, k, &crate::exec::Serial)?;
    Ok(out.pop().unwrap_or_default())
}

/// [`top_k_rows`] with ids.
pub fn top_k(store: &EmbeddingStore, query_id: &str, corpus: &[usize], k: usize) -> Result<RankedList> {
    let query = store.row_of(query_id).ok_or_else(|| Error::UnknownId(query_id.to_string()))?;
    let hits = top_k_rows(store, query, corpus, k)?;
    Ok(to_ranked(store, query, &hits))
}

pub fn to_ranked(store: &EmbeddingStore, query: usize, hits: &[Scored]) -> RankedList {
    RankedList {
        query_id: store.id(query).to_string(),
        entries: hits
            .iter()
            .map(|h| RankedEntry { id: store.id(h.row).to_string(), score: h.score })
            .collect(),
    }
}

/// Top-k for many queries against one corpus.
///
/// Queries are processed in blocks of 16; within a block every corpus panel
/// of 256 rows is scored against all block queries before moving on. Block
/// boundaries depend only on `queries.len()`, so results are identical for
/// every executor.
pub fn top_k_batch<E: Executor>(
    store: &EmbeddingStore,
    queries: &[usize],
    corpus: &[usize],
    k: usize,
    exec: &E,
) -> Result<Vec<Vec<Scored>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    check_rows(store, queries)?;
    check_rows(store, corpus)?;
    if corpus.iter().all(|c| queries.len() == 1 && *c == queries[0]) {
        return Err(Error::Empty("corpus"));
    }

    let blocks = exec.map_indexed(chunk_count(queries.len(), QUERY_BLOCK), |b| {
        let block = &queries[chunk_range(queries.len(), QUERY_BLOCK, b)];
        let mut heaps: Vec<TopK> = block.iter().map(|_| TopK::new(k)).collect();
        for panel in corpus.chunks(CORPUS_PANEL) {
            for (qi, &q) in block.iter().enumerate() {
                let qv = store.row(q);
                let qn = store.norm(q);
                let heap = &mut heaps[qi];
                for &c in panel {
                    if c == q {
                        continue;
                    }
                    let s = score(dot(qv, store.row(c)), qn, store.norm(c));
                    heap.offer(Worst { score: s, rank: store.id_rank(c), row: c });
                }
            }
        }
        heaps.into_iter().map(TopK::into_sorted).collect::<Vec<_>>()
    });
    Ok(blocks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistogramBin {
    pub lower: f64,
    pub count: u64,
}

/// Summary of a set of cosine scores. `std` is the population standard
/// deviation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimilarityStats {
    pub n: u64,
    pub mean: f64,
    pub std: f64,
    pub bin_width: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Streaming mean/variance (Welford) plus a fixed-width histogram over
/// `[-1, 1]`. Two accumulators merge exactly on counts and with Chan's
/// update on the moments.
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
    counts: Vec<u64>,
}

impl StatsAccumulator {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("bins must be positive".into()));
        }
        Ok(Self { n: 0, mean: 0.0, m2: 0.0, counts: alloc::vec![0; bins] })
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        let bins = self.counts.len();
        let idx = Float::floor((x + 1.0) * bins as f64 / 2.0);
        let idx = if idx < 0.0 { 0 } else { (idx as usize).min(bins - 1) };
        self.counts[idx] += 1;
    }

    pub fn merge(&mut self, other: &StatsAccumulator) {
        debug_assert_eq!(self.counts.len(), other.counts.len());
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            self.clone_from(other);
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn finish(&self) -> SimilarityStats {
        let bins = self.counts.len();
        let width = 2.0 / bins as f64;
        SimilarityStats {
            n: self.n,
            mean: self.mean,
            std: if self.n == 0 { 0.0 } else { Float::sqrt(Float::max(self.m2, 0.0) / self.n as f64) },
            bin_width: width,
            histogram: self
                .counts
                .iter()
                .enumerate()
                .map(|(i, &count)| HistogramBin { lower: (2 * i) as f64 / bins as f64 - 1.0, count })
                .collect(),
        }
    }
}

/// Distribution of cosine scores over every `(query, corpus)` combination.
/// Nothing is excluded: a row present in both sets is compared with itself.
pub fn pairwise_stats<E: Executor>(
    store: &EmbeddingStore,
    queries: &[usize],
    corpus: &[usize],
    bins: usize,
    exec: &E,
) -> Result<SimilarityStats> {
    if queries.is_empty() {
        return Err(Error::Empty("queries"));
    }
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    StatsAccumulator::new(bins)?;
    check_rows(store, queries)?;
    check_rows(store, corpus)?;

    let partials = exec.map_indexed(chunk_count(queries.len(), QUERY_BLOCK), |b| {
        let block = &queries[chunk_range(queries.len(), QUERY_BLOCK, b)];
        let mut acc = StatsAccumulator::new(bins).expect("bins checked");
        for panel in corpus.chunks(CORPUS_PANEL) {
            for &q in block {
                let qv = store.row(q);
                let qn = store.norm(q);
                for &c in panel {
                    acc.push(score(dot(qv, store.row(c)), qn, store.norm(c)));
                }
            }
        }
        acc
    });
    let mut total = StatsAccumulator::new(bins)?;
    for p in &partials {
        total.merge(p);
    }
    Ok(total.finish())
}
