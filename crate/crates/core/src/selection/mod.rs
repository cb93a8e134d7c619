//! One pair per prompt group, chosen by response-embedding similarity.
//!
//! * hard: the most similar pair
//! * easy: the least similar pair
//! * centroid: the responses nearest each center of a 2-means split
//! * random: uniform over all `C(K, 2)` pairs
//!
//! Ties are always broken by the canonical `(left_id, right_id)` key, smallest
//! first. [`sort_split`] handles datasets that arrive already paired.

mod kmeans;

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;

pub use kmeans::{kmeans2, Cluster, ClusterSplit, KMeansParams};

use crate::corpus::{CandidatePair, EmbeddingStore, PromptGroup, Strategy};
use crate::embedding::{normalize, pairwise_similarity, sq_dist, Embedding, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// A group's responses sorted by id, with their embeddings. Sorting makes index
/// order coincide with canonical pair-key order.
struct Resolved<'a> {
    prompt_id: &'a str,
    ids: Vec<&'a str>,
    vectors: Vec<&'a Embedding>,
}

impl<'a> Resolved<'a> {
    fn new(g: &'a PromptGroup, store: &'a EmbeddingStore) -> Result<Self> {
        if g.len() < 2 {
            return Err(Error::TooFewResponses(g.len()));
        }
        let mut ids: Vec<&str> = g.response_ids().collect();
        ids.sort_unstable();
        let vectors = ids
            .iter()
            .map(|id| store.require(&g.prompt_id, id))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            prompt_id: &g.prompt_id,
            ids,
            vectors,
        })
    }

    fn similarities(&self) -> Result<SimilarityMatrix> {
        pairwise_similarity(&self.vectors)
    }

    fn pair(
        &self,
        j: usize,
        k: usize,
        similarity: f64,
        strategy: Strategy,
    ) -> Result<CandidatePair> {
        CandidatePair::canonical(
            self.prompt_id,
            self.ids[j],
            self.ids[k],
            similarity,
            strategy,
        )
    }
}

/// Upper-triangle pair preferred by `prefer` (returns `Greater` when the first
/// similarity should win); earlier pairs win ties.
fn extremal(sims: &SimilarityMatrix, prefer: impl Fn(f64, f64) -> Ordering) -> (usize, usize, f64) {
    sims.upper_triangle()
        .reduce(|best, cur| {
            if prefer(cur.2, best.2) == Ordering::Greater {
                cur
            } else {
                best
            }
        })
        .expect("K >= 2 guarantees one pair")
}

pub fn select_hard(g: &PromptGroup, store: &EmbeddingStore) -> Result<CandidatePair> {
    let r = Resolved::new(g, store)?;
    let (j, k, s) = extremal(&r.similarities()?, |a, b| a.total_cmp(&b));
    r.pair(j, k, s, Strategy::Hard)
}

pub fn select_easy(g: &PromptGroup, store: &EmbeddingStore) -> Result<CandidatePair> {
    let r = Resolved::new(g, store)?;
    let (j, k, s) = extremal(&r.similarities()?, |a, b| b.total_cmp(&a));
    r.pair(j, k, s, Strategy::Easy)
}

/// Squared distances to a center closer than this count as tied. A
/// two-member cluster puts both members exactly equidistant from its mean, so
/// without this the choice would follow rounding noise.
const NEAREST_TIE_EPS: f64 = 1e-12;

/// Responses nearest the two 2-means centers of the normalized embeddings.
/// Falls back to the easy pair (still tagged centroid) when every response
/// embeds to the same direction. Members tied for nearest resolve to the
/// smallest response id.
pub fn select_centroid(g: &PromptGroup, store: &EmbeddingStore) -> Result<CandidatePair> {
    let r = Resolved::new(g, store)?;
    let sims = r.similarities()?;
    let units = r
        .vectors
        .iter()
        .map(|v| normalize(v))
        .collect::<Result<Vec<_>>>()?;
    let split = match kmeans2(&units, KMeansParams::default()) {
        Ok(split) => split,
        Err(Error::DegenerateClustering) => {
            let (j, k, s) = extremal(&sims, |a, b| b.total_cmp(&a));
            return r.pair(j, k, s, Strategy::Centroid);
        }
        Err(e) => return Err(e),
    };
    let nearest = |c: Cluster| {
        let center = split.centers[match c {
            Cluster::One => 0,
            Cluster::Two => 1,
        }]
        .as_slice();
        split
            .members(c)
            .map(|i| (i, sq_dist(units[i].as_slice(), center)))
            .reduce(|best, cur| {
                if cur.1 < best.1 - NEAREST_TIE_EPS {
                    cur
                } else {
                    best
                }
            })
            .map(|(i, _)| i)
            .expect("kmeans2 never returns an empty cluster")
    };
    let (a, b) = (nearest(Cluster::One), nearest(Cluster::Two));
    let (j, k) = (a.min(b), a.max(b));
    r.pair(j, k, sims.get(j, k), Strategy::Centroid)
}

/// Uniform draw over all pairs, keyed by `(seed, prompt_id)`.
pub fn select_random(g: &PromptGroup, store: &EmbeddingStore, seed: u64) -> Result<CandidatePair> {
    let r = Resolved::new(g, store)?;
    let sims = r.similarities()?;
    let k = r.ids.len();
    let mut rng = stream_rng(seed, Stream::Selection, &[r.prompt_id]);
    let draw = rng.random_range(0..k * (k - 1) / 2);
    let (j, l, s) = sims
        .upper_triangle()
        .nth(draw)
        .expect("index within C(K,2)");
    r.pair(j, l, s, Strategy::Random)
}

pub fn select(
    strategy: Strategy,
    g: &PromptGroup,
    store: &EmbeddingStore,
    seed: u64,
) -> Result<CandidatePair> {
    match strategy {
        Strategy::Hard => select_hard(g, store),
        Strategy::Easy => select_easy(g, store),
        Strategy::Centroid => select_centroid(g, store),
        Strategy::Random => select_random(g, store, seed),
        Strategy::Presorted => Err(Error::InvalidParameter(
            "presorted pairs come from sort_split, not per-group selection".into(),
        )),
    }
}

/// [`select`] over many groups in parallel; results keep input order.
pub fn select_all(
    strategy: Strategy,
    groups: &[PromptGroup],
    store: &EmbeddingStore,
    seed: u64,
) -> Vec<Result<CandidatePair>> {
    groups
        .par_iter()
        .map(|g| select(strategy, g, store, seed))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortSplitResult {
    pub hard_half: Vec<CandidatePair>,
    pub easy_half: Vec<CandidatePair>,
    pub split_fraction: f64,
}

/// Number of items in the first part: `ceil(fraction * n)`, without letting
/// representation error such as `0.1 * 30 = 3.0000000000000004` round up.
fn ceil_fraction(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    let nearest = raw.round();
    if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        raw.ceil() as usize
    }
}

/// Order pairs from most to least similar and cut after the first
/// `ceil(fraction * N)`.
pub fn sort_split(mut pairs: Vec<CandidatePair>, fraction: f64) -> Result<SortSplitResult> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction {fraction} not in (0, 1)"
        )));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput("sort_split needs at least one pair"));
    }
    if pairs.iter().any(|p| !p.similarity.is_finite()) {
        return Err(Error::NonFinite);
    }
    pairs.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.key().cmp(&b.key()))
    });
    let n_hard = ceil_fraction(fraction, pairs.len());
    let easy_half = pairs.split_off(n_hard);
    Ok(SortSplitResult {
        hard_half: pairs,
        easy_half,
        split_fraction: fraction,
    })
}
