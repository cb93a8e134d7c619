//! Pair-similarity drift between two embedding stores, e.g. two checkpoints
//! of the same model. Low drift means a selection computed once stays valid.

use rayon::prelude::*;

use crate::corpus::{CandidatePair, EmbeddingStore};
use crate::embedding::cosine;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Mean absolute delta at or below which two stores count as selection-stable.
/// Advisory only.
pub const ADVISORY_THRESHOLD: f64 = 0.05;

/// Deltas at or below this are rounding noise (e.g. from rescaling a vector,
/// which is itself inexact in floating point) and are reported as 0.
pub const SIMILARITY_RESOLUTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub n_pairs: usize,
    pub max_abs_delta: f64,
    pub mean_abs_delta: f64,
    /// `|cos_a - cos_b|` per input pair, in input order.
    pub deltas: Vec<f64>,
}

impl DriftReport {
    pub fn is_stable(&self) -> bool {
        self.mean_abs_delta <= ADVISORY_THRESHOLD
    }
}

fn pair_cosine(store: &EmbeddingStore, p: &CandidatePair) -> Result<f64> {
    cosine(
        store.require(&p.prompt_id, &p.left_id)?,
        store.require(&p.prompt_id, &p.right_id)?,
    )
}

/// The stores may differ in dimension from each other.
pub fn similarity_drift(
    store_a: &EmbeddingStore,
    store_b: &EmbeddingStore,
    pairs: &[CandidatePair],
) -> Result<DriftReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("drift needs at least one pair"));
    }
    let deltas = pairs
        .par_iter()
        .map(|p| {
            let d = (pair_cosine(store_a, p)? - pair_cosine(store_b, p)?).abs();
            Ok(if d <= SIMILARITY_RESOLUTION { 0.0 } else { d })
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_abs_delta = deltas.iter().copied().fold(0.0, f64::max);
    let mean_abs_delta =
        (compensated_sum(deltas.iter().copied()) / deltas.len() as f64).min(max_abs_delta);
    Ok(DriftReport {
        n_pairs: deltas.len(),
        max_abs_delta,
        mean_abs_delta,
        deltas,
    })
}
