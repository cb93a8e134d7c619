//! Vector primitives: pooling, normalization and cosine similarity.
//!
//! All arithmetic is done in `f64`, even when vectors were stored as `f32` on
//! disk, so argmax/argmin decisions over similarities do not depend on the
//! platform's single-precision rounding.

use crate::error::{Error, Result};

/// A fixed-width response embedding with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "embedding dimension must be at least 1".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn from_f32(values: &[f32]) -> Result<Self> {
        Self::new(values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    /// Multiply every entry by `factor`. Fails if the product overflows.
    pub fn scaled(&self, factor: f64) -> Result<Embedding> {
        Embedding::new(self.0.iter().map(|v| v * factor).collect())
    }

    /// Entry-wise `self - other`.
    pub fn sub(&self, other: &Embedding) -> Result<Embedding> {
        check_dim(self.dim(), other.dim())?;
        Embedding::new(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Entry-wise `self + other`.
    pub fn add(&self, other: &Embedding) -> Result<Embedding> {
        check_dim(self.dim(), other.dim())?;
        Embedding::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Embedding::new(values)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared Euclidean distance between two equal-length slices.
#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-token last-layer activations of one unpadded sequence (L rows of width D).
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStateMatrix {
    rows: Vec<Vec<f64>>,
    width: usize,
}

impl HiddenStateMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().ok_or(Error::EmptySequence)?.len();
        if width == 0 {
            return Err(Error::InvalidParameter(
                "hidden state width must be at least 1".into(),
            ));
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(Error::Ragged {
                    row,
                    expected: width,
                    got: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { rows, width })
    }

    pub fn seq_len(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Average the hidden states over the sequence dimension.
pub fn mean_pool(h: &HiddenStateMatrix) -> Embedding {
    let len = h.seq_len() as f64;
    let pooled = (0..h.width())
        .map(|d| h.rows.iter().map(|r| r[d]).sum::<f64>() / len)
        .collect();
    Embedding(pooled)
}

/// Scale `v` to unit Euclidean norm.
pub fn normalize(v: &Embedding) -> Result<Embedding> {
    let n = v.norm();
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(Embedding(v.0.iter().map(|x| x / n).collect()))
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(&a.0, &b.0) / (na * nb)).clamp(-1.0, 1.0))
}

/// Symmetric K×K matrix of cosine similarities for one prompt group.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    k: usize,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn size(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.k + k]
    }

    /// Iterate the strict upper triangle as `(j, k, similarity)` with `j < k`.
    pub fn upper_triangle(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.k).flat_map(move |j| ((j + 1)..self.k).map(move |k| (j, k, self.get(j, k))))
    }
}

/// All pairwise cosines within a group of `K >= 2` embeddings.
pub fn pairwise_similarity<E: AsRef<Embedding>>(group: &[E]) -> Result<SimilarityMatrix> {
    let k = group.len();
    if k < 2 {
        return Err(Error::TooFewResponses(k));
    }
    let dim = group[0].as_ref().dim();
    let mut norms = Vec::with_capacity(k);
    for e in group {
        let e = e.as_ref();
        check_dim(dim, e.dim())?;
        let n = e.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        norms.push(n);
    }
    let mut entries = vec![0.0; k * k];
    for j in 0..k {
        entries[j * k + j] = 1.0;
        for l in (j + 1)..k {
            let s = (dot(&group[j].as_ref().0, &group[l].as_ref().0) / (norms[j] * norms[l]))
                .clamp(-1.0, 1.0);
            entries[j * k + l] = s;
            entries[l * k + j] = s;
        }
    }
    Ok(SimilarityMatrix { k, entries })
}

impl AsRef<Embedding> for Embedding {
    fn as_ref(&self) -> &Embedding {
        self
    }
}
