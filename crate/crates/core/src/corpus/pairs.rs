use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::jsonl;
use crate::error::{Error, Result};

/// How a candidate pair was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Hard,
    Easy,
    Centroid,
    Random,
    Presorted,
}

impl Strategy {
    pub const SELECTABLE: [Strategy; 4] = [
        Strategy::Hard,
        Strategy::Easy,
        Strategy::Centroid,
        Strategy::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Hard => "hard",
            Strategy::Easy => "easy",
            Strategy::Centroid => "centroid",
            Strategy::Random => "random",
            Strategy::Presorted => "presorted",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(Strategy::Hard),
            "easy" => Ok(Strategy::Easy),
            "centroid" => Ok(Strategy::Centroid),
            "random" => Ok(Strategy::Random),
            "presorted" => Ok(Strategy::Presorted),
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy {other:?}"
            ))),
        }
    }
}

/// An unlabeled pair, stored with `left_id < right_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidatePair {
    pub prompt_id: String,
    pub left_id: String,
    pub right_id: String,
    pub similarity: f64,
    pub strategy: Strategy,
}

impl CandidatePair {
    /// Build a pair from two response ids in either order.
    pub fn canonical(
        prompt_id: impl Into<String>,
        a: impl Into<String>,
        b: impl Into<String>,
        similarity: f64,
        strategy: Strategy,
    ) -> Result<Self> {
        let (a, b) = (a.into(), b.into());
        let (left_id, right_id) = if a <= b { (a, b) } else { (b, a) };
        let pair = Self {
            prompt_id: prompt_id.into(),
            left_id,
            right_id,
            similarity,
            strategy,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if self.left_id >= self.right_id {
            return Err(Error::NonCanonicalPair {
                prompt_id: self.prompt_id.clone(),
                left: self.left_id.clone(),
                right: self.right_id.clone(),
            });
        }
        if !self.similarity.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Sort key used for every tie-break.
    pub fn key(&self) -> (&str, &str, &str) {
        (&self.prompt_id, &self.left_id, &self.right_id)
    }
}

/// Who produced a preference label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Annotator {
    Ingested,
    Simulated,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledPair {
    pub prompt_id: String,
    pub chosen_id: String,
    pub rejected_id: String,
    pub annotator: Annotator,
}

impl LabeledPair {
    pub fn new(
        prompt_id: impl Into<String>,
        chosen_id: impl Into<String>,
        rejected_id: impl Into<String>,
        annotator: Annotator,
    ) -> Result<Self> {
        let p = Self {
            prompt_id: prompt_id.into(),
            chosen_id: chosen_id.into(),
            rejected_id: rejected_id.into(),
            annotator,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chosen_id == self.rejected_id {
            return Err(Error::InvalidParameter(format!(
                "chosen and rejected are both {} in prompt {}",
                self.chosen_id, self.prompt_id
            )));
        }
        Ok(())
    }

    /// Same pair with the preference reversed.
    pub fn flipped(&self) -> Self {
        Self {
            prompt_id: self.prompt_id.clone(),
            chosen_id: self.rejected_id.clone(),
            rejected_id: self.chosen_id.clone(),
            annotator: self.annotator,
        }
    }
}

pub fn write_pairs(pairs: &[CandidatePair], path: impl AsRef<Path>) -> Result<usize> {
    for p in pairs {
        p.validate()?;
    }
    jsonl::write_records(path.as_ref(), pairs)
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<CandidatePair>> {
    jsonl::read_records(path.as_ref(), |p: &CandidatePair| {
        p.validate().map_err(|e| e.to_string())
    })
}

pub fn write_labeled(pairs: &[LabeledPair], path: impl AsRef<Path>) -> Result<usize> {
    for p in pairs {
        p.validate()?;
    }
    jsonl::write_records(path.as_ref(), pairs)
}

pub fn load_labeled(path: impl AsRef<Path>) -> Result<Vec<LabeledPair>> {
    jsonl::read_records(path.as_ref(), |p: &LabeledPair| {
        p.validate().map_err(|e| e.to_string())
    })
}
