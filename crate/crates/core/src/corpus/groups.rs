use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::jsonl;
use crate::error::{Error, Result};

/// One candidate response to a prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRecord {
    pub response_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Vote-derived score, non-negative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_length: Option<u32>,
}

impl ResponseRecord {
    pub fn new(response_id: impl Into<String>) -> Self {
        Self {
            response_id: response_id.into(),
            text: None,
            score: None,
            token_length: None,
        }
    }

    /// Token length if recorded, else the whitespace-token count of the text.
    /// The flag is true when the value was approximated.
    pub fn effective_token_length(&self) -> Option<(usize, bool)> {
        match (self.token_length, &self.text) {
            (Some(n), _) => Some((n as usize, false)),
            (None, Some(t)) => Some((whitespace_token_count(t), true)),
            (None, None) => None,
        }
    }
}

pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// A prompt and its K >= 2 candidate responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptGroup {
    pub prompt_id: String,
    #[serde(rename = "prompt", default, skip_serializing_if = "Option::is_none")]
    pub prompt_text: Option<String>,
    pub responses: Vec<ResponseRecord>,
}

impl PromptGroup {
    pub fn new(prompt_id: impl Into<String>, responses: Vec<ResponseRecord>) -> Result<Self> {
        let g = Self {
            prompt_id: prompt_id.into(),
            prompt_text: None,
            responses,
        };
        g.validate().map_err(Error::InvalidParameter)?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn response_ids(&self) -> impl Iterator<Item = &str> {
        self.responses.iter().map(|r| r.response_id.as_str())
    }

    pub fn contains(&self, response_id: &str) -> bool {
        self.responses.iter().any(|r| r.response_id == response_id)
    }

    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        if self.prompt_id.is_empty() {
            return Err("empty prompt_id".into());
        }
        if self.responses.len() < 2 {
            return Err(format!(
                "prompt {} has {} responses, need at least 2",
                self.prompt_id,
                self.responses.len()
            ));
        }
        let mut seen = HashSet::new();
        for r in &self.responses {
            if !seen.insert(r.response_id.as_str()) {
                return Err(format!(
                    "duplicate response_id {} in prompt {}",
                    r.response_id, self.prompt_id
                ));
            }
            if let Some(s) = r.score {
                if !s.is_finite() || s < 0.0 {
                    return Err(format!("response {} has invalid score {s}", r.response_id));
                }
            }
            if r.token_length == Some(0) {
                return Err(format!("response {} has token_length 0", r.response_id));
            }
        }
        Ok(())
    }
}

/// Read a groups file, one prompt group per line, in file order.
pub fn load_response_groups(path: impl AsRef<Path>) -> Result<Vec<PromptGroup>> {
    jsonl::read_records(path.as_ref(), PromptGroup::validate)
}

pub fn write_response_groups(groups: &[PromptGroup], path: impl AsRef<Path>) -> Result<usize> {
    for g in groups {
        g.validate().map_err(Error::InvalidParameter)?;
    }
    jsonl::write_records(path.as_ref(), groups)
}

/// Cleaning thresholds: drop over-long responses, then drop groups whose two
/// best-scored survivors are too close in score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub max_token_length: Option<usize>,
    pub min_score_ratio: Option<f64>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            max_token_length: Some(512),
            min_score_ratio: Some(1.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    TooFewResponses { survivors: usize },
    ScoreRatio { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterOutcome {
    Kept {
        group: PromptGroup,
        /// Some surviving length was estimated from whitespace tokens.
        length_approximated: bool,
    },
    Rejected(RejectReason),
}

pub fn filter_group(g: &PromptGroup, cfg: &FilterConfig) -> Result<FilterOutcome> {
    let mut approximated = false;
    let survivors: Vec<ResponseRecord> = g
        .responses
        .iter()
        .filter(
            |r| match (cfg.max_token_length, r.effective_token_length()) {
                (Some(max), Some((len, approx))) => {
                    approximated |= approx;
                    len <= max
                }
                _ => true,
            },
        )
        .cloned()
        .collect();

    if survivors.len() < 2 {
        return Ok(FilterOutcome::Rejected(RejectReason::TooFewResponses {
            survivors: survivors.len(),
        }));
    }

    if let Some(min_ratio) = cfg.min_score_ratio {
        let mut scores = survivors
            .iter()
            .map(|r| {
                r.score
                    .ok_or_else(|| Error::MissingScore(r.response_id.clone()))
            })
            .collect::<Result<Vec<f64>>>()?;
        scores.sort_by(|a, b| b.total_cmp(a));
        let (top, second) = (scores[0], scores[1]);
        let ratio = if second > 0.0 {
            top / second
        } else if top > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        if ratio < min_ratio {
            return Ok(FilterOutcome::Rejected(RejectReason::ScoreRatio { ratio }));
        }
    }

    Ok(FilterOutcome::Kept {
        group: PromptGroup {
            prompt_id: g.prompt_id.clone(),
            prompt_text: g.prompt_text.clone(),
            responses: survivors,
        },
        length_approximated: approximated,
    })
}
