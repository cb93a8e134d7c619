//! Bradley-Terry preference probability, the DPO objective, and the test-set
//! metrics (margins, loss).
//!
//! Implicit rewards are canonicalized as the raw policy/reference log ratio.
//! `beta` enters only inside the loss, so margins stay comparable across
//! `beta` values.

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, neg_log_sigmoid, sigmoid};

/// Default DPO temperature.
pub const DEFAULT_BETA: f64 = 0.1;

/// Label for how margins/loss interpret rewards; written into reports.
pub const REWARD_CANONICALIZATION: &str = "log_ratio";

/// Estimated rewards of the chosen and rejected responses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardPair {
    pub r_plus: f64,
    pub r_minus: f64,
}

/// `log pi_theta(y|x) - log pi_ref(y|x)` for the chosen and rejected responses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyLogRatios {
    pub log_ratio_plus: f64,
    pub log_ratio_minus: f64,
}

impl PolicyLogRatios {
    pub fn new(log_ratio_plus: f64, log_ratio_minus: f64) -> Self {
        Self {
            log_ratio_plus,
            log_ratio_minus,
        }
    }

    #[inline]
    pub fn diff(&self) -> f64 {
        self.log_ratio_plus - self.log_ratio_minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub margins: f64,
    pub loss: f64,
    pub n_pairs: usize,
    pub agreement: Option<f64>,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Ok(())
}

/// `P(chosen > rejected) = sigmoid(r_plus - r_minus)`.
pub fn bt_probability(rp: RewardPair) -> f64 {
    sigmoid(rp.r_plus - rp.r_minus)
}

pub fn implicit_reward(lr: PolicyLogRatios, beta: f64) -> Result<RewardPair> {
    check_beta(beta)?;
    Ok(RewardPair {
        r_plus: beta * lr.log_ratio_plus,
        r_minus: beta * lr.log_ratio_minus,
    })
}

/// Loss of a single pair as a function of its log-ratio difference.
#[inline]
pub fn dpo_pair_loss(diff: f64, beta: f64) -> f64 {
    neg_log_sigmoid(beta * diff)
}

/// Mean of `-log sigmoid(beta * diff)` over the batch.
pub fn dpo_loss(batch: &[PolicyLogRatios], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if batch.is_empty() {
        return Err(Error::EmptyInput("dpo_loss needs at least one pair"));
    }
    Ok(compensated_sum(batch.iter().map(|p| dpo_pair_loss(p.diff(), beta))) / batch.len() as f64)
}

/// `d/d(diff) [-log sigmoid(beta * diff)] = -beta * sigmoid(-beta * diff)`.
#[inline]
pub fn dpo_grad_wrt_diff(diff: f64, beta: f64) -> f64 {
    -beta * sigmoid(-beta * diff)
}

/// Mean log-ratio difference between chosen and rejected.
pub fn eval_margins(test: &[PolicyLogRatios]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyInput("margins need at least one pair"));
    }
    Ok(compensated_sum(test.iter().map(PolicyLogRatios::diff)) / test.len() as f64)
}

/// Test-set DPO loss; identical to [`dpo_loss`].
pub fn eval_loss(test: &[PolicyLogRatios], beta: f64) -> Result<f64> {
    dpo_loss(test, beta)
}
