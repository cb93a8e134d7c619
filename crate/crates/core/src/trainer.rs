//! Desk-scale DPO on a linear policy over response embeddings.
//!
//! The policy is `pi_theta(y|x) ∝ pi_ref(y|x) · exp(theta · y)` over a prompt's
//! candidate set. The normalizer is shared by the chosen and rejected response,
//! so every quantity evaluated here (loss, margins, agreement) depends only on
//! `theta · (y_plus - y_minus)` and the per-response log ratio can be taken as
//! the score `theta · y`. `theta = 0` is the reference policy.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::corpus::{
    load_embeddings_with_header, write_embeddings_text, EmbeddingStore, LabeledPair,
};
use crate::embedding::{dot, Embedding};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::preference::{
    dpo_grad_wrt_diff, dpo_loss, eval_loss, eval_margins, MetricsReport, PolicyLogRatios,
    REWARD_CANONICALIZATION,
};
use crate::rng::{stream_rng, Stream};

const POLICY_PROMPT_ID: &str = "policy";
const POLICY_RESPONSE_ID: &str = "theta";

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPreferencePolicy {
    theta: Vec<f64>,
    beta: f64,
}

impl LinearPreferencePolicy {
    pub fn new(theta: Vec<f64>, beta: f64) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidParameter(
                "policy dimension must be at least 1".into(),
            ));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(Self { theta, beta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// The reference policy: `theta = 0`.
pub fn init_policy(dimension: usize, beta: f64) -> Result<LinearPreferencePolicy> {
    LinearPreferencePolicy::new(vec![0.0; dimension], beta)
}

/// `log pi_theta(y|x) / pi_ref(y|x)` up to the candidate-set normalizer, i.e. `theta · y`.
pub fn policy_log_ratio(p: &LinearPreferencePolicy, y: &Embedding) -> Result<f64> {
    p.check_dim(y.dim())?;
    Ok(dot(&p.theta, y.as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 1,
            batch_size: 64,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "epochs and batch_size must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Batch loss before the update.
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub steps: Vec<StepRecord>,
    pub final_report: Option<MetricsReport>,
}

/// A labeled pair with its embeddings looked up. `diff = chosen - rejected`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPair {
    pub chosen: Embedding,
    pub rejected: Embedding,
    diff: Vec<f64>,
}

impl ResolvedPair {
    pub fn new(chosen: Embedding, rejected: Embedding) -> Result<Self> {
        let diff = chosen.sub(&rejected)?.into_vec();
        Ok(Self {
            chosen,
            rejected,
            diff,
        })
    }

    pub fn diff(&self) -> &[f64] {
        &self.diff
    }

    fn log_ratios(&self, theta: &[f64]) -> PolicyLogRatios {
        PolicyLogRatios::new(
            dot(theta, self.chosen.as_slice()),
            dot(theta, self.rejected.as_slice()),
        )
    }
}

pub fn resolve_pairs(labeled: &[LabeledPair], store: &EmbeddingStore) -> Result<Vec<ResolvedPair>> {
    labeled
        .iter()
        .map(|lp| {
            lp.validate()?;
            ResolvedPair::new(
                store.require(&lp.prompt_id, &lp.chosen_id)?.clone(),
                store.require(&lp.prompt_id, &lp.rejected_id)?.clone(),
            )
        })
        .collect()
}

/// Batch loss and its gradient with respect to theta.
fn loss_and_grad(theta: &[f64], beta: f64, batch: &[&ResolvedPair]) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut loss = CompensatedSum::default();
    let mut grad = vec![CompensatedSum::default(); theta.len()];
    for pair in batch {
        let z = dot(theta, &pair.diff);
        loss.add(crate::preference::dpo_pair_loss(z, beta));
        let w = dpo_grad_wrt_diff(z, beta);
        for (g, d) in grad.iter_mut().zip(&pair.diff) {
            g.add(w * d);
        }
    }
    (
        loss.value() / n,
        grad.iter().map(|g| g.value() / n).collect(),
    )
}

/// Analytic gradient of the mean DPO loss over `batch` at `p`.
pub fn batch_gradient(p: &LinearPreferencePolicy, batch: &[ResolvedPair]) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("gradient needs at least one pair"));
    }
    for pair in batch {
        p.check_dim(pair.diff.len())?;
    }
    let refs: Vec<&ResolvedPair> = batch.iter().collect();
    Ok(loss_and_grad(&p.theta, p.beta, &refs).1)
}

pub fn train(
    p: LinearPreferencePolicy,
    labeled: &[LabeledPair],
    store: &EmbeddingStore,
    cfg: &TrainConfig,
) -> Result<(LinearPreferencePolicy, TrainHistory)> {
    let pairs = resolve_pairs(labeled, store)?;
    train_resolved(p, &pairs, cfg, |_, _, _| {})
}

/// Mini-batch gradient descent on the DPO loss.
///
/// `after_step(step, policy, pairs_consumed)` runs after every update; the
/// experiment harness uses it to trace test metrics against labeled-data use.
pub fn train_resolved(
    mut p: LinearPreferencePolicy,
    pairs: &[ResolvedPair],
    cfg: &TrainConfig,
    mut after_step: impl FnMut(usize, &LinearPreferencePolicy, usize),
) -> Result<(LinearPreferencePolicy, TrainHistory)> {
    cfg.validate()?;
    for pair in pairs {
        p.check_dim(pair.diff.len())?;
    }
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut step = 0;
    let mut consumed = 0;
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            let mut rng = stream_rng(cfg.seed, Stream::Shuffle, &[&epoch.to_string()]);
            order.sort_unstable();
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(cfg.batch_size) {
            step += 1;
            let batch: Vec<&ResolvedPair> = chunk.iter().map(|&i| &pairs[i]).collect();
            let (loss, grad) = loss_and_grad(&p.theta, p.beta, &batch);
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    step,
                    learning_rate: cfg.learning_rate,
                    loss,
                });
            }
            let grad_norm = dot(&grad, &grad).sqrt();
            for (t, g) in p.theta.iter_mut().zip(&grad) {
                *t -= cfg.learning_rate * g;
            }
            if p.theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::Diverged {
                    step,
                    learning_rate: cfg.learning_rate,
                    loss: f64::NAN,
                });
            }
            history.steps.push(StepRecord {
                step,
                loss,
                grad_norm,
            });
            consumed += chunk.len();
            after_step(step, &p, consumed);
        }
    }
    Ok((p, history))
}

/// Largest coordinate-wise relative error between the analytic gradient and
/// central finite differences of the batch loss.
pub fn gradient_check(
    p: &LinearPreferencePolicy,
    batch: &[ResolvedPair],
    epsilon: f64,
) -> Result<f64> {
    let analytic = batch_gradient(p, batch)?;
    let loss_at = |theta: &[f64]| -> Result<f64> {
        let lrs: Vec<PolicyLogRatios> = batch.iter().map(|b| b.log_ratios(theta)).collect();
        dpo_loss(&lrs, p.beta)
    };
    let mut worst: f64 = 0.0;
    let mut theta = p.theta.clone();
    for j in 0..theta.len() {
        let orig = theta[j];
        theta[j] = orig + epsilon;
        let up = loss_at(&theta)?;
        theta[j] = orig - epsilon;
        let down = loss_at(&theta)?;
        theta[j] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let scale = analytic[j].abs().max(numeric.abs());
        if scale > 0.0 {
            worst = worst.max((analytic[j] - numeric).abs() / scale.max(1e-8));
        }
    }
    Ok(worst)
}

pub fn evaluate_resolved(
    p: &LinearPreferencePolicy,
    test: &[ResolvedPair],
) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput("evaluation needs at least one pair"));
    }
    for pair in test {
        p.check_dim(pair.diff.len())?;
    }
    let lrs: Vec<PolicyLogRatios> = test.iter().map(|t| t.log_ratios(&p.theta)).collect();
    let agree = lrs
        .iter()
        .map(|l| match l.log_ratio_plus.total_cmp(&l.log_ratio_minus) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Less => 0.0,
        })
        .sum::<f64>();
    Ok(MetricsReport {
        margins: eval_margins(&lrs)?,
        loss: eval_loss(&lrs, p.beta)?,
        n_pairs: test.len(),
        agreement: Some(agree / test.len() as f64),
    })
}

pub fn evaluate(
    p: &LinearPreferencePolicy,
    test: &[LabeledPair],
    store: &EmbeddingStore,
) -> Result<MetricsReport> {
    evaluate_resolved(p, &resolve_pairs(test, store)?)
}

/// Persist as a one-record text embedding file whose header carries beta.
pub fn save_policy(p: &LinearPreferencePolicy, path: impl AsRef<Path>) -> Result<()> {
    let mut store = EmbeddingStore::new(p.dim())?;
    store.insert(
        POLICY_PROMPT_ID,
        POLICY_RESPONSE_ID,
        Embedding::new(p.theta.clone())?,
    )?;
    write_embeddings_text(&store, path, Some(p.beta))?;
    Ok(())
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<LinearPreferencePolicy> {
    let path = path.as_ref();
    let (store, header) = load_embeddings_with_header(path)?;
    let theta = store
        .get(POLICY_PROMPT_ID, POLICY_RESPONSE_ID)
        .ok_or_else(|| Error::Format {
            path: path.into(),
            message: "no (policy, theta) record".into(),
        })?;
    let beta = header.beta.ok_or_else(|| Error::Format {
        path: path.into(),
        message: "policy header lacks beta".into(),
    })?;
    LinearPreferencePolicy::new(theta.as_slice().to_vec(), beta)
}

/// `step,loss,grad_norm` rows, then a `report,...` footer when a final report exists.
pub fn history_csv(history: &TrainHistory) -> String {
    let mut out = String::from("step,loss,grad_norm\n");
    for s in &history.steps {
        let _ = writeln!(out, "{},{},{}", s.step, s.loss, s.grad_norm);
    }
    if let Some(r) = &history.final_report {
        let _ = writeln!(
            out,
            "report,margins={},loss={},agreement={},n_pairs={},reward={}",
            r.margins,
            r.loss,
            r.agreement
                .map_or_else(|| "na".to_string(), |a| a.to_string()),
            r.n_pairs,
            REWARD_CANONICALIZATION
        );
    }
    out
}
