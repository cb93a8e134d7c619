//! Synthetic preference world with a known linear reward and a noisy
//! Bradley-Terry annotator, plus the strategy-comparison experiment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::corpus::{
    Annotator, CandidatePair, EmbeddingStore, LabeledPair, PromptGroup, ResponseRecord, Strategy,
};
use crate::embedding::{dot, normalize, Embedding};
use crate::error::{Error, Result};
use crate::numeric::{mean, sample_std, sigmoid};
use crate::preference::DEFAULT_BETA;
use crate::rng::{stream_rng, Stream, StreamRng};
use crate::selection::{select, select_random};
use crate::trainer::{evaluate_resolved, init_policy, train_resolved, ResolvedPair, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldConfig {
    pub n_prompts: usize,
    pub k_responses: usize,
    pub dimension: usize,
    pub reward_scale: f64,
    pub response_dispersion: f64,
    pub annotator_temperature: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_prompts: 2000,
            k_responses: 4,
            dimension: 4,
            reward_scale: 4.0,
            response_dispersion: 0.35,
            annotator_temperature: 1.0,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n_prompts == 0 {
            return bad("n_prompts must be positive".into());
        }
        if self.k_responses < 2 {
            return bad(format!(
                "k_responses must be at least 2, got {}",
                self.k_responses
            ));
        }
        if self.dimension == 0 {
            return bad("dimension must be positive".into());
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad(format!(
                "reward_scale must be positive, got {}",
                self.reward_scale
            ));
        }
        if !(self.response_dispersion > 0.0 && self.response_dispersion <= 1.0) {
            return bad(format!(
                "response_dispersion {} not in (0, 1]",
                self.response_dispersion
            ));
        }
        if self.annotator_temperature.is_nan() || self.annotator_temperature <= 0.0 {
            return bad(format!(
                "annotator_temperature must be positive, got {}",
                self.annotator_temperature
            ));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!(
                "test_fraction {} not in (0, 1)",
                self.test_fraction
            ));
        }
        let n_test = self.n_test();
        if n_test == 0 || n_test == self.n_prompts {
            return bad(format!(
                "test_fraction {} leaves an empty train or test split of {} prompts",
                self.test_fraction, self.n_prompts
            ));
        }
        Ok(())
    }

    fn n_test(&self) -> usize {
        (self.test_fraction * self.n_prompts as f64).round() as usize
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub config: WorldConfig,
    pub store: EmbeddingStore,
    /// Training prompts followed by the held-out test prompts.
    pub groups: Vec<PromptGroup>,
    pub n_test: usize,
    pub true_weight: Embedding,
    pub true_reward: BTreeMap<(String, String), f64>,
}

impl SyntheticWorld {
    pub fn train_groups(&self) -> &[PromptGroup] {
        &self.groups[..self.groups.len() - self.n_test]
    }

    pub fn test_groups(&self) -> &[PromptGroup] {
        &self.groups[self.groups.len() - self.n_test..]
    }

    pub fn reward(&self, prompt_id: &str, response_id: &str) -> Result<f64> {
        self.true_reward
            .get(&(prompt_id.to_string(), response_id.to_string()))
            .copied()
            .ok_or_else(|| Error::UnknownResponse {
                prompt_id: prompt_id.into(),
                response_id: response_id.into(),
            })
    }
}

fn unit_gaussian(rng: &mut StreamRng, dim: usize) -> Result<Embedding> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if v.iter().any(|x: &f64| *x != 0.0) {
            return normalize(&Embedding::new(v)?);
        }
    }
}

pub fn prompt_id(i: usize) -> String {
    format!("p{i:06}")
}

pub fn response_id(k: usize) -> String {
    format!("r{k}")
}

/// Anchors are uniform on the sphere; each response is
/// `normalize(anchor + dispersion * N(0, I / D))`; rewards are
/// `reward_scale * (w* · y)`.
pub fn generate_world(cfg: &WorldConfig) -> Result<SyntheticWorld> {
    cfg.validate()?;
    let d = cfg.dimension;
    let mut rng = stream_rng(cfg.seed, Stream::World, &[]);
    let true_weight = unit_gaussian(&mut rng, d)?;
    let noise_scale = cfg.response_dispersion / (d as f64).sqrt();
    let mut store = EmbeddingStore::new(d)?;
    let mut groups = Vec::with_capacity(cfg.n_prompts);
    let mut true_reward = BTreeMap::new();
    for i in 0..cfg.n_prompts {
        let pid = prompt_id(i);
        let anchor = unit_gaussian(&mut rng, d)?;
        let mut responses = Vec::with_capacity(cfg.k_responses);
        for k in 0..cfg.k_responses {
            let rid = response_id(k);
            let y = loop {
                let v: Vec<f64> = anchor
                    .as_slice()
                    .iter()
                    .map(|a| a + noise_scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                if let Ok(y) = normalize(&Embedding::new(v)?) {
                    break y;
                }
            };
            true_reward.insert(
                (pid.clone(), rid.clone()),
                cfg.reward_scale * dot(true_weight.as_slice(), y.as_slice()),
            );
            store.insert(&pid, &rid, y)?;
            responses.push(ResponseRecord::new(rid));
        }
        groups.push(PromptGroup::new(pid, responses)?);
    }
    Ok(SyntheticWorld {
        config: *cfg,
        store,
        groups,
        n_test: cfg.n_test(),
        true_weight,
        true_reward,
    })
}

/// Probability that the annotator prefers `left`: `sigmoid((R_l - R_r) / temperature)`.
pub fn annotation_probability(r_left: f64, r_right: f64, temperature: f64) -> f64 {
    if r_left == r_right {
        0.5
    } else {
        sigmoid((r_left - r_right) / temperature)
    }
}

/// Noisy Bradley-Terry label, deterministic per (pair, seed).
pub fn annotate(
    pair: &CandidatePair,
    world: &SyntheticWorld,
    temperature: f64,
    seed: u64,
) -> Result<LabeledPair> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let rl = world.reward(&pair.prompt_id, &pair.left_id)?;
    let rr = world.reward(&pair.prompt_id, &pair.right_id)?;
    let mut rng = stream_rng(
        seed,
        Stream::Annotation,
        &[&pair.prompt_id, &pair.left_id, &pair.right_id],
    );
    let u: f64 = rng.random();
    let left_wins = u < annotation_probability(rl, rr, temperature);
    let (chosen, rejected) = if left_wins {
        (&pair.left_id, &pair.right_id)
    } else {
        (&pair.right_id, &pair.left_id)
    };
    LabeledPair::new(&pair.prompt_id, chosen, rejected, Annotator::Simulated)
}

/// Noiseless label: the higher true reward wins, ties go to `left`.
pub fn oracle_label(pair: &CandidatePair, world: &SyntheticWorld) -> Result<LabeledPair> {
    let rl = world.reward(&pair.prompt_id, &pair.left_id)?;
    let rr = world.reward(&pair.prompt_id, &pair.right_id)?;
    let (chosen, rejected) = if rl >= rr {
        (&pair.left_id, &pair.right_id)
    } else {
        (&pair.right_id, &pair.left_id)
    };
    LabeledPair::new(&pair.prompt_id, chosen, rejected, Annotator::Oracle)
}

/// Fraction of pairs whose chosen response has strictly lower true reward.
/// Exact ties are left out of the denominator; all-tie input gives 0.
pub fn flip_rate(labeled: &[LabeledPair], world: &SyntheticWorld) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::EmptyInput("flip_rate needs at least one pair"));
    }
    let (mut flips, mut counted) = (0usize, 0usize);
    for lp in labeled {
        let rc = world.reward(&lp.prompt_id, &lp.chosen_id)?;
        let rr = world.reward(&lp.prompt_id, &lp.rejected_id)?;
        if rc != rr {
            counted += 1;
            flips += usize::from(rc < rr);
        }
    }
    Ok(if counted == 0 {
        0.0
    } else {
        flips as f64 / counted as f64
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub train: TrainConfig,
    pub beta: f64,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            world: WorldConfig::default(),
            train: TrainConfig::default(),
            beta: DEFAULT_BETA,
            strategies: Strategy::SELECTABLE.to_vec(),
            seeds: (0..10).collect(),
        }
    }
}

/// Outcome of one (seed, strategy) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub seed: u64,
    pub flip_rate: f64,
    pub mean_similarity: f64,
    pub mean_abs_reward_gap: f64,
    pub margins: f64,
    pub loss: f64,
    pub agreement: f64,
    pub n_train_pairs: usize,
    /// `(labeled pairs consumed, test margins)` after every optimizer step.
    pub margin_curve: Vec<(usize, f64)>,
}

impl RunRecord {
    /// Labeled pairs consumed when test margins first reach `target`.
    pub fn pairs_to_reach(&self, target: f64) -> Option<usize> {
        self.margin_curve
            .iter()
            .find(|(_, m)| *m >= target)
            .map(|(n, _)| *n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values.iter().copied()).unwrap_or(f64::NAN),
            std: sample_std(values),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub flip_rate: Summary,
    pub mean_similarity: Summary,
    pub margins: Summary,
    pub loss: Summary,
    pub agreement: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub runs: Vec<RunRecord>,
    pub summaries: Vec<StrategySummary>,
}

impl ExperimentReport {
    pub fn runs_for(&self, strategy: Strategy) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.strategy == strategy)
    }

    pub fn run(&self, strategy: Strategy, seed: u64) -> Option<&RunRecord> {
        self.runs
            .iter()
            .find(|r| r.strategy == strategy && r.seed == seed)
    }

    pub fn summary(&self, strategy: Strategy) -> Option<&StrategySummary> {
        self.summaries.iter().find(|s| s.strategy == strategy)
    }

    /// `strategy,seed,flip_rate,mean_similarity,margins,loss,agreement`, one
    /// row per run, then `mean` and `std` rows per strategy.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("strategy,seed,flip_rate,mean_similarity,margins,loss,agreement\n");
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.strategy, r.seed, r.flip_rate, r.mean_similarity, r.margins, r.loss, r.agreement
            );
        }
        for s in &self.summaries {
            for (label, pick) in [("mean", 0), ("std", 1)] {
                let f = |x: Summary| if pick == 0 { x.mean } else { x.std };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    s.strategy,
                    label,
                    f(s.flip_rate),
                    f(s.mean_similarity),
                    f(s.margins),
                    f(s.loss),
                    f(s.agreement)
                );
            }
        }
        out
    }
}

fn resolve(lp: &LabeledPair, store: &EmbeddingStore) -> Result<ResolvedPair> {
    ResolvedPair::new(
        store.require(&lp.prompt_id, &lp.chosen_id)?.clone(),
        store.require(&lp.prompt_id, &lp.rejected_id)?.clone(),
    )
}

fn run_strategy(
    world: &SyntheticWorld,
    strategy: Strategy,
    seed: u64,
    cfg: &ExperimentConfig,
    test: &[ResolvedPair],
) -> Result<RunRecord> {
    let temperature = world.config.annotator_temperature;
    let mut pairs = Vec::with_capacity(world.train_groups().len());
    let mut labeled = Vec::with_capacity(pairs.capacity());
    for g in world.train_groups() {
        let pair = select(strategy, g, &world.store, seed)?;
        labeled.push(annotate(&pair, world, temperature, seed)?);
        pairs.push(pair);
    }
    let gaps = pairs
        .iter()
        .map(|p| {
            Ok((world.reward(&p.prompt_id, &p.left_id)?
                - world.reward(&p.prompt_id, &p.right_id)?)
            .abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let resolved = labeled
        .iter()
        .map(|lp| resolve(lp, &world.store))
        .collect::<Result<Vec<_>>>()?;

    let mut curve = Vec::new();
    let train_cfg = TrainConfig { seed, ..cfg.train };
    let policy = init_policy(world.config.dimension, cfg.beta)?;
    let (policy, _) = train_resolved(policy, &resolved, &train_cfg, |_, p, consumed| {
        if let Ok(r) = evaluate_resolved(p, test) {
            curve.push((consumed, r.margins));
        }
    })?;
    let report = evaluate_resolved(&policy, test)?;
    Ok(RunRecord {
        strategy,
        seed,
        flip_rate: flip_rate(&labeled, world)?,
        mean_similarity: mean(pairs.iter().map(|p| p.similarity)).unwrap_or(f64::NAN),
        mean_abs_reward_gap: mean(gaps).unwrap_or(f64::NAN),
        margins: report.margins,
        loss: report.loss,
        agreement: report.agreement.unwrap_or(f64::NAN),
        n_train_pairs: resolved.len(),
        margin_curve: curve,
    })
}

/// Oracle-labeled test pairs: one uniformly drawn pair per held-out prompt.
pub fn test_pairs(world: &SyntheticWorld, seed: u64) -> Result<Vec<LabeledPair>> {
    world
        .test_groups()
        .iter()
        .map(|g| oracle_label(&select_random(g, &world.store, seed)?, world))
        .collect()
}

/// For each seed: build a world, then for each strategy select one pair per
/// training prompt, annotate it, train a fresh policy and evaluate on the
/// oracle-labeled test pairs. Seeds and strategies run in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.strategies.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::EmptyInput(
            "experiment needs at least one strategy and one seed",
        ));
    }
    if let Some(s) = cfg.strategies.iter().find(|s| **s == Strategy::Presorted) {
        return Err(Error::InvalidParameter(format!(
            "strategy {s} cannot be simulated"
        )));
    }
    cfg.world.validate()?;
    cfg.train.validate()?;
    let per_seed: Vec<Vec<RunRecord>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let world = generate_world(&WorldConfig { seed, ..cfg.world })?;
            let test = test_pairs(&world, seed)?
                .iter()
                .map(|lp| resolve(lp, &world.store))
                .collect::<Result<Vec<_>>>()?;
            cfg.strategies
                .par_iter()
                .map(|&s| run_strategy(&world, s, seed, cfg, &test))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut runs = Vec::with_capacity(cfg.seeds.len() * cfg.strategies.len());
    for &s in &cfg.strategies {
        for seed_runs in &per_seed {
            runs.extend(seed_runs.iter().filter(|r| r.strategy == s).cloned());
        }
    }
    let summaries = cfg
        .strategies
        .iter()
        .map(|&s| {
            let rs: Vec<&RunRecord> = runs.iter().filter(|r| r.strategy == s).collect();
            let col = |f: fn(&RunRecord) -> f64| {
                Summary::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            StrategySummary {
                strategy: s,
                flip_rate: col(|r| r.flip_rate),
                mean_similarity: col(|r| r.mean_similarity),
                margins: col(|r| r.margins),
                loss: col(|r| r.loss),
                agreement: col(|r| r.agreement),
            }
        })
        .collect();
    Ok(ExperimentReport { runs, summaries })
}
