use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use prefsel_core::corpus::{
    filter_group, load_embeddings, load_labeled, load_pairs, load_response_groups,
    write_embeddings_text, write_labeled, write_pairs, write_response_groups, FilterConfig,
    FilterOutcome,
};
use prefsel_core::numeric::{mean, sample_std};
use prefsel_core::preference::REWARD_CANONICALIZATION;
use prefsel_core::selection::{self, select_all};
use prefsel_core::simulator::{annotate, generate_world, run_experiment, test_pairs, WorldConfig};
use prefsel_core::trainer::{
    self as trainer, evaluate, history_csv, init_policy, load_policy, save_policy, TrainConfig,
};
use prefsel_core::{similarity_drift, Error, Strategy};

use crate::{
    sim_config, CliError, DriftArgs, EvalArgs, ReportArgs, SelectArgs, SimulateArgs, SortSplitArgs,
    TrainArgs,
};

type CmdResult = Result<String, CliError>;

fn absolute(p: &Path) -> PathBuf {
    if let Ok(c) = p.canonicalize() {
        return c;
    }
    match (p.parent(), p.file_name()) {
        (Some(parent), Some(name)) => {
            let parent = if parent.as_os_str().is_empty() {
                Path::new(".")
            } else {
                parent
            };
            parent
                .canonicalize()
                .map(|d| d.join(name))
                .unwrap_or_else(|_| p.to_path_buf())
        }
        _ => p.to_path_buf(),
    }
}

fn distinct_paths(inputs: &[&Path], outputs: &[&Path]) -> Result<(), CliError> {
    let all: Vec<(PathBuf, &Path)> = inputs
        .iter()
        .chain(outputs)
        .map(|p| (absolute(p), *p))
        .collect();
    for (i, (a, pa)) in all.iter().enumerate().skip(inputs.len()) {
        for (b, pb) in &all[..i] {
            if a == b {
                return Err(CliError::Usage(format!(
                    "{} and {} refer to the same file",
                    pb.display(),
                    pa.display()
                )));
            }
        }
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| {
        CliError::Core(Error::Io {
            path: path.into(),
            source,
        })
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Core(Error::Format {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn select(a: &SelectArgs, seed: u64) -> CmdResult {
    distinct_paths(&[&a.groups, &a.embeddings], &[&a.out])?;
    if let Some(r) = a.min_score_ratio {
        if r.is_nan() || r <= 0.0 {
            return Err(CliError::Usage(format!(
                "--min-score-ratio must be positive, got {r}"
            )));
        }
    }
    let filter = FilterConfig {
        max_token_length: (!a.no_length_filter).then_some(a.max_token_length),
        min_score_ratio: a.min_score_ratio,
    };
    let groups = load_response_groups(&a.groups)?;
    let store = load_embeddings(&a.embeddings)?;
    let mut kept = Vec::with_capacity(groups.len());
    let mut filtered = 0;
    for g in &groups {
        match filter_group(g, &filter)? {
            FilterOutcome::Kept {
                group,
                length_approximated,
            } => {
                if length_approximated {
                    info!(
                        "{}: token length estimated from whitespace",
                        group.prompt_id
                    );
                }
                kept.push(group);
            }
            FilterOutcome::Rejected(reason) => {
                warn!("{}: filtered out ({reason:?})", g.prompt_id);
                filtered += 1;
            }
        }
    }
    let mut pairs = Vec::with_capacity(kept.len());
    let mut missing = 0;
    for (g, r) in kept.iter().zip(select_all(a.strategy, &kept, &store, seed)) {
        match r {
            Ok(p) => pairs.push(p),
            Err(e @ Error::MissingEmbedding { .. }) => {
                warn!("{}: skipped, {e}", g.prompt_id);
                missing += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    write_pairs(&pairs, &a.out)?;
    Ok(format!(
        "command=select strategy={} groups={} pairs={} filtered={filtered} skipped={missing}",
        a.strategy,
        groups.len(),
        pairs.len()
    ))
}

pub fn sort_split(a: &SortSplitArgs) -> CmdResult {
    distinct_paths(&[&a.pairs], &[&a.out_hard, &a.out_easy])?;
    if !(a.fraction > 0.0 && a.fraction < 1.0) {
        return Err(CliError::Usage(format!(
            "--fraction must be in (0, 1), got {}",
            a.fraction
        )));
    }
    let pairs = load_pairs(&a.pairs)?;
    let split = selection::sort_split(pairs, a.fraction)?;
    write_pairs(&split.hard_half, &a.out_hard)?;
    write_pairs(&split.easy_half, &a.out_easy)?;
    Ok(format!(
        "command=sort-split fraction={} hard={} easy={}",
        a.fraction,
        split.hard_half.len(),
        split.easy_half.len()
    ))
}

pub fn simulate(a: &SimulateArgs, seed: u64, beta: f64) -> CmdResult {
    let inputs: Vec<&Path> = a.config.iter().map(PathBuf::as_path).collect();
    let outputs: Vec<&Path> = std::iter::once(a.out.as_path())
        .chain(a.curves.as_deref())
        .collect();
    distinct_paths(&inputs, &outputs)?;
    let cfg = sim_config::load(a.config.as_deref(), seed, beta)?;
    let report = run_experiment(&cfg)?;
    write_file(&a.out, &report.to_csv())?;
    if let Some(path) = &a.curves {
        let mut out = String::from("strategy,seed,step,pairs,margins\n");
        for r in &report.runs {
            for (step, (pairs, m)) in r.margin_curve.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{pairs},{m}\n",
                    r.strategy,
                    r.seed,
                    step + 1
                ));
            }
        }
        write_file(path, &out)?;
    }
    if let Some(dir) = &a.export_world {
        export_world(
            dir,
            &WorldConfig {
                seed: cfg.seeds[0],
                ..cfg.world
            },
            &cfg.strategies,
        )?;
    }
    Ok(format!(
        "command=simulate runs={} strategies={} seeds={} dimension={}",
        report.runs.len(),
        cfg.strategies.len(),
        cfg.seeds.len(),
        cfg.world.dimension
    ))
}

fn export_world(dir: &Path, cfg: &WorldConfig, strategies: &[Strategy]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.into(),
        source,
    })?;
    let world = generate_world(cfg)?;
    write_response_groups(world.train_groups(), dir.join("groups.jsonl"))?;
    write_embeddings_text(&world.store, dir.join("embeddings.jsonl"), None)?;
    write_labeled(&test_pairs(&world, cfg.seed)?, dir.join("test.jsonl"))?;
    for &s in strategies {
        let labeled = world
            .train_groups()
            .iter()
            .map(|g| {
                annotate(
                    &selection::select(s, g, &world.store, cfg.seed)?,
                    &world,
                    cfg.annotator_temperature,
                    cfg.seed,
                )
            })
            .collect::<prefsel_core::Result<Vec<_>>>()?;
        write_labeled(&labeled, dir.join(format!("train_{s}.jsonl")))?;
    }
    Ok(())
}

pub fn train(a: &TrainArgs, seed: u64, beta: f64) -> CmdResult {
    let mut inputs = vec![a.labeled.as_path(), a.embeddings.as_path()];
    inputs.extend(a.test.as_deref());
    distinct_paths(&inputs, &[&a.out_policy, &a.out_history])?;
    if !(a.learning_rate >= 0.0 && a.learning_rate.is_finite())
        || a.epochs == 0
        || a.batch_size == 0
    {
        return Err(CliError::Usage(
            "--learning-rate must be non-negative; --epochs and --batch-size positive".into(),
        ));
    }
    let labeled = load_labeled(&a.labeled)?;
    if labeled.is_empty() {
        return Err(Error::EmptyInput("no labeled pairs to train on").into());
    }
    let store = load_embeddings(&a.embeddings)?;
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed,
        shuffle: !a.no_shuffle,
    };
    let (policy, mut history) =
        trainer::train(init_policy(store.dim(), beta)?, &labeled, &store, &cfg)?;
    if let Some(test) = &a.test {
        history.final_report = Some(evaluate(&policy, &load_labeled(test)?, &store)?);
    }
    save_policy(&policy, &a.out_policy)?;
    write_file(&a.out_history, &history_csv(&history))?;
    let last = history.steps.last().map_or(f64::NAN, |s| s.loss);
    Ok(format!(
        "command=train pairs={} steps={} last_loss={last}",
        labeled.len(),
        history.steps.len()
    ))
}

pub fn eval(a: &EvalArgs) -> CmdResult {
    let outputs: Vec<&Path> = a.out.as_deref().into_iter().collect();
    distinct_paths(&[&a.policy, &a.labeled, &a.embeddings], &outputs)?;
    let policy = load_policy(&a.policy)?;
    let r = evaluate(
        &policy,
        &load_labeled(&a.labeled)?,
        &load_embeddings(&a.embeddings)?,
    )?;
    let agreement = r.agreement.map_or_else(|| "na".into(), |x| x.to_string());
    if let Some(out) = &a.out {
        write_file(
            out,
            &format!(
                "margins,loss,agreement,n_pairs,reward\n{},{},{agreement},{},{REWARD_CANONICALIZATION}\n",
                r.margins, r.loss, r.n_pairs
            ),
        )?;
    }
    Ok(format!(
        "command=eval margins={} loss={} agreement={agreement} n_pairs={} reward={REWARD_CANONICALIZATION}",
        r.margins, r.loss, r.n_pairs
    ))
}

pub fn drift(a: &DriftArgs) -> CmdResult {
    let outputs: Vec<&Path> = a
        .out
        .iter()
        .chain(&a.deltas)
        .map(PathBuf::as_path)
        .collect();
    distinct_paths(&[&a.store_a, &a.store_b, &a.pairs], &outputs)?;
    let pairs = load_pairs(&a.pairs)?;
    let r = similarity_drift(
        &load_embeddings(&a.store_a)?,
        &load_embeddings(&a.store_b)?,
        &pairs,
    )?;
    if let Some(out) = &a.out {
        write_file(
            out,
            &format!(
                "n_pairs,max_abs_delta,mean_abs_delta,stable\n{},{},{},{}\n",
                r.n_pairs,
                r.max_abs_delta,
                r.mean_abs_delta,
                r.is_stable()
            ),
        )?;
    }
    if let Some(path) = &a.deltas {
        let mut w = csv_writer(path)?;
        w.write_record(["prompt_id", "left_id", "right_id", "delta"])
            .map_err(|e| csv_error(path, e))?;
        for (p, d) in pairs.iter().zip(&r.deltas) {
            w.write_record([&p.prompt_id, &p.left_id, &p.right_id, &d.to_string()])
                .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(format!(
        "command=drift n_pairs={} max_abs_delta={} mean_abs_delta={} stable={}",
        r.n_pairs,
        r.max_abs_delta,
        r.mean_abs_delta,
        r.is_stable()
    ))
}

const METRICS: [&str; 5] = [
    "flip_rate",
    "mean_similarity",
    "margins",
    "loss",
    "agreement",
];

pub fn report(a: &ReportArgs) -> CmdResult {
    let outputs: Vec<&Path> = a.out.as_deref().into_iter().collect();
    distinct_paths(&[&a.input], &outputs)?;
    let mut rdr = csv::Reader::from_path(&a.input).map_err(|e| csv_error(&a.input, e))?;
    let header = rdr.headers().map_err(|e| csv_error(&a.input, e))?.clone();
    let expected = ["strategy", "seed"]
        .into_iter()
        .chain(METRICS)
        .collect::<Vec<_>>();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Format {
            path: a.input.clone(),
            message: format!("unexpected header {header:?}"),
        }
        .into());
    }
    let mut by_strategy: BTreeMap<Strategy, Vec<[f64; 5]>> = BTreeMap::new();
    let mut order = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(&a.input, e))?;
        let bad = |message: String| Error::Parse {
            path: a.input.clone(),
            line: i + 2,
            message,
        };
        if matches!(&rec[1], "mean" | "std") {
            continue;
        }
        let s: Strategy = rec[0].parse().map_err(|e| bad(format!("{e}")))?;
        let mut row = [0.0; 5];
        for (j, v) in row.iter_mut().enumerate() {
            *v = rec[j + 2]
                .parse()
                .map_err(|e| bad(format!("{}: {e}", METRICS[j])))?;
        }
        if !by_strategy.contains_key(&s) {
            order.push(s);
        }
        by_strategy.entry(s).or_default().push(row);
    }
    if order.is_empty() {
        return Err(Error::EmptyInput("report has no run rows").into());
    }
    let mut out = String::from("strategy,runs");
    for m in METRICS {
        out.push_str(&format!(",{m}_mean,{m}_std"));
    }
    out.push('\n');
    let mut means: Vec<(Strategy, [f64; 5])> = Vec::new();
    for s in &order {
        let rows = &by_strategy[s];
        let mut m = [0.0; 5];
        out.push_str(&format!("{s},{}", rows.len()));
        for j in 0..5 {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            m[j] = mean(col.iter().copied()).unwrap_or(f64::NAN);
            out.push_str(&format!(",{},{}", m[j], sample_std(&col)));
        }
        out.push('\n');
        means.push((*s, m));
    }
    if let Some(path) = &a.out {
        write_file(path, &out)?;
    }
    let ranking = |j: usize| {
        let mut v = means.clone();
        v.sort_by(|x, y| y.1[j].total_cmp(&x.1[j]));
        v.iter()
            .map(|(s, _)| s.as_str())
            .collect::<Vec<_>>()
            .join(">")
    };
    Ok(format!(
        "command=report strategies={} runs={} margins_order={} flip_rate_order={}",
        order.len(),
        by_strategy.values().map(Vec::len).sum::<usize>(),
        ranking(2),
        ranking(0)
    ))
}
