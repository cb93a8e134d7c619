use prefsel_core::corpus::LabeledPair;
use prefsel_core::selection::select_random;
use prefsel_core::simulator::{annotate, generate_world, test_pairs, SyntheticWorld, WorldConfig};
use prefsel_core::trainer::{
    evaluate_resolved, init_policy, resolve_pairs, train_resolved, ResolvedPair, TrainConfig,
};
use prefsel_core::Embedding;

fn world() -> SyntheticWorld {
    generate_world(&WorldConfig {
        n_prompts: 500,
        dimension: 8,
        ..Default::default()
    })
    .unwrap()
}

fn train_set(w: &SyntheticWorld, seed: u64) -> Vec<ResolvedPair> {
    let labeled: Vec<LabeledPair> = w
        .train_groups()
        .iter()
        .map(|g| annotate(&select_random(g, &w.store, seed).unwrap(), w, 1.0, seed).unwrap())
        .collect();
    resolve_pairs(&labeled, &w.store).unwrap()
}

#[test]
fn full_batch_loss_never_increases_below_the_smoothness_step() {
    let w = world();
    let pairs = train_set(&w, 1);
    let beta = 0.5;
    let max_sq = pairs
        .iter()
        .map(|p| p.diff().iter().map(|x| x * x).sum::<f64>())
        .fold(0.0, f64::max);
    let lr = 0.95 / (beta * beta * max_sq / 4.0);
    let cfg = TrainConfig {
        learning_rate: lr,
        epochs: 60,
        batch_size: pairs.len(),
        seed: 1,
        shuffle: true,
    };
    let (_, h) = train_resolved(init_policy(8, beta).unwrap(), &pairs, &cfg, |_, _, _| {}).unwrap();
    assert_eq!(h.steps.len(), 60);
    for s in h.steps.windows(2) {
        assert!(
            s[1].loss <= s[0].loss + 1e-15,
            "{} -> {}",
            s[0].loss,
            s[1].loss
        );
    }
    assert!(h.steps.last().unwrap().loss < h.steps[0].loss);
}

#[test]
fn same_seed_same_history() {
    let w = world();
    let pairs = train_set(&w, 2);
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 32,
        seed: 9,
        ..Default::default()
    };
    let run = || train_resolved(init_policy(8, 0.1).unwrap(), &pairs, &cfg, |_, _, _| {}).unwrap();
    let (p1, h1) = run();
    let (p2, h2) = run();
    assert_eq!(p1, p2);
    assert_eq!(h1, h2);
    let other = TrainConfig { seed: 10, ..cfg };
    let (p3, _) =
        train_resolved(init_policy(8, 0.1).unwrap(), &pairs, &other, |_, _, _| {}).unwrap();
    assert_ne!(p1, p3);
}

fn scale(pairs: &[ResolvedPair], alpha: f64) -> Vec<ResolvedPair> {
    let s = |e: &Embedding| e.scaled(alpha).unwrap();
    pairs
        .iter()
        .map(|p| ResolvedPair::new(s(&p.chosen), s(&p.rejected)).unwrap())
        .collect()
}

#[test]
fn common_rescaling_with_matched_step_keeps_sign_pattern() {
    let w = world();
    let pairs = train_set(&w, 3);
    let test: Vec<ResolvedPair> = resolve_pairs(&test_pairs(&w, 3).unwrap(), &w.store).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.5,
        epochs: 2,
        batch_size: 16,
        seed: 3,
        shuffle: true,
    };
    let (base, _) =
        train_resolved(init_policy(8, 0.1).unwrap(), &pairs, &cfg, |_, _, _| {}).unwrap();
    let signs = |theta: &[f64], set: &[ResolvedPair]| -> Vec<bool> {
        set.iter()
            .map(|p| theta.iter().zip(p.diff()).map(|(t, d)| t * d).sum::<f64>() > 0.0)
            .collect()
    };
    for alpha in [0.25, 2.0, 8.0] {
        let cfg_a = TrainConfig {
            learning_rate: cfg.learning_rate / (alpha * alpha),
            ..cfg
        };
        let (scaled, _) = train_resolved(
            init_policy(8, 0.1).unwrap(),
            &scale(&pairs, alpha),
            &cfg_a,
            |_, _, _| {},
        )
        .unwrap();
        let test_a = scale(&test, alpha);
        assert_eq!(signs(base.theta(), &test), signs(scaled.theta(), &test_a));
        assert_eq!(
            evaluate_resolved(&base, &test).unwrap().agreement,
            evaluate_resolved(&scaled, &test_a).unwrap().agreement
        );
    }
}

#[test]
fn reference_policy_metrics_on_balanced_labels() {
    let w = world();
    let test = resolve_pairs(&test_pairs(&w, 4).unwrap(), &w.store).unwrap();
    let balanced: Vec<ResolvedPair> = test
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if i % 2 == 0 {
                p.clone()
            } else {
                ResolvedPair::new(p.rejected.clone(), p.chosen.clone()).unwrap()
            }
        })
        .collect();
    let r = evaluate_resolved(&init_policy(8, 0.1).unwrap(), &balanced).unwrap();
    assert!((r.loss - std::f64::consts::LN_2).abs() <= 1e-9);
    assert_eq!(r.margins, 0.0);
    assert_eq!(r.agreement, Some(0.5));
}
