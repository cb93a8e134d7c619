//! Simulation config: JSON objects, one per line, merged top to bottom.

use std::path::Path;

use prefsel_core::{ExperimentConfig, Strategy};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    n_prompts: Option<usize>,
    k_responses: Option<usize>,
    dimension: Option<usize>,
    reward_scale: Option<f64>,
    response_dispersion: Option<f64>,
    annotator_temperature: Option<f64>,
    test_fraction: Option<f64>,
    learning_rate: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    shuffle: Option<bool>,
    strategies: Option<Vec<Strategy>>,
    n_seeds: Option<u64>,
}

macro_rules! merge {
    ($dst:expr, $src:expr, $($field:ident),*) => {
        $( if let Some(v) = $src.$field { $dst.$field = v; } )*
    };
}

/// Seeds are `seed, seed + 1, ...`, ten of them unless `n_seeds` says otherwise.
pub fn load(path: Option<&Path>, seed: u64, beta: f64) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig {
        beta,
        ..Default::default()
    };
    let mut n_seeds = 10u64;
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|source| prefsel_core::Error::Io {
            path: path.into(),
            source,
        })?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: Record = serde_json::from_str(line).map_err(|e| prefsel_core::Error::Parse {
                path: path.into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            merge!(
                cfg.world,
                r,
                n_prompts,
                k_responses,
                dimension,
                reward_scale,
                response_dispersion,
                annotator_temperature,
                test_fraction
            );
            merge!(cfg.train, r, learning_rate, epochs, batch_size, shuffle);
            merge!(cfg, r, strategies);
            if let Some(n) = r.n_seeds {
                n_seeds = n;
            }
        }
    }
    if n_seeds == 0 {
        return Err(CliError::Core(prefsel_core::Error::InvalidParameter(
            "n_seeds must be positive".into(),
        )));
    }
    cfg.seeds = (0..n_seeds).map(|i| seed.wrapping_add(i)).collect();
    Ok(cfg)
}
