//! Evaluator-axis bootstrap of the difference between two metrics' agreement
//! with human scores.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::normalize::{human_scores, HumanBasis};
use super::rank::{align, compute_stat, AlignmentStat};
use crate::error::{Error, Result};
use crate::ratings::{RatingKind, RatingsMatrix};

/// Redraws allowed per iteration before giving up.
pub const MAX_REDRAWS: u32 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub level: f64,
    pub seed: u64,
    pub stat: AlignmentStat,
    pub kind: RatingKind,
    pub basis: HumanBasis,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            iterations: 1000,
            level: 0.95,
            seed: 0,
            stat: AlignmentStat::PairwiseAccuracy,
            kind: RatingKind::Semantic,
            basis: HumanBasis::Normalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub metric_delta_name: String,
    pub stat: AlignmentStat,
    /// Difference on the original (unresampled) evaluators.
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub seed: u64,
    pub level: f64,
    /// Resamples thrown away because a statistic was undefined.
    pub redraws: u64,
}

fn delta(
    m: &RatingsMatrix,
    a: &BTreeMap<String, f64>,
    b: &BTreeMap<String, f64>,
    cfg: &BootstrapConfig,
) -> Result<f64> {
    let human = human_scores(m, cfg.kind, cfg.basis)?;
    let stat = |metric: &BTreeMap<String, f64>| -> Result<f64> {
        let (_, x, y) = align(metric, &human);
        compute_stat(cfg.stat, &x, &y)
    };
    Ok(stat(a)? - stat(b)?)
}

/// Linear-interpolated quantile of sorted data at position `q (n - 1)`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Percentile CI for `stat(a) - stat(b)`. Iteration `i` draws from a ChaCha8
/// generator seeded with `seed` on stream `i`, so the result does not depend
/// on thread count or scheduling.
pub fn bootstrap_delta(
    ratings: &RatingsMatrix,
    name: &str,
    metric_a: &BTreeMap<String, f64>,
    metric_b: &BTreeMap<String, f64>,
    cfg: &BootstrapConfig,
) -> Result<BootstrapCI> {
    if cfg.iterations == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least 1 iteration".into()));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level {} is outside (0, 1)",
            cfg.level
        )));
    }
    for (label, metric) in [("first", metric_a), ("second", metric_b)] {
        let missing: Vec<&str> = ratings
            .image_ids()
            .iter()
            .filter(|id| !metric.contains_key(*id))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingInput(format!(
                "{label} metric has no score for rated images {missing:?}"
            )));
        }
    }
    let estimate = delta(ratings, metric_a, metric_b, cfg)?;
    let k = ratings.n_evaluators();
    let draws: Vec<(f64, u64)> = (0..cfg.iterations)
        .into_par_iter()
        .map(|it| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(it as u64);
            let mut redraws = 0u64;
            loop {
                let idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..k)).collect();
                let sample = ratings.select_evaluators(&idx);
                match delta(&sample, metric_a, metric_b, cfg) {
                    Ok(d) => return Ok((d, redraws)),
                    Err(Error::Undefined(_) | Error::ZeroVariance(_)) => {
                        redraws += 1;
                        if redraws > MAX_REDRAWS as u64 {
                            return Err(Error::Undefined(format!(
                                "bootstrap iteration {it}: statistic undefined after {MAX_REDRAWS} redraws"
                            )));
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<_>>()?;
    let redraws = draws.iter().map(|d| d.1).sum();
    let mut deltas: Vec<f64> = draws.into_iter().map(|d| d.0).collect();
    deltas.sort_by(f64::total_cmp);
    let alpha = 1.0 - cfg.level;
    Ok(BootstrapCI {
        metric_delta_name: name.to_string(),
        stat: cfg.stat,
        estimate,
        lower: quantile(&deltas, alpha / 2.0),
        upper: quantile(&deltas, 1.0 - alpha / 2.0),
        iterations: cfg.iterations,
        seed: cfg.seed,
        level: cfg.level,
        redraws,
    })
}
