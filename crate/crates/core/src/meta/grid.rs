//! Pairwise metric combinations: how well the average of two metrics agrees
//! with human scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rank::{compute_stat, AlignmentStat};
use crate::error::{Error, Result};
use crate::metric::Orientation;

/// Per-pair scores of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedScores {
    pub name: String,
    pub orientation: Orientation,
    pub scores: BTreeMap<String, f64>,
}

impl NamedScores {
    pub fn new(name: impl Into<String>, orientation: Orientation, scores: BTreeMap<String, f64>) -> Self {
        NamedScores {
            name: name.into(),
            orientation,
            scores,
        }
    }
}

/// Converts a lower-is-better correlation distance to its correlation form
/// `1 - d`; higher-is-better input is returned unchanged.
pub fn higher_better_form(s: &NamedScores) -> NamedScores {
    match s.orientation {
        Orientation::HigherBetter => s.clone(),
        Orientation::LowerBetter => NamedScores {
            name: format!("1-{}", s.name),
            orientation: Orientation::HigherBetter,
            scores: s.scores.iter().map(|(k, v)| (k.clone(), 1.0 - v)).collect(),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    /// Average the raw metric values.
    #[default]
    Raw,
    /// Z-score each metric over the common items before averaging.
    ZScore,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinationGrid {
    pub names: Vec<String>,
    pub stat: AlignmentStat,
    pub mode: CombineMode,
    pub n_items: usize,
    /// Symmetric; NaN where the statistic is undefined.
    pub values: Vec<Vec<f64>>,
}

impl CombinationGrid {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

fn zscore(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    if sd > 0.0 {
        v.iter().map(|x| (x - mean) / sd).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Cell `(i, j)` is `stat(mean(metric_i, metric_j), human)` over the image
/// ids every metric and the human scores share.
pub fn combination_grid(
    metrics: &[NamedScores],
    human: &BTreeMap<String, f64>,
    stat: AlignmentStat,
    mode: CombineMode,
) -> Result<CombinationGrid> {
    if let Some(m) = metrics
        .iter()
        .find(|m| m.orientation == Orientation::LowerBetter)
    {
        return Err(Error::InvalidArgument(format!(
            "metric `{}` is lower-is-better; convert it with higher_better_form first",
            m.name
        )));
    }
    let ids: Vec<&String> = human
        .keys()
        .filter(|id| metrics.iter().all(|m| m.scores.contains_key(*id)))
        .collect();
    if ids.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "combination grid needs at least 2 common image ids, got {}",
            ids.len()
        )));
    }
    let h: Vec<f64> = ids.iter().map(|id| human[*id]).collect();
    let columns: Vec<Vec<f64>> = metrics
        .iter()
        .map(|m| {
            let col: Vec<f64> = ids.iter().map(|id| m.scores[*id]).collect();
            match mode {
                CombineMode::Raw => col,
                CombineMode::ZScore => zscore(&col),
            }
        })
        .collect();
    let n = metrics.len();
    let mut values = vec![vec![f64::NAN; n]; n];
    for i in 0..n {
        for j in i..n {
            let combined: Vec<f64> = columns[i]
                .iter()
                .zip(&columns[j])
                .map(|(a, b)| (a + b) / 2.0)
                .collect();
            let v = match compute_stat(stat, &combined, &h) {
                Ok(v) => v,
                Err(Error::Undefined(_) | Error::ZeroVariance(_)) => f64::NAN,
                Err(e) => return Err(e),
            };
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(CombinationGrid {
        names: metrics.iter().map(|m| m.name.clone()).collect(),
        stat,
        mode,
        n_items: ids.len(),
        values,
    })
}
