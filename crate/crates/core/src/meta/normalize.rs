use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratings::{RatingKind, RatingsMatrix};

/// Which per-image human score to compare metrics against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HumanBasis {
    /// Mean of per-evaluator z-scores.
    #[default]
    Normalized,
    /// Mean of raw Likert ratings.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRatings {
    pub evaluator_ids: Vec<String>,
    pub image_ids: Vec<String>,
    /// `[evaluator][item]` z-scores, `None` where the rating is missing.
    pub z: Vec<Vec<Option<f64>>>,
    /// Mean z-score per image over the evaluators who rated it.
    pub human_score: BTreeMap<String, f64>,
}

pub fn normalize_ratings(m: &RatingsMatrix) -> Result<NormalizedRatings> {
    normalize_ratings_kind(m, RatingKind::Semantic)
}

/// Z-scores each evaluator's ratings with the sample standard deviation
/// (constant evaluators map to zeros), then averages per image.
pub fn normalize_ratings_kind(m: &RatingsMatrix, kind: RatingKind) -> Result<NormalizedRatings> {
    let values = m.values(kind)?;
    let mut z = Vec::with_capacity(values.len());
    for (e, row) in values.iter().enumerate() {
        let rated: Vec<f64> = row.iter().flatten().map(|&v| v as f64).collect();
        if rated.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "evaluator `{}` has no ratings",
                m.evaluator_ids()[e]
            )));
        }
        let n = rated.len() as f64;
        let mean = rated.iter().sum::<f64>() / n;
        let ss: f64 = rated.iter().map(|v| (v - mean).powi(2)).sum();
        let sd = if rated.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        z.push(
            row.iter()
                .map(|v| {
                    v.map(|v| if sd > 0.0 { (v as f64 - mean) / sd } else { 0.0 })
                })
                .collect::<Vec<_>>(),
        );
    }
    let human_score = column_means(m.image_ids(), &z);
    Ok(NormalizedRatings {
        evaluator_ids: m.evaluator_ids().to_vec(),
        image_ids: m.image_ids().to_vec(),
        z,
        human_score,
    })
}

fn column_means(ids: &[String], rows: &[Vec<Option<f64>>]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let (mut sum, mut n) = (0.0, 0usize);
        for row in rows {
            if let Some(v) = row[i] {
                sum += v;
                n += 1;
            }
        }
        if n > 0 {
            out.insert(id.clone(), sum / n as f64);
        }
    }
    out
}

/// Mean raw rating per image.
pub fn raw_means(m: &RatingsMatrix, kind: RatingKind) -> Result<BTreeMap<String, f64>> {
    let rows: Vec<Vec<Option<f64>>> = m
        .values(kind)?
        .iter()
        .map(|r| r.iter().map(|v| v.map(f64::from)).collect())
        .collect();
    Ok(column_means(m.image_ids(), &rows))
}

pub fn human_scores(
    m: &RatingsMatrix,
    kind: RatingKind,
    basis: HumanBasis,
) -> Result<BTreeMap<String, f64>> {
    match basis {
        HumanBasis::Normalized => Ok(normalize_ratings_kind(m, kind)?.human_score),
        HumanBasis::Raw => raw_means(m, kind),
    }
}
