//! Dataset-level failure modes: semantic near-misses (SNM) and semantic
//! detail misses (SDM).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::PairRecord;
use crate::error::{Error, Result};
use crate::metric::{Metric, MetricVector};
use crate::object::{recall_counts, RecallCounts};
use crate::vocab::CategoryVocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureThresholds {
    pub snm_threshold: f64,
    pub sdm_f1_min: f64,
    pub sdm_gap_min: f64,
}

impl Default for FailureThresholds {
    fn default() -> Self {
        FailureThresholds {
            snm_threshold: 0.3,
            sdm_f1_min: 0.7,
            sdm_gap_min: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFlags {
    pub qualifying: usize,
    pub near_miss_count: usize,
    pub detail_miss: bool,
}

/// SNM statistics at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnmResult {
    /// Near-misses over all qualifying GT categories in the dataset.
    pub micro: f64,
    /// Mean of per-pair near-miss fractions over pairs with a qualifying
    /// GT category.
    pub macro_: f64,
    pub totals: RecallCounts,
    pub per_pair: BTreeMap<String, RecallCounts>,
}

impl SnmResult {
    pub fn strict_recall(&self) -> f64 {
        self.totals.exact as f64 / self.totals.qualifying as f64
    }

    pub fn relaxed_recall(&self) -> f64 {
        self.totals.relaxed as f64 / self.totals.qualifying as f64
    }
}

/// Near-miss rates over salient GT categories with confidence `>= t`.
pub fn snm(pairs: &[PairRecord], vocab: &CategoryVocabulary, t: f64) -> Result<SnmResult> {
    let missing: Vec<&str> = pairs
        .iter()
        .filter(|p| p.detections().is_none())
        .map(|p| p.image_id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingInput(format!(
            "detections missing for {missing:?}"
        )));
    }
    let per_pair: BTreeMap<String, RecallCounts> = pairs
        .par_iter()
        .map(|p| {
            let (gt, recon) = p.detections().expect("checked above");
            (p.image_id.clone(), recall_counts(gt, recon, t, vocab, None))
        })
        .collect();
    let mut totals = RecallCounts::default();
    for c in per_pair.values() {
        totals.add(c);
    }
    if totals.qualifying == 0 {
        return Err(Error::Undefined(format!(
            "no salient GT category reaches confidence {t}"
        )));
    }
    let fractions: Vec<f64> = per_pair
        .values()
        .filter(|c| c.qualifying > 0)
        .map(|c| c.near_misses() as f64 / c.qualifying as f64)
        .collect();
    Ok(SnmResult {
        micro: totals.near_misses() as f64 / totals.qualifying as f64,
        macro_: fractions.iter().sum::<f64>() / fractions.len() as f64,
        totals,
        per_pair,
    })
}

/// Micro-averaged SNM rate.
pub fn snm_rate(pairs: &[PairRecord], vocab: &CategoryVocabulary, t: f64) -> Result<f64> {
    Ok(snm(pairs, vocab, t)?.micro)
}

/// `object_f1 > f1_min && object_f1 - seed > gap_min`
pub fn is_detail_miss(object_f1: f64, seed: f64, f1_min: f64, gap_min: f64) -> bool {
    object_f1 > f1_min && object_f1 - seed > gap_min
}

fn f1_and_seed(v: &MetricVector) -> Result<(f64, f64)> {
    match (v.get(Metric::ObjectF1.name()), v.get(Metric::Seed.name())) {
        (Some(f), Some(s)) => Ok((f, s)),
        _ => Err(Error::MissingInput(format!(
            "{}: object_f1 and seed are both required",
            v.image_id
        ))),
    }
}

/// Fraction of pairs flagged as detail misses.
pub fn sdm_rate(scores: &[MetricVector], f1_min: f64, gap_min: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scored pairs".into()));
    }
    let mut flagged = 0usize;
    for v in scores {
        let (f, s) = f1_and_seed(v)?;
        flagged += is_detail_miss(f, s, f1_min, gap_min) as usize;
    }
    Ok(flagged as f64 / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub snm_rate: f64,
    pub snm_rate_macro: f64,
    pub sdm_rate: f64,
    pub strict_recall: f64,
    pub relaxed_recall: f64,
    pub qualifying_categories: usize,
    pub near_misses: usize,
    pub detail_misses: usize,
    pub n_pairs: usize,
    pub thresholds: FailureThresholds,
    pub per_pair_flags: BTreeMap<String, PairFlags>,
}

/// Both rates plus per-pair flags. Every scored pair needs detections and
/// every detection pair needs scores.
pub fn failure_report(
    pairs: &[PairRecord],
    scores: &[MetricVector],
    vocab: &CategoryVocabulary,
    th: &FailureThresholds,
) -> Result<FailureReport> {
    let s = snm(pairs, vocab, th.snm_threshold)?;
    let sdm = sdm_rate(scores, th.sdm_f1_min, th.sdm_gap_min)?;
    let mut flags: BTreeMap<String, PairFlags> = s
        .per_pair
        .iter()
        .map(|(id, c)| {
            (
                id.clone(),
                PairFlags {
                    qualifying: c.qualifying,
                    near_miss_count: c.near_misses(),
                    detail_miss: false,
                },
            )
        })
        .collect();
    let mut detail_misses = 0;
    for v in scores {
        let (f, sd) = f1_and_seed(v)?;
        let flag = flags.get_mut(&v.image_id).ok_or_else(|| {
            Error::MissingInput(format!("{}: scored but has no detections", v.image_id))
        })?;
        flag.detail_miss = is_detail_miss(f, sd, th.sdm_f1_min, th.sdm_gap_min);
        detail_misses += flag.detail_miss as usize;
    }
    if scores.len() != flags.len() {
        let scored: std::collections::BTreeSet<&str> =
            scores.iter().map(|v| v.image_id.as_str()).collect();
        let unscored: Vec<&String> = flags.keys().filter(|k| !scored.contains(k.as_str())).collect();
        return Err(Error::MissingInput(format!(
            "no scores for pairs {unscored:?}"
        )));
    }
    Ok(FailureReport {
        snm_rate: s.micro,
        snm_rate_macro: s.macro_,
        sdm_rate: sdm,
        strict_recall: s.strict_recall(),
        relaxed_recall: s.relaxed_recall(),
        qualifying_categories: s.totals.qualifying,
        near_misses: s.totals.near_misses(),
        detail_misses,
        n_pairs: flags.len(),
        thresholds: *th,
        per_pair_flags: flags,
    })
}
