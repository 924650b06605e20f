//! Object Recall, Object Precision and Object F1.
//!
//! Both sides are thresholded with the same `t`; a category counts as
//! detected when its (deduplicated) confidence is `>= t`. Recall is averaged
//! over thresholds `0, step, 2·step, …` up to the most confident GT
//! detection, precision up to the most confident reconstruction detection.
//! A cutoff that does not fall on the grid is sampled as an extra point, so
//! comparing a set with itself scores exactly 1.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{Detection, DetectionSet};
use crate::error::{Error, Result};
use crate::vocab::CategoryVocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    step: f64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid {
            step: Self::DEFAULT_STEP,
        }
    }
}

impl ThresholdGrid {
    pub const DEFAULT_STEP: f64 = 0.01;

    pub fn new(step: f64) -> Result<Self> {
        if !step.is_finite() || step <= 0.0 || step > 1.0 {
            return Err(Error::InvalidArgument(format!(
                "grid step must be in (0, 1], got {step}"
            )));
        }
        Ok(ThresholdGrid { step })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    // For steps like 0.01, k / 100 is the double nearest to the decimal
    // threshold, whereas k * 0.01 drifts (29 * 0.01 != 0.29).
    fn divisor(&self) -> Option<f64> {
        let inv = 1.0 / self.step;
        let m = inv.round();
        ((inv - m).abs() < 1e-9 && m >= 1.0).then_some(m)
    }

    /// The `k`-th grid threshold.
    pub fn point(&self, k: u64) -> f64 {
        match self.divisor() {
            Some(m) => k as f64 / m,
            None => k as f64 * self.step,
        }
    }

    /// Largest `k` with `point(k) <= cutoff` (0 for cutoffs below one step).
    pub fn last_index(&self, cutoff: f64) -> u64 {
        let mut k = (cutoff / self.step).floor().max(0.0) as u64;
        while self.point(k + 1) <= cutoff {
            k += 1;
        }
        while k > 0 && self.point(k) > cutoff {
            k -= 1;
        }
        k
    }

    /// Thresholds sampled for a given cutoff, ascending.
    pub fn samples(&self, cutoff: f64) -> Vec<f64> {
        let last = self.last_index(cutoff);
        let mut out: Vec<f64> = (0..=last).map(|k| self.point(k)).collect();
        if out[out.len() - 1] < cutoff {
            out.push(cutoff);
        }
        out
    }
}

/// Optional per-category weighting of the recall/precision terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingMode {
    /// Every category counts once.
    #[default]
    None,
    /// Weight `1 + area` of the bounding box (1 for a point, 2 for the full image).
    Size,
    /// Weight `2 - d / d_max`, `d` the distance of the box center from the
    /// image center and `d_max` the center-to-corner distance.
    Location,
    /// A category found on both sides earns `min(n, m) / max(n, m)` of its
    /// credit, `n` and `m` the instance counts before deduplication.
    Number,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectScore {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// GT had no detections; `recall` is a placeholder 0.
    pub recall_undefined: bool,
    /// Reconstruction had no detections; `precision` is a placeholder 0.
    pub precision_undefined: bool,
}

impl ObjectScore {
    pub fn degenerate(&self) -> bool {
        self.recall_undefined || self.precision_undefined
    }
}

/// Harmonic mean of recall and precision, 0 when either is 0.
pub fn f1_score(recall: f64, precision: f64) -> f64 {
    if recall > 0.0 && precision > 0.0 {
        2.0 / (1.0 / recall + 1.0 / precision)
    } else {
        0.0
    }
}

/// Categories whose confidence is at least `t`.
pub fn detected_categories(set: &DetectionSet, t: f64) -> BTreeSet<&str> {
    set.detections()
        .iter()
        .filter(|d| d.confidence >= t)
        .map(|d| d.category.as_str())
        .collect()
}

fn category_weight(d: &Detection, weighting: WeightingMode) -> Result<f64> {
    let bbox = || {
        d.bbox.ok_or_else(|| {
            Error::MissingInput(format!(
                "{weighting:?} weighting needs a bounding box for `{}`",
                d.category
            ))
        })
    };
    Ok(match weighting {
        WeightingMode::None | WeightingMode::Number => 1.0,
        WeightingMode::Size => 1.0 + bbox()?.area().clamp(0.0, 1.0),
        WeightingMode::Location => {
            let (cx, cy) = bbox()?.center();
            let d = ((cx - 0.5).powi(2) + (cy - 0.5).powi(2)).sqrt();
            2.0 - (d / std::f64::consts::FRAC_1_SQRT_2).min(1.0)
        }
    })
}

/// Threshold-averaged fraction of `denominator` categories also detected in
/// `other`. `None` when `denominator` is empty.
fn averaged_overlap(
    denominator: &DetectionSet,
    other: &DetectionSet,
    grid: &ThresholdGrid,
    weighting: WeightingMode,
) -> Result<Option<f64>> {
    let Some(cutoff) = denominator.max_confidence() else {
        return Ok(None);
    };
    let weights = denominator
        .detections()
        .iter()
        .map(|d| category_weight(d, weighting))
        .collect::<Result<Vec<f64>>>()?;
    let credit = |d: &Detection| -> f64 {
        if weighting == WeightingMode::Number {
            let n = denominator.instance_count(&d.category).max(1);
            let m = other.instance_count(&d.category).max(1);
            n.min(m) as f64 / n.max(m) as f64
        } else {
            1.0
        }
    };
    let samples = grid.samples(cutoff);
    let mut total = 0.0;
    for &t in &samples {
        let mut hit = 0.0;
        let mut mass = 0.0;
        for (d, w) in denominator.detections().iter().zip(&weights) {
            if d.confidence < t {
                continue;
            }
            mass += w;
            if other.confidence(&d.category).is_some_and(|c| c >= t) {
                hit += w * credit(d);
            }
        }
        // mass > 0: the cutoff is the max confidence, so some category survives.
        total += hit / mass;
    }
    Ok(Some(total / samples.len() as f64))
}

/// Object Recall, Object Precision and Object F1 for one pair.
pub fn object_recall_precision(
    gt: &DetectionSet,
    recon: &DetectionSet,
    grid: &ThresholdGrid,
    weighting: WeightingMode,
) -> Result<ObjectScore> {
    let recall = averaged_overlap(gt, recon, grid, weighting)?;
    let precision = averaged_overlap(recon, gt, grid, weighting)?;
    let (r, p) = (recall.unwrap_or(0.0), precision.unwrap_or(0.0));
    Ok(ObjectScore {
        recall: r,
        precision: p,
        f1: f1_score(r, p),
        recall_undefined: recall.is_none(),
        precision_undefined: precision.is_none(),
    })
}

/// Counts behind strict and relaxed recall at one fixed threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecallCounts {
    /// GT categories in the restriction set with confidence `>= t`.
    pub qualifying: usize,
    /// Of those, present with the same category in the reconstruction.
    pub exact: usize,
    /// Of those, whose supercategory appears in the reconstruction.
    pub relaxed: usize,
}

impl RecallCounts {
    pub fn strict_recall(&self) -> Option<f64> {
        (self.qualifying > 0).then(|| self.exact as f64 / self.qualifying as f64)
    }

    pub fn relaxed_recall(&self) -> Option<f64> {
        (self.qualifying > 0).then(|| self.relaxed as f64 / self.qualifying as f64)
    }

    /// GT categories whose supercategory was matched but not the category.
    pub fn near_misses(&self) -> usize {
        self.relaxed - self.exact
    }

    pub fn add(&mut self, other: &RecallCounts) {
        self.qualifying += other.qualifying;
        self.exact += other.exact;
        self.relaxed += other.relaxed;
    }
}

/// Strict and supercategory-relaxed recall counts at threshold `t`.
/// `restrict` limits the GT categories considered; `None` means the
/// vocabulary's salient categories.
pub fn recall_counts(
    gt: &DetectionSet,
    recon: &DetectionSet,
    t: f64,
    vocab: &CategoryVocabulary,
    restrict: Option<&BTreeSet<String>>,
) -> RecallCounts {
    let restrict = restrict.unwrap_or(vocab.salient());
    let recon_cats = detected_categories(recon, t);
    let recon_supers: BTreeSet<&str> = recon_cats
        .iter()
        .filter_map(|c| vocab.supercategory(c))
        .collect();
    let mut counts = RecallCounts::default();
    for c in detected_categories(gt, t) {
        if !restrict.contains(c) {
            continue;
        }
        counts.qualifying += 1;
        let exact = recon_cats.contains(c);
        let relaxed =
            exact || vocab.supercategory(c).is_some_and(|s| recon_supers.contains(s));
        counts.exact += exact as usize;
        counts.relaxed += relaxed as usize;
    }
    counts
}

/// Fraction of qualifying GT categories whose supercategory appears in the
/// reconstruction at threshold `t`; `None` when no GT category qualifies.
pub fn relaxed_recall(
    gt: &DetectionSet,
    recon: &DetectionSet,
    t: f64,
    vocab: &CategoryVocabulary,
    restrict: Option<&BTreeSet<String>>,
) -> Option<f64> {
    recall_counts(gt, recon, t, vocab, restrict).relaxed_recall()
}

/// Plain recall at a single threshold, same restriction rule as
/// [`relaxed_recall`].
pub fn strict_recall(
    gt: &DetectionSet,
    recon: &DetectionSet,
    t: f64,
    vocab: &CategoryVocabulary,
    restrict: Option<&BTreeSet<String>>,
) -> Option<f64> {
    recall_counts(gt, recon, t, vocab, restrict).strict_recall()
}
