//! Per-pair scoring: turns assembled [`PairRecord`]s into [`MetricVector`]s
//! for a requested metric set, and summarizes them into dataset means.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingKey, EmbeddingKind, PairRecord};
use crate::error::{Error, Result};
use crate::image::{pixcorr, ssim_with, SsimParams};
use crate::metric::{Metric, MetricVector, Orientation};
use crate::object::{object_recall_precision, ThresholdGrid, WeightingMode};
use crate::vector::{correlation_distance, cosine_similarity, pearson, seed, two_way_identification};

/// Preferred caption-embedding tag when several caption models are present.
pub const CAPTION_EMBED_TAG: &str = "caption-embed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub metrics: BTreeSet<Metric>,
    pub grid: ThresholdGrid,
    pub weighting: WeightingMode,
    pub ssim: SsimParams,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            metrics: Metric::closure([Metric::ObjectRecall, Metric::ObjectPrecision, Metric::Seed]),
            grid: ThresholdGrid::default(),
            weighting: WeightingMode::None,
            ssim: SsimParams::default(),
        }
    }
}

impl ScoreConfig {
    pub fn with_metrics(metrics: impl IntoIterator<Item = Metric>) -> Self {
        ScoreConfig {
            metrics: Metric::closure(metrics),
            ..Default::default()
        }
    }
}

/// The caption-embedding key used for Cap-Sim: the only caption-text tag
/// present, or [`CAPTION_EMBED_TAG`] when there are several.
pub fn caption_key(pairs: &[PairRecord]) -> Result<Option<EmbeddingKey>> {
    let tags: BTreeSet<&str> = pairs
        .iter()
        .flat_map(|p| [&p.gt, &p.recon])
        .flat_map(|s| s.embeddings.keys())
        .filter(|k| k.kind == EmbeddingKind::CaptionText)
        .map(|k| k.model_tag.as_str())
        .collect();
    match tags.len() {
        0 => Ok(None),
        1 => Ok(tags
            .first()
            .map(|t| EmbeddingKey::new(EmbeddingKind::CaptionText, *t))),
        _ if tags.contains(CAPTION_EMBED_TAG) => Ok(Some(EmbeddingKey::new(
            EmbeddingKind::CaptionText,
            CAPTION_EMBED_TAG,
        ))),
        _ => Err(Error::InvalidArgument(format!(
            "several caption embedding models {tags:?}; expected one or `{CAPTION_EMBED_TAG}`"
        ))),
    }
}

fn has_input(pair: &PairRecord, metric: Metric, caption: Option<&EmbeddingKey>) -> bool {
    match metric {
        Metric::ObjectRecall | Metric::ObjectPrecision | Metric::ObjectF1 => {
            pair.detections().is_some()
        }
        Metric::CapSim => caption.is_some_and(|k| pair.embedding(k).is_some()),
        Metric::PixCorr | Metric::Ssim => pair.pixels().is_some(),
        Metric::Seed => true,
        m => pair
            .embedding(&EmbeddingKey::feature(m.feature_tag().expect("feature metric")))
            .is_some(),
    }
}

/// Verifies every requested metric has both roles of its inputs for every
/// pair, listing the offending image ids per metric.
pub fn check_inputs(pairs: &[PairRecord], config: &ScoreConfig) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::MissingInput("no image pairs to score".into()));
    }
    let caption = caption_key(pairs)?;
    let mut problems = Vec::new();
    for &metric in &Metric::closure(config.metrics.iter().copied()) {
        let missing: Vec<&str> = pairs
            .iter()
            .filter(|p| !has_input(p, metric, caption.as_ref()))
            .map(|p| p.image_id.as_str())
            .collect();
        if !missing.is_empty() {
            problems.push(format!("{metric}: missing for [{}]", missing.join(", ")));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingInput(problems.join("; ")))
    }
}

fn pair_error(id: &str, metric: Metric, e: Error) -> Error {
    Error::InvalidArgument(format!("image `{id}`, {metric}: {e}"))
}

fn score_one(
    pair: &PairRecord,
    config: &ScoreConfig,
    metrics: &BTreeSet<Metric>,
    caption: Option<&EmbeddingKey>,
) -> Result<MetricVector> {
    let id = pair.image_id.as_str();
    let mut out = MetricVector::new(id);
    let wants = |m: Metric| metrics.contains(&m);
    let feature = |tag: &str| {
        pair.embedding(&EmbeddingKey::feature(tag))
            .expect("checked by check_inputs")
    };

    if wants(Metric::ObjectF1) || wants(Metric::ObjectRecall) || wants(Metric::ObjectPrecision) {
        let (gt, recon) = pair.detections().expect("checked by check_inputs");
        let s = object_recall_precision(gt, recon, &config.grid, config.weighting)
            .map_err(|e| pair_error(id, Metric::ObjectF1, e))?;
        for (m, value, undefined) in [
            (Metric::ObjectRecall, s.recall, s.recall_undefined),
            (Metric::ObjectPrecision, s.precision, s.precision_undefined),
            (Metric::ObjectF1, s.f1, s.degenerate()),
        ] {
            if wants(m) {
                out.set(m, value);
                if undefined {
                    out.mark_undefined(m);
                }
            }
        }
    }
    if wants(Metric::CapSim) {
        let (a, b) = pair
            .embedding(caption.expect("checked by check_inputs"))
            .expect("checked by check_inputs");
        let v = cosine_similarity(a, b).map_err(|e| pair_error(id, Metric::CapSim, e))?;
        out.set(Metric::CapSim, v);
    }
    for (bar, dist) in [
        (Metric::EffNetBar, Metric::EffNetDist),
        (Metric::SwavBar, Metric::SwavDist),
    ] {
        if wants(bar) {
            let (a, b) = feature(bar.feature_tag().unwrap());
            out.set(bar, pearson(a, b).map_err(|e| pair_error(id, bar, e))?);
        }
        if wants(dist) {
            let (a, b) = feature(dist.feature_tag().unwrap());
            out.set(
                dist,
                correlation_distance(a, b).map_err(|e| pair_error(id, dist, e))?,
            );
        }
    }
    if wants(Metric::PixCorr) || wants(Metric::Ssim) {
        let (a, b) = pair.pixels().expect("checked by check_inputs");
        if wants(Metric::PixCorr) {
            out.set(
                Metric::PixCorr,
                pixcorr(a, b).map_err(|e| pair_error(id, Metric::PixCorr, e))?,
            );
        }
        if wants(Metric::Ssim) {
            out.set(
                Metric::Ssim,
                ssim_with(a, b, &config.ssim).map_err(|e| pair_error(id, Metric::Ssim, e))?,
            );
        }
    }
    if wants(Metric::Seed) {
        let get = |m: Metric| out.get(m.name()).expect("component computed");
        let v = seed(get(Metric::ObjectF1), get(Metric::CapSim), get(Metric::EffNetBar));
        out.set(Metric::Seed, v);
    }
    Ok(out)
}

/// Scores every pair. Output is sorted by image id; two-way identification
/// metrics use all pairs as the comparison pool.
pub fn score_pairs(pairs: &[PairRecord], config: &ScoreConfig) -> Result<Vec<MetricVector>> {
    check_inputs(pairs, config)?;
    let metrics = Metric::closure(config.metrics.iter().copied());
    let caption = caption_key(pairs)?;
    let mut sorted: Vec<&PairRecord> = pairs.iter().collect();
    sorted.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].image_id == w[1].image_id) {
        return Err(Error::InvalidArgument(format!(
            "duplicate pair `{}`",
            w[0].image_id
        )));
    }
    let mut vectors = sorted
        .par_iter()
        .map(|p| score_one(p, config, &metrics, caption.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    for &metric in metrics.iter().filter(|m| m.is_two_way()) {
        let key = EmbeddingKey::feature(metric.feature_tag().unwrap());
        let (gt, recon): (Vec<Vec<f64>>, Vec<Vec<f64>>) = sorted
            .iter()
            .map(|p| {
                let (a, b) = p.embedding(&key).expect("checked by check_inputs");
                (a.to_vec(), b.to_vec())
            })
            .unzip();
        let result = two_way_identification(&gt, &recon)
            .map_err(|e| Error::InvalidArgument(format!("{metric}: {e}")))?;
        for (v, rate) in vectors.iter_mut().zip(result.per_image) {
            v.set(metric, rate);
        }
    }
    Ok(vectors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub orientation: Orientation,
    /// Mean over all pairs, undefined placeholders counted as scored.
    pub mean: f64,
    /// Mean over pairs where the metric is defined.
    pub mean_defined: Option<f64>,
    pub n: usize,
    pub n_defined: usize,
}

/// Dataset means per metric, in score-table column order.
pub fn summarize(vectors: &[MetricVector]) -> Vec<MetricSummary> {
    let mut acc: BTreeMap<String, (Orientation, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for v in vectors {
        for (name, &value) in &v.scores {
            let entry = acc
                .entry(name.clone())
                .or_insert_with(|| (v.orientation[name], Vec::new(), Vec::new()));
            entry.1.push(value);
            if v.is_defined(name) {
                entry.2.push(value);
            }
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    crate::metric::metric_columns(vectors)
        .into_iter()
        .map(|name| {
            let (orientation, all, defined) = &acc[&name];
            MetricSummary {
                metric: name.clone(),
                orientation: *orientation,
                mean: mean(all),
                mean_defined: (!defined.is_empty()).then(|| mean(defined)),
                n: all.len(),
                n_defined: defined.len(),
            }
        })
        .collect()
}
