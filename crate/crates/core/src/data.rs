//! Record types shared by every metric: detections, embeddings, captions,
//! pixel buffers, and the per-image pair that bundles them.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on `x + w` and `y + h` for normalized boxes.
pub const BBOX_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Gt,
    Recon,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Gt => "gt",
            Role::Recon => "recon",
        })
    }
}

/// Normalized bounding box, serialized as `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        BBox { x, y, w, h }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl BBox {
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [("x", self.x), ("y", self.y), ("w", self.w), ("h", self.h)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        if self.x + self.w > 1.0 + BBOX_EPSILON {
            return Err(format!("x + w = {} exceeds 1", self.x + self.w));
        }
        if self.y + self.h > 1.0 + BBOX_EPSILON {
            return Err(format!("y + h = {} exceeds 1", self.y + self.h));
        }
        Ok(())
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.w.total_cmp(&other.w))
            .then(self.h.total_cmp(&other.h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub category: String,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
}

impl Detection {
    pub fn new(category: impl Into<String>, confidence: f64) -> Self {
        Detection {
            category: category.into(),
            confidence,
            bbox: None,
        }
    }

    pub fn with_bbox(mut self, bbox: BBox) -> Self {
        self.bbox = Some(bbox);
        self
    }

    /// Checks the field-level invariants; the error carries the field name.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.category.trim().is_empty() {
            return Err(("category", "must be non-empty".into()));
        }
        if !self.confidence.is_finite() || !(0.0..=1.0).contains(&self.confidence) {
            return Err((
                "confidence",
                format!("{} is outside [0, 1]", self.confidence),
            ));
        }
        if let Some(b) = &self.bbox {
            b.validate().map_err(|m| ("bbox", m))?;
        }
        Ok(())
    }

    // Higher confidence wins; equal confidences fall back to a total order on
    // the box so the survivor does not depend on input order.
    fn beats(&self, other: &Detection) -> bool {
        match self.confidence.total_cmp(&other.confidence) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match (&self.bbox, &other.bbox) {
                (Some(a), Some(b)) => a.total_cmp(b) == Ordering::Greater,
                (Some(_), None) => true,
                _ => false,
            },
        }
    }
}

/// Detections for one image. Canonical sets hold at most one detection per
/// category (the most confident instance), sorted by category name, and
/// remember how many raw instances each category had.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    pub image_id: String,
    pub role: Role,
    detections: Vec<Detection>,
    instance_counts: BTreeMap<String, u32>,
}

impl DetectionSet {
    /// Builds a canonical set from raw (possibly repeated) detections.
    pub fn new(image_id: impl Into<String>, role: Role, raw: Vec<Detection>) -> Self {
        Self::with_counts(image_id, role, raw, BTreeMap::new())
    }

    /// Like [`DetectionSet::new`], with explicit per-category instance counts
    /// that override the observed ones when larger.
    pub fn with_counts(
        image_id: impl Into<String>,
        role: Role,
        raw: Vec<Detection>,
        counts: BTreeMap<String, u32>,
    ) -> Self {
        let mut best: BTreeMap<String, Detection> = BTreeMap::new();
        let mut observed: BTreeMap<String, u32> = BTreeMap::new();
        for d in raw {
            *observed.entry(d.category.clone()).or_default() += 1;
            match best.get_mut(&d.category) {
                Some(kept) if d.beats(kept) => *kept = d,
                Some(_) => {}
                None => {
                    best.insert(d.category.clone(), d);
                }
            }
        }
        let instance_counts = observed
            .into_iter()
            .map(|(c, n)| {
                let explicit = counts.get(&c).copied().unwrap_or(0);
                (c, n.max(explicit))
            })
            .collect();
        DetectionSet {
            image_id: image_id.into(),
            role,
            detections: best.into_values().collect(),
            instance_counts,
        }
    }

    pub fn empty(image_id: impl Into<String>, role: Role) -> Self {
        Self::new(image_id, role, Vec::new())
    }

    /// Re-canonicalizes; a no-op on canonical sets.
    pub fn canonicalize(&self) -> Self {
        Self::with_counts(
            self.image_id.clone(),
            self.role,
            self.detections.clone(),
            self.instance_counts.clone(),
        )
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn get(&self, category: &str) -> Option<&Detection> {
        self.detections
            .binary_search_by(|d| d.category.as_str().cmp(category))
            .ok()
            .map(|i| &self.detections[i])
    }

    pub fn confidence(&self, category: &str) -> Option<f64> {
        self.get(category).map(|d| d.confidence)
    }

    /// Number of raw instances seen for a category before deduplication
    /// (0 if absent).
    pub fn instance_count(&self, category: &str) -> u32 {
        self.instance_counts.get(category).copied().unwrap_or(0)
    }

    pub fn instance_counts(&self) -> &BTreeMap<String, u32> {
        &self.instance_counts
    }

    /// Highest confidence in the set, `None` when empty.
    pub fn max_confidence(&self) -> Option<f64> {
        self.detections
            .iter()
            .map(|d| d.confidence)
            .max_by(f64::total_cmp)
    }

    pub(crate) fn retain_categories(&mut self, mut keep: impl FnMut(&str) -> bool) {
        self.detections.retain(|d| keep(&d.category));
        self.instance_counts.retain(|c, _| keep(c));
    }

    pub fn to_record(&self) -> DetectionRecord {
        let counts: BTreeMap<String, u32> = if self.instance_counts.values().all(|&n| n <= 1) {
            BTreeMap::new()
        } else {
            self.instance_counts.clone()
        };
        DetectionRecord {
            image_id: self.image_id.clone(),
            role: self.role,
            detections: self.detections.clone(),
            instance_counts: counts,
        }
    }
}

/// One line of `detections.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub image_id: String,
    pub role: Role,
    pub detections: Vec<Detection>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub instance_counts: BTreeMap<String, u32>,
}

impl DetectionRecord {
    pub fn into_set(self) -> DetectionSet {
        DetectionSet::with_counts(
            self.image_id,
            self.role,
            self.detections,
            self.instance_counts,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    CaptionText,
    ImageFeature,
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingKind::CaptionText => "caption_text",
            EmbeddingKind::ImageFeature => "image_feature",
        })
    }
}

/// One line of `embeddings.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRecord {
    pub image_id: String,
    pub role: Role,
    pub kind: EmbeddingKind,
    pub model_tag: String,
    pub vector: Vec<f64>,
}

impl EmbeddingRecord {
    pub fn key(&self) -> EmbeddingKey {
        EmbeddingKey::new(self.kind, &self.model_tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EmbeddingKey {
    pub kind: EmbeddingKind,
    pub model_tag: String,
}

impl EmbeddingKey {
    pub fn new(kind: EmbeddingKind, model_tag: impl Into<String>) -> Self {
        EmbeddingKey {
            kind,
            model_tag: model_tag.into(),
        }
    }

    pub fn feature(model_tag: &str) -> Self {
        Self::new(EmbeddingKind::ImageFeature, model_tag)
    }
}

impl fmt::Display for EmbeddingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kind, self.model_tag)
    }
}

/// One line of `captions.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptionRecord {
    pub image_id: String,
    pub role: Role,
    pub caption: String,
}

/// Interleaved 8-bit RGB pixels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePixels {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ImagePixels {
    pub const CHANNELS: usize = 3;

    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * Self::CHANNELS;
        if data.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height} RGB image needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(ImagePixels {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        ImagePixels::new(width, height, data).expect("buffer sized from dimensions")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> usize {
        Self::CHANNELS
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn same_dimensions(&self, other: &ImagePixels) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Everything known about one role (GT or reconstruction) of a pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoleSlot {
    pub detections: Option<DetectionSet>,
    pub embeddings: BTreeMap<EmbeddingKey, Vec<f64>>,
    pub caption: Option<String>,
    pub pixels: Option<ImagePixels>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub image_id: String,
    pub gt: RoleSlot,
    pub recon: RoleSlot,
}

impl PairRecord {
    pub fn new(image_id: impl Into<String>) -> Self {
        PairRecord {
            image_id: image_id.into(),
            gt: RoleSlot::default(),
            recon: RoleSlot::default(),
        }
    }

    pub fn slot(&self, role: Role) -> &RoleSlot {
        match role {
            Role::Gt => &self.gt,
            Role::Recon => &self.recon,
        }
    }

    pub fn slot_mut(&mut self, role: Role) -> &mut RoleSlot {
        match role {
            Role::Gt => &mut self.gt,
            Role::Recon => &mut self.recon,
        }
    }

    pub fn detections(&self) -> Option<(&DetectionSet, &DetectionSet)> {
        Some((self.gt.detections.as_ref()?, self.recon.detections.as_ref()?))
    }

    pub fn embedding(&self, key: &EmbeddingKey) -> Option<(&[f64], &[f64])> {
        Some((
            self.gt.embeddings.get(key)?.as_slice(),
            self.recon.embeddings.get(key)?.as_slice(),
        ))
    }

    pub fn captions(&self) -> Option<(&str, &str)> {
        Some((self.gt.caption.as_deref()?, self.recon.caption.as_deref()?))
    }

    pub fn pixels(&self) -> Option<(&ImagePixels, &ImagePixels)> {
        Some((self.gt.pixels.as_ref()?, self.recon.pixels.as_ref()?))
    }
}
