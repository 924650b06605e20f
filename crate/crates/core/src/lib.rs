//! Semantic evaluation metrics for image reconstructions and tools for
//! checking how well a metric agrees with human judgments.
//!
//! The main entry points are [`score::score_pairs`] for per-pair metrics,
//! the [`meta`] module for alignment with human ratings, and [`failure`] for
//! dataset-level failure-mode rates.

pub mod data;
pub mod error;
pub mod failure;
pub mod image;
pub mod io;
pub mod meta;
pub mod metric;
pub mod object;
pub mod ratings;
pub mod score;
pub mod vector;
pub mod vocab;

pub use data::{
    BBox, CaptionRecord, Detection, DetectionRecord, DetectionSet, EmbeddingKey, EmbeddingKind,
    EmbeddingRecord, ImagePixels, PairRecord, Role, RoleSlot,
};
pub use error::{Error, Result};
pub use failure::{failure_report, sdm_rate, snm_rate, FailureReport, FailureThresholds, PairFlags};
pub use image::{pixcorr, ssim, ssim_with, SsimParams};
pub use io::{DatasetBuilder, Strictness};
pub use metric::{Metric, MetricVector, Orientation};
pub use object::{
    f1_score, object_recall_precision, relaxed_recall, strict_recall, ObjectScore, ThresholdGrid,
    WeightingMode,
};
pub use ratings::{RatingKind, RatingsMatrix};
pub use score::{score_pairs, summarize, MetricSummary, ScoreConfig};
pub use vector::{correlation_distance, cosine_similarity, pearson, seed, two_way_identification};
pub use vocab::CategoryVocabulary;
