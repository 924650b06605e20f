//! Metric names, orientation, and the per-pair [`MetricVector`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::parse_jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

/// Every metric the scorer can produce. Declaration order is the column
/// order of score tables: pixel baselines, two-way identification,
/// correlation distances, then the semantic metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    PixCorr,
    Ssim,
    AlexNet2,
    AlexNet5,
    Inception,
    Clip,
    EffNetDist,
    SwavDist,
    EffNetBar,
    SwavBar,
    ObjectRecall,
    ObjectPrecision,
    ObjectF1,
    CapSim,
    Seed,
}

impl Metric {
    pub const ALL: [Metric; 15] = [
        Metric::PixCorr,
        Metric::Ssim,
        Metric::AlexNet2,
        Metric::AlexNet5,
        Metric::Inception,
        Metric::Clip,
        Metric::EffNetDist,
        Metric::SwavDist,
        Metric::EffNetBar,
        Metric::SwavBar,
        Metric::ObjectRecall,
        Metric::ObjectPrecision,
        Metric::ObjectF1,
        Metric::CapSim,
        Metric::Seed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::PixCorr => "pixcorr",
            Metric::Ssim => "ssim",
            Metric::AlexNet2 => "alexnet2",
            Metric::AlexNet5 => "alexnet5",
            Metric::Inception => "inception",
            Metric::Clip => "clip",
            Metric::EffNetDist => "effnet_dist",
            Metric::SwavDist => "swav_dist",
            Metric::EffNetBar => "effnet_bar",
            Metric::SwavBar => "swav_bar",
            Metric::ObjectRecall => "object_recall",
            Metric::ObjectPrecision => "object_precision",
            Metric::ObjectF1 => "object_f1",
            Metric::CapSim => "cap_sim",
            Metric::Seed => "seed",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            Metric::EffNetDist | Metric::SwavDist => Orientation::LowerBetter,
            _ => Orientation::HigherBetter,
        }
    }

    /// Image-feature model tag the metric reads, if any.
    pub fn feature_tag(self) -> Option<&'static str> {
        match self {
            Metric::AlexNet2 => Some("alexnet2"),
            Metric::AlexNet5 => Some("alexnet5"),
            Metric::Inception => Some("inception"),
            Metric::Clip => Some("clip"),
            Metric::EffNetDist | Metric::EffNetBar => Some("effnet"),
            Metric::SwavDist | Metric::SwavBar => Some("swav"),
            _ => None,
        }
    }

    pub fn is_two_way(self) -> bool {
        matches!(
            self,
            Metric::AlexNet2 | Metric::AlexNet5 | Metric::Inception | Metric::Clip
        )
    }

    /// Metrics that must be computed alongside this one.
    pub fn components(self) -> &'static [Metric] {
        match self {
            Metric::Seed => &[Metric::ObjectF1, Metric::CapSim, Metric::EffNetBar],
            _ => &[],
        }
    }

    /// Expands a requested set with the components of composite metrics.
    pub fn closure(requested: impl IntoIterator<Item = Metric>) -> BTreeSet<Metric> {
        let mut out = BTreeSet::new();
        for m in requested {
            out.insert(m);
            out.extend(m.components().iter().copied());
        }
        out
    }

    /// Orientation of a metric by name; unknown names are treated as
    /// higher-is-better.
    pub fn orientation_of(name: &str) -> Orientation {
        name.parse::<Metric>()
            .map(Metric::orientation)
            .unwrap_or(Orientation::HigherBetter)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.name() == key)
            .ok_or_else(|| {
                let known: Vec<_> = Metric::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidArgument(format!("unknown metric `{s}` (known: {})", known.join(", ")))
            })
    }
}

/// Scores for one image pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricVector {
    pub image_id: String,
    pub scores: BTreeMap<String, f64>,
    pub orientation: BTreeMap<String, Orientation>,
    /// Metrics whose value is a placeholder for an undefined score (e.g.
    /// recall of a GT with no detections). Excluded from "defined" means.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub undefined: BTreeSet<String>,
}

impl MetricVector {
    pub fn new(image_id: impl Into<String>) -> Self {
        MetricVector {
            image_id: image_id.into(),
            scores: BTreeMap::new(),
            orientation: BTreeMap::new(),
            undefined: BTreeSet::new(),
        }
    }

    pub fn set(&mut self, metric: Metric, value: f64) {
        self.set_named(metric.name(), value, metric.orientation());
    }

    pub fn set_named(&mut self, name: &str, value: f64, orientation: Orientation) {
        self.scores.insert(name.to_string(), value);
        self.orientation.insert(name.to_string(), orientation);
    }

    pub fn mark_undefined(&mut self, metric: Metric) {
        self.undefined.insert(metric.name().to_string());
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.scores.get(name).copied()
    }

    pub fn is_defined(&self, name: &str) -> bool {
        self.scores.contains_key(name) && !self.undefined.contains(name)
    }

    /// Checks that SEED components are higher-is-better and that SEED only
    /// appears alongside its three components.
    pub fn validate(&self) -> Result<()> {
        for name in self.scores.keys() {
            if !self.orientation.contains_key(name) {
                return Err(Error::validation(
                    &self.image_id,
                    name,
                    "score has no orientation",
                ));
            }
        }
        if self.scores.contains_key(Metric::Seed.name()) {
            for c in Metric::Seed.components() {
                match self.orientation.get(c.name()) {
                    None => {
                        return Err(Error::validation(
                            &self.image_id,
                            "seed",
                            format!("present without component `{c}`"),
                        ))
                    }
                    Some(Orientation::LowerBetter) => {
                        return Err(Error::validation(
                            &self.image_id,
                            c.name(),
                            "SEED component must be higher-is-better",
                        ))
                    }
                    Some(Orientation::HigherBetter) => {}
                }
            }
        }
        Ok(())
    }
}

/// Formats with 6 significant digits, `.` decimal separator, no grouping,
/// trailing zeros trimmed (like C's `%.6g`).
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

/// Serializes vectors as JSONL, one object per line.
pub fn metric_vectors_to_jsonl(vectors: &[MetricVector]) -> String {
    let mut out = String::new();
    for v in vectors {
        out.push_str(&serde_json::to_string(v).expect("metric vector serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_metric_vectors_jsonl(text: &str, origin: &Path) -> Result<Vec<MetricVector>> {
    let rows = parse_jsonl::<MetricVector>(text, origin)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, v) in rows {
        if !seen.insert(v.image_id.clone()) {
            return Err(Error::validation(
                format!("{}:{line}", origin.display()),
                "image_id",
                format!("duplicate `{}`", v.image_id),
            ));
        }
        v.validate()?;
        out.push(v);
    }
    Ok(out)
}

/// Column names for a set of vectors: known metrics in table order, then
/// any other names alphabetically.
pub fn metric_columns(vectors: &[MetricVector]) -> Vec<String> {
    let names: BTreeSet<&str> = vectors
        .iter()
        .flat_map(|v| v.scores.keys().map(String::as_str))
        .collect();
    let mut known: Vec<Metric> = names.iter().filter_map(|n| n.parse().ok()).collect();
    known.sort();
    let mut cols: Vec<String> = known.iter().map(|m| m.name().to_string()).collect();
    cols.extend(
        names
            .iter()
            .filter(|n| n.parse::<Metric>().is_err())
            .map(|n| n.to_string()),
    );
    cols
}

/// Parses a score CSV (`image_id` plus one column per metric). Lines whose
/// first cell starts with `#` (summary blocks, trailers) are skipped; empty
/// cells are absent scores.
pub fn parse_metric_vectors_csv(text: &str, origin: &Path) -> Result<Vec<MetricVector>> {
    let data: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(data.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.get(0) != Some("image_id") {
        return Err(Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            message: "first column must be image_id".into(),
        });
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let mut v = MetricVector::new(&rec[0]);
        if !seen.insert(v.image_id.clone()) {
            return Err(Error::validation(
                origin.display().to_string(),
                "image_id",
                format!("duplicate `{}`", v.image_id),
            ));
        }
        for (name, cell) in headers.iter().zip(rec.iter()).skip(1) {
            if cell.is_empty() {
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| {
                Error::validation(
                    format!("{}:{}", origin.display(), v.image_id),
                    name,
                    format!("`{cell}` is not a number"),
                )
            })?;
            v.set_named(name, value, Metric::orientation_of(name));
        }
        v.validate()?;
        out.push(v);
    }
    Ok(out)
}

/// Loads scores from `.jsonl` or `.csv`, chosen by extension.
pub fn load_metric_vectors(path: &Path) -> Result<Vec<MetricVector>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => parse_metric_vectors_csv(&text, path),
        _ => parse_metric_vectors_jsonl(&text, path),
    }
}

/// Extracts one metric as an `image_id → score` map, skipping pairs where it
/// is missing.
pub fn metric_column(vectors: &[MetricVector], name: &str) -> BTreeMap<String, f64> {
    vectors
        .iter()
        .filter_map(|v| v.get(name).map(|s| (v.image_id.clone(), s)))
        .collect()
}
