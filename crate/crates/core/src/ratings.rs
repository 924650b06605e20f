//! Evaluator × item Likert ratings.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingKind {
    #[default]
    Semantic,
    Perceptual,
}

/// Ratings on a 1–5 scale, `None` where an evaluator did not rate an item.
/// Evaluators and items are kept in sorted id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingsMatrix {
    evaluator_ids: Vec<String>,
    image_ids: Vec<String>,
    semantic: Vec<Vec<Option<u8>>>,
    perceptual: Option<Vec<Vec<Option<u8>>>>,
}

/// A single CSV row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingRow {
    pub evaluator_id: String,
    pub image_id: String,
    pub semantic: Option<u8>,
    pub perceptual: Option<u8>,
}

fn check_likert(v: u8, location: &str, field: &str) -> Result<u8> {
    if (1..=5).contains(&v) {
        Ok(v)
    } else {
        Err(Error::validation(
            location,
            field,
            format!("rating {v} is outside 1..=5"),
        ))
    }
}

impl RatingsMatrix {
    pub fn from_rows(rows: &[RatingRow], has_perceptual: bool) -> Result<Self> {
        let evaluators: BTreeSet<&str> = rows.iter().map(|r| r.evaluator_id.as_str()).collect();
        let images: BTreeSet<&str> = rows.iter().map(|r| r.image_id.as_str()).collect();
        let e_index: BTreeMap<&str, usize> =
            evaluators.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let i_index: BTreeMap<&str, usize> =
            images.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let mut semantic = vec![vec![None; images.len()]; evaluators.len()];
        let mut perceptual = vec![vec![None; images.len()]; evaluators.len()];
        let mut seen = BTreeSet::new();
        for r in rows {
            if !seen.insert((r.evaluator_id.as_str(), r.image_id.as_str())) {
                return Err(Error::validation(
                    "ratings",
                    "evaluator_id/image_id",
                    format!(
                        "duplicate rating for evaluator `{}` on image `{}`",
                        r.evaluator_id, r.image_id
                    ),
                ));
            }
            let (e, i) = (e_index[r.evaluator_id.as_str()], i_index[r.image_id.as_str()]);
            if let Some(v) = r.semantic {
                semantic[e][i] = Some(check_likert(v, "ratings", "semantic")?);
            }
            if let Some(v) = r.perceptual {
                perceptual[e][i] = Some(check_likert(v, "ratings", "perceptual")?);
            }
        }
        Ok(RatingsMatrix {
            evaluator_ids: evaluators.into_iter().map(String::from).collect(),
            image_ids: images.into_iter().map(String::from).collect(),
            semantic,
            perceptual: has_perceptual.then_some(perceptual),
        })
    }

    /// Builds a semantic-only matrix from `[evaluator][item]` values.
    pub fn from_semantic(
        evaluator_ids: Vec<String>,
        image_ids: Vec<String>,
        values: Vec<Vec<Option<u8>>>,
    ) -> Result<Self> {
        if values.len() != evaluator_ids.len() || values.iter().any(|r| r.len() != image_ids.len())
        {
            return Err(Error::DimensionMismatch(format!(
                "ratings matrix must be {} x {}",
                evaluator_ids.len(),
                image_ids.len()
            )));
        }
        let mut rows = Vec::new();
        for (e, row) in evaluator_ids.iter().zip(&values) {
            for (i, v) in image_ids.iter().zip(row) {
                rows.push(RatingRow {
                    evaluator_id: e.clone(),
                    image_id: i.clone(),
                    semantic: *v,
                    perceptual: None,
                });
            }
        }
        let m = Self::from_rows(&rows, false)?;
        if m.evaluator_ids.len() != evaluator_ids.len() || m.image_ids.len() != image_ids.len() {
            return Err(Error::InvalidArgument("duplicate evaluator or image id".into()));
        }
        Ok(m)
    }

    pub fn evaluator_ids(&self) -> &[String] {
        &self.evaluator_ids
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn n_evaluators(&self) -> usize {
        self.evaluator_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.image_ids.len()
    }

    pub fn has_perceptual(&self) -> bool {
        self.perceptual.is_some()
    }

    /// Ratings of one kind indexed `[evaluator][item]`.
    pub fn values(&self, kind: RatingKind) -> Result<&[Vec<Option<u8>>]> {
        match kind {
            RatingKind::Semantic => Ok(&self.semantic),
            RatingKind::Perceptual => self
                .perceptual
                .as_deref()
                .ok_or_else(|| Error::MissingInput("ratings have no perceptual column".into())),
        }
    }

    pub fn get(&self, kind: RatingKind, evaluator: usize, item: usize) -> Option<u8> {
        self.values(kind).ok()?[evaluator][item]
    }

    pub fn missing_count(&self, kind: RatingKind) -> Result<usize> {
        Ok(self
            .values(kind)?
            .iter()
            .flatten()
            .filter(|v| v.is_none())
            .count())
    }

    pub fn is_complete(&self, kind: RatingKind) -> bool {
        self.missing_count(kind).map(|n| n == 0).unwrap_or(false)
    }

    /// Matrix whose evaluators are the given indices (repeats allowed, as in
    /// a bootstrap resample). Resampled evaluators get positional ids.
    pub fn select_evaluators(&self, indices: &[usize]) -> RatingsMatrix {
        let pick = |m: &Vec<Vec<Option<u8>>>| indices.iter().map(|&e| m[e].clone()).collect();
        RatingsMatrix {
            evaluator_ids: indices
                .iter()
                .enumerate()
                .map(|(k, &e)| format!("{}#{k}", self.evaluator_ids[e]))
                .collect(),
            image_ids: self.image_ids.clone(),
            semantic: pick(&self.semantic),
            perceptual: self.perceptual.as_ref().map(pick),
        }
    }

    pub fn to_rows(&self) -> Vec<RatingRow> {
        let mut rows = Vec::new();
        for (e, eid) in self.evaluator_ids.iter().enumerate() {
            for (i, iid) in self.image_ids.iter().enumerate() {
                let semantic = self.semantic[e][i];
                let perceptual = self.perceptual.as_ref().and_then(|p| p[e][i]);
                if semantic.is_none() && perceptual.is_none() {
                    continue;
                }
                rows.push(RatingRow {
                    evaluator_id: eid.clone(),
                    image_id: iid.clone(),
                    semantic,
                    perceptual,
                });
            }
        }
        rows
    }

    /// Canonical CSV: sorted rows, header included, missing values empty.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("evaluator_id,image_id,semantic");
        if self.perceptual.is_some() {
            out.push_str(",perceptual");
        }
        out.push('\n');
        let fmt = |v: Option<u8>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for r in self.to_rows() {
            let mut rec = vec![r.evaluator_id, r.image_id, fmt(r.semantic)];
            if self.perceptual.is_some() {
                rec.push(fmt(r.perceptual));
            }
            w.write_record(&rec).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        out
    }
}

pub fn load_ratings(path: &Path) -> Result<RatingsMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ratings(&text, path)
}

/// Parses `ratings.csv` with columns `evaluator_id, image_id, semantic` and an
/// optional `perceptual`. Empty cells are missing ratings.
pub fn parse_ratings(text: &str, origin: &Path) -> Result<RatingsMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ce), Some(ci), Some(cs)) = (col("evaluator_id"), col("image_id"), col("semantic"))
    else {
        return Err(parse_err(
            1,
            "header must contain evaluator_id, image_id, semantic".into(),
        ));
    };
    let cp = col("perceptual");
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let loc = format!("{}:{line}", origin.display());
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let rating = |c: usize, field: &str| -> Result<Option<u8>> {
            let s = cell(c);
            if s.is_empty() {
                return Ok(None);
            }
            let v: i64 = s.parse().map_err(|_| {
                Error::validation(&loc, field, format!("`{s}` is not an integer rating"))
            })?;
            if !(1..=5).contains(&v) {
                return Err(Error::validation(
                    &loc,
                    field,
                    format!("rating {v} is outside 1..=5"),
                ));
            }
            Ok(Some(v as u8))
        };
        let evaluator_id = cell(ce).to_string();
        let image_id = cell(ci).to_string();
        if evaluator_id.is_empty() || image_id.is_empty() {
            return Err(Error::validation(
                &loc,
                "evaluator_id/image_id",
                "must be non-empty",
            ));
        }
        rows.push(RatingRow {
            evaluator_id,
            image_id,
            semantic: rating(cs, "semantic")?,
            perceptual: match cp {
                Some(c) => rating(c, "perceptual")?,
                None => None,
            },
        });
    }
    RatingsMatrix::from_rows(&rows, cp.is_some()).map_err(|e| match e {
        Error::Validation { field, message, .. } => Error::Validation {
            location: origin.display().to_string(),
            field,
            message,
        },
        other => other,
    })
}
