//! Loaders for the line-delimited JSON records, the pixel manifest and PNG
//! images. Every loader validates on the way in, reporting the file and line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use log::warn;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{
    CaptionRecord, DetectionRecord, DetectionSet, EmbeddingKey, EmbeddingRecord, ImagePixels,
    PairRecord, Role,
};
use crate::error::{Error, Result};
use crate::vocab::CategoryVocabulary;

/// What to do with detections whose category is not in the vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    /// Reject the file.
    #[default]
    Strict,
    /// Drop the detection and log a warning.
    Lenient,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses non-blank lines as JSON, returning each value with its 1-based
/// line number.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

fn at(origin: &Path, line: usize) -> String {
    format!("{}:{}", origin.display(), line)
}

pub fn load_detections(
    path: &Path,
    vocab: &CategoryVocabulary,
    strictness: Strictness,
) -> Result<Vec<DetectionSet>> {
    parse_detections(&read_text(path)?, path, vocab, strictness)
}

/// Parses and canonicalizes `detections.jsonl` content. Output is sorted by
/// `(image_id, role)`.
pub fn parse_detections(
    text: &str,
    origin: &Path,
    vocab: &CategoryVocabulary,
    strictness: Strictness,
) -> Result<Vec<DetectionSet>> {
    let mut seen: HashMap<(String, Role), usize> = HashMap::new();
    let mut sets = Vec::new();
    for (line, record) in parse_jsonl::<DetectionRecord>(text, origin)? {
        let loc = at(origin, line);
        if record.image_id.is_empty() {
            return Err(Error::validation(loc, "image_id", "must be non-empty"));
        }
        if let Some(first) = seen.insert((record.image_id.clone(), record.role), line) {
            return Err(Error::validation(
                loc,
                "image_id",
                format!(
                    "duplicate record for ({}, {}), first seen on line {first}",
                    record.image_id, record.role
                ),
            ));
        }
        for (i, d) in record.detections.iter().enumerate() {
            d.validate().map_err(|(field, msg)| {
                Error::validation(&loc, format!("detections[{i}].{field}"), msg)
            })?;
            if !vocab.contains(&d.category) && strictness == Strictness::Strict {
                return Err(Error::validation(
                    &loc,
                    format!("detections[{i}].category"),
                    format!("unknown category `{}`", d.category),
                ));
            }
        }
        for (c, &n) in &record.instance_counts {
            if n == 0 {
                return Err(Error::validation(
                    &loc,
                    format!("instance_counts.{c}"),
                    "count must be positive",
                ));
            }
        }
        let mut set = record.into_set();
        let unknown: BTreeSet<String> = set
            .detections()
            .iter()
            .filter(|d| !vocab.contains(&d.category))
            .map(|d| d.category.clone())
            .collect();
        if !unknown.is_empty() {
            warn!("{loc}: dropping detections with unknown categories {unknown:?}");
            set.retain_categories(|c| vocab.contains(c));
        }
        sets.push(set);
    }
    sets.sort_by(|a, b| (&a.image_id, a.role).cmp(&(&b.image_id, b.role)));
    Ok(sets)
}

pub fn load_embeddings(path: &Path) -> Result<Vec<EmbeddingRecord>> {
    parse_embeddings(&read_text(path)?, path)
}

/// Parses `embeddings.jsonl`, enforcing finite entries, length >= 2 and a
/// single vector length per `(kind, model_tag)`.
pub fn parse_embeddings(text: &str, origin: &Path) -> Result<Vec<EmbeddingRecord>> {
    let mut lengths: HashMap<EmbeddingKey, (usize, usize)> = HashMap::new();
    let mut seen: HashMap<(String, Role, EmbeddingKey), usize> = HashMap::new();
    let mut out = Vec::new();
    for (line, rec) in parse_jsonl::<EmbeddingRecord>(text, origin)? {
        let loc = at(origin, line);
        if rec.image_id.is_empty() {
            return Err(Error::validation(loc, "image_id", "must be non-empty"));
        }
        if rec.model_tag.is_empty() {
            return Err(Error::validation(loc, "model_tag", "must be non-empty"));
        }
        if rec.vector.len() < 2 {
            return Err(Error::validation(
                loc,
                "vector",
                format!("length {} is below the minimum of 2", rec.vector.len()),
            ));
        }
        if let Some(i) = rec.vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(loc, format!("vector[{i}]"), "not finite"));
        }
        let key = rec.key();
        let (len, first) = *lengths.entry(key.clone()).or_insert((rec.vector.len(), line));
        if len != rec.vector.len() {
            return Err(Error::validation(
                loc,
                "vector",
                format!(
                    "length {} differs from length {len} of {key} on line {first}",
                    rec.vector.len()
                ),
            ));
        }
        if let Some(first) = seen.insert((rec.image_id.clone(), rec.role, key.clone()), line) {
            return Err(Error::validation(
                loc,
                "image_id",
                format!(
                    "duplicate {key} record for ({}, {}), first seen on line {first}",
                    rec.image_id, rec.role
                ),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_captions(path: &Path) -> Result<Vec<CaptionRecord>> {
    parse_captions(&read_text(path)?, path)
}

pub fn parse_captions(text: &str, origin: &Path) -> Result<Vec<CaptionRecord>> {
    let mut seen: HashMap<(String, Role), usize> = HashMap::new();
    let mut out = Vec::new();
    for (line, rec) in parse_jsonl::<CaptionRecord>(text, origin)? {
        let loc = at(origin, line);
        if rec.caption.trim().is_empty() {
            return Err(Error::validation(loc, "caption", "must be non-empty"));
        }
        if let Some(first) = seen.insert((rec.image_id.clone(), rec.role), line) {
            return Err(Error::validation(
                loc,
                "image_id",
                format!(
                    "duplicate caption for ({}, {}), first seen on line {first}",
                    rec.image_id, rec.role
                ),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub gt_image: PathBuf,
    pub recon_image: PathBuf,
}

/// Loads `manifest.json`; relative image paths are resolved against the
/// manifest's directory.
pub fn load_manifest(path: &Path) -> Result<BTreeMap<String, ManifestEntry>> {
    let text = read_text(path)?;
    let raw: BTreeMap<String, ManifestEntry> =
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(raw
        .into_iter()
        .map(|(id, e)| {
            let entry = ManifestEntry {
                gt_image: base.join(e.gt_image),
                recon_image: base.join(e.recon_image),
            };
            (id, entry)
        })
        .collect())
}

/// Decodes an 8-bit RGB PNG. No resizing or color conversion is done.
pub fn load_image(path: &Path) -> Result<ImagePixels> {
    let img_err = |message: String| Error::Image {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| img_err(e.to_string()))?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if color != png::ColorType::Rgb {
        return Err(img_err(format!("unsupported color type {color:?}")));
    }
    if depth != png::BitDepth::Eight {
        return Err(img_err(format!("unsupported bit depth {depth:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| img_err("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| img_err(e.to_string()))?;
    buf.truncate(frame.buffer_size());
    ImagePixels::new(frame.width, frame.height, buf).map_err(|e| img_err(e.to_string()))
}

/// Writes an 8-bit RGB PNG.
pub fn save_image(path: &Path, image: &ImagePixels) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), image.width(), image.height());
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let to_err = |e: png::EncodingError| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut writer = encoder.write_header().map_err(to_err)?;
    writer.write_image_data(image.data()).map_err(to_err)?;
    writer.finish().map_err(to_err)
}

/// Assembles per-image pair records from loaded inputs. Each record keeps
/// whatever roles were supplied; completeness is checked per metric.
#[derive(Debug, Default, Clone)]
pub struct DatasetBuilder {
    pairs: BTreeMap<String, PairRecord>,
}

impl DatasetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn pair(&mut self, id: &str) -> &mut PairRecord {
        self.pairs
            .entry(id.to_string())
            .or_insert_with(|| PairRecord::new(id))
    }

    pub fn detections(mut self, sets: Vec<DetectionSet>) -> Self {
        for s in sets {
            let id = s.image_id.clone();
            let role = s.role;
            self.pair(&id).slot_mut(role).detections = Some(s);
        }
        self
    }

    pub fn embeddings(mut self, records: Vec<EmbeddingRecord>) -> Self {
        for r in records {
            let key = r.key();
            self.pair(&r.image_id)
                .slot_mut(r.role)
                .embeddings
                .insert(key, r.vector);
        }
        self
    }

    pub fn captions(mut self, records: Vec<CaptionRecord>) -> Self {
        for r in records {
            self.pair(&r.image_id).slot_mut(r.role).caption = Some(r.caption);
        }
        self
    }

    /// Attaches a GT/reconstruction pixel pair, rejecting mismatched sizes.
    pub fn pixels(mut self, image_id: &str, gt: ImagePixels, recon: ImagePixels) -> Result<Self> {
        if !gt.same_dimensions(&recon) {
            return Err(Error::DimensionMismatch(format!(
                "image `{image_id}`: GT is {}x{}, reconstruction is {}x{}",
                gt.width(),
                gt.height(),
                recon.width(),
                recon.height()
            )));
        }
        let pair = self.pair(image_id);
        pair.gt.pixels = Some(gt);
        pair.recon.pixels = Some(recon);
        Ok(self)
    }

    pub fn build(self) -> Vec<PairRecord> {
        self.pairs.into_values().collect()
    }
}
