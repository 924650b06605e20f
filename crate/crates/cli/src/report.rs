//! Report tables, provenance, and all-or-nothing output writing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use seed_core::meta::CombinationGrid;
use seed_core::metric::{format_sig6, metric_columns};
use seed_core::{MetricSummary, MetricVector, Orientation};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool version, resolved options and input digests, attached to every report.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    /// Input path (as given) to its SHA-256.
    pub inputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Provenance {
    pub fn new(config: &RunConfig, inputs: &[&Path]) -> Result<Self> {
        let mut digests = BTreeMap::new();
        for p in inputs {
            digests.insert(p.display().to_string(), sha256_file(p)?);
        }
        Ok(Provenance {
            tool: "seed-eval",
            version: VERSION,
            config: config.clone(),
            inputs: digests,
        })
    }

    /// `#`-prefixed trailer lines for CSV reports.
    pub fn csv_trailer(&self) -> String {
        let mut s = format!("# {} {}\n", self.tool, self.version);
        let cfg = serde_json::to_string(&self.config).expect("config serializes");
        let _ = writeln!(s, "# config {cfg}");
        for (path, digest) in &self.inputs {
            let _ = writeln!(s, "# sha256 {digest} {path}");
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_sig6(x: Option<f64>) -> String {
    x.map(format_sig6).unwrap_or_default()
}

/// Per-pair score table with `#mean`, `#mean_defined` and `#n_defined`
/// summary rows. Undefined scores keep their placeholder value here; the
/// JSONL output records which ones they are.
pub fn scores_csv(vectors: &[MetricVector], summary: &[MetricSummary], prov: &Provenance) -> String {
    let cols = metric_columns(vectors);
    let mut s = String::from("image_id");
    for c in &cols {
        s.push(',');
        s.push_str(&csv_field(c));
    }
    s.push('\n');
    for v in vectors {
        s.push_str(&csv_field(&v.image_id));
        for c in &cols {
            s.push(',');
            s.push_str(&opt_sig6(v.get(c)));
        }
        s.push('\n');
    }
    let by_name: BTreeMap<&str, &MetricSummary> =
        summary.iter().map(|m| (m.metric.as_str(), m)).collect();
    let row = |label: &str, f: &dyn Fn(&MetricSummary) -> String| {
        let mut r = label.to_string();
        for c in &cols {
            r.push(',');
            if let Some(m) = by_name.get(c.as_str()) {
                r.push_str(&f(m));
            }
        }
        r.push('\n');
        r
    };
    s.push_str(&row("#mean", &|m| format_sig6(m.mean)));
    s.push_str(&row("#mean_defined", &|m| opt_sig6(m.mean_defined)));
    s.push_str(&row("#n_defined", &|m| m.n_defined.to_string()));
    s.push_str(&prov.csv_trailer());
    s
}

/// One row of the alignment table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentRow {
    /// Name as compared: lower-is-better metrics appear as `1-{name}`.
    pub metric: String,
    pub orientation: Orientation,
    pub n_items: usize,
    pub pairwise_accuracy: Option<f64>,
    pub kendall_tau_b: Option<f64>,
    pub pearson: Option<f64>,
}

pub const ALIGNMENT_HEADER: &str = "metric,orientation,n_items,pairwise_accuracy,kendall_tau_b,pearson";

pub fn alignment_csv(rows: &[AlignmentRow], prov: &Provenance) -> String {
    let mut s = format!("{ALIGNMENT_HEADER}\n");
    for r in rows {
        let orientation = match r.orientation {
            Orientation::HigherBetter => "higher_better",
            Orientation::LowerBetter => "lower_better",
        };
        let _ = writeln!(
            s,
            "{},{orientation},{},{},{},{}",
            csv_field(&r.metric),
            r.n_items,
            nan_sig6(r.pairwise_accuracy),
            nan_sig6(r.kendall_tau_b),
            nan_sig6(r.pearson)
        );
    }
    s.push_str(&prov.csv_trailer());
    s
}

fn nan_sig6(x: Option<f64>) -> String {
    format_sig6(x.unwrap_or(f64::NAN))
}

pub fn grid_csv(grid: &CombinationGrid, prov: &Provenance) -> String {
    let mut s = String::from("metric");
    for n in &grid.names {
        s.push(',');
        s.push_str(&csv_field(n));
    }
    s.push('\n');
    for (name, row) in grid.names.iter().zip(&grid.values) {
        s.push_str(&csv_field(name));
        for v in row {
            s.push(',');
            s.push_str(&format_sig6(*v));
        }
        s.push('\n');
    }
    s.push_str(&prov.csv_trailer());
    s
}

fn data_lines(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn parse_cell(cell: &str, path: &Path) -> Result<f64> {
    match cell {
        "NaN" | "" => Ok(f64::NAN),
        c => c
            .parse()
            .with_context(|| format!("{}: `{c}` is not a number", path.display())),
    }
}

/// Reads `metric` plus the three statistic columns of an alignment table.
pub fn parse_alignment_csv(text: &str, path: &Path) -> Result<Vec<(String, [f64; 3])>> {
    let data = data_lines(text);
    let mut rdr = csv::Reader::from_reader(data.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: no `{name}` column", path.display()))
    };
    let idx = [col("metric")?, col("pairwise_accuracy")?, col("kendall_tau_b")?, col("pearson")?];
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        let v = [
            parse_cell(&rec[idx[1]], path)?,
            parse_cell(&rec[idx[2]], path)?,
            parse_cell(&rec[idx[3]], path)?,
        ];
        out.push((rec[idx[0]].to_string(), v));
    }
    Ok(out)
}

/// Reads a square combination grid table.
pub fn parse_grid_csv(text: &str, path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let data = data_lines(text);
    let mut rdr = csv::Reader::from_reader(data.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("metric") {
        bail!("{}: first column must be `metric`", path.display());
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        if rec.get(0) != names.get(i).map(String::as_str) {
            bail!("{}: row {} does not match column order", path.display(), i + 1);
        }
        values.push(
            rec.iter()
                .skip(1)
                .map(|c| parse_cell(c, path))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    if values.len() != names.len() {
        bail!("{}: grid is not square", path.display());
    }
    Ok((names, values))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Reports collected in memory and written together, so a failing run never
/// leaves a partial set of outputs behind.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, content: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), content.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write(self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Err(e) = std::fs::write(&path, bytes) {
                for w in &written {
                    let _ = std::fs::remove_file(w);
                }
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            written.push(path);
        }
        Ok(written)
    }
}
