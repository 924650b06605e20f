//! Command-line arguments, the optional config file, and the resolved
//! [`RunConfig`] recorded in every report.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use seed_core::meta::{AlignmentStat, CombineMode, HumanBasis};
use seed_core::{Metric, RatingKind, WeightingMode};

#[derive(Debug, Parser)]
#[command(name = "seed-eval", version, about = "Semantic reconstruction metrics and meta-evaluation")]
pub struct Cli {
    /// Worker threads for per-pair scoring and bootstrap (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score image pairs and write per-pair metric tables.
    Score(Opts),
    /// Compare per-pair scores with human ratings.
    MetaEval(Opts),
    /// Semantic near-miss and detail-miss rates.
    FailureModes(Opts),
    /// Render an alignment table or combination grid as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    None,
    Size,
    Location,
    Number,
}

impl From<Weighting> for WeightingMode {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::None => WeightingMode::None,
            Weighting::Size => WeightingMode::Size,
            Weighting::Location => WeightingMode::Location,
            Weighting::Number => WeightingMode::Number,
        }
    }
}

/// Options shared by the three computing subcommands. Every option can also
/// come from `--config`; a flag on the command line wins.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Opts {
    /// TOML or JSON file with any of these options (kebab-case keys).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// May be repeated, e.g. one file for caption embeddings, one for features.
    #[arg(long)]
    pub embeddings: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub captions: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Per-pair scores (`.jsonl` or `.csv`) from a previous `score` run.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Category vocabulary JSON (default: built-in 82 categories).
    #[arg(long)]
    pub vocab: Option<PathBuf>,

    /// Comma-separated metric names.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    #[arg(long, value_enum)]
    pub weighting: Option<Weighting>,

    #[arg(long)]
    pub snm_threshold: Option<f64>,
    #[arg(long)]
    pub sdm_f1_min: Option<f64>,
    #[arg(long)]
    pub sdm_gap_min: Option<f64>,

    #[arg(long)]
    pub bootstrap_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Confidence level of bootstrap intervals.
    #[arg(long)]
    pub level: Option<f64>,
    /// Metric pair `a,b` whose agreement difference is bootstrapped. Repeatable.
    #[arg(long)]
    pub delta: Option<Vec<String>>,
    /// Statistic for the combination grid: pairwise, tau_b or pearson.
    #[arg(long)]
    pub grid_stat: Option<String>,
    /// Z-score metrics before averaging them in the combination grid.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub combine_z: Option<bool>,
    #[arg(long)]
    pub worst_k: Option<usize>,
    /// Human score basis: normalized (per-evaluator z-scores) or raw.
    #[arg(long)]
    pub human_basis: Option<String>,
    /// Rating column compared against: semantic or perceptual.
    #[arg(long)]
    pub rating_kind: Option<String>,

    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reject unknown categories and id mismatches (`--strict false` to relax).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub strict: Option<bool>,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// `alignment.csv` (bar chart) or `grid.csv` (heatmap).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: RenderKind,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderKind {
    Bar,
    Heatmap,
}

/// Fully resolved options. Serialized verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub detections: Option<PathBuf>,
    pub embeddings: Vec<PathBuf>,
    pub captions: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub metrics: Vec<String>,
    pub grid_step: f64,
    pub weighting: WeightingMode,
    pub snm_threshold: f64,
    pub sdm_f1_min: f64,
    pub sdm_gap_min: f64,
    pub bootstrap_iters: usize,
    pub seed: u64,
    pub level: f64,
    pub deltas: Vec<(String, String)>,
    pub grid_stat: AlignmentStat,
    pub combine_mode: CombineMode,
    pub worst_k: usize,
    pub human_basis: HumanBasis,
    pub rating_kind: RatingKind,
    pub out: PathBuf,
    pub strict: bool,
}

fn read_config_file(path: &Path) -> Result<Opts> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut opts: Opts = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    // Relative paths in a config file are relative to the file itself.
    let base = path.parent().unwrap_or(Path::new(""));
    let fix = |p: &mut Option<PathBuf>| {
        if let Some(v) = p.as_mut() {
            if v.is_relative() {
                *v = base.join(&*v);
            }
        }
    };
    fix(&mut opts.detections);
    fix(&mut opts.captions);
    fix(&mut opts.manifest);
    fix(&mut opts.ratings);
    fix(&mut opts.scores);
    fix(&mut opts.vocab);
    fix(&mut opts.out);
    if let Some(es) = opts.embeddings.as_mut() {
        for e in es.iter_mut().filter(|e| e.is_relative()) {
            *e = base.join(&*e);
        }
    }
    Ok(opts)
}

macro_rules! merge {
    ($flags:ident, $file:ident; $($field:ident),*) => {
        Opts {
            config: $flags.config.clone(),
            $($field: $flags.$field.clone().or($file.$field),)*
        }
    };
}

fn check_unit(name: &str, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        bail!("--{name} must be in [0, 1], got {v}");
    }
    Ok(v)
}

impl RunConfig {
    /// Merges flags over the config file and validates the result.
    pub fn resolve(subcommand: &str, flags: &Opts) -> Result<RunConfig> {
        let file = match &flags.config {
            Some(p) => read_config_file(p)?,
            None => Opts::default(),
        };
        let o = merge!(flags, file; detections, embeddings, captions, manifest, ratings, scores,
            vocab, metrics, grid_step, weighting, snm_threshold, sdm_f1_min, sdm_gap_min,
            bootstrap_iters, seed, level, delta, grid_stat, combine_z, worst_k, human_basis,
            rating_kind, out, strict);

        let grid_step = o.grid_step.unwrap_or(0.01);
        if !(grid_step > 0.0 && grid_step <= 1.0) {
            bail!("--grid-step must be in (0, 1], got {grid_step}");
        }
        let level = o.level.unwrap_or(0.95);
        if !(level > 0.0 && level < 1.0) {
            bail!("--level must be in (0, 1), got {level}");
        }
        let bootstrap_iters = o.bootstrap_iters.unwrap_or(1000);
        if bootstrap_iters == 0 {
            bail!("--bootstrap-iters must be at least 1");
        }
        let metrics = match o.metrics {
            Some(ms) => {
                let ms: Vec<String> = ms.iter().map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect();
                if subcommand == "score" {
                    for m in &ms {
                        m.parse::<Metric>()?;
                    }
                }
                ms
            }
            None => Vec::new(),
        };
        let deltas = o
            .delta
            .unwrap_or_default()
            .iter()
            .map(|d| match d.split_once(',') {
                Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                    Ok((a.trim().to_string(), b.trim().to_string()))
                }
                _ => bail!("--delta expects `metric_a,metric_b`, got `{d}`"),
            })
            .collect::<Result<Vec<_>>>()?;
        let human_basis = match o.human_basis.as_deref().unwrap_or("normalized") {
            "normalized" | "z" => HumanBasis::Normalized,
            "raw" => HumanBasis::Raw,
            other => bail!("--human-basis must be normalized or raw, got `{other}`"),
        };
        let rating_kind = match o.rating_kind.as_deref().unwrap_or("semantic") {
            "semantic" => RatingKind::Semantic,
            "perceptual" => RatingKind::Perceptual,
            other => bail!("--rating-kind must be semantic or perceptual, got `{other}`"),
        };
        let cfg = RunConfig {
            subcommand: subcommand.to_string(),
            detections: o.detections,
            embeddings: o.embeddings.unwrap_or_default(),
            captions: o.captions,
            manifest: o.manifest,
            ratings: o.ratings,
            scores: o.scores,
            vocab: o.vocab,
            metrics,
            grid_step,
            weighting: o.weighting.unwrap_or(Weighting::None).into(),
            snm_threshold: check_unit("snm-threshold", o.snm_threshold.unwrap_or(0.3))?,
            sdm_f1_min: check_unit("sdm-f1-min", o.sdm_f1_min.unwrap_or(0.7))?,
            sdm_gap_min: check_unit("sdm-gap-min", o.sdm_gap_min.unwrap_or(0.2))?,
            bootstrap_iters,
            seed: o.seed.unwrap_or(0),
            level,
            deltas,
            grid_stat: o.grid_stat.as_deref().unwrap_or("tau_b").parse()?,
            combine_mode: if o.combine_z.unwrap_or(false) {
                CombineMode::ZScore
            } else {
                CombineMode::Raw
            },
            worst_k: o.worst_k.unwrap_or(10),
            human_basis,
            rating_kind,
            out: o.out.unwrap_or_else(|| PathBuf::from("out")),
            strict: o.strict.unwrap_or(true),
        };
        cfg.check_required()?;
        Ok(cfg)
    }

    fn check_required(&self) -> Result<()> {
        let need = |what: &str, present: bool| -> Result<()> {
            if present {
                Ok(())
            } else {
                bail!("{} requires --{what}", self.subcommand)
            }
        };
        match self.subcommand.as_str() {
            "score" => need("detections", self.detections.is_some() || !self.needs_detections()),
            "meta-eval" => {
                need("ratings", self.ratings.is_some())?;
                need("scores", self.scores.is_some())
            }
            "failure-modes" => {
                need("detections", self.detections.is_some())?;
                need("scores or --embeddings", self.scores.is_some() || !self.embeddings.is_empty())
            }
            _ => Ok(()),
        }
    }

    fn needs_detections(&self) -> bool {
        self.score_metrics()
            .map(|ms| {
                ms.iter().any(|m| {
                    matches!(
                        m,
                        Metric::ObjectRecall | Metric::ObjectPrecision | Metric::ObjectF1
                    )
                })
            })
            .unwrap_or(true)
    }

    /// Metrics to compute for `score`; the default is SEED with object
    /// recall and precision.
    pub fn score_metrics(&self) -> Result<Vec<Metric>> {
        if self.metrics.is_empty() {
            return Ok(vec![Metric::ObjectRecall, Metric::ObjectPrecision, Metric::Seed]);
        }
        Ok(self
            .metrics
            .iter()
            .map(|m| m.parse::<Metric>())
            .collect::<seed_core::Result<_>>()?)
    }
}
