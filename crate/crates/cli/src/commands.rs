use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;

use seed_core::io::{load_captions, load_detections, load_embeddings, load_image, load_manifest};
use seed_core::meta::{
    bootstrap_delta, combination_grid, compute_stat, align, higher_better_form, human_scores,
    icc_2k, worst_case_judgments, AlignmentStat, BootstrapCI, BootstrapConfig, CombinationGrid,
    IccResult, NamedScores, WorstCase,
};
use seed_core::metric::{load_metric_vectors, metric_columns, metric_vectors_to_jsonl};
use seed_core::object::ThresholdGrid;
use seed_core::ratings::load_ratings;
use seed_core::{
    failure_report, score_pairs, summarize, CategoryVocabulary, DatasetBuilder, Error,
    FailureReport, FailureThresholds, Metric, MetricSummary, MetricVector, Orientation,
    PairRecord, RatingKind, RatingsMatrix, Role, ScoreConfig, SsimParams, Strictness,
};

use crate::config::{Cli, Command, RenderArgs, RenderKind, RunConfig};
use crate::report::{self, AlignmentRow, Outputs, Provenance};
use crate::svg;

/// Runs one subcommand and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Score(o) => score(&RunConfig::resolve("score", o)?),
        Command::MetaEval(o) => meta_eval(&RunConfig::resolve("meta-eval", o)?),
        Command::FailureModes(o) => failure_modes(&RunConfig::resolve("failure-modes", o)?),
        Command::Render(r) => render(r),
    }
}

fn strictness(cfg: &RunConfig) -> Strictness {
    if cfg.strict {
        Strictness::Strict
    } else {
        Strictness::Lenient
    }
}

fn vocabulary(cfg: &RunConfig, inputs: &mut Vec<PathBuf>) -> Result<CategoryVocabulary> {
    match &cfg.vocab {
        Some(p) => {
            inputs.push(p.clone());
            Ok(CategoryVocabulary::load(p)?)
        }
        None => Ok(CategoryVocabulary::builtin()),
    }
}

/// Loads detections, embeddings and manifest images into pair records.
fn load_pairs(cfg: &RunConfig, vocab: &CategoryVocabulary, inputs: &mut Vec<PathBuf>) -> Result<Vec<PairRecord>> {
    let mut builder = DatasetBuilder::new();
    if let Some(p) = &cfg.detections {
        inputs.push(p.clone());
        builder = builder.detections(load_detections(p, vocab, strictness(cfg))?);
    }
    for p in &cfg.embeddings {
        inputs.push(p.clone());
        builder = builder.embeddings(load_embeddings(p)?);
    }
    if let Some(p) = &cfg.manifest {
        inputs.push(p.clone());
        for (id, entry) in load_manifest(p)? {
            let gt = load_image(&entry.gt_image)?;
            let recon = load_image(&entry.recon_image)?;
            builder = builder.pixels(&id, gt, recon)?;
        }
    }
    Ok(builder.build())
}

fn provenance(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<Provenance> {
    let mut seen = BTreeSet::new();
    let paths: Vec<&Path> = inputs
        .iter()
        .filter(|p| seen.insert(p.as_path()))
        .map(PathBuf::as_path)
        .collect();
    Provenance::new(cfg, &paths)
}

fn finish(outputs: Outputs, dir: &Path) -> Result<Vec<PathBuf>> {
    let written = outputs.write(dir)?;
    for p in &written {
        info!("wrote {}", p.display());
    }
    Ok(written)
}

#[derive(Serialize)]
struct ScoreSummary<'a> {
    n_pairs: usize,
    metrics: &'a [MetricSummary],
    provenance: &'a Provenance,
}

fn compute_scores(cfg: &RunConfig, pairs: &[PairRecord], metrics: Vec<Metric>) -> Result<Vec<MetricVector>> {
    let config = ScoreConfig {
        metrics: Metric::closure(metrics),
        grid: ThresholdGrid::new(cfg.grid_step)?,
        weighting: cfg.weighting,
        ssim: SsimParams::default(),
    };
    info!("scoring {} pairs", pairs.len());
    Ok(score_pairs(pairs, &config)?)
}

pub fn score(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut inputs = Vec::new();
    let vocab = vocabulary(cfg, &mut inputs)?;
    if cfg.captions.is_some() {
        warn!("--captions is only used by meta-eval; ignoring it");
    }
    let pairs = load_pairs(cfg, &vocab, &mut inputs)?;
    let vectors = compute_scores(cfg, &pairs, cfg.score_metrics()?)?;
    let summary = summarize(&vectors);
    let prov = provenance(cfg, &inputs)?;

    let mut out = Outputs::default();
    out.add("scores.csv", report::scores_csv(&vectors, &summary, &prov));
    out.add("scores.jsonl", metric_vectors_to_jsonl(&vectors));
    out.add(
        "score_summary.json",
        report::to_json(&ScoreSummary {
            n_pairs: vectors.len(),
            metrics: &summary,
            provenance: &prov,
        }),
    );
    finish(out, &cfg.out)
}

fn rebuild_ratings(m: &RatingsMatrix, keep: &BTreeSet<String>) -> Result<RatingsMatrix> {
    let rows: Vec<_> = m.to_rows().into_iter().filter(|r| keep.contains(&r.image_id)).collect();
    Ok(RatingsMatrix::from_rows(&rows, m.has_perceptual())?)
}

/// Reconciles rated and scored image ids. Any mismatch is an error in strict
/// mode; otherwise both sides are cut down to the shared ids.
fn reconcile(cfg: &RunConfig, ratings: RatingsMatrix, scores: &[MetricVector]) -> Result<RatingsMatrix> {
    let rated: BTreeSet<String> = ratings.image_ids().iter().cloned().collect();
    let scored: BTreeSet<String> = scores.iter().map(|v| v.image_id.clone()).collect();
    if rated == scored {
        return Ok(ratings);
    }
    let only_rated: Vec<&String> = rated.difference(&scored).collect();
    let only_scored: Vec<&String> = scored.difference(&rated).collect();
    let msg = format!(
        "image ids differ between ratings and scores; rated but not scored: {only_rated:?}; scored but not rated: {only_scored:?}"
    );
    if cfg.strict {
        bail!("{msg}");
    }
    warn!("{msg}; using the {} shared ids", rated.intersection(&scored).count());
    let shared: BTreeSet<String> = rated.intersection(&scored).cloned().collect();
    if shared.len() < 2 {
        bail!("fewer than 2 image ids are both rated and scored");
    }
    rebuild_ratings(&ratings, &shared)
}

/// Defined scores of one metric, in higher-is-better form.
fn oriented_scores(vectors: &[MetricVector], name: &str) -> Result<(NamedScores, Orientation)> {
    let mut scores = BTreeMap::new();
    let mut orientation = None;
    for v in vectors {
        if let (Some(s), true) = (v.get(name), v.is_defined(name)) {
            scores.insert(v.image_id.clone(), s);
            orientation.get_or_insert(v.orientation.get(name).copied().unwrap_or(Orientation::HigherBetter));
        }
    }
    let Some(orientation) = orientation else {
        bail!("metric `{name}` has no defined scores");
    };
    Ok((higher_better_form(&NamedScores::new(name, orientation, scores)), orientation))
}

fn optional_stat(stat: AlignmentStat, x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    match compute_stat(stat, x, y) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Undefined(_) | Error::ZeroVariance(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct IccEntry {
    kind: RatingKind,
    result: Option<IccResult>,
    note: Option<String>,
}

#[derive(Serialize)]
struct WorstCaseOut {
    #[serde(flatten)]
    case: WorstCase,
    #[serde(skip_serializing_if = "Option::is_none")]
    gt_caption: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recon_caption: Option<String>,
}

#[derive(Serialize)]
struct AlignmentReport<'a> {
    rating_kind: RatingKind,
    human_basis: seed_core::meta::HumanBasis,
    n_evaluators: usize,
    n_items: usize,
    alignment: &'a [AlignmentRow],
    icc: Vec<IccEntry>,
    bootstrap: Vec<BootstrapCI>,
    grid: &'a CombinationGrid,
    provenance: &'a Provenance,
}

fn find_metric<'a>(metrics: &'a [NamedScores], name: &str) -> Result<&'a NamedScores> {
    metrics
        .iter()
        .find(|m| m.name == name || m.name == format!("1-{name}"))
        .with_context(|| format!("--delta names unknown metric `{name}`"))
}

fn attach_captions(
    path: &Path,
    cases: BTreeMap<String, Vec<WorstCase>>,
) -> Result<BTreeMap<String, Vec<WorstCaseOut>>> {
    let mut captions: BTreeMap<(String, Role), String> = BTreeMap::new();
    for r in load_captions(path)? {
        captions.insert((r.image_id, r.role), r.caption);
    }
    let mut missing = BTreeSet::new();
    let mut out = BTreeMap::new();
    for (metric, list) in cases {
        let list: Vec<WorstCaseOut> = list
            .into_iter()
            .map(|case| {
                let gt = captions.get(&(case.image_id.clone(), Role::Gt)).cloned();
                let recon = captions.get(&(case.image_id.clone(), Role::Recon)).cloned();
                if gt.is_none() || recon.is_none() {
                    missing.insert(case.image_id.clone());
                }
                WorstCaseOut {
                    case,
                    gt_caption: gt,
                    recon_caption: recon,
                }
            })
            .collect();
        out.insert(metric, list);
    }
    if !missing.is_empty() {
        bail!(
            "{}: captions missing for worst-case images {:?}",
            path.display(),
            missing
        );
    }
    Ok(out)
}

pub fn meta_eval(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let ratings_path = cfg.ratings.as_ref().expect("validated");
    let scores_path = cfg.scores.as_ref().expect("validated");
    let mut inputs = vec![ratings_path.clone(), scores_path.clone()];
    let vectors = load_metric_vectors(scores_path)?;
    let ratings = reconcile(cfg, load_ratings(ratings_path)?, &vectors)?;
    let human = human_scores(&ratings, cfg.rating_kind, cfg.human_basis)?;

    let names = if cfg.metrics.is_empty() {
        metric_columns(&vectors)
    } else {
        cfg.metrics.clone()
    };
    if names.is_empty() {
        bail!("{}: no metric columns", scores_path.display());
    }
    let mut metrics = Vec::new();
    let mut rows = Vec::new();
    for name in &names {
        let (m, orientation) = oriented_scores(&vectors, name)?;
        let (_, x, y) = align(&m.scores, &human);
        rows.push(AlignmentRow {
            metric: m.name.clone(),
            orientation,
            n_items: x.len(),
            pairwise_accuracy: optional_stat(AlignmentStat::PairwiseAccuracy, &x, &y)?,
            kendall_tau_b: optional_stat(AlignmentStat::KendallTauB, &x, &y)?,
            pearson: optional_stat(AlignmentStat::Pearson, &x, &y)?,
        });
        metrics.push(m);
    }

    let mut kinds = vec![RatingKind::Semantic];
    if ratings.has_perceptual() {
        kinds.push(RatingKind::Perceptual);
    }
    let icc = kinds
        .into_iter()
        .map(|kind| match icc_2k(&ratings, kind) {
            Ok(r) => IccEntry { kind, result: Some(r), note: None },
            Err(e) => {
                warn!("ICC ({kind:?}): {e}");
                IccEntry { kind, result: None, note: Some(e.to_string()) }
            }
        })
        .collect();

    let mut bootstrap = Vec::new();
    for (a, b) in &cfg.deltas {
        let (ma, mb) = (find_metric(&metrics, a)?, find_metric(&metrics, b)?);
        for stat in AlignmentStat::ALL {
            let bc = BootstrapConfig {
                iterations: cfg.bootstrap_iters,
                level: cfg.level,
                seed: cfg.seed,
                stat,
                kind: cfg.rating_kind,
                basis: cfg.human_basis,
            };
            let name = format!("{} - {}", ma.name, mb.name);
            info!("bootstrapping {name} ({}) x{}", stat.name(), cfg.bootstrap_iters);
            bootstrap.push(
                bootstrap_delta(&ratings, &name, &ma.scores, &mb.scores, &bc)
                    .with_context(|| format!("bootstrap of {name}"))?,
            );
        }
    }

    let grid = combination_grid(&metrics, &human, cfg.grid_stat, cfg.combine_mode)?;

    let cases: BTreeMap<String, Vec<WorstCase>> = metrics
        .iter()
        .map(|m| (m.name.clone(), worst_case_judgments(&m.scores, &human, cfg.worst_k)))
        .collect();
    let worst = match &cfg.captions {
        Some(p) => {
            inputs.push(p.clone());
            attach_captions(p, cases)?
        }
        None => cases
            .into_iter()
            .map(|(k, v)| {
                let v = v
                    .into_iter()
                    .map(|case| WorstCaseOut { case, gt_caption: None, recon_caption: None })
                    .collect();
                (k, v)
            })
            .collect(),
    };

    let prov = provenance(cfg, &inputs)?;
    let bars: Vec<(String, [f64; 3])> = rows
        .iter()
        .map(|r| {
            let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
            (r.metric.clone(), [v(r.pairwise_accuracy), v(r.kendall_tau_b), v(r.pearson)])
        })
        .collect();
    let mut out = Outputs::default();
    out.add("alignment.csv", report::alignment_csv(&rows, &prov));
    out.add(
        "alignment.json",
        report::to_json(&AlignmentReport {
            rating_kind: cfg.rating_kind,
            human_basis: cfg.human_basis,
            n_evaluators: ratings.n_evaluators(),
            n_items: ratings.n_items(),
            alignment: &rows,
            icc,
            bootstrap,
            grid: &grid,
            provenance: &prov,
        }),
    );
    out.add("alignment.svg", svg::bar_chart(&bars, "Agreement with human ratings"));
    out.add("grid.csv", report::grid_csv(&grid, &prov));
    out.add(
        "grid.svg",
        svg::heatmap(&grid.names, &grid.values, &format!("Combined metrics ({})", grid.stat.name())),
    );
    out.add("worst_cases.json", report::to_json(&worst));
    finish(out, &cfg.out)
}

#[derive(Serialize)]
struct FailureOut<'a> {
    #[serde(flatten)]
    report: &'a FailureReport,
    provenance: &'a Provenance,
}

pub fn failure_modes(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut inputs = Vec::new();
    let vocab = vocabulary(cfg, &mut inputs)?;
    let pairs = load_pairs(cfg, &vocab, &mut inputs)?;
    let scores = match &cfg.scores {
        Some(p) => {
            inputs.push(p.clone());
            load_metric_vectors(p)?
        }
        None => compute_scores(cfg, &pairs, vec![Metric::ObjectF1, Metric::Seed])?,
    };
    let th = FailureThresholds {
        snm_threshold: cfg.snm_threshold,
        sdm_f1_min: cfg.sdm_f1_min,
        sdm_gap_min: cfg.sdm_gap_min,
    };
    let rep = failure_report(&pairs, &scores, &vocab, &th)?;
    let prov = provenance(cfg, &inputs)?;

    let by_id: BTreeMap<&str, &MetricVector> = scores.iter().map(|v| (v.image_id.as_str(), v)).collect();
    let mut flags = String::from("image_id,qualifying,near_miss_count,detail_miss,object_f1,seed\n");
    for (id, f) in &rep.per_pair_flags {
        let v = by_id[id.as_str()];
        let get = |m: Metric| v.get(m.name()).map(seed_core::metric::format_sig6).unwrap_or_default();
        flags.push_str(&format!(
            "{id},{},{},{},{},{}\n",
            f.qualifying,
            f.near_miss_count,
            f.detail_miss,
            get(Metric::ObjectF1),
            get(Metric::Seed)
        ));
    }
    flags.push_str(&prov.csv_trailer());

    let mut out = Outputs::default();
    out.add("failure_report.json", report::to_json(&FailureOut { report: &rep, provenance: &prov }));
    out.add("failure_flags.csv", flags);
    finish(out, &cfg.out)
}

pub fn render(args: &RenderArgs) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let title = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let svg = match args.kind {
        RenderKind::Bar => svg::bar_chart(&report::parse_alignment_csv(&text, &args.input)?, &title),
        RenderKind::Heatmap => {
            let (names, values) = report::parse_grid_csv(&text, &args.input)?;
            svg::heatmap(&names, &values, &title)
        }
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(&args.out, svg).with_context(|| format!("writing {}", args.out.display()))?;
    info!("wrote {}", args.out.display());
    Ok(vec![args.out.clone()])
}
