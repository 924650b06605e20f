#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use seed_core::io::save_image;
use seed_core::{CategoryVocabulary, ImagePixels};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn updating() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1")
}

#[derive(Debug, Clone)]
pub struct FixtureSpec {
    pub n_pairs: usize,
    pub n_evaluators: usize,
    pub seed: u64,
    pub images: bool,
}

impl FixtureSpec {
    /// The shipped fixture.
    pub fn synthetic() -> Self {
        FixtureSpec {
            n_pairs: 30,
            n_evaluators: 6,
            seed: 7,
            images: true,
        }
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Roughly normal noise with standard deviation `sd` (Irwin-Hall of 3).
fn noise(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let s: f64 = (0..3).map(|_| rng.random::<f64>()).sum();
    (s - 1.5) * 2.0 * sd
}

fn unit_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| noise(rng, 1.0)).collect()
}

fn blend(rng: &mut ChaCha8Rng, gt: &[f64], q: f64) -> Vec<f64> {
    gt.iter().map(|g| round4(q * g + (1.0 - q) * noise(rng, 1.0))).collect()
}

/// Synthetic adapter outputs for `n_pairs` image pairs. Each pair has a
/// latent quality `q` in [0, 1]; detections, embeddings, captions and human
/// ratings degrade with `1 - q`, while pixels get an unrelated fidelity.
pub fn generate(dir: &Path, spec: &FixtureSpec) {
    std::fs::create_dir_all(dir).unwrap();
    let vocab = CategoryVocabulary::builtin();
    let salient: Vec<&String> = vocab.salient().iter().collect();
    let mut by_super: BTreeMap<&str, Vec<&String>> = BTreeMap::new();
    for c in &salient {
        by_super.entry(vocab.supercategory(c).unwrap()).or_default().push(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut dets, mut embs, mut caps, mut ratings) = (String::new(), String::new(), String::new(), String::new());
    ratings.push_str("evaluator_id,image_id,semantic,perceptual\n");
    let mut manifest = serde_json::Map::new();
    if spec.images {
        std::fs::create_dir_all(dir.join("images")).unwrap();
    }
    let mut rows = Vec::new();
    for i in 0..spec.n_pairs {
        let id = format!("img{i:04}");
        let q: f64 = rng.random();

        let n_gt = rng.random_range(1..=4);
        let mut gt: Vec<(String, f64)> = Vec::new();
        while gt.len() < n_gt {
            let c = salient[rng.random_range(0..salient.len())];
            if !gt.iter().any(|(g, _)| g == c) {
                gt.push((c.clone(), round4(rng.random_range(0.3..0.95))));
            }
        }
        let mut recon: Vec<(String, f64)> = Vec::new();
        for (c, p) in &gt {
            let u: f64 = rng.random();
            let cat = if u < q {
                Some(c.clone())
            } else if u < q + (1.0 - q) / 2.0 {
                let peers = &by_super[vocab.supercategory(c).unwrap()];
                let alt = peers[rng.random_range(0..peers.len())];
                (alt != c).then(|| alt.clone())
            } else {
                None
            };
            if let Some(cat) = cat {
                if !recon.iter().any(|(r, _)| *r == cat) {
                    let conf = (p * rng.random_range(0.7..1.1)).clamp(0.05, 0.99);
                    recon.push((cat, round4(conf)));
                }
            }
        }
        if rng.random::<f64>() < (1.0 - q) * 0.5 {
            let c = salient[rng.random_range(0..salient.len())];
            if !recon.iter().any(|(r, _)| r == c) {
                recon.push((c.clone(), round4(rng.random_range(0.2..0.8))));
            }
        }
        for (role, set) in [("gt", &gt), ("recon", &recon)] {
            let list: Vec<_> = set.iter().map(|(c, p)| json!({"category": c, "confidence": p})).collect();
            let _ = writeln!(dets, "{}", json!({"image_id": id, "role": role, "detections": list}));
        }

        for (kind, tag, dim) in [
            ("caption_text", "caption-embed", 8),
            ("image_feature", "effnet", 16),
            ("image_feature", "clip", 12),
        ] {
            let g: Vec<f64> = unit_vec(&mut rng, dim).into_iter().map(round4).collect();
            let r = blend(&mut rng, &g, q);
            for (role, v) in [("gt", &g), ("recon", &r)] {
                let _ = writeln!(
                    embs,
                    "{}",
                    json!({"image_id": id, "role": role, "kind": kind, "model_tag": tag, "vector": v})
                );
            }
        }

        let describe = |set: &[(String, f64)]| -> String {
            if set.is_empty() {
                "an abstract texture".into()
            } else {
                let names: Vec<&str> = set.iter().map(|(c, _)| c.as_str()).collect();
                format!("a photo of {}", names.join(" and "))
            }
        };
        let _ = writeln!(caps, "{}", json!({"image_id": id, "role": "gt", "caption": describe(&gt)}));
        let _ = writeln!(caps, "{}", json!({"image_id": id, "role": "recon", "caption": describe(&recon)}));

        for e in 0..spec.n_evaluators {
            let rate = |x: f64| (1.0 + 4.0 * x).round().clamp(1.0, 5.0) as u8;
            let sem = rate(q + noise(&mut rng, 0.15));
            let per = rate(q + noise(&mut rng, 0.25));
            rows.push((format!("e{e:02}"), id.clone(), sem, per));
        }

        if spec.images {
            // Pixel fidelity is planted independently of semantic quality.
            let q_pix: f64 = rng.random();
            let base: Vec<[u8; 3]> = (0..16).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
            let gt_img = ImagePixels::from_fn(12, 12, |x, y| base[(y / 3 * 4 + x / 3) as usize]);
            let mixed: Vec<u8> = gt_img
                .data()
                .iter()
                .map(|&v| {
                    let r: f64 = rng.random_range(0.0..255.0);
                    (q_pix * v as f64 + (1.0 - q_pix) * r).round() as u8
                })
                .collect();
            let recon_img = ImagePixels::new(12, 12, mixed).unwrap();
            let (g, r) = (format!("images/{id}_gt.png"), format!("images/{id}_recon.png"));
            save_image(&dir.join(&g), &gt_img).unwrap();
            save_image(&dir.join(&r), &recon_img).unwrap();
            manifest.insert(id.clone(), json!({"gt_image": g, "recon_image": r}));
        }
    }
    rows.sort();
    for (e, id, s, p) in rows {
        let _ = writeln!(ratings, "{e},{id},{s},{p}");
    }
    std::fs::write(dir.join("detections.jsonl"), dets).unwrap();
    std::fs::write(dir.join("embeddings.jsonl"), embs).unwrap();
    std::fs::write(dir.join("captions.jsonl"), caps).unwrap();
    std::fs::write(dir.join("ratings.csv"), ratings).unwrap();
    if spec.images {
        let text = serde_json::to_string_pretty(&serde_json::Value::Object(manifest)).unwrap();
        std::fs::write(dir.join("manifest.json"), text + "\n").unwrap();
    }
}

pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Runs the binary in `cwd`.
pub fn seed_eval(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seed-eval"))
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

/// Runs the binary and panics with its stderr unless it succeeds.
pub fn ok(cwd: &Path, args: &[&str]) -> Output {
    let out = seed_eval(cwd, args);
    assert!(
        out.status.success(),
        "seed-eval {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Replaces the tool version so goldens survive version bumps.
pub fn mask_version(text: &str) -> String {
    let v = env!("CARGO_PKG_VERSION");
    text.replace(&format!("# seed-eval {v}\n"), "# seed-eval <VERSION>\n")
        .replace(&format!("\"version\": \"{v}\""), "\"version\": \"<VERSION>\"")
}

pub const SCORE_ARGS: &[&str] = &[
    "score",
    "--detections",
    "detections.jsonl",
    "--embeddings",
    "embeddings.jsonl",
    "--manifest",
    "manifest.json",
    "--metrics",
    "seed,object_recall,object_precision,pixcorr,ssim,clip,effnet_dist",
    "--out",
    "out",
];

pub const META_ARGS: &[&str] = &[
    "meta-eval",
    "--ratings",
    "ratings.csv",
    "--scores",
    "out/scores.jsonl",
    "--captions",
    "captions.jsonl",
    "--delta",
    "seed,pixcorr",
    "--bootstrap-iters",
    "200",
    "--seed",
    "11",
    "--worst-k",
    "3",
    "--out",
    "out",
];

pub const FAILURE_ARGS: &[&str] = &[
    "failure-modes",
    "--detections",
    "detections.jsonl",
    "--scores",
    "out/scores.jsonl",
    "--out",
    "out",
];

pub const GOLDEN_FILES: &[&str] = &[
    "scores.csv",
    "scores.jsonl",
    "score_summary.json",
    "alignment.csv",
    "alignment.json",
    "alignment.svg",
    "grid.csv",
    "grid.svg",
    "worst_cases.json",
    "failure_report.json",
    "failure_flags.csv",
];

/// Runs score, meta-eval and failure-modes on a copy of the shipped fixture
/// and returns the working directory.
pub fn golden_run() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&fixture_dir(), tmp.path());
    for args in [SCORE_ARGS, META_ARGS, FAILURE_ARGS] {
        ok(tmp.path(), args);
    }
    tmp
}

/// Golden files that differ from a fresh run (after version masking).
/// Regenerates them instead when `UPDATE_GOLDEN=1`.
pub fn compare_golden(run_dir: &Path) -> Vec<String> {
    let golden = golden_dir();
    let mut diffs = Vec::new();
    for name in GOLDEN_FILES {
        let got = mask_version(&std::fs::read_to_string(run_dir.join("out").join(name)).unwrap());
        let path = golden.join(name);
        if updating() {
            std::fs::create_dir_all(&golden).unwrap();
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(want) if want == got => {}
            Ok(_) => diffs.push(format!("{name}: differs")),
            Err(e) => diffs.push(format!("{name}: {e}")),
        }
    }
    diffs
}
