mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::*;
use seed_cli::report::{parse_alignment_csv, sha256_bytes};

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn alignment_rows(dir: &Path) -> BTreeMap<String, [f64; 3]> {
    let p = dir.join("alignment.csv");
    parse_alignment_csv(&read(dir, "alignment.csv"), &p).unwrap().into_iter().collect()
}

fn without_trailer(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with("# ")).map(|l| format!("{l}\n")).collect()
}

#[test]
fn shipped_fixture_matches_generator() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), &FixtureSpec::synthetic());
    if updating() {
        let _ = std::fs::remove_dir_all(fixture_dir());
        copy_dir(tmp.path(), &fixture_dir());
        return;
    }
    for name in ["detections.jsonl", "embeddings.jsonl", "captions.jsonl", "ratings.csv", "manifest.json"] {
        assert_eq!(read(tmp.path(), name), read(&fixture_dir(), name), "{name}");
    }
    let png = |d: &Path| std::fs::read(d.join("images/img0000_recon.png")).unwrap();
    assert_eq!(png(tmp.path()), png(&fixture_dir()));
}

#[test]
fn golden_outputs() {
    let run = golden_run();
    let diffs = compare_golden(run.path());
    assert!(diffs.is_empty(), "{diffs:?}");
}

#[test]
fn large_fixture_is_deterministic_across_threads() {
    let tmp = tempfile::tempdir().unwrap();
    generate(
        tmp.path(),
        &FixtureSpec {
            n_pairs: 1000,
            n_evaluators: 4,
            seed: 1000,
            images: false,
        },
    );
    let args = |threads: &'static str, out: &'static str| {
        vec![
            "--threads", threads, "score", "--detections", "detections.jsonl", "--embeddings",
            "embeddings.jsonl", "--metrics", "seed,object_recall,object_precision,clip", "--out", out,
        ]
    };
    ok(tmp.path(), &args("1", "t1"));
    ok(tmp.path(), &args("4", "t4"));
    let one = read(&tmp.path().join("t1"), "scores.csv");
    let four = read(&tmp.path().join("t4"), "scores.csv");
    assert_eq!(without_trailer(&one), without_trailer(&four));
    assert_eq!(
        sha256_bytes(without_trailer(&one).as_bytes()),
        "4119e203e8426b66a24d31204db3fa7a3e96c10031144465d5729f697ed35c05"
    );
}

#[test]
fn seed_beats_planted_noise() {
    let run = golden_run();
    let rows = alignment_rows(&run.path().join("out"));
    let seed = rows["seed"];
    let pix = rows["pixcorr"];
    for k in 0..3 {
        assert!(seed[k] > pix[k], "stat {k}: seed {} vs pixcorr {}", seed[k], pix[k]);
    }
    assert!(seed[0] > 0.6);
    assert!(rows.contains_key("1-effnet_dist"));
}

#[test]
fn missing_captions_fail_without_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&fixture_dir(), tmp.path());
    ok(tmp.path(), SCORE_ARGS);
    std::fs::write(tmp.path().join("captions.jsonl"), "").unwrap();
    let out = seed_eval(
        tmp.path(),
        &["meta-eval", "--ratings", "ratings.csv", "--scores", "out/scores.jsonl", "--captions", "captions.jsonl", "--bootstrap-iters", "10", "--out", "meta"],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("captions missing"), "{}", stderr(&out));
    assert!(!tmp.path().join("meta").exists());
}

#[test]
fn id_mismatch_strict_and_relaxed() {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&fixture_dir(), tmp.path());
    ok(tmp.path(), SCORE_ARGS);
    let ratings = read(tmp.path(), "ratings.csv");
    let trimmed: String = ratings.lines().filter(|l| !l.contains("img0003")).map(|l| format!("{l}\n")).collect();
    std::fs::write(tmp.path().join("ratings.csv"), trimmed).unwrap();
    let base = ["meta-eval", "--ratings", "ratings.csv", "--scores", "out/scores.jsonl", "--bootstrap-iters", "10", "--out", "meta"];
    let out = seed_eval(tmp.path(), &base);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("scored but not rated: [\"img0003\"]"), "{err}");
    let mut relaxed = base.to_vec();
    relaxed.extend(["--strict", "false"]);
    ok(tmp.path(), &relaxed);
    let rows = alignment_rows(&tmp.path().join("meta"));
    let json: serde_json::Value = serde_json::from_str(&read(&tmp.path().join("meta"), "alignment.json")).unwrap();
    assert_eq!(json["n_items"], 29);
    assert!(rows.contains_key("seed"));
}

#[test]
fn metric_equal_to_human_and_its_negation() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("ratings.csv"),
        "evaluator_id,image_id,semantic\na,x1,1\nb,x1,2\na,x2,3\nb,x2,3\na,x3,5\nb,x3,4\na,x4,2\nb,x4,2\n",
    )
    .unwrap();
    std::fs::write(
        dir.join("scores.csv"),
        "image_id,pos,neg\nx1,1.5,-1.5\nx2,3,-3\nx3,4.5,-4.5\nx4,2,-2\n",
    )
    .unwrap();
    ok(
        dir,
        &["meta-eval", "--ratings", "ratings.csv", "--scores", "scores.csv", "--human-basis", "raw", "--bootstrap-iters", "10", "--delta", "pos,neg", "--out", "out"],
    );
    let rows = alignment_rows(&dir.join("out"));
    assert_eq!(rows["pos"], [1.0, 1.0, 1.0]);
    assert_eq!(rows["neg"], [0.0, -1.0, -1.0]);
    let json: serde_json::Value = serde_json::from_str(&read(&dir.join("out"), "alignment.json")).unwrap();
    let pairwise = &json["bootstrap"][0];
    assert_eq!(pairwise["stat"], "pairwise_accuracy");
    assert_eq!((pairwise["lower"].as_f64(), pairwise["upper"].as_f64()), (Some(1.0), Some(1.0)));
}

#[test]
fn render_is_deterministic_and_handles_small_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("one.csv"), "metric,a\na,0.5\n").unwrap();
    std::fs::write(dir.join("three.csv"), "metric,a,b,c\na,0.5,0.6,NaN\nb,0.6,0.2,0.1\nc,NaN,0.1,-0.3\n").unwrap();
    for name in ["one", "three"] {
        let input = format!("{name}.csv");
        for out in [format!("{name}_1.svg"), format!("{name}_2.svg")] {
            ok(dir, &["render", "--input", &input, "--kind", "heatmap", "--out", &out]);
        }
        assert_eq!(read(dir, &format!("{name}_1.svg")), read(dir, &format!("{name}_2.svg")));
    }
    let three = read(dir, "three_1.svg");
    assert_eq!(three.matches("url(#hatch)").count(), 2);
    assert_eq!(three.matches("<rect x=").count(), 9 + 1);
    assert!(read(dir, "one_1.svg").contains(">0.500<"));

    let run = golden_run();
    ok(run.path(), &["render", "--input", "out/alignment.csv", "--kind", "bar", "--out", "bar.svg"]);
    ok(run.path(), &["render", "--input", "out/grid.csv", "--kind", "heatmap", "--out", "heat.svg"]);
    assert!(read(run.path(), "bar.svg").contains("seed"));
    let bad = seed_eval(run.path(), &["render", "--input", "out/alignment.csv", "--kind", "heatmap", "--out", "x.svg"]);
    assert!(!bad.status.success());
}

#[test]
fn failure_modes_from_embeddings_match_scores_file() {
    let run = golden_run();
    let dir = run.path();
    ok(
        dir,
        &["failure-modes", "--detections", "detections.jsonl", "--embeddings", "embeddings.jsonl", "--out", "fm"],
    );
    let a: serde_json::Value = serde_json::from_str(&read(&dir.join("out"), "failure_report.json")).unwrap();
    let b: serde_json::Value = serde_json::from_str(&read(&dir.join("fm"), "failure_report.json")).unwrap();
    for key in ["snm_rate", "snm_rate_macro", "sdm_rate", "per_pair_flags"] {
        assert_eq!(a[key], b[key], "{key}");
    }
}

#[test]
fn config_file_supplies_options() {
    let tmp = tempfile::tempdir().unwrap();
    copy_dir(&fixture_dir(), &tmp.path().join("data"));
    std::fs::write(
        tmp.path().join("data/run.toml"),
        "detections = \"detections.jsonl\"\nembeddings = [\"embeddings.jsonl\"]\nmetrics = [\"seed\"]\ngrid-step = 0.05\nout = \"cfg_out\"\n",
    )
    .unwrap();
    ok(tmp.path(), &["score", "--config", "data/run.toml"]);
    let csv = read(&tmp.path().join("data/cfg_out"), "scores.csv");
    assert!(csv.contains("\"grid_step\":0.05"));
    assert!(csv.starts_with("image_id,effnet_bar,object_f1,cap_sim,seed\n"));
}

#[test]
fn usage_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["score"],
        vec!["score", "--detections", "missing.jsonl"],
        vec!["meta-eval", "--scores", "s.jsonl"],
        vec!["nope"],
    ] {
        let out = seed_eval(tmp.path(), &args);
        assert!(!out.status.success(), "{args:?}");
    }
}
