//! Deterministic input generators shared by the benchmarks.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seed_core::{
    Detection, DetectionSet, EmbeddingKey, EmbeddingKind, ImagePixels, PairRecord, RatingsMatrix,
    Role,
};

const CATS: [&str; 12] = [
    "dog", "cat", "car", "bus", "person", "chair", "bird", "boat", "clock", "sink", "horse", "train",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn detections(rng: &mut ChaCha8Rng, id: &str, role: Role, n: usize) -> DetectionSet {
    let raw = (0..n)
        .map(|_| Detection::new(CATS[rng.random_range(0..CATS.len())], rng.random::<f64>()))
        .collect();
    DetectionSet::new(id, role, raw)
}

fn vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Pairs carrying everything SEED needs.
pub fn pairs(seed: u64, n: usize) -> Vec<PairRecord> {
    let mut rng = rng(seed);
    let caption = EmbeddingKey::new(EmbeddingKind::CaptionText, "caption-embed");
    let feature = EmbeddingKey::feature("effnet");
    (0..n)
        .map(|i| {
            let id = format!("img{i:05}");
            let mut p = PairRecord::new(&id);
            p.gt.detections = Some(detections(&mut rng, &id, Role::Gt, 4));
            p.recon.detections = Some(detections(&mut rng, &id, Role::Recon, 4));
            for slot in [&mut p.gt, &mut p.recon] {
                slot.embeddings.insert(caption.clone(), vector(&mut rng, 384));
                slot.embeddings.insert(feature.clone(), vector(&mut rng, 1280));
            }
            p
        })
        .collect()
}

pub fn tied_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0..50) as f64).collect()
}

pub fn image(rng: &mut ChaCha8Rng, side: u32) -> ImagePixels {
    ImagePixels::from_fn(side, side, |_, _| [rng.random(), rng.random(), rng.random()])
}

pub fn table(rng: &mut ChaCha8Rng, items: usize, raters: usize) -> Vec<Vec<f64>> {
    (0..items)
        .map(|_| (0..raters).map(|_| rng.random_range(1..=5) as f64).collect())
        .collect()
}

/// Ratings that follow a latent score, plus a well and a poorly aligned
/// metric over the same items.
pub fn ratings(
    seed: u64,
    evaluators: usize,
    items: usize,
) -> (RatingsMatrix, BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let mut rng = rng(seed);
    let truth: Vec<f64> = (0..items).map(|_| rng.random()).collect();
    let rows = (0..evaluators)
        .map(|_| {
            truth
                .iter()
                .map(|t| Some((1.0 + 4.0 * t + rng.random_range(-0.8..0.8)).round().clamp(1.0, 5.0) as u8))
                .collect()
        })
        .collect();
    let item_ids: Vec<String> = (0..items).map(|i| format!("img{i:05}")).collect();
    let evaluator_ids = (0..evaluators).map(|e| format!("e{e:02}")).collect();
    let m = RatingsMatrix::from_semantic(evaluator_ids, item_ids.clone(), rows).expect("valid ratings");
    let good = item_ids.iter().cloned().zip(truth.iter().map(|t| t + rng.random_range(-0.1..0.1))).collect();
    let bad = item_ids.iter().cloned().zip(truth.iter().map(|t| t + rng.random_range(-0.6..0.6))).collect();
    (m, good, bad)
}
