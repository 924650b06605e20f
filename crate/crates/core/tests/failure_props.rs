use proptest::prelude::*;
use seed_core::failure::snm;
use seed_core::{
    sdm_rate, snm_rate, CategoryVocabulary, Detection, DetectionSet, Metric, MetricVector,
    PairRecord, Role,
};

const CATS: [&str; 8] = ["dog", "cat", "horse", "car", "bus", "person", "man", "clock"];

fn pair(id: usize, gt: &[(usize, f64)], recon: &[(usize, f64)]) -> PairRecord {
    let id = format!("p{id:03}");
    let mk = |role, raw: &[(usize, f64)]| {
        DetectionSet::new(&id, role, raw.iter().map(|&(c, p)| Detection::new(CATS[c], p)).collect())
    };
    let mut p = PairRecord::new(&id);
    p.gt.detections = Some(mk(Role::Gt, gt));
    p.recon.detections = Some(mk(Role::Recon, recon));
    p
}

fn arb_side() -> impl Strategy<Value = Vec<(usize, f64)>> {
    proptest::collection::vec((0..CATS.len(), 0.0f64..=1.0), 0..5)
}

fn arb_dataset() -> impl Strategy<Value = Vec<PairRecord>> {
    proptest::collection::vec((arb_side(), arb_side()), 1..12).prop_map(|v| {
        v.iter().enumerate().map(|(i, (g, r))| pair(i, g, r)).collect()
    })
}

fn vectors(values: &[(f64, f64)]) -> Vec<MetricVector> {
    values
        .iter()
        .enumerate()
        .map(|(i, &(f1, s))| {
            let mut v = MetricVector::new(format!("p{i:03}"));
            v.set(Metric::ObjectF1, f1);
            v.set(Metric::Seed, s);
            v
        })
        .collect()
}

#[test]
fn all_exact_dataset_has_zero_snm() {
    let vocab = CategoryVocabulary::builtin();
    let pairs: Vec<_> = (0..5).map(|i| pair(i, &[(i % 8, 0.9)], &[(i % 8, 0.5)])).collect();
    assert_eq!(snm_rate(&pairs, &vocab, 0.3).unwrap(), 0.0);
}

proptest! {
    #[test]
    fn snm_bounded_by_relaxed_recall(pairs in arb_dataset(), t in 0.05f64..0.9) {
        let vocab = CategoryVocabulary::builtin();
        let Ok(s) = snm(&pairs, &vocab, t) else { return Ok(()) };
        prop_assert!(s.micro >= 0.0);
        prop_assert!(s.micro <= s.relaxed_recall() + 1e-15);
        prop_assert!((s.micro - (s.relaxed_recall() - s.strict_recall())).abs() < 1e-12);
    }

    #[test]
    fn snm_order_invariant(pairs in arb_dataset(), t in 0.05f64..0.9) {
        let vocab = CategoryVocabulary::builtin();
        let mut rev = pairs.clone();
        rev.reverse();
        let a = snm(&pairs, &vocab, t).ok().map(|s| (s.micro, s.macro_));
        let b = snm(&rev, &vocab, t).ok().map(|s| (s.micro, s.macro_));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sdm_monotone_in_thresholds(
        values in proptest::collection::vec((0.0f64..=1.0, -0.5f64..=1.0), 1..40),
        f1_min in 0.0f64..1.0, gap_min in 0.0f64..1.0, df in 0.0f64..0.3, dg in 0.0f64..0.3
    ) {
        let v = vectors(&values);
        let base = sdm_rate(&v, f1_min, gap_min).unwrap();
        prop_assert!(sdm_rate(&v, f1_min + df, gap_min).unwrap() <= base);
        prop_assert!(sdm_rate(&v, f1_min, gap_min + dg).unwrap() <= base);
        let mut rev = v.clone();
        rev.reverse();
        prop_assert_eq!(sdm_rate(&rev, f1_min, gap_min).unwrap(), base);
    }
}
