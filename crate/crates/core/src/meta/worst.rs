//! Images where a metric's ranking disagrees most with the human ranking.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rank::{align, average_ranks, RankOrder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub image_id: String,
    pub metric_score: f64,
    pub human_score: f64,
    /// Rank 1 is the highest score; ties share their average rank.
    pub metric_rank: f64,
    pub human_rank: f64,
    pub discrepancy: f64,
}

/// Top `k` images by `|metric_rank - human_rank|`, ties broken by image id.
pub fn worst_case_judgments(
    metric: &BTreeMap<String, f64>,
    human: &BTreeMap<String, f64>,
    k: usize,
) -> Vec<WorstCase> {
    let (ids, x, y) = align(metric, human);
    let mr = average_ranks(&x, RankOrder::Descending);
    let hr = average_ranks(&y, RankOrder::Descending);
    let mut out: Vec<WorstCase> = ids
        .into_iter()
        .enumerate()
        .map(|(i, image_id)| WorstCase {
            image_id,
            metric_score: x[i],
            human_score: y[i],
            metric_rank: mr[i],
            human_rank: hr[i],
            discrepancy: (mr[i] - hr[i]).abs(),
        })
        .collect();
    out.sort_by(|a, b| {
        b.discrepancy
            .total_cmp(&a.discrepancy)
            .then_with(|| a.image_id.cmp(&b.image_id))
    });
    out.truncate(k);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(vals: &[(&str, f64)]) -> BTreeMap<String, f64> {
        vals.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn reversed_endpoints() {
        let m = map(&[("a", 0.9), ("b", 0.5), ("c", 0.1)]);
        let h = map(&[("a", 0.1), ("b", 0.5), ("c", 0.9)]);
        let w = worst_case_judgments(&m, &h, 3);
        let got: Vec<(&str, f64)> = w.iter().map(|c| (c.image_id.as_str(), c.discrepancy)).collect();
        assert_eq!(got, vec![("a", 2.0), ("c", 2.0), ("b", 0.0)]);
        assert_eq!(worst_case_judgments(&m, &h, 2).len(), 2);
    }

    #[test]
    fn agreement_and_ties() {
        let m = map(&[("a", 0.7), ("b", 0.7), ("c", 0.1)]);
        let h = map(&[("a", 3.0), ("b", 2.0), ("c", 1.0)]);
        let w = worst_case_judgments(&m, &h, 3);
        let a = w.iter().find(|c| c.image_id == "a").unwrap();
        let b = w.iter().find(|c| c.image_id == "b").unwrap();
        assert_eq!((a.metric_rank, b.metric_rank), (1.5, 1.5));
        assert!(worst_case_judgments(&h, &h, 3).iter().all(|c| c.discrepancy == 0.0));
    }
}
