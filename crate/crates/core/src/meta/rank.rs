//! Rank agreement between a metric and human scores: Kendall's tau-b and
//! pairwise accuracy, both from the same O(n log n) pair counts.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::pearson;

/// Pair classification counts over all `n (n - 1) / 2` unordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairCounts {
    pub n_pairs: u64,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in x (including those also tied in y).
    pub ties_x: u64,
    /// Pairs tied in y (including those also tied in x).
    pub ties_y: u64,
    /// Pairs tied in both.
    pub ties_xy: u64,
}

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 items".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN in rank statistic input".into()));
    }
    Ok(())
}

fn tie_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort that returns the number of strict inversions.
fn sort_counting_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_inversions(&mut v[..mid], &mut buf[..mid])
        + sort_counting_inversions(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Concordant/discordant/tie counts in O(n log n) (Knight's method).
pub fn pair_counts(x: &[f64], y: &[f64]) -> Result<PairCounts> {
    check(x, y)?;
    // + 0.0 folds -0.0 into 0.0 so total_cmp agrees with ==.
    let mut pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a + 0.0, b + 0.0)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = pts.len() as u64;
    let n_pairs = n * (n - 1) / 2;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ties_x = tie_pairs(&xs);
    let ties_xy = tie_pairs(&pts);
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; ys.len()];
    let discordant = sort_counting_inversions(&mut ys, &mut buf);
    let ties_y = tie_pairs(&ys);
    let concordant = n_pairs - ties_x - ties_y + ties_xy - discordant;
    Ok(PairCounts {
        n_pairs,
        concordant,
        discordant,
        ties_x,
        ties_y,
        ties_xy,
    })
}

/// Kendall's tau-b.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    let c = pair_counts(x, y)?;
    let untied_x = c.n_pairs - c.ties_x;
    let untied_y = c.n_pairs - c.ties_y;
    if untied_x == 0 || untied_y == 0 {
        return Err(Error::Undefined("undefined tau-b: all values tied".into()));
    }
    let s = c.concordant as f64 - c.discordant as f64;
    Ok(s / ((untied_x as f64) * (untied_y as f64)).sqrt())
}

/// Fraction of human-ordered pairs the metric orders the same way. Pairs
/// tied in the human score are skipped; pairs tied only in the metric earn
/// half credit.
pub fn pairwise_accuracy_slices(metric: &[f64], human: &[f64]) -> Result<f64> {
    let c = pair_counts(metric, human)?;
    let orderable = c.n_pairs - c.ties_y;
    if orderable == 0 {
        return Err(Error::Undefined(
            "no orderable pairs: all human scores tied".into(),
        ));
    }
    let metric_only_ties = c.ties_x - c.ties_xy;
    let doubled = 2 * c.concordant + metric_only_ties;
    Ok(doubled as f64 * 0.5 / orderable as f64)
}

/// Values of both maps on their common keys, in key order.
pub fn align(
    metric: &BTreeMap<String, f64>,
    human: &BTreeMap<String, f64>,
) -> (Vec<String>, Vec<f64>, Vec<f64>) {
    let mut ids = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (id, &m) in metric {
        if let Some(&h) = human.get(id) {
            ids.push(id.clone());
            xs.push(m);
            ys.push(h);
        }
    }
    (ids, xs, ys)
}

pub fn pairwise_accuracy(
    metric: &BTreeMap<String, f64>,
    human: &BTreeMap<String, f64>,
) -> Result<f64> {
    let (_, x, y) = align(metric, human);
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "pairwise accuracy needs at least 2 common image ids".into(),
        ));
    }
    pairwise_accuracy_slices(&x, &y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentStat {
    PairwiseAccuracy,
    KendallTauB,
    Pearson,
}

impl AlignmentStat {
    pub const ALL: [AlignmentStat; 3] = [
        AlignmentStat::PairwiseAccuracy,
        AlignmentStat::KendallTauB,
        AlignmentStat::Pearson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlignmentStat::PairwiseAccuracy => "pairwise_accuracy",
            AlignmentStat::KendallTauB => "kendall_tau_b",
            AlignmentStat::Pearson => "pearson",
        }
    }
}

impl std::str::FromStr for AlignmentStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "pairwise" | "pairwise_accuracy" => Ok(AlignmentStat::PairwiseAccuracy),
            "tau_b" | "kendall" | "kendall_tau_b" => Ok(AlignmentStat::KendallTauB),
            "pearson" => Ok(AlignmentStat::Pearson),
            _ => Err(Error::InvalidArgument(format!(
                "unknown statistic `{s}` (pairwise, tau_b, pearson)"
            ))),
        }
    }
}

/// One statistic of metric-vs-human agreement on aligned slices.
pub fn compute_stat(stat: AlignmentStat, metric: &[f64], human: &[f64]) -> Result<f64> {
    match stat {
        AlignmentStat::PairwiseAccuracy => pairwise_accuracy_slices(metric, human),
        AlignmentStat::KendallTauB => kendall_tau_b(metric, human),
        AlignmentStat::Pearson => pearson(metric, human),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub pairwise_accuracy: f64,
    pub kendall_tau_b: f64,
    pub pearson: f64,
    pub n_items: usize,
}

impl AlignmentResult {
    pub fn get(&self, stat: AlignmentStat) -> f64 {
        match stat {
            AlignmentStat::PairwiseAccuracy => self.pairwise_accuracy,
            AlignmentStat::KendallTauB => self.kendall_tau_b,
            AlignmentStat::Pearson => self.pearson,
        }
    }
}

/// All three agreement statistics on the common image ids.
pub fn alignment(
    metric: &BTreeMap<String, f64>,
    human: &BTreeMap<String, f64>,
) -> Result<AlignmentResult> {
    let (_, x, y) = align(metric, human);
    Ok(AlignmentResult {
        pairwise_accuracy: pairwise_accuracy_slices(&x, &y)?,
        kendall_tau_b: kendall_tau_b(&x, &y)?,
        pearson: pearson(&x, &y)?,
        n_items: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankOrder {
    /// Rank 1 is the largest value.
    Descending,
    Ascending,
}

/// 1-based ranks with ties sharing the average of their positions.
pub fn average_ranks(values: &[f64], order: RankOrder) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let cmp = |a: &usize, b: &usize| -> Ordering {
        let o = (values[*a] + 0.0).total_cmp(&(values[*b] + 0.0));
        match order {
            RankOrder::Ascending => o,
            RankOrder::Descending => o.reverse(),
        }
    };
    idx.sort_by(cmp);
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && cmp(&idx[start], &idx[end]) == Ordering::Equal {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}
