//! Slow, direct reference implementations used to check the library.
#![allow(dead_code)]

use std::collections::BTreeMap;

pub type Dets = BTreeMap<String, f64>;

/// Thresholds `k / m` for `k = 0, 1, ...` while `k / m <= cutoff`, plus the
/// cutoff when it is not itself a grid value.
fn brute_thresholds(cutoff: f64, m: u64) -> Vec<f64> {
    let mut ts = Vec::new();
    let mut k = 0u64;
    while (k as f64 / m as f64) <= cutoff {
        ts.push(k as f64 / m as f64);
        k += 1;
    }
    if *ts.last().unwrap() != cutoff {
        ts.push(cutoff);
    }
    ts
}

fn overlap_at(den: &Dets, other: &Dets, t: f64) -> f64 {
    let kept: Vec<&String> = den.iter().filter(|(_, &c)| c >= t).map(|(k, _)| k).collect();
    let hits = kept
        .iter()
        .filter(|k| other.get(k.as_str()).is_some_and(|&c| c >= t))
        .count();
    hits as f64 / kept.len() as f64
}

/// Grid average by enumerating every threshold.
pub fn brute_overlap(den: &Dets, other: &Dets, m: u64) -> Option<f64> {
    let cutoff = den.values().copied().fold(f64::NEG_INFINITY, f64::max);
    if den.is_empty() {
        return None;
    }
    let ts = brute_thresholds(cutoff, m);
    Some(ts.iter().map(|&t| overlap_at(den, other, t)).sum::<f64>() / ts.len() as f64)
}

/// Number of `k >= 0` with `k / m <= b`.
fn grid_count_le(b: f64, m: u64) -> u64 {
    if b < 0.0 {
        return 0;
    }
    let mut n = (b * m as f64).floor() as i64;
    while ((n + 1) as f64 / m as f64) <= b {
        n += 1;
    }
    while n >= 0 && (n as f64 / m as f64) > b {
        n -= 1;
    }
    (n + 1) as u64
}

/// Same average in closed form: the overlap is a step function of `t` that
/// only changes at confidence values, so it is evaluated once per interval
/// and weighted by the number of grid samples the interval holds.
pub fn piecewise_overlap(den: &Dets, other: &Dets, m: u64) -> Option<f64> {
    if den.is_empty() {
        return None;
    }
    let cutoff = den.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut breaks: Vec<f64> = den.values().chain(other.values()).copied().filter(|&c| c <= cutoff).collect();
    breaks.push(cutoff);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    // Interval (prev, b] has constant overlap, equal to its value at b.
    let mut weighted = 0.0;
    let mut samples = 0u64;
    let mut prev_count = 0u64;
    for &b in &breaks {
        let count = grid_count_le(b, m);
        let n = count - prev_count;
        if n > 0 {
            weighted += n as f64 * overlap_at(den, other, b);
        }
        samples += n;
        prev_count = count;
    }
    let on_grid = (0..prev_count).any(|k| k as f64 / m as f64 == cutoff);
    if !on_grid {
        weighted += overlap_at(den, other, cutoff);
        samples += 1;
    }
    Some(weighted / samples as f64)
}

pub fn f1(r: f64, p: f64) -> f64 {
    if r > 0.0 && p > 0.0 {
        2.0 * r * p / (r + p)
    } else {
        0.0
    }
}

fn sign(a: f64, b: f64) -> i32 {
    if a < b {
        -1
    } else if a > b {
        1
    } else {
        0
    }
}

/// Kendall tau-b by enumerating all pairs.
pub fn tau_b_naive(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = sign(x[i], x[j]);
            let sy = sign(y[i], y[j]);
            if sx == 0 {
                tx += 1;
            }
            if sy == 0 {
                ty += 1;
            }
            if sx * sy > 0 {
                c += 1;
            } else if sx * sy < 0 {
                d += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    if n0 == tx || n0 == ty {
        return None;
    }
    Some((c - d) as f64 / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt())
}

/// Pairwise accuracy by enumerating all pairs; returns (doubled credit, pairs).
pub fn pairwise_naive(metric: &[f64], human: &[f64]) -> Option<(u64, u64)> {
    let n = metric.len();
    let (mut credit2, mut pairs) = (0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let sh = sign(human[i], human[j]);
            if sh == 0 {
                continue;
            }
            pairs += 1;
            let sm = sign(metric[i], metric[j]);
            credit2 += match sm * sh {
                1 => 2,
                0 => 1,
                _ => 0,
            };
        }
    }
    (pairs > 0).then_some((credit2, pairs))
}

pub struct Anova {
    pub msr: f64,
    pub msc: f64,
    pub mse: f64,
    pub icc: f64,
}

/// Two-way ANOVA by the total-sum-of-squares decomposition; `table` is
/// items x raters.
pub fn icc_anova(table: &[Vec<f64>]) -> Anova {
    let n = table.len();
    let k = table[0].len();
    let all: Vec<f64> = table.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let sst: f64 = all.iter().map(|v| (v - grand).powi(2)).sum();
    let mut ssr = 0.0;
    for row in table {
        let m = row.iter().sum::<f64>() / k as f64;
        ssr += k as f64 * (m - grand).powi(2);
    }
    let mut ssc = 0.0;
    for j in 0..k {
        let m = table.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        ssc += n as f64 * (m - grand).powi(2);
    }
    let sse = sst - ssr - ssc;
    let msr = ssr / (n - 1) as f64;
    let msc = ssc / (k - 1) as f64;
    let mse = sse / ((n - 1) * (k - 1)) as f64;
    let icc = (msr - mse) / (msr + (msc - mse) / n as f64);
    Anova { msr, msc, mse, icc }
}
