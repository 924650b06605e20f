//! Inter-rater agreement: two-way random-effects, average-measures ICC.

use serde::{Deserialize, Serialize};

use super::special::f_sf;
use crate::error::{Error, Result};
use crate::ratings::{RatingKind, RatingsMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccResult {
    pub icc: f64,
    pub f_statistic: f64,
    pub df1: u64,
    pub df2: u64,
    pub p_value: f64,
    pub ms_rows: f64,
    pub ms_cols: f64,
    pub ms_error: f64,
    /// Set when item variance does not exceed error variance (`MSR <= MSE`),
    /// in which case the ICC carries no agreement information.
    pub flagged: bool,
}

/// ICC(2,k) over a complete `items x raters` table.
pub fn icc_2k_table(table: &[Vec<f64>]) -> Result<IccResult> {
    let n = table.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "ICC needs at least 2 items, got {n}"
        )));
    }
    let k = table[0].len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "ICC needs at least 2 raters, got {k}"
        )));
    }
    if let Some(i) = table.iter().position(|r| r.len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "row {i} has {} raters, expected {k}",
            table[i].len()
        )));
    }
    if table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite rating".into()));
    }
    let (nf, kf) = (n as f64, k as f64);
    let grand = table.iter().flatten().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = table.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| table.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let ssr = kf * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ssc = nf * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut sse = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            sse += (v - row_means[i] - col_means[j] + grand).powi(2);
        }
    }
    let df1 = (n - 1) as u64;
    let df2 = ((n - 1) * (k - 1)) as u64;
    let msr = ssr / df1 as f64;
    let msc = ssc / (kf - 1.0);
    let mse = sse / df2 as f64;
    let denom = msr + (msc - mse) / nf;
    if denom == 0.0 {
        return Err(Error::Undefined(
            "ICC undefined: all ratings identical".into(),
        ));
    }
    let icc = (msr - mse) / denom;
    let (f_statistic, p_value) = if mse > 0.0 {
        let f = msr / mse;
        (f, f_sf(f, df1 as f64, df2 as f64))
    } else if msr > 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (0.0, 1.0)
    };
    Ok(IccResult {
        icc,
        f_statistic,
        df1,
        df2,
        p_value,
        ms_rows: msr,
        ms_cols: msc,
        ms_error: mse,
        flagged: msr <= mse || icc <= 0.0,
    })
}

/// ICC(2,k) of one rating kind. The matrix must be complete.
pub fn icc_2k(m: &RatingsMatrix, kind: RatingKind) -> Result<IccResult> {
    let values = m.values(kind)?;
    let missing = m.missing_count(kind)?;
    if missing > 0 {
        return Err(Error::InvalidArgument(format!(
            "ICC requires a complete ratings matrix; {missing} ratings missing"
        )));
    }
    let table: Vec<Vec<f64>> = (0..m.n_items())
        .map(|i| values.iter().map(|row| row[i].map_or(0.0, f64::from)).collect())
        .collect();
    icc_2k_table(&table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let r = icc_2k_table(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!((r.ms_rows, r.ms_cols, r.ms_error), (8.0, 1.5, 0.0));
        assert!((r.icc - 8.0 / 8.5).abs() < 1e-15);
        assert!((r.icc - 0.9412).abs() < 1e-4);
        assert_eq!((r.df1, r.df2), (2, 2));
        assert_eq!(r.p_value, 0.0);
        assert!(r.f_statistic.is_infinite());
    }

    #[test]
    fn identical_raters() {
        let r = icc_2k_table(&[vec![1.0, 1.0, 1.0], vec![4.0, 4.0, 4.0], vec![2.0; 3]]).unwrap();
        assert_eq!(r.icc, 1.0);
        assert!(!r.flagged);
    }

    #[test]
    fn no_item_variance_is_flagged() {
        let r = icc_2k_table(&[vec![1.0, 3.0], vec![1.0, 3.0]]).unwrap();
        assert!(r.icc <= 0.0);
        assert!(r.flagged);
        assert_eq!(r.p_value, 1.0);
        let r = icc_2k_table(&[vec![1.0, 3.0, 2.0], vec![3.0, 1.0, 2.0]]).unwrap();
        assert_eq!(r.ms_rows, 0.0);
        assert!(r.flagged);
        assert!(matches!(
            icc_2k_table(&[vec![2.0, 2.0], vec![2.0, 2.0]]),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn matrix_must_be_complete() {
        let m = RatingsMatrix::from_semantic(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![vec![Some(1), Some(2)], vec![Some(3), None]],
        )
        .unwrap();
        assert!(matches!(
            icc_2k(&m, RatingKind::Semantic),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn transposes_ratings_matrix() {
        // evaluators a, b rating items x, y, z
        let m = RatingsMatrix::from_semantic(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into(), "z".into()],
            vec![vec![Some(1), Some(3), Some(5)], vec![Some(2), Some(4), Some(5)]],
        )
        .unwrap();
        let r = icc_2k(&m, RatingKind::Semantic).unwrap();
        let t = icc_2k_table(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 5.0]]).unwrap();
        assert_eq!(r, t);
        assert!(r.p_value > 0.0 && r.p_value < 0.05);
    }
}
