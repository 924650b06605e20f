//! Similarity scores between embedding vectors: cosine (Cap-Sim), Pearson
//! correlation (EffNet-bar, SwAV-bar), correlation distance, two-way
//! identification, and the SEED average.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "vector lengths differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    if u.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "vectors need at least 2 entries, got {}",
            u.len()
        )));
    }
    Ok(())
}

// sqrt(a * b) rather than sqrt(a) * sqrt(b) keeps x / norm(x, x) exactly 1.
fn normalized(dot: f64, a: f64, b: f64) -> f64 {
    let prod = a * b;
    let denom = if prod.is_finite() && prod > 0.0 {
        prod.sqrt()
    } else {
        a.sqrt() * b.sqrt()
    };
    (dot / denom).clamp(-1.0, 1.0)
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    check_lengths(u, v)?;
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::UndefinedCosine("zero-norm vector".into()));
    }
    Ok(normalized(dot, uu, vv))
}

/// Centered copy and sum of squared deviations.
fn center(v: &[f64]) -> (Vec<f64>, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let c: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let ss = c.iter().map(|x| x * x).sum();
    (c, ss)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample Pearson correlation.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    check_lengths(u, v)?;
    let (cu, su) = center(u);
    let (cv, sv) = center(v);
    if su == 0.0 || sv == 0.0 {
        return Err(Error::ZeroVariance("constant vector".into()));
    }
    Ok(normalized(dot(&cu, &cv), su, sv))
}

/// `1 - pearson(u, v)`, the lower-is-better form.
pub fn correlation_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    Ok(1.0 - pearson(u, v)?)
}

/// Mean of Object F1, Cap-Sim and EffNet-bar. The terms are summed in
/// ascending order so the result does not depend on argument order.
pub fn seed(object_f1: f64, cap_sim: f64, effnet_bar: f64) -> f64 {
    let mut terms = [object_f1, cap_sim, effnet_bar];
    terms.sort_by(f64::total_cmp);
    (terms[0] + terms[1] + terms[2]) / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoWayResult {
    /// Mean over all ordered comparisons.
    pub accuracy: f64,
    /// For each GT index, the fraction of other reconstructions its own
    /// reconstruction beats.
    pub per_image: Vec<f64>,
}

/// Two-way identification: for each GT embedding, the correlation with its
/// own reconstruction is compared against the correlation with every other
/// reconstruction. Wins count 1, ties 0.5.
pub fn two_way_identification(gt: &[Vec<f64>], recon: &[Vec<f64>]) -> Result<TwoWayResult> {
    if gt.len() != recon.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} GT embeddings vs {} reconstructions",
            gt.len(),
            recon.len()
        )));
    }
    let n = gt.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "no comparison pool: two-way identification needs at least 2 pairs".into(),
        ));
    }
    let prep = |vs: &[Vec<f64>]| -> Result<Vec<(Vec<f64>, f64)>> {
        vs.iter()
            .map(|v| {
                check_lengths(v, &gt[0])?;
                let (c, ss) = center(v);
                if ss == 0.0 {
                    return Err(Error::ZeroVariance("constant embedding".into()));
                }
                Ok((c, ss))
            })
            .collect()
    };
    let g = prep(gt)?;
    let r = prep(recon)?;
    let per_image: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let corr = |j: usize| normalized(dot(&g[i].0, &r[j].0), g[i].1, r[j].1);
            let own = corr(i);
            let mut wins = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                let other = corr(j);
                if own > other {
                    wins += 1.0;
                } else if own == other {
                    wins += 0.5;
                }
            }
            wins / (n - 1) as f64
        })
        .collect();
    let accuracy = per_image.iter().sum::<f64>() / n as f64;
    Ok(TwoWayResult {
        accuracy,
        per_image,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[0.3, -2.0, 5.0], &[0.3, -2.0, 5.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[1.0, 2.0], &[2.0, 1.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::UndefinedCosine(_))
        ));
        assert!(matches!(
            cosine_similarity(&[1.0, 0.0], &[1.0, 0.0, 1.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn pearson_examples() {
        let u = [0.2, 1.7, -3.0, 4.4];
        assert_eq!(pearson(&u, &u).unwrap(), 1.0);
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert_eq!(pearson(&u, &neg).unwrap(), -1.0);
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.981_980_506_061_965_7).abs() < 1e-12, "{r}");
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn correlation_distance_examples() {
        let u = [0.2, 1.7, -3.0];
        assert_eq!(correlation_distance(&u, &u).unwrap(), 0.0);
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert_eq!(correlation_distance(&u, &neg).unwrap(), 2.0);
        let d = correlation_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((d - 0.018_019_493_938_034_3).abs() < 1e-12);
    }

    #[test]
    fn seed_examples() {
        assert_eq!(seed(1.0, 1.0, 1.0), 1.0);
        assert_eq!(seed(0.0, 0.0, 0.0), 0.0);
        assert!((seed(0.7619, 0.5, 0.3) - 0.520_633_333_333_333_3).abs() < 1e-12);
        assert_eq!(seed(0.1, 0.7, -0.3), seed(-0.3, 0.1, 0.7));
    }

    #[test]
    fn two_way_examples() {
        let gts = vec![
            vec![1.0, 2.0, 3.0, 0.0],
            vec![3.0, 1.0, 0.0, 2.0],
            vec![0.0, 5.0, 1.0, 1.0],
        ];
        let r = two_way_identification(&gts, &gts).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.per_image, vec![1.0, 1.0, 1.0]);

        let two = vec![vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0]];
        let swapped = vec![two[1].clone(), two[0].clone()];
        assert_eq!(two_way_identification(&two, &swapped).unwrap().accuracy, 0.0);

        let same = vec![vec![0.5, 1.0, 0.0]; 3];
        let r = two_way_identification(&gts[..3].iter().map(|v| v[..3].to_vec()).collect::<Vec<_>>(), &same)
            .unwrap();
        assert_eq!(r.per_image, vec![0.5, 0.5, 0.5]);

        assert!(two_way_identification(&gts[..1], &gts[..1]).is_err());
    }
}
