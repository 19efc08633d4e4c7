//! Distance correlation and marginal feature screening.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Largest sample size accepted by [`screen_features`]; the distance
/// correlation is quadratic in `n`.
pub const SCREEN_MAX_N: usize = 20_000;

/// Row means and grand mean of the pairwise distance matrix `|u_i - u_j|`.
fn distance_means(u: &[f64]) -> (Vec<f64>, f64) {
    let n = u.len() as f64;
    let rows: Vec<f64> = u
        .par_iter()
        .map(|&a| u.iter().map(|&b| (a - b).abs()).sum::<f64>() / n)
        .collect();
    let grand = rows.iter().sum::<f64>() / n;
    (rows, grand)
}

/// Sample distance correlation (biased V-statistic form) of two equally long
/// samples. Returns 0 when either sample has zero distance variance.
pub fn distance_correlation(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Usage(format!(
            "distance correlation needs equal lengths, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    if u.len() < 2 {
        return Err(Error::Usage(
            "distance correlation needs at least 2 points".into(),
        ));
    }
    if u.iter().chain(v).any(|x| !x.is_finite()) {
        return Err(Error::Usage(
            "distance correlation inputs must be finite".into(),
        ));
    }
    let (ru, gu) = distance_means(u);
    let (rv, gv) = distance_means(v);

    // Double-centered entries are formed on the fly, one row per task.
    let sums: Vec<(f64, f64, f64)> = (0..u.len())
        .into_par_iter()
        .map(|i| {
            let mut ab = 0.0;
            let mut aa = 0.0;
            let mut bb = 0.0;
            for j in 0..u.len() {
                let a = (u[i] - u[j]).abs() - ru[i] - ru[j] + gu;
                let b = (v[i] - v[j]).abs() - rv[i] - rv[j] + gv;
                ab += a * b;
                aa += a * a;
                bb += b * b;
            }
            (ab, aa, bb)
        })
        .collect();
    let (ab, aa, bb) = sums.iter().fold((0.0, 0.0, 0.0), |acc, s| {
        (acc.0 + s.0, acc.1 + s.1, acc.2 + s.2)
    });

    let denom = (aa * bb).sqrt();
    if denom <= 0.0 || !denom.is_finite() {
        return Ok(0.0);
    }
    Ok((ab.max(0.0) / denom).sqrt().min(1.0))
}

/// How features are retained after ranking by distance correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RetentionRule {
    /// Keep the `k` features with the largest distance correlation.
    TopK(usize),
    /// Keep features whose distance correlation is at least the threshold.
    Threshold(f64),
}

impl std::fmt::Display for RetentionRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RetentionRule::TopK(k) => write!(f, "top-{k}"),
            RetentionRule::Threshold(t) => write!(f, "dcor>={t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenResult {
    /// Distance correlation of each feature with the response.
    pub dcor: Vec<f64>,
    /// Retained feature indices (0-based), ascending.
    pub kept: Vec<usize>,
    pub rule: RetentionRule,
}

impl ScreenResult {
    /// Feature indices sorted by decreasing distance correlation; ties keep
    /// the lower index first.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.dcor.len()).collect();
        idx.sort_by(|&a, &b| self.dcor[b].total_cmp(&self.dcor[a]));
        idx
    }
}

/// Ranks every covariate by its distance correlation with the response and
/// applies the retention rule.
pub fn screen_features(data: &Dataset, rule: RetentionRule) -> Result<ScreenResult> {
    match rule {
        RetentionRule::TopK(k) if k == 0 || k > data.d() => {
            return Err(Error::Usage(format!(
                "top-k screening needs 1 <= k <= d = {}, got {k}",
                data.d()
            )))
        }
        RetentionRule::Threshold(t) if !(0.0..=1.0).contains(&t) => {
            return Err(Error::Usage(format!(
                "screening threshold must lie in [0, 1], got {t}"
            )))
        }
        _ => {}
    }
    if data.n() > SCREEN_MAX_N {
        return Err(Error::Guard(format!(
            "screening is limited to n <= {SCREEN_MAX_N}, got {}",
            data.n()
        )));
    }
    let y = data.response();
    let dcor = (0..data.d())
        .map(|j| distance_correlation(&data.column(j), y))
        .collect::<Result<Vec<_>>>()?;
    let result = ScreenResult {
        dcor,
        kept: Vec::new(),
        rule,
    };
    let mut kept = match rule {
        RetentionRule::TopK(k) => result.ranking().into_iter().take(k).collect(),
        RetentionRule::Threshold(t) => (0..data.d())
            .filter(|&j| result.dcor[j] >= t)
            .collect::<Vec<_>>(),
    };
    kept.sort_unstable();
    Ok(ScreenResult { kept, ..result })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_and_constant() {
        let u = [0.3, -1.2, 4.0, 2.2, 0.0];
        assert!((distance_correlation(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(distance_correlation(&u, &[2.0; 5]).unwrap(), 0.0);
    }

    #[test]
    fn proportional_samples() {
        let r = distance_correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_value() {
        // a_ij = |u_i-u_j|: row means [1, 2/3, 1], grand 8/9
        // b_ij = |v_i-v_j|: row means [1/3, 2/3, 1/3], grand 4/9
        let u = [0.0, 1.0, 2.0];
        let v = [0.0, 1.0, 0.0];
        let a = [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]];
        let b = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let ra = [1.0, 2.0 / 3.0, 1.0];
        let rb = [1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0];
        let (ga, gb) = (8.0 / 9.0, 4.0 / 9.0);
        let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..3 {
            for j in 0..3 {
                let x = a[i][j] - ra[i] - ra[j] + ga;
                let y = b[i][j] - rb[i] - rb[j] + gb;
                ab += x * y;
                aa += x * x;
                bb += y * y;
            }
        }
        let want = (ab / (aa * bb).sqrt()).max(0.0).sqrt();
        let got = distance_correlation(&u, &v).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn input_checks() {
        assert!(distance_correlation(&[1.0, 2.0], &[1.0]).is_err());
        assert!(distance_correlation(&[1.0], &[1.0]).is_err());
        assert!(distance_correlation(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    fn toy() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 / 40.0;
                vec![t, ((i * 17) % 11) as f64, (t * 9.0).cos()]
            })
            .collect();
        let y = rows.iter().map(|r| 3.0 * r[0] * r[0]).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn rules() {
        let data = toy();
        let all = screen_features(&data, RetentionRule::TopK(3)).unwrap();
        assert_eq!(all.kept, vec![0, 1, 2]);
        assert_eq!(all.dcor.len(), 3);
        let top = screen_features(&data, RetentionRule::TopK(1)).unwrap();
        assert_eq!(top.kept, vec![0]);
        let thr = screen_features(&data, RetentionRule::Threshold(0.0)).unwrap();
        assert_eq!(thr.kept, vec![0, 1, 2]);
        assert!(screen_features(&data, RetentionRule::TopK(4)).is_err());
        assert!(screen_features(&data, RetentionRule::TopK(0)).is_err());
        assert!(screen_features(&data, RetentionRule::Threshold(1.5)).is_err());
    }

    #[test]
    fn single_feature_is_kept() {
        let data =
            Dataset::from_rows(&[vec![1.0], vec![2.0], vec![5.0]], vec![0.0, 1.0, 0.5]).unwrap();
        let r = screen_features(&data, RetentionRule::TopK(1)).unwrap();
        assert_eq!(r.kept, vec![0]);
    }
}
