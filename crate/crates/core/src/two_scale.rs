//! Two-scale DNN: a combination of two DNN estimators whose leading
//! `s^(-2/d)` bias terms cancel, and the curvature rule that picks `s`.

use serde::Serialize;

use crate::data::{Dataset, QueryPoint};
use crate::error::{Error, Result};
use crate::estimator::{dnn_weights, knn_from_ordered, weighted_sum};
use crate::neighbors::ordered_responses;

/// Upper end of the default tuning scan.
pub const DEFAULT_SCAN_LIMIT: usize = 250;

/// A pair of subsampling scales and the weights that combine them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoScalePlan {
    pub s1: usize,
    pub s2: usize,
    pub weight_dim: usize,
    pub w1: f64,
    pub w2: f64,
}

impl TwoScalePlan {
    /// Per-observation weights `w1 * W(s1) + w2 * W(s2)` for a sample of size `n`.
    pub fn combined_weights(&self, n: usize) -> Result<Vec<f64>> {
        let a = dnn_weights(n, self.s1)?;
        let b = dnn_weights(n, self.s2)?;
        Ok(a.weights()
            .iter()
            .zip(b.weights())
            .map(|(u, v)| self.w1 * u + self.w2 * v)
            .collect())
    }

    /// Two-scale DNN estimate from responses ordered nearest first.
    pub fn apply(&self, ordered: &[f64]) -> Result<f64> {
        let n = ordered.len();
        let a = dnn_weights(n, self.s1)?.apply(ordered);
        let b = dnn_weights(n, self.s2)?.apply(ordered);
        Ok(self.combine(a, b))
    }

    pub fn combine(&self, at_s1: f64, at_s2: f64) -> f64 {
        self.w1 * at_s1 + self.w2 * at_s2
    }
}

/// Solves `w1 + w2 = 1`, `w1 s1^(-2/d') + w2 s2^(-2/d') = 0`.
pub fn two_scale_weights(s1: usize, s2: usize, weight_dim: usize) -> Result<TwoScalePlan> {
    if weight_dim < 1 {
        return Err(Error::Domain("weight dimension must be at least 1".into()));
    }
    if s1 < 1 {
        return Err(Error::Domain(
            "subsampling scales must be at least 1".into(),
        ));
    }
    if s1 == s2 {
        return Err(Error::Domain(format!(
            "equal scales s1 = s2 = {s1} make the weight system singular"
        )));
    }
    if s1 > s2 {
        return Err(Error::Domain(format!(
            "scales must satisfy s1 < s2, got {s1} > {s2}"
        )));
    }
    let p = -2.0 / weight_dim as f64;
    let a1 = (s1 as f64).powf(p);
    let a2 = (s2 as f64).powf(p);
    // w1 < 0 < w2, so 1 - w2 is exact and the pair sums to 1 without rounding
    let w2 = 1.0 - a2 / (a2 - a1);
    Ok(TwoScalePlan {
        s1,
        s2,
        weight_dim,
        w1: 1.0 - w2,
        w2,
    })
}

/// Weight dimension used when the caller does not override it: the data
/// dimension capped at 3, so the combining weights stay moderate in high d.
pub fn default_weight_dim(d: usize) -> usize {
    d.clamp(1, 3)
}

/// Default upper end of the tuning scan for a sample of size `n`.
pub fn default_scan_limit(n: usize) -> usize {
    (n / 2).min(DEFAULT_SCAN_LIMIT)
}

fn check_pair(n: usize, s: usize) -> Result<()> {
    if s < 1 || 2 * s > n {
        return Err(Error::Domain(format!(
            "two-scale estimate at s = {s} needs 1 <= s and 2s <= n = {n}"
        )));
    }
    Ok(())
}

/// Two-scale DNN estimate on the (s, 2s) pair, from ordered responses.
pub fn two_scale_from_ordered(ordered: &[f64], s: usize, weight_dim: usize) -> Result<f64> {
    check_pair(ordered.len(), s)?;
    two_scale_weights(s, 2 * s, weight_dim)?.apply(ordered)
}

/// Same (k, 2k) combination applied to two k-NN estimates.
pub fn two_scale_knn_from_ordered(ordered: &[f64], k: usize, weight_dim: usize) -> Result<f64> {
    check_pair(ordered.len(), k)?;
    let plan = two_scale_weights(k, 2 * k, weight_dim)?;
    Ok(plan.combine(
        knn_from_ordered(ordered, k)?,
        knn_from_ordered(ordered, 2 * k)?,
    ))
}

/// Two-scale DNN estimate `w1 D(s) + w2 D(2s)` at `x`.
pub fn two_scale_estimate(
    data: &Dataset,
    x: &QueryPoint,
    s: usize,
    weight_dim: usize,
) -> Result<f64> {
    check_pair(data.n(), s)?;
    two_scale_from_ordered(&ordered_responses(data, x)?, s, weight_dim)
}

/// Record of a tuning scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneTrace {
    /// Scales evaluated, `1..=m`.
    pub scales: Vec<usize>,
    /// Two-scale estimates `T(s)` at those scales.
    pub estimates: Vec<f64>,
    /// `|T(s+1) - T(s)|`.
    pub first_diffs: Vec<f64>,
    /// `first_diffs[s+1] - first_diffs[s]`.
    pub second_diffs: Vec<f64>,
    pub chosen: usize,
    /// True when the scan reached its limit without a sign change.
    pub hit_limit: bool,
}

/// Outcome of the curvature stopping rule on a trace `T(1), T(2), ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Sign change found; the chosen scale (1-based).
    At(usize),
    /// Trace exhausted without a sign change.
    Exhausted,
}

/// Scans the second differences of `|T(s+1) - T(s)|` and stops at the first
/// one whose sign differs from the first nonzero second difference.
pub fn stopping_rule(estimates: &[f64]) -> Stop {
    let mut baseline = 0.0f64;
    for s in 1..=estimates.len().saturating_sub(2) {
        let d1 = (estimates[s] - estimates[s - 1]).abs();
        let d2 = (estimates[s + 1] - estimates[s]).abs();
        let curv = d2 - d1;
        if curv == 0.0 {
            continue;
        }
        if baseline == 0.0 {
            baseline = curv.signum();
        } else if curv.signum() != baseline {
            return Stop::At(s + 1);
        }
    }
    Stop::Exhausted
}

fn trace_from(estimates: Vec<f64>, chosen: usize, hit_limit: bool) -> TuneTrace {
    let first_diffs: Vec<f64> = estimates.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let second_diffs = first_diffs.windows(2).map(|w| w[1] - w[0]).collect();
    TuneTrace {
        scales: (1..=estimates.len()).collect(),
        estimates,
        first_diffs,
        second_diffs,
        chosen,
        hit_limit,
    }
}

/// Tunes `s` from responses ordered nearest first. `T(s)` is evaluated
/// lazily and the scan ends at the first curvature sign change.
pub fn tune_from_ordered(ordered: &[f64], weight_dim: usize, s_max: usize) -> Result<TuneTrace> {
    let n = ordered.len();
    if n < 6 {
        return Err(Error::Domain(format!(
            "tuning needs at least 6 observations, got {n}"
        )));
    }
    if s_max > n / 2 {
        return Err(Error::Domain(format!(
            "scan limit {s_max} exceeds floor(n/2) = {}",
            n / 2
        )));
    }
    if s_max < 3 {
        return Err(Error::Domain(format!(
            "scan limit {s_max} is too small to form a second difference (need >= 3)"
        )));
    }
    let mut estimates = Vec::with_capacity(s_max.min(64));
    for s in 1..=s_max {
        estimates.push(two_scale_from_ordered(ordered, s, weight_dim)?);
        if estimates.len() >= 3 {
            if let Stop::At(chosen) = stopping_rule(&estimates) {
                return Ok(trace_from(estimates, chosen, false));
            }
        }
    }
    Ok(trace_from(estimates, s_max, true))
}

/// Tunes the subsampling scale for the two-scale estimate at `x`.
pub fn tune_scale(
    data: &Dataset,
    x: &QueryPoint,
    weight_dim: usize,
    s_max: usize,
) -> Result<TuneTrace> {
    tune_from_ordered(&ordered_responses(data, x)?, weight_dim, s_max)
}

/// Precomputed combined weight vector for repeated evaluation at a fixed plan.
#[derive(Debug, Clone)]
pub struct FixedTwoScale {
    pub plan: TwoScalePlan,
    weights: Vec<f64>,
}

impl FixedTwoScale {
    pub fn new(n: usize, s: usize, weight_dim: usize) -> Result<Self> {
        check_pair(n, s)?;
        let plan = two_scale_weights(s, 2 * s, weight_dim)?;
        let weights = plan.combined_weights(n)?;
        Ok(Self { plan, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, ordered: &[f64]) -> f64 {
        weighted_sum(&self.weights, ordered)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_weight_pairs() {
        for s in [1, 5, 37, 250] {
            let p = two_scale_weights(s, 2 * s, 3).unwrap();
            assert!((p.w1 + 1.7024).abs() < 5e-5, "{}", p.w1);
            assert!((p.w2 - 2.7024).abs() < 5e-5);
            let p = two_scale_weights(s, 2 * s, 10).unwrap();
            assert!((p.w1 + 6.73).abs() < 5e-3, "{}", p.w1);
            assert!((p.w2 - 7.73).abs() < 5e-3);
        }
    }

    #[test]
    fn hand_solved_system() {
        let p = two_scale_weights(1, 4, 2).unwrap();
        assert!((p.w1 + 1.0 / 3.0).abs() < 1e-15);
        assert!((p.w2 - 4.0 / 3.0).abs() < 1e-15);
        assert!((p.w1 * 1.0 + p.w2 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn singular_and_invalid() {
        assert!(two_scale_weights(3, 3, 3).is_err());
        assert!(two_scale_weights(4, 3, 3).is_err());
        assert!(two_scale_weights(0, 3, 3).is_err());
        assert!(two_scale_weights(1, 3, 0).is_err());
    }

    #[test]
    fn weight_dim_defaults() {
        assert_eq!(default_weight_dim(1), 1);
        assert_eq!(default_weight_dim(2), 2);
        assert_eq!(default_weight_dim(3), 3);
        assert_eq!(default_weight_dim(10), 3);
    }

    #[test]
    fn ordered_example() {
        let y = [2.0, 4.0, 6.0, 8.0];
        let got = two_scale_from_ordered(&y, 2, 3).unwrap();
        // D(2) = 20/6, D(4) = 2
        let w1 = 1.0 / (1.0 - 2f64.powf(2.0 / 3.0));
        let want = w1 * (20.0 / 6.0) + (1.0 - w1) * 2.0;
        assert!((got - want).abs() < 1e-12);
        assert!((got - (-1.7024 * 20.0 / 6.0 + 2.7024 * 2.0)).abs() < 1e-3);
    }

    #[test]
    fn pair_must_fit() {
        assert!(two_scale_from_ordered(&[1.0, 2.0, 3.0], 2, 3).is_err());
        assert!(FixedTwoScale::new(3, 2, 3).is_err());
    }

    #[test]
    fn fixed_plan_matches_direct_evaluation() {
        let y: Vec<f64> = (0..50).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        for s in 1..=25 {
            let fixed = FixedTwoScale::new(50, s, 3).unwrap();
            let direct = two_scale_from_ordered(&y, s, 3).unwrap();
            assert!((fixed.apply(&y) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn combined_weights_have_negative_tail() {
        for n in [4, 10, 101] {
            for s in 2..=n / 2 {
                let w = FixedTwoScale::new(n, s, 3).unwrap();
                let sum: f64 = w.weights().iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                assert!(w.weights().iter().any(|&v| v < 0.0), "n={n} s={s}");
            }
        }
    }

    #[test]
    fn stopping_rule_example() {
        assert_eq!(stopping_rule(&[10.0, 6.0, 5.0, 3.0]), Stop::At(3));
        // zero second differences are skipped
        assert_eq!(stopping_rule(&[0.0, 1.0, 2.0, 4.0, 5.0]), Stop::At(4));
        assert_eq!(stopping_rule(&[1.0, 1.0, 1.0, 1.0]), Stop::Exhausted);
    }

    #[test]
    fn convex_trace_exhausts_scan() {
        // |T(s+1) - T(s)| = 1/(s(s+1)) is strictly decreasing, so D2 < 0 throughout

        let t: Vec<f64> = (1..=40).map(|s| 1.0 / s as f64).collect();
        assert_eq!(stopping_rule(&t), Stop::Exhausted);
    }

    #[test]
    fn tune_validates_inputs() {
        let y = vec![0.0; 5];
        assert!(tune_from_ordered(&y, 3, 2).is_err());
        let y = vec![0.0; 20];
        assert!(tune_from_ordered(&y, 3, 11).is_err());
        assert!(tune_from_ordered(&y, 3, 2).is_err());
        let t = tune_from_ordered(&y, 3, 10).unwrap();
        assert!(t.hit_limit);
        assert_eq!(t.chosen, 10);
        assert_eq!(t.first_diffs.len() + 1, t.estimates.len());
        assert_eq!(t.second_diffs.len() + 2, t.estimates.len());
    }
}
