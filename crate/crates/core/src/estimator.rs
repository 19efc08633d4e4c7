//! Distributional nearest neighbors (DNN) and classical k-NN regression.
//!
//! The DNN estimator at subsampling scale `s` averages the 1-nearest-neighbor
//! response over every size-`s` subsample. Sorting the sample by distance to
//! the query turns that average into an L-statistic: the `i`-th nearest
//! response is the subsample minimum in exactly `C(n - i, s - 1)` of the
//! `C(n, s)` subsamples.

use crate::data::{Dataset, QueryPoint};
use crate::error::{Error, Result};
use crate::neighbors::{ordered_responses, squared_distance};

/// Largest subsample count the exhaustive U-statistic evaluator will visit.
pub const USTAT_GUARD: u64 = 1_000_000;

/// L-statistic weights over distance-ordered responses.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
    s: usize,
}

impl WeightVector {
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn scale(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    /// `sum_i w_i * y_i` over responses already ordered nearest first.
    pub fn apply(&self, ordered: &[f64]) -> f64 {
        weighted_sum(&self.w, ordered)
    }
}

pub(crate) fn weighted_sum(w: &[f64], ordered: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), ordered.len());
    w.iter().zip(ordered).map(|(a, b)| a * b).sum()
}

/// DNN weights `w_i = C(n - i, s - 1) / C(n, s)`, `i = 1..n`.
///
/// Built with the ratio recurrence `w_1 = s / n`,
/// `w_{i+1} = w_i (n - i - s + 1) / (n - i)`, which stays in `[0, 1]` and
/// never forms a binomial coefficient explicitly. While the running product
/// of recurrence factors fits exactly in a double it is kept as a reduced
/// integer ratio and divided once, so small cases are correctly rounded.
pub fn dnn_weights(n: usize, s: usize) -> Result<WeightVector> {
    if s < 1 || s > n {
        return Err(Error::Domain(format!(
            "subsampling scale s = {s} must satisfy 1 <= s <= n = {n}"
        )));
    }
    const EXACT: u64 = 1 << 53;
    let mut w = vec![0.0; n];
    let support = n - s + 1;
    let (mut num, mut den) = reduce(s as u64, n as u64);
    let mut exact = den <= EXACT;
    w[0] = s as f64 / n as f64;
    for i in 1..support {
        // i is the 1-based index of the previous entry
        let a = (n - i - s + 1) as u64;
        let b = (n - i) as u64;
        if exact {
            let (a1, b1) = reduce(a, den);
            let (a2, b2) = reduce(num, b);
            match (a1.checked_mul(a2), b1.checked_mul(b2)) {
                (Some(p), Some(q)) if p <= EXACT && q <= EXACT => {
                    (num, den) = reduce(p, q);
                    w[i] = p as f64 / q as f64;
                    continue;
                }
                _ => exact = false,
            }
        }
        w[i] = w[i - 1] * a as f64 / b as f64;
    }
    Ok(WeightVector { w, s })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn reduce(a: u64, b: u64) -> (u64, u64) {
    let g = gcd(a, b).max(1);
    (a / g, b / g)
}

/// Uniform weights on the `k` nearest responses.
pub fn knn_weights(n: usize, k: usize) -> Result<WeightVector> {
    if k < 1 || k > n {
        return Err(Error::Domain(format!(
            "neighbor count k = {k} must satisfy 1 <= k <= n = {n}"
        )));
    }
    let mut w = vec![0.0; n];
    w[..k].fill(1.0 / k as f64);
    Ok(WeightVector { w, s: k })
}

/// DNN estimate from responses already ordered nearest first.
pub fn dnn_from_ordered(ordered: &[f64], s: usize) -> Result<f64> {
    Ok(dnn_weights(ordered.len(), s)?.apply(ordered))
}

/// k-NN estimate from responses already ordered nearest first.
pub fn knn_from_ordered(ordered: &[f64], k: usize) -> Result<f64> {
    let n = ordered.len();
    if k < 1 || k > n {
        return Err(Error::Domain(format!(
            "neighbor count k = {k} must satisfy 1 <= k <= n = {n}"
        )));
    }
    Ok(ordered[..k].iter().sum::<f64>() / k as f64)
}

/// DNN estimate of the regression function at `x`.
pub fn dnn_estimate(data: &Dataset, x: &QueryPoint, s: usize) -> Result<f64> {
    let w = dnn_weights(data.n(), s)?;
    Ok(w.apply(&ordered_responses(data, x)?))
}

/// Classical k-NN estimate at `x`.
pub fn knn_estimate(data: &Dataset, x: &QueryPoint, k: usize) -> Result<f64> {
    knn_from_ordered(&ordered_responses(data, x)?, k)
}

/// Number of size-`s` subsets of `n`, saturating at `u64::MAX`.
pub fn subsample_count(n: usize, s: usize) -> u64 {
    if s > n {
        return 0;
    }
    let k = s.min(n - s) as u128;
    let n = n as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
        if c > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    c as u64
}

/// DNN by its defining U-statistic: the mean 1-NN response over every size-`s`
/// subsample, with ties inside a subsample resolved toward the lower row.
/// Refuses when there are more than [`USTAT_GUARD`] subsamples.
pub fn dnn_ustat_oracle(data: &Dataset, x: &QueryPoint, s: usize) -> Result<f64> {
    x.check_dim(data.d())?;
    let n = data.n();
    if s < 1 || s > n {
        return Err(Error::Domain(format!(
            "subsampling scale s = {s} must satisfy 1 <= s <= n = {n}"
        )));
    }
    let count = subsample_count(n, s);
    if count > USTAT_GUARD {
        return Err(Error::Guard(format!(
            "C({n}, {s}) = {count} subsamples exceeds the limit of {USTAT_GUARD}"
        )));
    }
    let sq: Vec<f64> = data
        .rows()
        .map(|r| squared_distance(r, x.coords()))
        .collect();
    let y = data.response();

    let mut subset: Vec<usize> = (0..s).collect();
    let mut total = 0.0;
    loop {
        let mut best = subset[0];
        for &i in &subset[1..] {
            if sq[i] < sq[best] {
                best = i;
            }
        }
        total += y[best];

        // next combination in lexicographic order
        let mut pos = s;
        while pos > 0 && subset[pos - 1] == n - s + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        subset[pos - 1] += 1;
        for j in pos..s {
            subset[j] = subset[j - 1] + 1;
        }
    }
    Ok(total / count as f64)
}
