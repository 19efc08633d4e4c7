//! Point estimates and stratified bootstrap inference.
//!
//! Each arm is fitted independently: responses are ordered by distance to the
//! query, `s` is tuned on the original data (unless fixed by the caller) and
//! the two-scale weights for `(s, 2s)` are frozen. Bootstrap replicates then
//! resample rows with replacement inside each arm and re-evaluate the frozen
//! L-statistic, so a replicate costs `O(n)` instead of a fresh sort.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Dataset, QueryPoint, StratifiedView};
use crate::error::{Error, Result};
use crate::neighbors::order_by_distance;
use crate::rng::{stream, tag};
use crate::two_scale::{
    default_scan_limit, default_weight_dim, tune_from_ordered, FixedTwoScale, TuneTrace,
};

/// How the subsampling scale of each arm is chosen.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FitConfig {
    /// Overrides `min(d, 3)`.
    pub weight_dim: Option<usize>,
    /// Fixed scale; skips tuning.
    pub scale: Option<usize>,
    /// Overrides `min(floor(n/2), 250)` as the tuning scan limit.
    pub scan_limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalKind {
    #[default]
    Percentile,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub boot_reps: usize,
    pub level: f64,
    pub seed: u64,
    pub interval: IntervalKind,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            boot_reps: 1000,
            level: 0.95,
            seed: 0,
            interval: IntervalKind::Percentile,
        }
    }
}

impl BootstrapConfig {
    fn validate(&self) -> Result<()> {
        if self.boot_reps < 2 {
            return Err(Error::Usage(format!(
                "boot_reps must be at least 2, got {}",
                self.boot_reps
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Usage(format!(
                "confidence level must lie in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

/// One arm fitted at a query point.
#[derive(Debug, Clone)]
pub struct ArmFit {
    /// Row index of the k-th nearest observation.
    perm: Vec<usize>,
    /// Position of each row in the distance order.
    rank: Vec<usize>,
    ordered: Vec<f64>,
    fixed: FixedTwoScale,
    pub trace: Option<TuneTrace>,
    pub estimate: f64,
}

impl ArmFit {
    pub fn n(&self) -> usize {
        self.ordered.len()
    }

    pub fn scale(&self) -> usize {
        self.fixed.plan.s1
    }

    pub fn weight_dim(&self) -> usize {
        self.fixed.plan.weight_dim
    }

    pub fn plan(&self) -> &FixedTwoScale {
        &self.fixed
    }

    /// Rows of the arm in distance order.
    pub fn order(&self) -> &[usize] {
        &self.perm
    }

    /// Position of each arm row in the distance order.
    pub fn ranks(&self) -> &[usize] {
        &self.rank
    }

    /// Responses in distance order.
    pub fn ordered(&self) -> &[f64] {
        &self.ordered
    }

    /// Frozen two-scale estimate on a bootstrap resample given as row indices
    /// of the arm (with repetition).
    pub fn resample_estimate(&self, rows: &[usize]) -> f64 {
        resample_lstat(&self.rank, &self.ordered, self.fixed.weights(), rows)
    }
}

/// Evaluates a fixed L-statistic on a resample of rows. `rank[row]` is the
/// row's position in the distance order of the original sample; repeated
/// rows occupy consecutive positions in the resample's own order.
pub fn resample_lstat(rank: &[usize], ordered: &[f64], weights: &[f64], rows: &[usize]) -> f64 {
    let n = ordered.len();
    debug_assert_eq!(rows.len(), n);
    let mut counts = vec![0u32; n];
    for &r in rows {
        counts[rank[r]] += 1;
    }
    let mut k = 0;
    let mut total = 0.0;
    for (pos, &c) in counts.iter().enumerate() {
        let y = ordered[pos];
        for _ in 0..c {
            total += weights[k] * y;
            k += 1;
        }
    }
    total
}

/// Bootstrap replicates of a fixed L-statistic, one independent stream per
/// replicate.
pub fn lstat_replicates(
    rank: &[usize],
    ordered: &[f64],
    weights: &[f64],
    boot_reps: usize,
    seed: u64,
    arm_tag: u64,
) -> Vec<f64> {
    let n = ordered.len();
    (0..boot_reps)
        .into_par_iter()
        .map(|r| resample_lstat(rank, ordered, weights, &bootstrap_rows(n, seed, arm_tag, r)))
        .collect()
}

/// Orders the arm around `x`, tunes or applies the fixed scale, and evaluates
/// the two-scale estimate.
pub fn fit_arm(data: &Dataset, x: &QueryPoint, cfg: &FitConfig) -> Result<ArmFit> {
    let order = order_by_distance(data, x)?;
    let ordered = order.ordered_responses(data);
    let n = data.n();
    let weight_dim = cfg
        .weight_dim
        .unwrap_or_else(|| default_weight_dim(data.d()));
    let (s, trace) = match cfg.scale {
        Some(s) => (s, None),
        None => {
            let limit = cfg.scan_limit.unwrap_or_else(|| default_scan_limit(n));
            let trace = tune_from_ordered(&ordered, weight_dim, limit)?;
            (trace.chosen, Some(trace))
        }
    };
    let fixed = FixedTwoScale::new(n, s, weight_dim)?;
    let estimate = fixed.apply(&ordered);
    let mut rank = vec![0; n];
    for (pos, &row) in order.perm.iter().enumerate() {
        rank[row] = pos;
    }
    Ok(ArmFit {
        perm: order.perm,
        rank,
        ordered,
        fixed,
        trace,
        estimate,
    })
}

fn in_stratum<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("{name} stratum: {m}")),
        Error::Usage(m) => Error::Usage(format!("{name} stratum: {m}")),
        other => other,
    })
}

/// Fits both arms of a stratified sample.
pub fn fit_arms(
    view: &StratifiedView,
    x: &QueryPoint,
    cfg: &FitConfig,
) -> Result<(ArmFit, ArmFit)> {
    let treated = in_stratum("treated", fit_arm(&view.treated, x, cfg))?;
    let control = in_stratum("control", fit_arm(&view.control, x, cfg))?;
    Ok((treated, control))
}

/// Treatment effect at `x`: treated-arm minus control-arm two-scale estimate,
/// each arm with its own tuned scale.
pub fn hte_estimate(view: &StratifiedView, x: &QueryPoint, cfg: &FitConfig) -> Result<f64> {
    let (t, c) = fit_arms(view, x, cfg)?;
    Ok(t.estimate - c.estimate)
}

/// Row indices drawn with replacement for one bootstrap replicate of an arm.
pub fn bootstrap_rows(n: usize, seed: u64, arm_tag: u64, replicate: usize) -> Vec<usize> {
    let mut rng = stream(seed, arm_tag, replicate as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Summary of how one arm was fitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub name: String,
    pub n: usize,
    pub s: usize,
    pub weight_dim: usize,
    pub w1: f64,
    pub w2: f64,
    pub estimate: f64,
    pub tune: Option<TuneTrace>,
}

impl ArmSummary {
    fn new(name: &str, fit: &ArmFit) -> Self {
        Self {
            name: name.to_string(),
            n: fit.n(),
            s: fit.scale(),
            weight_dim: fit.weight_dim(),
            w1: fit.fixed.plan.w1,
            w2: fit.fixed.plan.w2,
            estimate: fit.estimate,
            tune: fit.trace.clone(),
        }
    }
}

/// Point estimate with bootstrap variance and confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub point: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub interval: IntervalKind,
    pub boot_reps: usize,
    /// Replicates dropped because they evaluated to a non-finite value.
    pub discarded: usize,
    pub seed: u64,
    pub arms: Vec<ArmSummary>,
}

/// Unbiased sample variance by Welford's update; identical inputs give
/// exactly zero.
pub fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    (m2 / (values.len() - 1) as f64).max(0.0)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(
    point: f64,
    replicates: Vec<f64>,
    cfg: &BootstrapConfig,
    arms: Vec<ArmSummary>,
) -> Result<EstimateReport> {
    let total = replicates.len();
    let mut finite: Vec<f64> = replicates.into_iter().filter(|v| v.is_finite()).collect();
    let discarded = total - finite.len();
    if finite.len() < 2 {
        return Err(Error::Guard(format!(
            "only {} of {total} bootstrap replicates were finite",
            finite.len()
        )));
    }
    let variance = sample_variance(&finite);
    let alpha = 1.0 - cfg.level;
    let (ci_low, ci_high) = match cfg.interval {
        IntervalKind::Percentile => {
            finite.sort_by(f64::total_cmp);
            (
                quantile_sorted(&finite, alpha / 2.0),
                quantile_sorted(&finite, 1.0 - alpha / 2.0),
            )
        }
        IntervalKind::Normal => {
            let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
            let half = z * variance.sqrt();
            (point - half, point + half)
        }
    };
    Ok(EstimateReport {
        point,
        variance,
        ci_low,
        ci_high,
        level: cfg.level,
        interval: cfg.interval,
        boot_reps: cfg.boot_reps,
        discarded,
        seed: cfg.seed,
        arms,
    })
}

/// Bootstrap replicates of a single fitted arm.
pub fn arm_replicates(fit: &ArmFit, boot_reps: usize, seed: u64, arm_tag: u64) -> Vec<f64> {
    lstat_replicates(
        &fit.rank,
        &fit.ordered,
        fit.fixed.weights(),
        boot_reps,
        seed,
        arm_tag,
    )
}

/// Regression report for a single sample: two-scale estimate of the mean
/// response at `x` with ordinary bootstrap inference.
pub fn regression_report(
    data: &Dataset,
    x: &QueryPoint,
    fit_cfg: &FitConfig,
    boot: &BootstrapConfig,
) -> Result<EstimateReport> {
    boot.validate()?;
    let fit = fit_arm(data, x, fit_cfg)?;
    let reps = arm_replicates(&fit, boot.boot_reps, boot.seed, tag::BOOTSTRAP_TREATED);
    summarize(
        fit.estimate,
        reps,
        boot,
        vec![ArmSummary::new("sample", &fit)],
    )
}

/// Treatment-effect report: each stratum is tuned once on the original data,
/// then resampled within itself at the frozen scales.
pub fn bootstrap_report(
    view: &StratifiedView,
    x: &QueryPoint,
    fit_cfg: &FitConfig,
    boot: &BootstrapConfig,
) -> Result<EstimateReport> {
    boot.validate()?;
    let (treated, control) = fit_arms(view, x, fit_cfg)?;
    let t = arm_replicates(&treated, boot.boot_reps, boot.seed, tag::BOOTSTRAP_TREATED);
    let c = arm_replicates(&control, boot.boot_reps, boot.seed, tag::BOOTSTRAP_CONTROL);
    let diffs = t.iter().zip(&c).map(|(a, b)| a - b).collect();
    summarize(
        treated.estimate - control.estimate,
        diffs,
        boot,
        vec![
            ArmSummary::new("treated", &treated),
            ArmSummary::new("control", &control),
        ],
    )
}
