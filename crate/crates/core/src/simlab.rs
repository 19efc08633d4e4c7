//! Simulation lab: the benchmark data-generating processes, a seeded Monte
//! Carlo harness and bias/MSE trade-off scans.
//!
//! Every replication draws its dataset from its own random stream derived
//! from `(seed, replication)`, so results are identical under any thread
//! schedule, and trade-off scans reuse the exact datasets of the harness
//! (common random numbers).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, QueryPoint};
use crate::error::{Error, Result};
use crate::estimator::{dnn_weights, knn_weights};
use crate::inference::{fit_arm, lstat_replicates, sample_variance, FitConfig};
use crate::neighbors::order_by_distance;
use crate::rng::{derive_seed, stream, tag};
use crate::screening::{screen_features, RetentionRule};
use crate::theory::{GaussianDesign, SmoothMean};
use crate::two_scale::{default_weight_dim, two_scale_weights};

/// Covariate counts of the high-dimensional settings 3 to 11.
pub const HIGH_DIM_SIZES: [usize; 9] = [10, 15, 20, 25, 30, 35, 40, 45, 50];

/// Benchmark settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Setting {
    /// `y = (x1 - 1)^2 + (x2 + 1)^3 - 3 x3 + e`, `d = 3`.
    Cubic,
    /// Setting 1's signal on `x3, x5, x7` plus seven noise covariates, `d = 10`.
    CubicWithNoise,
    /// `y = log[(sum_{i<=j} x_i^3 - 2 x_i^2 + 2 x_i)^2] + e`, `d = j`.
    LogSquare(usize),
}

impl Setting {
    /// Setting by its number, 1 through 11.
    pub fn from_id(id: usize) -> Result<Self> {
        match id {
            1 => Ok(Setting::Cubic),
            2 => Ok(Setting::CubicWithNoise),
            3..=11 => Ok(Setting::LogSquare(HIGH_DIM_SIZES[id - 3])),
            _ => Err(Error::Usage(format!("setting must be 1..=11, got {id}"))),
        }
    }

    pub fn id(&self) -> usize {
        match self {
            Setting::Cubic => 1,
            Setting::CubicWithNoise => 2,
            Setting::LogSquare(j) => 3 + HIGH_DIM_SIZES.iter().position(|v| v == j).unwrap_or(0),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Setting::Cubic => 3,
            Setting::CubicWithNoise => 10,
            Setting::LogSquare(j) => *j,
        }
    }

    /// Coordinates (0-based) that are nonzero at the fixed test point and
    /// random at the random test point.
    pub fn active(&self) -> Vec<usize> {
        match self {
            Setting::Cubic => vec![0, 1, 2],
            Setting::CubicWithNoise => vec![2, 4, 6],
            Setting::LogSquare(j) => (0..(j - 1) / 2).collect(),
        }
    }

    /// Noiseless regression function.
    pub fn mean(&self, x: &[f64]) -> f64 {
        match self {
            Setting::Cubic => cubic(x[0], x[1], x[2]),
            Setting::CubicWithNoise => cubic(x[2], x[4], x[6]),
            Setting::LogSquare(j) => {
                let t = log_square_inner(&x[..*j]);
                (t * t).ln()
            }
        }
    }

    pub fn fixed_point(&self) -> QueryPoint {
        let mut x = vec![0.0; self.dim()];
        match self {
            Setting::Cubic => x.copy_from_slice(&[0.5, -0.5, 0.5]),
            Setting::CubicWithNoise => {
                x[2] = 0.5;
                x[4] = -0.5;
                x[6] = 0.5;
            }
            Setting::LogSquare(_) => {
                for i in self.active() {
                    x[i] = 0.5;
                }
            }
        }
        QueryPoint::new(x).expect("finite fixed point")
    }

    /// Active coordinates uniform on `[0, 1]`, the rest zero.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> QueryPoint {
        let mut x = vec![0.0; self.dim()];
        for i in self.active() {
            x[i] = rng.random::<f64>();
        }
        QueryPoint::new(x).expect("finite random point")
    }
}

fn cubic(a: f64, b: f64, c: f64) -> f64 {
    (a - 1.0).powi(2) + (b + 1.0).powi(3) - 3.0 * c
}

fn log_square_inner(x: &[f64]) -> f64 {
    x.iter().map(|&v| v * v * v - 2.0 * v * v + 2.0 * v).sum()
}

/// The cubic mean function of settings 1 and 2 on three designated
/// coordinates, with closed-form derivatives.
#[derive(Debug, Clone, Copy)]
pub struct CubicMean {
    pub d: usize,
    pub coords: [usize; 3],
}

impl SmoothMean for CubicMean {
    fn value(&self, x: &[f64]) -> f64 {
        let [i, j, k] = self.coords;
        cubic(x[i], x[j], x[k])
    }
    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let [i, j, k] = self.coords;
        let mut g = vec![0.0; self.d];
        g[i] = 2.0 * (x[i] - 1.0);
        g[j] = 3.0 * (x[j] + 1.0).powi(2);
        g[k] = -3.0;
        g
    }
    fn hess(&self, x: &[f64]) -> Vec<f64> {
        let [i, j, _] = self.coords;
        let mut h = vec![0.0; self.d * self.d];
        h[i * self.d + i] = 2.0;
        h[j * self.d + j] = 6.0 * (x[j] + 1.0);
        h
    }
}

/// Analytic description of a cubic setting, for the bias oracle.
pub fn analytic_dgp(setting: Setting, noise_sd: f64) -> Result<GaussianDesign<CubicMean>> {
    let coords = match setting {
        Setting::Cubic => [0, 1, 2],
        Setting::CubicWithNoise => [2, 4, 6],
        Setting::LogSquare(_) => {
            return Err(Error::Usage(
                "closed-form derivatives are provided for settings 1 and 2 only".into(),
            ))
        }
    };
    Ok(GaussianDesign {
        d: setting.dim(),
        noise_sd,
        mean_fn: CubicMean {
            d: setting.dim(),
            coords,
        },
    })
}

/// A simulation design: setting, sample size and noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DgpSpec {
    pub setting: Setting,
    pub n: usize,
    pub noise_sd: f64,
}

impl DgpSpec {
    pub fn new(setting: Setting, n: usize) -> Self {
        Self {
            setting,
            n,
            noise_sd: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Usage(format!(
                "sample size must be at least 2, got {}",
                self.n
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Usage(format!(
                "noise sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

/// A generated sample and the number of rows that had to be redrawn because
/// the log-square mean was undefined.
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: Dataset,
    pub redraws: usize,
}

/// Draws `n` i.i.d. rows with standard normal covariates and noise.
pub fn generate(spec: &DgpSpec, rep_seed: u64) -> Result<Generated> {
    spec.validate()?;
    let d = spec.setting.dim();
    let mut rng = stream(rep_seed, tag::MC_DATA, 0);
    let mut features = Vec::with_capacity(spec.n * d);
    let mut response = Vec::with_capacity(spec.n);
    let mut row = vec![0.0; d];
    let mut redraws = 0;
    while response.len() < spec.n {
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let eps: f64 = rng.sample(StandardNormal);
        let mu = spec.setting.mean(&row);
        if !mu.is_finite() {
            redraws += 1;
            continue;
        }
        features.extend_from_slice(&row);
        response.push(mu + spec.noise_sd * eps);
    }
    Ok(Generated {
        data: Dataset::new(features, d, response, None)?,
        redraws,
    })
}

/// Estimator families compared in the lab.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dnn,
    /// Two-scale DNN on `(s, 2s)`.
    Tdnn,
    Knn,
    /// The same `(k, 2k)` combination applied to k-NN estimates.
    Tknn,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Dnn => "dnn",
            Family::Tdnn => "tdnn",
            Family::Knn => "knn",
            Family::Tknn => "tknn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dnn" => Ok(Family::Dnn),
            "tdnn" | "two-scale-dnn" => Ok(Family::Tdnn),
            "knn" => Ok(Family::Knn),
            "tknn" | "two-scale-knn" => Ok(Family::Tknn),
            _ => Err(Error::Usage(format!(
                "unknown estimator '{s}', expected dnn, tdnn, knn or tknn"
            ))),
        }
    }

    fn two_scale(&self) -> bool {
        matches!(self, Family::Tdnn | Family::Tknn)
    }

    /// L-statistic weights over ordered responses at scale (or neighbor
    /// count) `s`.
    pub fn weights(&self, n: usize, s: usize, weight_dim: usize) -> Result<Vec<f64>> {
        if self.two_scale() && 2 * s > n {
            return Err(Error::Domain(format!(
                "two-scale estimator at s = {s} needs 2s <= n = {n}"
            )));
        }
        let base = |k: usize| match self {
            Family::Dnn | Family::Tdnn => dnn_weights(n, k),
            Family::Knn | Family::Tknn => knn_weights(n, k),
        };
        if !self.two_scale() {
            return Ok(base(s)?.weights().to_vec());
        }
        let plan = two_scale_weights(s, 2 * s, weight_dim)?;
        let a = base(s)?;
        let b = base(2 * s)?;
        Ok(a.weights()
            .iter()
            .zip(b.weights())
            .map(|(u, v)| plan.w1 * u + plan.w2 * v)
            .collect())
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Monte Carlo run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    pub spec: DgpSpec,
    pub family: Family,
    /// Fixed scale or neighbor count. `None` tunes `s` per query point, which
    /// is only defined for the two-scale DNN.
    pub scale: Option<usize>,
    pub weight_dim: Option<usize>,
    pub scan_limit: Option<usize>,
    pub reps: usize,
    /// Bootstrap replicates per replication for the variance estimate; 0 skips it.
    pub boot_reps: usize,
    pub seed: u64,
    /// Keep the `k` covariates with the largest distance correlation before
    /// estimating.
    pub screen_top: Option<usize>,
    /// Every replication reuses replication 0's data and points.
    pub shared_data: bool,
}

impl McConfig {
    pub fn new(spec: DgpSpec, reps: usize, seed: u64) -> Self {
        Self {
            spec,
            family: Family::Tdnn,
            scale: None,
            weight_dim: None,
            scan_limit: None,
            reps,
            boot_reps: 1000,
            seed,
            screen_top: None,
            shared_data: false,
        }
    }
}

/// Fixed-point and random-point accuracy summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McMetrics {
    pub bias_fixed: f64,
    pub mse_fixed: f64,
    pub mc_var_fixed: f64,
    /// Mean bootstrap variance at the fixed point, when bootstrapping ran.
    pub est_var_fixed: Option<f64>,
    pub bias_random: f64,
    pub mse_random: f64,
    pub reps: usize,
    pub seed: u64,
}

/// One long-format row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRecord {
    pub setting: String,
    pub estimator: String,
    pub point_kind: String,
    pub rep: usize,
    pub s_or_k: usize,
    pub estimate: f64,
    pub truth: f64,
}

#[derive(Debug, Clone)]
pub struct McOutcome {
    pub metrics: McMetrics,
    pub records: Vec<McRecord>,
    /// Rows redrawn by the log-square guard, summed over replications.
    pub redraws: usize,
}

struct PointResult {
    scale: usize,
    estimate: f64,
    boot_var: Option<f64>,
}

fn estimate_at(
    cfg: &McConfig,
    data: &Dataset,
    x: &QueryPoint,
    boot_seed: Option<u64>,
) -> Result<PointResult> {
    let weight_dim = cfg
        .weight_dim
        .unwrap_or_else(|| default_weight_dim(data.d()));
    let (scale, weights, rank, ordered) = match cfg.scale {
        None if cfg.family == Family::Tdnn => {
            let fit = fit_arm(
                data,
                x,
                &FitConfig {
                    weight_dim: Some(weight_dim),
                    scale: None,
                    scan_limit: cfg.scan_limit,
                },
            )?;
            (
                fit.scale(),
                fit.plan().weights().to_vec(),
                fit.ranks().to_vec(),
                fit.ordered().to_vec(),
            )
        }
        None => {
            return Err(Error::Usage(format!(
                "estimator {} needs an explicit scale; tuning is defined for tdnn only",
                cfg.family
            )))
        }
        Some(s) => {
            let order = order_by_distance(data, x)?;
            let ordered = order.ordered_responses(data);
            let mut rank = vec![0; data.n()];
            for (pos, &row) in order.perm.iter().enumerate() {
                rank[row] = pos;
            }
            (
                s,
                cfg.family.weights(data.n(), s, weight_dim)?,
                rank,
                ordered,
            )
        }
    };
    let estimate = crate::estimator::weighted_sum(&weights, &ordered);
    let boot_var = match boot_seed {
        Some(seed) if cfg.boot_reps >= 2 => {
            let reps = lstat_replicates(
                &rank,
                &ordered,
                &weights,
                cfg.boot_reps,
                seed,
                tag::BOOTSTRAP_TREATED,
            );
            Some(sample_variance(&reps))
        }
        _ => None,
    };
    Ok(PointResult {
        scale,
        estimate,
        boot_var,
    })
}

struct RepResult {
    fixed: PointResult,
    fixed_truth: f64,
    random: PointResult,
    random_truth: f64,
    redraws: usize,
}

/// Screens covariates when configured and projects the query points.
fn prepare(
    cfg: &McConfig,
    data: Dataset,
    points: [QueryPoint; 2],
) -> Result<(Dataset, [QueryPoint; 2])> {
    match cfg.screen_top {
        None => Ok((data, points)),
        Some(k) => {
            let kept = screen_features(&data, RetentionRule::TopK(k))?.kept;
            let [a, b] = points;
            Ok((
                data.select_columns(&kept)?,
                [a.select(&kept)?, b.select(&kept)?],
            ))
        }
    }
}

fn run_rep(cfg: &McConfig, rep: usize) -> Result<RepResult> {
    let setting = cfg.spec.setting;
    let draw = if cfg.shared_data { 0 } else { rep as u64 };
    let gen = generate(&cfg.spec, derive_seed(cfg.seed, tag::MC_DATA, draw))?;
    let fixed = setting.fixed_point();
    let random = setting.random_point(&mut stream(cfg.seed, tag::MC_POINT, draw));
    let fixed_truth = setting.mean(fixed.coords());
    let random_truth = setting.mean(random.coords());
    let (data, [fixed, random]) = prepare(cfg, gen.data, [fixed, random])?;
    let boot_seed = derive_seed(cfg.seed, tag::MC_BOOT, draw);
    Ok(RepResult {
        fixed: estimate_at(cfg, &data, &fixed, Some(boot_seed))?,
        fixed_truth,
        random: estimate_at(cfg, &data, &random, None)?,
        random_truth,
        redraws: gen.redraws,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for v in values {
        total += v;
        count += 1;
    }
    total / count as f64
}

/// Bias and MSE of estimates against truths, in replication order.
pub fn bias_mse(estimates: &[f64], truths: &[f64]) -> (f64, f64) {
    let err = || estimates.iter().zip(truths).map(|(e, t)| e - t);
    (mean(err()), mean(err().map(|e| e * e)))
}

/// Runs `reps` independent replications and aggregates accuracy metrics at
/// the fixed and random test points. Any failed replication aborts the run.
pub fn run_monte_carlo(cfg: &McConfig) -> Result<McOutcome> {
    if cfg.reps < 2 {
        return Err(Error::Usage(format!(
            "reps must be at least 2, got {}",
            cfg.reps
        )));
    }
    cfg.spec.validate()?;
    let results: Vec<RepResult> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            run_rep(cfg, rep).map_err(|e| match e {
                Error::Usage(m) => Error::Usage(format!("replication {rep}: {m}")),
                Error::Domain(m) => Error::Domain(format!("replication {rep}: {m}")),
                Error::Guard(m) => Error::Guard(format!("replication {rep}: {m}")),
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    let fixed_est: Vec<f64> = results.iter().map(|r| r.fixed.estimate).collect();
    let fixed_truth: Vec<f64> = results.iter().map(|r| r.fixed_truth).collect();
    let random_est: Vec<f64> = results.iter().map(|r| r.random.estimate).collect();
    let random_truth: Vec<f64> = results.iter().map(|r| r.random_truth).collect();
    let (bias_fixed, mse_fixed) = bias_mse(&fixed_est, &fixed_truth);
    let (bias_random, mse_random) = bias_mse(&random_est, &random_truth);
    let est_var_fixed = results
        .iter()
        .map(|r| r.fixed.boot_var)
        .collect::<Option<Vec<f64>>>()
        .map(|v| mean(v.into_iter()));

    let setting = cfg.spec.setting.id().to_string();
    let mut records = Vec::with_capacity(2 * cfg.reps);
    for (rep, r) in results.iter().enumerate() {
        for (kind, point, truth) in [
            ("fixed", &r.fixed, r.fixed_truth),
            ("random", &r.random, r.random_truth),
        ] {
            records.push(McRecord {
                setting: setting.clone(),
                estimator: cfg.family.name().to_string(),
                point_kind: kind.to_string(),
                rep,
                s_or_k: point.scale,
                estimate: point.estimate,
                truth,
            });
        }
    }

    Ok(McOutcome {
        metrics: McMetrics {
            bias_fixed,
            mse_fixed,
            mc_var_fixed: sample_variance(&fixed_est),
            est_var_fixed,
            bias_random,
            mse_random,
            reps: cfg.reps,
            seed: cfg.seed,
        },
        records,
        redraws: results.iter().map(|r| r.redraws).sum(),
    })
}

/// Bias and MSE of one estimator family across a grid of scales.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub family: Family,
    pub grid: Vec<usize>,
    pub bias: Vec<f64>,
    pub mse: Vec<f64>,
    /// Monte Carlo variance of the estimates at each grid value.
    pub variance: Vec<f64>,
}

/// Bias and MSE at the fixed test point for every grid value. Grid values
/// share the replication datasets, which are also the ones
/// [`run_monte_carlo`] draws for the same seed.
pub fn tradeoff_scan(
    spec: &DgpSpec,
    family: Family,
    grid: &[usize],
    reps: usize,
    seed: u64,
    weight_dim: Option<usize>,
) -> Result<TradeoffCurve> {
    spec.validate()?;
    if reps < 2 {
        return Err(Error::Usage(format!("reps must be at least 2, got {reps}")));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage(
            "grid must be nonempty and strictly increasing".into(),
        ));
    }
    let d = spec.setting.dim();
    let weight_dim = weight_dim.unwrap_or_else(|| default_weight_dim(d));
    let weights = grid
        .iter()
        .map(|&s| family.weights(spec.n, s, weight_dim))
        .collect::<Result<Vec<_>>>()?;
    let x = spec.setting.fixed_point();
    let truth = spec.setting.mean(x.coords());

    let per_rep: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let gen = generate(spec, derive_seed(seed, tag::MC_DATA, rep as u64))?;
            let order = order_by_distance(&gen.data, &x)?;
            let ordered = order.ordered_responses(&gen.data);
            Ok(weights
                .iter()
                .map(|w| crate::estimator::weighted_sum(w, &ordered))
                .collect())
        })
        .collect::<Result<_>>()?;

    let truths = vec![truth; reps];
    let mut bias = Vec::with_capacity(grid.len());
    let mut mse = Vec::with_capacity(grid.len());
    let mut variance = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let est: Vec<f64> = per_rep.iter().map(|r| r[g]).collect();
        let (b, m) = bias_mse(&est, &truths);
        bias.push(b);
        mse.push(m);
        variance.push(sample_variance(&est));
    }
    Ok(TradeoffCurve {
        family,
        grid: grid.to_vec(),
        bias,
        mse,
        variance,
    })
}

/// Writes long-format records.
pub fn write_long_csv<W: Write>(records: &[McRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads long-format records, e.g. estimates produced by external software.
pub fn read_long_csv<R: Read>(reader: R) -> Result<Vec<McRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// One row of an aggregate table in the benchmark's column layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub setting: String,
    pub estimator: String,
    pub bias1: f64,
    pub mse1: f64,
    pub var: f64,
    pub est_var: Option<f64>,
    pub bias2: f64,
    pub mse2: f64,
    pub reps: usize,
}

impl AggregateRow {
    pub fn from_metrics(setting: usize, family: Family, m: &McMetrics) -> Self {
        Self {
            setting: setting.to_string(),
            estimator: family.name().to_string(),
            bias1: m.bias_fixed,
            mse1: m.mse_fixed,
            var: m.mc_var_fixed,
            est_var: m.est_var_fixed,
            bias2: m.bias_random,
            mse2: m.mse_random,
            reps: m.reps,
        }
    }
}

/// Aggregates long-format records per (setting, estimator). Rows carry no
/// variance estimate.
pub fn aggregate_records(records: &[McRecord]) -> Result<Vec<AggregateRow>> {
    type Cells = (Vec<(usize, f64, f64)>, Vec<(usize, f64, f64)>);
    let mut groups: BTreeMap<(String, String), Cells> = BTreeMap::new();
    for r in records {
        let cell = groups
            .entry((r.setting.clone(), r.estimator.clone()))
            .or_default();
        match r.point_kind.as_str() {
            "fixed" => cell.0.push((r.rep, r.estimate, r.truth)),
            "random" => cell.1.push((r.rep, r.estimate, r.truth)),
            other => {
                return Err(Error::Validation(format!(
                    "point_kind must be 'fixed' or 'random', got '{other}'"
                )))
            }
        }
    }
    let mut rows = Vec::with_capacity(groups.len());
    for ((setting, estimator), (mut fixed, mut random)) in groups {
        if fixed.len() < 2 || random.is_empty() {
            return Err(Error::Validation(format!(
                "setting {setting}, estimator {estimator}: need >= 2 fixed and >= 1 random rows"
            )));
        }
        fixed.sort_by_key(|r| r.0);
        random.sort_by_key(|r| r.0);
        let split = |v: &[(usize, f64, f64)]| -> (Vec<f64>, Vec<f64>) {
            (
                v.iter().map(|r| r.1).collect(),
                v.iter().map(|r| r.2).collect(),
            )
        };
        let (fe, ft) = split(&fixed);
        let (re, rt) = split(&random);
        let (bias1, mse1) = bias_mse(&fe, &ft);
        let (bias2, mse2) = bias_mse(&re, &rt);
        rows.push(AggregateRow {
            setting,
            estimator,
            bias1,
            mse1,
            var: sample_variance(&fe),
            est_var: None,
            bias2,
            mse2,
            reps: fixed.len(),
        });
    }
    Ok(rows)
}
