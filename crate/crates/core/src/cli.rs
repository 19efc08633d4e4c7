//! Command-line front end.
//!
//! Every command writes CSV (or JSON lines with `--json`) preceded by a
//! `#` comment line echoing the full configuration, so any output can be
//! regenerated exactly. All randomness flows from `--seed`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data::{load_csv, save_csv, split_by_treatment, Dataset, QueryPoint, StratifiedView};
use crate::error::{Error, Result};
use crate::inference::{
    bootstrap_report, regression_report, BootstrapConfig, EstimateReport, FitConfig, IntervalKind,
};
use crate::rng::{derive_seed, tag};
use crate::screening::{screen_features, RetentionRule};
use crate::simlab::{
    aggregate_records, generate, read_long_csv, run_monte_carlo, tradeoff_scan, write_long_csv,
    AggregateRow, DgpSpec, Family, McConfig, Setting,
};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "dnn",
    version,
    about = "Two-scale distributional nearest neighbors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Estimate the regression function at one or more points.
    Estimate(EstimateArgs),
    /// Estimate heterogeneous treatment effects from a CSV with a `w` column.
    Hte(HteArgs),
    /// Monte Carlo study of a benchmark setting.
    Simulate(SimulateArgs),
    /// Bias/MSE curve over a grid of scales at the fixed test point.
    Tradeoff(TradeoffArgs),
    /// Rank covariates by distance correlation with the response.
    Screen(ScreenArgs),
    /// Write a synthetic sample from a benchmark setting.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalArg {
    Percentile,
    Normal,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit JSON lines instead of CSV rows.
    #[arg(long)]
    pub json: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Query point as comma-separated coordinates; repeat for several points.
    #[arg(long = "at", required = true, allow_hyphen_values = true)]
    pub at: Vec<String>,
    /// Exponent dimension of the two-scale weights (default: min(d, 3)).
    #[arg(long)]
    pub weight_dim: Option<usize>,
    /// Fixed subsampling scale; skips tuning.
    #[arg(long = "s")]
    pub s: Option<usize>,
    /// Upper end of the tuning scan (default: min(n/2, 250)).
    #[arg(long)]
    pub scan_limit: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub boot_reps: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value_t = IntervalArg::Percentile)]
    pub interval: IntervalArg,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct HteArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Sweep one coordinate: `COORD:START:END:STEP`, COORD 1-based; other
    /// coordinates come from each `--at` point.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Benchmark setting, 1 through 11.
    #[arg(long)]
    pub setting: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// dnn, tdnn, knn or tknn.
    #[arg(long, default_value = "tdnn")]
    pub estimator: String,
    /// Fixed scale or neighbor count; tdnn tunes when absent.
    #[arg(long = "s")]
    pub s: Option<usize>,
    #[arg(long)]
    pub weight_dim: Option<usize>,
    #[arg(long)]
    pub scan_limit: Option<usize>,
    /// Bootstrap replicates per replication (0 disables the variance estimate).
    #[arg(long, default_value_t = 200)]
    pub boot_reps: usize,
    /// Keep the top-k covariates by distance correlation before estimating.
    #[arg(long)]
    pub screen_top: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Also write long-format per-replication rows to this file.
    #[arg(long)]
    pub long: Option<PathBuf>,
    /// Long-format estimates from other software, aggregated alongside.
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct TradeoffArgs {
    #[arg(long)]
    pub setting: usize,
    #[arg(long, default_value = "dnn")]
    pub estimator: String,
    /// `START:END`, `START:END:STEP` or a comma-separated list.
    #[arg(long, default_value = "1:250")]
    pub grid: String,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long)]
    pub weight_dim: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct ScreenArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Keep the k features with the largest distance correlation.
    #[arg(long, conflicts_with = "threshold")]
    pub top: Option<usize>,
    /// Keep features whose distance correlation is at least this value.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub setting: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Add a control arm of this many rows with responses fixed at zero.
    #[arg(long)]
    pub control_n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[command(flatten)]
    pub common: Common,
}

fn parse_point(text: &str) -> Result<QueryPoint> {
    let coords = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("bad coordinate '{t}' in query point '{text}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    QueryPoint::new(coords)
}

/// Expands `COORD:START:END:STEP` around each base point.
pub fn sweep_points(base: &[QueryPoint], spec: &str) -> Result<Vec<QueryPoint>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Usage(format!("sweep must be COORD:START:END:STEP, got '{spec}'"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let coord: usize = parts[0].trim().parse().map_err(|_| bad())?;
    let nums = parts[1..]
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 || end < start || !start.is_finite() || !end.is_finite() {
        return Err(Error::Usage(format!(
            "sweep needs START <= END and STEP > 0, got '{spec}'"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(base.len() * count);
    for b in base {
        if coord == 0 || coord > b.dim() {
            return Err(Error::Usage(format!(
                "sweep coordinate {coord} out of range 1..={}",
                b.dim()
            )));
        }
        for i in 0..count {
            let mut c = b.coords().to_vec();
            c[coord - 1] = start + i as f64 * step;
            out.push(QueryPoint::new(c)?);
        }
    }
    Ok(out)
}

/// Inclusive grid parser: `a:b`, `a:b:step` or `a,b,c`.
pub fn parse_grid(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Usage(format!("bad grid '{text}'"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(bad()),
        };
        if step == 0 || b < a {
            return Err(bad());
        }
        Ok((a..=b).step_by(step).collect())
    } else {
        text.split(',').map(num).collect()
    }
}

fn open_output(common: &Common) -> Result<Box<dyn Write>> {
    Ok(match &common.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn echo_header<W: Write + ?Sized, T: Serialize>(
    out: &mut W,
    name: &str,
    seed: u64,
    args: &T,
) -> Result<()> {
    let config = serde_json::to_string(args).map_err(|e| Error::Usage(e.to_string()))?;
    writeln!(out, "# dnn {name} seed={seed} config={config}")?;
    Ok(())
}

/// Writes rows either as CSV with a header or as JSON lines.
fn emit<W: Write + ?Sized, T: Serialize>(out: &mut W, json: bool, rows: &[T]) -> Result<()> {
    if json {
        for r in rows {
            let line = serde_json::to_string(r).map_err(|e| Error::Usage(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
    } else {
        let mut wtr = csv::Writer::from_writer(&mut *out);
        for r in rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
    }
    Ok(())
}

fn query_label(x: &QueryPoint) -> String {
    x.coords()
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

impl FitArgs {
    fn points(&self) -> Result<Vec<QueryPoint>> {
        self.at.iter().map(|t| parse_point(t)).collect()
    }

    fn fit_config(&self) -> FitConfig {
        FitConfig {
            weight_dim: self.weight_dim,
            scale: self.s,
            scan_limit: self.scan_limit,
        }
    }

    fn boot_config(&self, seed: u64) -> BootstrapConfig {
        BootstrapConfig {
            boot_reps: self.boot_reps,
            level: self.level,
            seed,
            interval: match self.interval {
                IntervalArg::Percentile => IntervalKind::Percentile,
                IntervalArg::Normal => IntervalKind::Normal,
            },
        }
    }
}

#[derive(Debug, Serialize)]
struct EstimateRow {
    query: String,
    point: f64,
    variance: f64,
    ci_low: f64,
    ci_high: f64,
    level: f64,
    interval: IntervalKind,
    boot_reps: usize,
    discarded: usize,
    seed: u64,
    n: usize,
    s: usize,
    weight_dim: usize,
    tuned: bool,
    hit_limit: bool,
}

impl EstimateRow {
    fn new(x: &QueryPoint, r: &EstimateReport) -> Self {
        let arm = &r.arms[0];
        Self {
            query: query_label(x),
            point: r.point,
            variance: r.variance,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            level: r.level,
            interval: r.interval,
            boot_reps: r.boot_reps,
            discarded: r.discarded,
            seed: r.seed,
            n: arm.n,
            s: arm.s,
            weight_dim: arm.weight_dim,
            tuned: arm.tune.is_some(),
            hit_limit: arm.tune.as_ref().is_some_and(|t| t.hit_limit),
        }
    }
}

#[derive(Debug, Serialize)]
struct HteRow {
    query: String,
    tau: f64,
    variance: f64,
    ci_low: f64,
    ci_high: f64,
    level: f64,
    interval: IntervalKind,
    boot_reps: usize,
    discarded: usize,
    seed: u64,
    n_treated: usize,
    n_control: usize,
    s_treated: usize,
    s_control: usize,
    weight_dim: usize,
}

impl HteRow {
    fn new(x: &QueryPoint, r: &EstimateReport) -> Self {
        let (t, c) = (&r.arms[0], &r.arms[1]);
        Self {
            query: query_label(x),
            tau: r.point,
            variance: r.variance,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            level: r.level,
            interval: r.interval,
            boot_reps: r.boot_reps,
            discarded: r.discarded,
            seed: r.seed,
            n_treated: t.n,
            n_control: c.n,
            s_treated: t.s,
            s_control: c.s,
            weight_dim: t.weight_dim,
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    query: &'a [f64],
    #[serde(flatten)]
    report: &'a EstimateReport,
}

fn cmd_estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_csv(&args.input)?;
    let points = args.fit.points()?;
    let fit = args.fit.fit_config();
    let boot = args.fit.boot_config(args.common.seed);
    let reports = points
        .iter()
        .map(|x| regression_report(&data, x, &fit, &boot))
        .collect::<Result<Vec<_>>>()?;
    echo_header(out, "estimate", args.common.seed, args)?;
    if args.common.json {
        let rows: Vec<JsonReport> = points
            .iter()
            .zip(&reports)
            .map(|(x, r)| JsonReport {
                query: x.coords(),
                report: r,
            })
            .collect();
        emit(out, true, &rows)
    } else {
        let rows: Vec<EstimateRow> = points
            .iter()
            .zip(&reports)
            .map(|(x, r)| EstimateRow::new(x, r))
            .collect();
        emit(out, false, &rows)
    }
}

fn cmd_hte(args: &HteArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_csv(&args.input)?;
    if data.treatment().is_none() {
        return Err(Error::Usage(
            "hte needs a treatment column 'w' in the input".into(),
        ));
    }
    let view = split_by_treatment(&data)?;
    let mut points = args.fit.points()?;
    if let Some(sweep) = &args.sweep {
        points = sweep_points(&points, sweep)?;
    }
    let fit = args.fit.fit_config();
    let boot = args.fit.boot_config(args.common.seed);
    let reports = points
        .iter()
        .map(|x| bootstrap_report(&view, x, &fit, &boot))
        .collect::<Result<Vec<_>>>()?;
    echo_header(out, "hte", args.common.seed, args)?;
    if args.common.json {
        let rows: Vec<JsonReport> = points
            .iter()
            .zip(&reports)
            .map(|(x, r)| JsonReport {
                query: x.coords(),
                report: r,
            })
            .collect();
        emit(out, true, &rows)
    } else {
        let rows: Vec<HteRow> = points
            .iter()
            .zip(&reports)
            .map(|(x, r)| HteRow::new(x, r))
            .collect();
        emit(out, false, &rows)
    }
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let setting = Setting::from_id(args.setting)?;
    let family = Family::parse(&args.estimator)?;
    let cfg = McConfig {
        spec: DgpSpec {
            setting,
            n: args.n,
            noise_sd: args.noise_sd,
        },
        family,
        scale: args.s,
        weight_dim: args.weight_dim,
        scan_limit: args.scan_limit,
        reps: args.reps,
        boot_reps: args.boot_reps,
        seed: args.common.seed,
        screen_top: args.screen_top,
        shared_data: false,
    };
    let outcome = run_monte_carlo(&cfg)?;
    let mut rows = vec![AggregateRow::from_metrics(
        args.setting,
        family,
        &outcome.metrics,
    )];
    if let Some(path) = &args.external {
        let external = read_long_csv(File::open(path)?)?;
        rows.extend(aggregate_records(&external)?);
    }
    if let Some(path) = &args.long {
        write_long_csv(&outcome.records, BufWriter::new(File::create(path)?))?;
    }
    echo_header(out, "simulate", args.common.seed, args)?;
    writeln!(out, "# redraws={}", outcome.redraws)?;
    emit(out, args.common.json, &rows)
}

#[derive(Serialize)]
struct CurveRow {
    grid: usize,
    bias: f64,
    mse: f64,
}

fn cmd_tradeoff(args: &TradeoffArgs, out: &mut dyn Write) -> Result<()> {
    let setting = Setting::from_id(args.setting)?;
    let family = Family::parse(&args.estimator)?;
    let grid = parse_grid(&args.grid)?;
    let spec = DgpSpec {
        setting,
        n: args.n,
        noise_sd: args.noise_sd,
    };
    let curve = tradeoff_scan(
        &spec,
        family,
        &grid,
        args.reps,
        args.common.seed,
        args.weight_dim,
    )?;
    let rows: Vec<CurveRow> = (0..curve.grid.len())
        .map(|i| CurveRow {
            grid: curve.grid[i],
            bias: curve.bias[i],
            mse: curve.mse[i],
        })
        .collect();
    echo_header(out, "tradeoff", args.common.seed, args)?;
    emit(out, args.common.json, &rows)
}

#[derive(Serialize)]
struct ScreenRow {
    feature: String,
    dcor: f64,
    rank: usize,
    kept: bool,
}

fn cmd_screen(args: &ScreenArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_csv(&args.input)?;
    let rule = match (args.top, args.threshold) {
        (Some(k), None) => RetentionRule::TopK(k),
        (None, Some(t)) => RetentionRule::Threshold(t),
        _ => {
            return Err(Error::Usage(
                "screen needs exactly one of --top or --threshold".into(),
            ))
        }
    };
    let result = screen_features(&data, rule)?;
    let mut rank = vec![0; data.d()];
    for (r, j) in result.ranking().into_iter().enumerate() {
        rank[j] = r + 1;
    }
    let rows: Vec<ScreenRow> = (0..data.d())
        .map(|j| ScreenRow {
            feature: format!("x{}", j + 1),
            dcor: result.dcor[j],
            rank: rank[j],
            kept: result.kept.contains(&j),
        })
        .collect();
    echo_header(out, "screen", args.common.seed, args)?;
    emit(out, args.common.json, &rows)
}

/// Synthetic sample for a benchmark setting; with a control arm the output
/// carries a `w` column and the control responses are zero.
pub fn generate_sample(
    setting: Setting,
    n: usize,
    control_n: Option<usize>,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    let spec = DgpSpec {
        setting,
        n,
        noise_sd,
    };
    let treated = generate(&spec, derive_seed(seed, tag::MC_DATA, 0))?.data;
    let Some(m) = control_n else {
        return Ok(treated);
    };
    let control_spec = DgpSpec {
        n: m,
        noise_sd: 0.0,
        ..spec
    };
    let control = generate(&control_spec, derive_seed(seed, tag::MC_DATA, 1))?
        .data
        .map_response(|_| 0.0)?;
    StratifiedView::from_arms(treated, control)?.reconstruct()
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let setting = Setting::from_id(args.setting)?;
    let data = generate_sample(
        setting,
        args.n,
        args.control_n,
        args.noise_sd,
        args.common.seed,
    )?;
    match &args.common.output {
        Some(p) => save_csv(&data, p),
        None => crate::data::write_csv(&data, out),
    }
}

/// Runs a parsed command, writing results to `out` unless `--output` is set.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut file;
    let target: &mut dyn Write = match &cli.command {
        Command::Generate(_) => out,
        Command::Estimate(EstimateArgs { common, .. })
        | Command::Hte(HteArgs { common, .. })
        | Command::Simulate(SimulateArgs { common, .. })
        | Command::Tradeoff(TradeoffArgs { common, .. })
        | Command::Screen(ScreenArgs { common, .. }) => {
            if common.output.is_some() {
                file = open_output(common)?;
                &mut *file
            } else {
                out
            }
        }
    };
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, target),
        Command::Hte(a) => cmd_hte(a, target),
        Command::Simulate(a) => cmd_simulate(a, target),
        Command::Tradeoff(a) => cmd_tradeoff(a, target),
        Command::Screen(a) => cmd_screen(a, target),
        Command::Generate(a) => cmd_generate(a, target),
    }?;
    target.flush()?;
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
/// Errors are reported on `err` as one machine-parsable line.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg.lines().next().unwrap_or("invalid arguments");
                    let _ = writeln!(err, "error kind=usage exit=2 message={first:?}");
                    2
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            let _ = writeln!(
                err,
                "error kind={} exit={code} message={:?}",
                e.kind(),
                e.to_string()
            );
            code
        }
    }
}
