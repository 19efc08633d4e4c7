//! Property checks shared by the proptest suite and the acceptance harness.

#![allow(dead_code)]

use dnn::data::{split_by_treatment, Dataset, QueryPoint};
use dnn::estimator::{dnn_estimate, dnn_ustat_oracle, dnn_weights};
use dnn::inference::{regression_report, BootstrapConfig, FitConfig};
use dnn::screening::distance_correlation;
use dnn::two_scale::{tune_scale, two_scale_estimate};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = std::result::Result<(), TestCaseError>;

/// A sample with continuous covariates, plus a query of matching dimension.
#[derive(Debug, Clone)]
pub struct Case {
    pub data: Dataset,
    pub x: QueryPoint,
}

pub fn case(
    n: std::ops::RangeInclusive<usize>,
    d: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Case> {
    (n, d).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(-10.0..10.0f64, n * d),
            prop::collection::vec(-50.0..50.0f64, n),
            prop::collection::vec(-10.0..10.0f64, d),
        )
            .prop_map(move |(f, y, x)| Case {
                data: Dataset::new(f, d, y, None).unwrap(),
                x: QueryPoint::new(x).unwrap(),
            })
    })
}

/// A case plus a permutation of its rows.
pub fn permuted_case(
    n: std::ops::RangeInclusive<usize>,
    d: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (Case, Vec<usize>)> {
    case(n, d).prop_flat_map(|c| {
        let idx: Vec<usize> = (0..c.data.n()).collect();
        (Just(c), Just(idx).prop_shuffle())
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn relabel(data: &Dataset, y: Vec<f64>) -> Dataset {
    Dataset::new(data.features().to_vec(), data.d(), y, None).unwrap()
}

/// `a + b Y` maps the DNN and two-scale estimates to `a + b * estimate`.
pub fn affine_equivariance(c: &Case, s_frac: f64, a: f64, b: f64) -> Check {
    let n = c.data.n();
    let s = 1 + ((n - 1) as f64 * s_frac) as usize;
    let moved = c.data.map_response(|y| a + b * y).unwrap();
    let base = dnn_estimate(&c.data, &c.x, s).unwrap();
    let got = dnn_estimate(&moved, &c.x, s).unwrap();
    prop_assert!(
        close(got, a + b * base, 1e-9),
        "dnn s={s}: {got} vs {}",
        a + b * base
    );
    let s2 = (s / 2).max(1);
    if 2 * s2 <= n {
        let base = two_scale_estimate(&c.data, &c.x, s2, 3).unwrap();
        let got = two_scale_estimate(&moved, &c.x, s2, 3).unwrap();
        prop_assert!(close(got, a + b * base, 1e-9), "two-scale s={s2}");
    }
    Ok(())
}

/// Reordering the rows leaves every estimate unchanged.
pub fn permutation_invariance(c: &Case, perm: &[usize], s_frac: f64) -> Check {
    let n = c.data.n();
    let s = 1 + ((n - 1) as f64 * s_frac) as usize;
    let shuffled = c.data.select_rows(perm).unwrap();
    let a = dnn_estimate(&c.data, &c.x, s).unwrap();
    let b = dnn_estimate(&shuffled, &c.x, s).unwrap();
    prop_assert!(close(a, b, 1e-12), "s={s}: {a} vs {b}");
    if n >= 6 {
        let s_max = (n / 2).min(250);
        let ta = tune_scale(&c.data, &c.x, 3, s_max).unwrap();
        let tb = tune_scale(&shuffled, &c.x, 3, s_max).unwrap();
        prop_assert_eq!(ta.chosen, tb.chosen);
    }
    Ok(())
}

/// The DNN estimate is a convex combination of the responses.
pub fn range_containment(c: &Case, s_frac: f64) -> Check {
    let n = c.data.n();
    let s = 1 + ((n - 1) as f64 * s_frac) as usize;
    let est = dnn_estimate(&c.data, &c.x, s).unwrap();
    let y = c.data.response();
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    prop_assert!(
        est >= lo - slack && est <= hi + slack,
        "{est} outside [{lo}, {hi}]"
    );
    Ok(())
}

/// The L-statistic agrees with the subsample average for every scale.
pub fn ustat_equals_lstat(c: &Case) -> Check {
    for s in 1..=c.data.n() {
        let l = dnn_estimate(&c.data, &c.x, s).unwrap();
        let u = dnn_ustat_oracle(&c.data, &c.x, s).unwrap();
        prop_assert!((l - u).abs() <= 1e-10, "s={s}: L={l} U={u}");
    }
    Ok(())
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n as u128 - i) / (i + 1);
    }
    c
}

/// Recurrence weights match `C(n - i, s - 1) / C(n, s)` from exact integers.
pub fn weights_match_binomials(n: usize, s: usize) -> Check {
    let w = dnn_weights(n, s).unwrap();
    let total = binomial(n as u64, s as u64) as f64;
    for (i, got) in w.weights().iter().enumerate() {
        let want = binomial((n - i - 1) as u64, (s - 1) as u64) as f64 / total;
        prop_assert!(
            (got - want).abs() <= 1e-12 * want.max(1e-300) || (got - want).abs() < 1e-300,
            "n={n} s={s} i={}: {got} vs {want}",
            i + 1
        );
    }
    let sum: f64 = w.weights().iter().sum();
    prop_assert!((sum - 1.0).abs() <= 1e-12, "n={n} s={s} sum={sum}");
    Ok(())
}

/// Translating, reflecting and swapping coordinates of covariates and query
/// together preserves distances and hence the estimate.
pub fn isometry_invariance(c: &Case, shift: &[f64], flips: &[bool], s_frac: f64) -> Check {
    let d = c.data.d();
    let map = |p: &[f64]| -> Vec<f64> {
        let mut q: Vec<f64> = (0..d)
            .map(|j| {
                let v = p[j] + shift[j % shift.len()];
                if flips[j % flips.len()] {
                    -v
                } else {
                    v
                }
            })
            .collect();
        q.reverse();
        q
    };
    let rows: Vec<Vec<f64>> = c.data.rows().map(map).collect();
    let moved = Dataset::from_rows(&rows, c.data.response().to_vec()).unwrap();
    let x = QueryPoint::new(map(c.x.coords())).unwrap();
    let n = c.data.n();
    let s = 1 + ((n - 1) as f64 * s_frac) as usize;
    let a = dnn_estimate(&c.data, &c.x, s).unwrap();
    let b = dnn_estimate(&moved, &x, s).unwrap();
    prop_assert!(close(a, b, 1e-9), "{a} vs {b}");
    Ok(())
}

/// Distance correlation is symmetric, lies in `[0, 1]`, and ignores affine
/// changes of scale in either argument.
pub fn dcor_laws(u: &[f64], v: &[f64], a: f64, b: f64) -> Check {
    let r = distance_correlation(u, v).unwrap();
    prop_assert!((0.0..=1.0).contains(&r), "dcor {r}");
    let t = distance_correlation(v, u).unwrap();
    prop_assert!((r - t).abs() <= 1e-12, "asymmetric: {r} vs {t}");
    let moved: Vec<f64> = u.iter().map(|x| a + b * x).collect();
    let m = distance_correlation(&moved, v).unwrap();
    prop_assert!((r - m).abs() <= 1e-9, "affine: {r} vs {m}");
    let self_r = distance_correlation(u, u).unwrap();
    let spread = u.iter().any(|x| *x != u[0]);
    if spread {
        prop_assert!((self_r - 1.0).abs() <= 1e-9, "self dcor {self_r}");
    }
    Ok(())
}

/// Tuning twice on the same input yields the same trace.
pub fn tuning_determinism(c: &Case) -> Check {
    let s_max = (c.data.n() / 2).min(250);
    let a = tune_scale(&c.data, &c.x, 3, s_max).unwrap();
    let b = tune_scale(&c.data, &c.x, 3, s_max).unwrap();
    prop_assert_eq!(a, b);
    Ok(())
}

/// Splitting by treatment and reassembling returns the original sample.
pub fn stratified_provenance(c: &Case, w: &[bool]) -> Check {
    let n = c.data.n();
    let mut w: Vec<u8> = (0..n).map(|i| u8::from(w[i % w.len()])).collect();
    // each stratum needs two rows
    w[0] = 1;
    w[1] = 1;
    w[n - 1] = 0;
    w[n - 2] = 0;
    let data = c.data.clone().with_treatment(w).unwrap();
    let view = split_by_treatment(&data).unwrap();
    prop_assert_eq!(view.treated.n() + view.control.n(), n);
    for (k, &p) in view.parent_rows.iter().enumerate() {
        let (arm, i) = if k < view.treated.n() {
            (&view.treated, k)
        } else {
            (&view.control, k - view.treated.n())
        };
        prop_assert_eq!(arm.row(i), data.row(p));
        prop_assert_eq!(arm.response()[i], data.response()[p]);
    }
    prop_assert_eq!(view.reconstruct().unwrap(), data);
    Ok(())
}

/// Shifting every response by a constant leaves the bootstrap variance alone
/// and moves the interval by the same constant.
pub fn variance_shift_invariance(c: &Case, shift: f64, seed: u64) -> Check {
    let fit = FitConfig::default();
    let boot = BootstrapConfig {
        boot_reps: 50,
        seed,
        ..BootstrapConfig::default()
    };
    let base = regression_report(&c.data, &c.x, &fit, &boot).unwrap();
    let y: Vec<f64> = c.data.response().iter().map(|v| v + shift).collect();
    let moved = regression_report(&relabel(&c.data, y), &c.x, &fit, &boot).unwrap();
    let scale = 1.0 + base.variance.abs();
    prop_assert!(
        (moved.variance - base.variance).abs() <= 1e-8 * scale * (1.0 + shift.abs()),
        "{} vs {}",
        moved.variance,
        base.variance
    );
    prop_assert!(close(moved.ci_low, base.ci_low + shift, 1e-9));
    prop_assert!(close(moved.ci_high, base.ci_high + shift, 1e-9));
    Ok(())
}

/// Percentile intervals are ordered, nest with the level, and repeat
/// exactly for a fixed seed.
pub fn percentile_stability(c: &Case, seed: u64) -> Check {
    let fit = FitConfig::default();
    let narrow = BootstrapConfig {
        boot_reps: 60,
        level: 0.5,
        seed,
        ..BootstrapConfig::default()
    };
    let wide = BootstrapConfig {
        level: 0.9,
        ..narrow.clone()
    };
    let a = regression_report(&c.data, &c.x, &fit, &narrow).unwrap();
    let b = regression_report(&c.data, &c.x, &fit, &wide).unwrap();
    prop_assert!(a.ci_low <= a.ci_high);
    prop_assert!(b.ci_low <= a.ci_low && a.ci_high <= b.ci_high);
    let again = regression_report(&c.data, &c.x, &fit, &narrow).unwrap();
    prop_assert_eq!(a.ci_low.to_bits(), again.ci_low.to_bits());
    prop_assert_eq!(a.variance.to_bits(), again.variance.to_bits());
    Ok(())
}
