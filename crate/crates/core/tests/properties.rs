mod common;

use common::*;
use dnn::inference::quantile_sorted;
use dnn::two_scale::two_scale_weights;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_equivariance_holds(c in case(2..=80, 1..=5), f in 0.0..1.0f64, a in -20.0..20.0f64, b in -5.0..5.0f64) {
        affine_equivariance(&c, f, a, b)?;
    }

    #[test]
    fn row_order_does_not_matter((c, perm) in permuted_case(2..=80, 1..=5), f in 0.0..1.0f64) {
        permutation_invariance(&c, &perm, f)?;
    }

    #[test]
    fn estimate_stays_in_response_range(c in case(2..=80, 1..=5), f in 0.0..1.0f64) {
        range_containment(&c, f)?;
    }

    #[test]
    fn lstat_matches_subsample_average(c in case(2..=10, 1..=4)) {
        ustat_equals_lstat(&c)?;
    }

    #[test]
    fn weights_match_exact_binomials(n in 1..=60usize, f in 0.0..1.0f64) {
        let s = 1 + ((n - 1) as f64 * f) as usize;
        weights_match_binomials(n, s)?;
    }

    #[test]
    fn isometries_preserve_estimate(
        c in case(2..=60, 1..=5),
        shift in prop::collection::vec(-3.0..3.0f64, 1..6),
        flips in prop::collection::vec(any::<bool>(), 1..6),
        f in 0.0..1.0f64,
    ) {
        isometry_invariance(&c, &shift, &flips, f)?;
    }

    #[test]
    fn dcor_is_symmetric_bounded_and_scale_free(
        (u, v) in (3..60usize).prop_flat_map(|n| (
            prop::collection::vec(-5.0..5.0f64, n),
            prop::collection::vec(-5.0..5.0f64, n),
        )),
        a in -10.0..10.0f64,
        b in prop_oneof![-4.0..-0.25f64, 0.25..4.0f64],
    ) {
        dcor_laws(&u, &v, a, b)?;
    }

    #[test]
    fn tuning_is_deterministic(c in case(6..=120, 1..=4)) {
        tuning_determinism(&c)?;
    }

    #[test]
    fn strata_remember_their_parent_rows(c in case(4..=50, 1..=3), w in prop::collection::vec(any::<bool>(), 1..20)) {
        stratified_provenance(&c, &w)?;
    }

    #[test]
    fn bootstrap_variance_ignores_response_shift(c in case(6..=60, 1..=3), shift in -100.0..100.0f64, seed in any::<u64>()) {
        variance_shift_invariance(&c, shift, seed)?;
    }

    #[test]
    fn percentile_intervals_are_stable(c in case(6..=60, 1..=3), seed in any::<u64>()) {
        percentile_stability(&c, seed)?;
    }

    #[test]
    fn two_scale_plans_cancel_leading_bias(s1 in 1..500usize, gap in 1..500usize, wd in 1..=20usize) {
        let s2 = s1 + gap;
        let p = two_scale_weights(s1, s2, wd).unwrap();
        let e = -2.0 / wd as f64;
        prop_assert_eq!(p.w1 + p.w2, 1.0);
        prop_assert!((p.w1 * (s1 as f64).powf(e) + p.w2 * (s2 as f64).powf(e)).abs() <= 1e-12);
        prop_assert!(p.w1.min(p.w2) < 0.0 && p.w1.max(p.w2) > 0.0);
    }

    #[test]
    fn combined_weights_sum_to_one_with_a_negative_entry(n in 4..400usize, f in 0.0..1.0f64, wd in 1..=10usize) {
        let s = 1 + ((n / 2 - 1) as f64 * f) as usize;
        let w = two_scale_weights(s, 2 * s, wd).unwrap().combined_weights(n).unwrap();
        let sum: f64 = w.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
        prop_assert!(w.iter().any(|v| *v < 0.0));
    }

    #[test]
    fn quantiles_are_monotone_and_bounded(mut v in prop::collection::vec(-1e3..1e3f64, 1..200), p in 0.0..=1.0f64, q in 0.0..=1.0f64) {
        v.sort_by(f64::total_cmp);
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let a = quantile_sorted(&v, lo);
        let b = quantile_sorted(&v, hi);
        prop_assert!(a <= b);
        prop_assert!(v[0] <= a && b <= v[v.len() - 1]);
    }
}
