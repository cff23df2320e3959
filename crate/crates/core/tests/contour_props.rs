use proptest::prelude::*;

use uipt::contour::{
    asymptotic_ancestors, contour_coefficient, expected_ancestors, f_anc_coefficient,
    f_anc_composed, tail_bound, tail_coefficient,
};
use uipt::numeric::{int, rat, rational_to_f64, BigRational};
use uipt::series::{binomial_series, PowerSeries};
use uipt::stats::gamma32_density;

type Q = BigRational;

/// [tⁿ] 1/(r + (1−t)^{−1/2}) by series division.
fn tail_by_series(r: usize, order: usize) -> PowerSeries<Q> {
    let s = binomial_series(&int(-1), &rat(-1, 2), order);
    s.add_constant(&int(r as i64)).reciprocal().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tail_bound_holds_for_positive_n(r in 2usize..40, n in 1usize..60) {
        let c = tail_coefficient(r, n);
        prop_assert!(c <= tail_bound(r, n).unwrap());
        // one-sided only: the terms are negative past n = 0
        prop_assert!(c < int(0));
    }

    // the falling (2n−1)/(4(n−1)) term dominates below n ≈ √(2r)
    #[test]
    fn ancestors_grow_with_boundary(r in 1usize..40, dn in 0usize..200) {
        let n = r + 2 + dn;
        let a = expected_ancestors(r, n).unwrap().exact;
        let b = expected_ancestors(r, n + 1).unwrap().exact;
        prop_assert!(a < b);
        prop_assert!(a >= int(1));
    }
}

#[test]
fn ancestors_dip_for_tiny_boundaries() {
    let e = |r, n| expected_ancestors(r, n).unwrap().exact;
    assert!(e(2, 3) > e(2, 2));
    assert!(e(3, 3) < e(3, 2));
    assert!(e(32, 7) < e(32, 6));
    assert!(e(32, 8) > e(32, 7));
}

#[test]
fn tail_matches_series_division() {
    for r in 0..6 {
        let s = tail_by_series(r, 30);
        for n in 0..30 {
            assert_eq!(&tail_coefficient(r, n), s.c(n), "r={r} n={n}");
        }
    }
}

#[test]
fn tail_bound_fails_at_zero() {
    // the constant term 1/(r+1) exceeds r^{-1}/(r²−1)
    for r in 2..20 {
        assert_eq!(tail_coefficient(r, 0), rat(1, r as i64 + 1));
        assert!(tail_coefficient(r, 0) > tail_bound(r, 0).unwrap());
    }
    assert!(tail_bound(1, 4).is_none());
}

#[test]
fn closed_form_matches_composition() {
    for r in [1usize, 3, 7] {
        let s = f_anc_composed(r, 25).unwrap();
        for n in 0..25 {
            assert_eq!(&f_anc_coefficient(r, n), s.c(n), "r={r} n={n}");
        }
    }
}

#[test]
fn contour_coefficient_by_quadrature() {
    // E ξ + (3√π/2) E √ξ + 1 under the Gamma(3/2, 1) density
    let w = 1.5 * std::f64::consts::PI.sqrt();
    let f = |x: f64| (x + w * x.sqrt()) * gamma32_density(x);
    // substitute x = u² to remove the √x cusp, Simpson on [0, 8]
    let n = 20_000;
    let h = 8.0 / n as f64;
    let g = |u: f64| f(u * u) * 2.0 * u;
    let mut s = g(0.0) + g(8.0);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let value = s * h / 3.0 + 1.0;
    assert!(
        (value - rational_to_f64(&contour_coefficient())).abs() < 1e-9,
        "{value}"
    );
    assert_eq!(contour_coefficient(), rat(11, 2));
}

#[test]
fn ancestors_approach_the_asymptote() {
    let gaps: Vec<f64> = [8usize, 16, 32]
        .iter()
        .map(|&r| expected_ancestors(r, r * r).unwrap().relative_gap())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!((asymptotic_ancestors(1.0) - (2.0 + 1.5 * std::f64::consts::PI.sqrt())).abs() < 1e-15);
}
