use num_bigint::BigInt;

use uipt::gf::{tutte_count, tutte_formula, u0_series, Source};
use uipt::numeric::BigRational;

fn factorial(n: u64) -> BigInt {
    (1..=n).map(BigInt::from).product()
}

/// Rooted triangulations of a 2-gon with 2n triangles (OEIS A000309):
/// 2^{n+1}(3n)!/(n!(2n+2)!).
fn a000309(n: u64) -> BigInt {
    (BigInt::from(2).pow(n as u32 + 1) * factorial(3 * n)) / (factorial(n) * factorial(2 * n + 2))
}

#[test]
fn two_gon_counts_match_a000309() {
    let known = [1u64, 1, 4, 24, 176, 1456, 13056];
    for (n, &k) in known.iter().enumerate() {
        assert_eq!(a000309(n as u64), BigInt::from(k));
    }
    let grid = u0_series(31, 1).unwrap();
    for n in 0..=15u64 {
        let expected = BigRational::from_integer(a000309(n));
        assert_eq!(grid.c(2 * n as usize, 0), &expected, "N={}", 2 * n);
        if n >= 1 {
            assert_eq!(tutte_formula(2 * n, 2), Some(a000309(n)), "N={}", 2 * n);
        }
    }
}

#[test]
fn formula_matches_series_beyond_the_acceptance_window() {
    let grid = u0_series(21, 11).unwrap();
    for n in 0..=20u64 {
        for m in 2..=12u64 {
            if let Some(v) = tutte_formula(n, m) {
                assert_eq!(
                    grid.c(n as usize, m as usize - 2),
                    &BigRational::from_integer(v),
                    "N={n} m={m}"
                );
            }
        }
    }
}

#[test]
fn parity_and_small_cases() {
    // a triangle alone; one way to glue a 2-gon shut
    assert_eq!(tutte_count(1, 3).unwrap().value, BigInt::from(1));
    assert_eq!(tutte_count(0, 2).unwrap().value, BigInt::from(1));
    assert!(tutte_count(1, 2).is_err());
    assert_eq!(tutte_formula(0, 2), None);
    assert_eq!(
        tutte_count(0, 2).unwrap().source,
        Source::GeneratingFunction
    );
    assert!(tutte_count(-1, 3).is_err());
    let c = tutte_count(12, 8).unwrap();
    assert_eq!(c.value, BigInt::from(672672));
    assert!(matches!(
        c.source,
        Source::Formula | Source::GeneratingFunction
    ));
}
