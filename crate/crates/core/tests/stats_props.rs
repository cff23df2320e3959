use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uipt::layer::limit_density;
use uipt::stats::{gamma32_cdf, gamma32_density, ks_gamma32, ks_statistic, moment_summary};

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..12.0, 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cdf_is_monotone(a in 0.0f64..40.0, b in 0.0f64..40.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (gamma32_cdf(lo).unwrap(), gamma32_cdf(hi).unwrap());
        prop_assert!(fl <= fh);
        prop_assert!((0.0..=1.0).contains(&fl));
    }

    #[test]
    fn ks_is_invariant_under_monotone_maps(xs in samples()) {
        let mut sorted = xs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let direct = ks_statistic(&sorted, |x| gamma32_cdf(x).unwrap()).unwrap();
        let cubed: Vec<f64> = sorted.iter().map(|x| x.powi(3)).collect();
        let mapped = ks_statistic(&cubed, |y| gamma32_cdf(y.cbrt()).unwrap()).unwrap();
        prop_assert!((direct - mapped).abs() < 1e-12);
        prop_assert!((ks_gamma32(&xs).unwrap() - direct).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&direct));
    }

    #[test]
    fn summaries_ignore_order(mut xs in samples(), seed in any::<u64>()) {
        let a = moment_summary(&xs, 3.0).unwrap();
        let ks = ks_gamma32(&xs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..xs.len()).rev() {
            xs.swap(i, rng.gen_range(0..=i));
        }
        let b = moment_summary(&xs, 3.0).unwrap();
        prop_assert!((a.mean - b.mean).abs() < 1e-12);
        prop_assert!((a.m2 - b.m2).abs() < 1e-10);
        prop_assert!((a.se_mean - b.se_mean).abs() < 1e-10);
        prop_assert_eq!(ks, ks_gamma32(&xs).unwrap());
    }

    #[test]
    fn scaling_rescales_moments(xs in samples(), scale in 0.5f64..50.0) {
        let one = moment_summary(&xs, 1.0).unwrap();
        let s = moment_summary(&xs, scale).unwrap();
        prop_assert!((s.mean * scale - one.mean).abs() <= 1e-9 * (1.0 + one.mean.abs()));
        prop_assert!((s.m2 * scale * scale - one.m2).abs() <= 1e-9 * (1.0 + one.m2));
        prop_assert!(s.variance >= 0.0);
    }
}

#[test]
fn cdf_derivative_is_the_limit_density() {
    let h = 1e-5;
    for i in 1..400 {
        let x = i as f64 * 0.05;
        let d = (gamma32_cdf(x + h).unwrap() - gamma32_cdf(x - h).unwrap()) / (2.0 * h);
        let f = limit_density(x).unwrap();
        assert!((d - f).abs() < 1e-8, "x={x}: {d} vs {f}");
        assert!((gamma32_density(x) - f).abs() < 1e-15);
    }
}

#[test]
fn cdf_matches_closed_form() {
    // P(3/2, x) = erf(√x) − 2√(x/π) e^{−x}; erf by its Taylor series
    let erf = |z: f64| {
        let mut term = z;
        let mut sum = z;
        for n in 1..200 {
            term *= -z * z / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    };
    for x in [0.01f64, 0.3, 1.0, 1.5, 2.4, 2.6, 4.0, 6.0] {
        let closed = erf(x.sqrt()) - 2.0 * (x / std::f64::consts::PI).sqrt() * (-x).exp();
        assert!((gamma32_cdf(x).unwrap() - closed).abs() < 1e-13, "x={x}");
    }
}

#[test]
fn ks_detects_a_wrong_law() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Exp(1) is not Gamma(3/2, 1)
    let xs: Vec<f64> = (0..5000).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    assert!(ks_gamma32(&xs).unwrap() > 0.1);
}
