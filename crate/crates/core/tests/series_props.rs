use proptest::prelude::*;

use uipt::numeric::{int, rat, BigRational};
use uipt::series::{binomial_series, PowerSeries};

type Q = BigRational;

const ORDER: usize = 8;

fn coeffs() -> impl Strategy<Value = Vec<Q>> {
    prop::collection::vec((-9i64..10, 1i64..6).prop_map(|(n, d)| rat(n, d)), ORDER)
}

fn series() -> impl Strategy<Value = PowerSeries<Q>> {
    coeffs().prop_map(PowerSeries::new)
}

fn unit_series() -> impl Strategy<Value = PowerSeries<Q>> {
    coeffs().prop_map(|mut c| {
        c[0] = int(1);
        PowerSeries::new(c)
    })
}

fn zero_constant() -> impl Strategy<Value = PowerSeries<Q>> {
    coeffs().prop_map(|mut c| {
        c[0] = int(0);
        PowerSeries::new(c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn product_is_commutative_and_distributive(a in series(), b in series(), c in series()) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
    }

    #[test]
    fn reciprocal_and_sqrt(u in unit_series()) {
        prop_assert_eq!(u.mul(&u.reciprocal().unwrap()), PowerSeries::one(ORDER));
        let r = u.sqrt().unwrap();
        prop_assert_eq!(r.mul(&r), u.clone());
        prop_assert_eq!(u.pow_rational(&rat(1, 2)).unwrap(), r);
        prop_assert_eq!(u.pow_rational(&int(3)).unwrap(), u.pow(3));
    }

    #[test]
    fn leibniz_rule(a in series(), b in series()) {
        let lhs = a.mul(&b).derivative();
        let rhs = a.derivative().mul(&b.truncate(ORDER - 1)).add(&a.truncate(ORDER - 1).mul(&b.derivative()));
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(a.integral().derivative(), a);
    }

    #[test]
    fn composition_is_associative(f in series(), g in zero_constant(), h in zero_constant()) {
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn binomial_exponents_add(p in -6i64..6, q in -6i64..6, c in -3i64..4) {
        let (a, b) = (rat(p, 2), rat(q, 3));
        let lhs = binomial_series(&int(c), &a, ORDER).mul(&binomial_series(&int(c), &b, ORDER));
        prop_assert_eq!(lhs, binomial_series(&int(c), &(a + b), ORDER));
    }
}

#[test]
fn geometric_series() {
    let one_minus_t = PowerSeries::from_polynomial(&[int(1), int(-1)], 10);
    let inv = one_minus_t.reciprocal().unwrap();
    assert!(inv.coeffs().iter().all(|c| *c == int(1)));
    assert_eq!(binomial_series(&int(-1), &int(-1), 10), inv);
}
