//! Generating functions of rooted near-triangulations: h(x), U₀(x,y), the
//! three-point product W, the singular parts A(y), B(y), and F₀(t).
//!
//! Conventions: in `u0_series`, `grid[N][m-2]` is the number of maps with N
//! triangles and boundary length m. In W, `[y^i z^j]` is the literal
//! coefficient of U₀(x,y)U₀(x,z)/U₀(x,0), so index i stands for boundary
//! length i+2 exactly as in U₀.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::numeric::{int, rat, BigRational, SqrtSixNumber};
use crate::series::{binomial_series, BivariateSeries, Field, PowerSeries, SeriesError};

type Q = BigRational;
type S6 = SqrtSixNumber;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("truncation order {got} is below the minimum {min}")]
    OrderTooSmall { got: usize, min: usize },
    #[error("no map has {n} triangles and boundary {m}: parity of N and m differs")]
    Parity { n: i64, m: i64 },
    #[error("triangle count must be nonnegative, got {0}")]
    NegativeTriangles(i64),
    #[error("boundary length must be at least 2, got {0}")]
    BoundaryTooShort(i64),
}

fn check_order(got: usize, min: usize) -> Result<(), GfError> {
    if got < min {
        Err(GfError::OrderTooSmall { got, min })
    } else {
        Ok(())
    }
}

/// The odd series h with h − 2h³ = x and h(0) = 0.
pub fn solve_h(order: usize) -> Result<PowerSeries<Q>, GfError> {
    check_order(order, 2)?;
    let x = PowerSeries::<Q>::var(order);
    let mut h = x.clone();
    // each pass of h ← x + 2h³ fixes two more coefficients
    for _ in 0..order / 2 + 1 {
        h = x.add(&h.pow(3).scale(&int(2)));
    }
    Ok(h)
}

/// Coefficients of U₀(x,y) in y, each a series in x to `order_x`.
fn u0_columns(order_x: usize, order_y: usize) -> Result<Vec<PowerSeries<Q>>, GfError> {
    let n1 = order_x + 1;
    let h = solve_h(n1.max(2))?.truncate(n1);
    // x/h = 1 − 2h², so the radicand is (1−2h²)² − 4xy and its root is
    // (1−2h²)·Σ_j C(1/2, j)(−4xy)^j (1−2h²)^{−2j}
    let c = PowerSeries::one(n1).sub(&h.pow(2).scale(&int(2)));
    let q = c.reciprocal()?.pow(2);
    let mut roots = Vec::with_capacity(order_y + 3);
    let mut power = c.clone();
    let mut binom = Q::one();
    let half = rat(1, 2);
    for j in 0..order_y + 3 {
        let coef = &binom * int(-4).pow(j as i32);
        roots.push(power.shift_up(j).scale(&coef));
        power = power.mul(&q);
        binom = binom * (&half - int(j as i64)) / int(j as i64 + 1);
    }
    let mut cols = Vec::with_capacity(order_y);
    for j in 0..order_y {
        let k = j + 2;
        let num = h.mul(&roots[k]).sub(&roots[k - 1]);
        let num = if k == 1 {
            num.add_constant(&Q::one())
        } else {
            num
        };
        cols.push(num.shift_down(1)?.scale(&rat(1, 2)));
    }
    Ok(cols)
}

/// U₀(x,y) with `grid[N][m-2] = C₀(N,m)`.
pub fn u0_series(order_x: usize, order_y: usize) -> Result<BivariateSeries<Q>, GfError> {
    check_order(order_x, 1)?;
    check_order(order_y, 1)?;
    let cols = u0_columns(order_x, order_y)?;
    Ok(BivariateSeries::from_fn(order_x, order_y, |i, j| {
        cols[j].c(i).clone()
    }))
}

/// u_m(x) = [y^{m−2}] U₀(x,y) as a series in x.
pub fn boundary_series(m: usize, order_x: usize) -> Result<PowerSeries<Q>, GfError> {
    if m < 2 {
        return Err(GfError::BoundaryTooShort(m as i64));
    }
    check_order(order_x, 1)?;
    let mut cols = u0_columns(order_x, m - 1)?;
    Ok(cols.swap_remove(m - 2))
}

/// U₀(x₀, y) as a series in y over ℚ(√6).
///
/// At x₀ one has h = 1/√6 and the radicand collapses to (4/9)(1 − √6y).
pub fn u0_at_x0(order_y: usize) -> Result<PowerSeries<S6>, GfError> {
    check_order(order_y, 1)?;
    let n = order_y + 2;
    let root = binomial_series(&-S6::sqrt6(), &rat(1, 2), n).scale(&S6::from_rational(rat(2, 3)));
    let y = PowerSeries::<S6>::var(n);
    let lead = PowerSeries::constant(S6::y0(), n).sub(&y);
    let num = y.add_constant(&-S6::x0()).add(&lead.mul(&root));
    let inv = (S6::x0() * S6::from_integer(2))
        .inv()
        .expect("x0 is nonzero");
    Ok(num.shift_down(2)?.scale(&inv))
}

/// Where a count came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Formula,
    GeneratingFunction,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::Formula => "formula",
            Source::GeneratingFunction => "gf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TutteCount {
    pub value: BigInt,
    pub source: Source,
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// The closed count 2^{j+2}(2m+3j−1)!(2m−3)! / ((j+1)!(2m+2j)!((m−2)!)²)
/// with N = m + 2j, j ≥ 0.
pub fn tutte_formula(n: u64, m: u64) -> Option<BigInt> {
    if m < 2 || n < m || !(n - m).is_multiple_of(2) {
        return None;
    }
    let j = (n - m) / 2;
    let num = (BigInt::one() << (j + 2)) * factorial(2 * m + 3 * j - 1) * factorial(2 * m - 3);
    let den = factorial(j + 1) * factorial(2 * m + 2 * j) * factorial(m - 2).pow(2);
    let (q, r) = num.div_rem(&den);
    debug_assert!(r.is_zero());
    Some(q)
}

/// Number of rooted near-triangulations with N triangles and boundary m.
pub fn tutte_count(n: i64, m: i64) -> Result<TutteCount, GfError> {
    if n < 0 {
        return Err(GfError::NegativeTriangles(n));
    }
    if m < 2 {
        return Err(GfError::BoundaryTooShort(m));
    }
    if (n - m).rem_euclid(2) != 0 {
        return Err(GfError::Parity { n, m });
    }
    if let Some(v) = tutte_formula(n as u64, m as u64) {
        return Ok(TutteCount {
            value: v,
            source: Source::Formula,
        });
    }
    let col = boundary_series(m as usize, n as usize + 1)?;
    let c = col.c(n as usize);
    Ok(TutteCount {
        value: c.to_integer(),
        source: Source::GeneratingFunction,
    })
}

/// a(m) and b(m), the coefficients of the singular parts A(y) and B(y).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCoefficients {
    a: Vec<S6>,
    b: Vec<S6>,
}

impl BoundaryCoefficients {
    pub fn max_m(&self) -> usize {
        self.a.len() + 1
    }

    pub fn a(&self, m: usize) -> Option<&S6> {
        m.checked_sub(2).and_then(|i| self.a.get(i))
    }

    pub fn b(&self, m: usize) -> Option<&S6> {
        m.checked_sub(2).and_then(|i| self.b.get(i))
    }
}

/// B(y) = (1 − √6y)^{−3/2}.
pub fn b_series(order: usize) -> PowerSeries<S6> {
    binomial_series(&-S6::sqrt6(), &rat(-3, 2), order)
}

/// A(y) = (3/2)(2s+1)/(s+1)² with s = √(1 − √6y).
pub fn a_series(order: usize) -> Result<PowerSeries<S6>, GfError> {
    let s = binomial_series(&-S6::sqrt6(), &rat(1, 2), order);
    let two = S6::from_integer(2);
    let num = s.scale(&two).add_constant(&S6::one());
    let den = s.add_constant(&S6::one()).pow(2);
    Ok(num.div(&den)?.scale(&S6::from_rational(rat(3, 2))))
}

pub fn boundary_coeffs(max_m: usize) -> Result<BoundaryCoefficients, GfError> {
    check_order(max_m, 2)?;
    let n = max_m - 1;
    Ok(BoundaryCoefficients {
        a: a_series(n)?.into_coeffs(),
        b: b_series(n).into_coeffs(),
    })
}

/// W = U₀(x,y)U₀(x,z)/U₀(x,0) at x = x₀; `[i][j]` is the coefficient of y^i z^j.
pub fn w_series_at_x0(order_y: usize, order_z: usize) -> Result<BivariateSeries<S6>, GfError> {
    let u = u0_at_x0(order_y.max(order_z))?;
    let inv0 = u.c(0).inv().expect("U0(x0,0) = 9/8");
    Ok(BivariateSeries::from_fn(order_y, order_z, |i, j| {
        u.c(i) * u.c(j) * &inv0
    }))
}

/// W with x kept symbolic: `cell(i, j)` is the x-series of [y^i z^j] W.
#[derive(Debug, Clone, PartialEq)]
pub struct WSeries {
    cells: Vec<Vec<PowerSeries<Q>>>,
}

impl WSeries {
    pub fn cell(&self, i: usize, j: usize) -> &PowerSeries<Q> {
        &self.cells[i][j]
    }

    pub fn order_y(&self) -> usize {
        self.cells.len()
    }

    pub fn order_z(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.order_y().min(self.order_z());
        (0..n).all(|i| (0..n).all(|j| self.cells[i][j] == self.cells[j][i]))
    }
}

pub fn w_series(order_x: usize, order_y: usize, order_z: usize) -> Result<WSeries, GfError> {
    check_order(order_x, 1)?;
    let cols = u0_columns(order_x, order_y.max(order_z).max(1))?;
    let inv0 = cols[0].reciprocal()?;
    let cells = (0..order_y)
        .map(|i| {
            let left = cols[i].mul(&inv0);
            (0..order_z).map(|j| left.mul(&cols[j])).collect()
        })
        .collect();
    Ok(WSeries { cells })
}

/// R(x,y) = U₀(x,y)/U₀(x,0), maps with no edge parallel to the root.
pub fn no_parallel_root_gf(order_x: usize, order_y: usize) -> Result<BivariateSeries<Q>, GfError> {
    check_order(order_x, 1)?;
    check_order(order_y, 1)?;
    let cols = u0_columns(order_x, order_y)?;
    let inv0 = cols[0].reciprocal()?;
    let r: Vec<_> = cols.iter().map(|c| c.mul(&inv0)).collect();
    Ok(BivariateSeries::from_fn(order_x, order_y, |i, j| {
        r[j].c(i).clone()
    }))
}

/// y₀⁻¹ x₀ U₀(x₀, y₀ t): the critical offspring law read off U₀.
pub fn offspring_from_u0(order: usize) -> Result<PowerSeries<S6>, GfError> {
    let u = u0_at_x0(order)?;
    let scale = S6::x0() * S6::y0().inv().expect("y0 is nonzero");
    Ok(u.dilate(&S6::y0()).scale(&scale))
}

/// Γ(k + 1/2)/√π, exact for any integer k.
pub fn gamma_half_over_sqrt_pi(k: i64) -> Q {
    let mut g = Q::one();
    if k >= 0 {
        for i in 0..k {
            g *= rat(2 * i + 1, 2);
        }
    } else {
        for i in k..0 {
            g /= rat(2 * i + 1, 2);
        }
    }
    g
}

/// F₀(t) = 2(1−t)^{−1/2} − 4 + 2(1−t)^{1/2}.
pub fn f0_series(order: usize) -> Result<PowerSeries<Q>, GfError> {
    check_order(order, 3)?;
    let m1 = Q::from_int(-1);
    let a = binomial_series(&m1, &rat(-1, 2), order);
    let b = binomial_series(&m1, &rat(1, 2), order);
    Ok(a.add(&b).scale(&int(2)).add_constant(&int(-4)))
}

/// [tⁿ]F₀ = 2(n−1)Γ(n−1/2)/(√π n!).
pub fn f0_coefficient_gamma(n: u64) -> Q {
    let fact = Q::from_integer(factorial(n));
    int(2) * int(n as i64 - 1) * gamma_half_over_sqrt_pi(n as i64 - 1) / fact
}

/// [tⁿ]F₀ through the boundary coefficients: b(n) y₀^{n−2}/n.
pub fn f0_coefficient_from_b(coeffs: &BoundaryCoefficients, n: usize) -> Option<S6> {
    let b = coeffs.b(n)?;
    Some(b * &S6::y0().pow((n - 2) as u32) * S6::from_rational(rat(1, n as i64)))
}

/// True when every coefficient is a nonnegative integer.
pub fn is_counting_series(grid: &BivariateSeries<Q>) -> bool {
    grid.grid()
        .iter()
        .flatten()
        .all(|c| c.is_integer() && !c.is_negative())
}

/// Float value of a nonnegative exact count, saturating.
pub fn count_to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_first_terms() {
        let h = solve_h(8).unwrap();
        assert_eq!(
            h.coeffs(),
            &[
                int(0),
                int(1),
                int(0),
                int(2),
                int(0),
                int(12),
                int(0),
                int(96)
            ]
        );
        let back = h.sub(&h.pow(3).scale(&int(2)));
        assert_eq!(back, PowerSeries::var(8));
    }

    #[test]
    fn h_at_critical_point() {
        let y0 = S6::y0();
        assert_eq!(&y0 - &(y0.pow(3) * S6::from_integer(2)), S6::x0());
    }

    #[test]
    fn u0_small_counts() {
        let u = u0_series(6, 4).unwrap();
        assert_eq!(u.c(0, 0), &int(1));
        assert_eq!(u.c(2, 0), &int(1));
        assert_eq!(u.c(4, 0), &int(4));
        assert!(is_counting_series(&u));
        for n in 0..6 {
            for j in 0..4 {
                if (n + j) % 2 == 1 {
                    assert!(u.c(n, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn tutte_sources() {
        assert_eq!(tutte_count(2, 2).unwrap().value, BigInt::from(1));
        assert_eq!(tutte_count(4, 2).unwrap().value, BigInt::from(4));
        let t = tutte_count(1, 3).unwrap();
        assert_eq!(t.source, Source::GeneratingFunction);
        assert_eq!(t.value, BigInt::from(1));
        assert_eq!(tutte_count(2, 3), Err(GfError::Parity { n: 2, m: 3 }));
        assert_eq!(tutte_count(-2, 2), Err(GfError::NegativeTriangles(-2)));
    }

    #[test]
    fn u0_at_x0_constant() {
        let u = u0_at_x0(4).unwrap();
        assert_eq!(u.c(0), &S6::from_rational(rat(9, 8)));
    }

    #[test]
    fn boundary_coefficient_examples() {
        let c = boundary_coeffs(4).unwrap();
        assert_eq!(c.b(2), Some(&S6::one()));
        assert_eq!(c.b(3), Some(&(S6::sqrt6() * S6::from_rational(rat(3, 2)))));
        assert_eq!(c.a(2), Some(&S6::from_rational(rat(9, 8))));
        assert_eq!(c.a(1), None);
    }

    #[test]
    fn f0_forms_agree() {
        let f = f0_series(12).unwrap();
        assert_eq!(
            &f.coeffs()[..5],
            &[int(0), int(0), rat(1, 2), rat(1, 2), rat(15, 32)]
        );
        for n in 2..12 {
            assert_eq!(f.c(n), &f0_coefficient_gamma(n as u64));
        }
    }

    #[test]
    fn half_integer_gamma() {
        assert_eq!(gamma_half_over_sqrt_pi(0), int(1));
        assert_eq!(gamma_half_over_sqrt_pi(1), rat(1, 2));
        assert_eq!(gamma_half_over_sqrt_pi(-1), int(-2));
    }
}
