//! The critical offspring law φ, its modification φ̄, iterates φ_r, and the
//! boundary-length kernels of the reversed branching process ζ̄ and of the
//! h-transformed forward chain.
//!
//! Generation 0 is the outer boundary. ζ̄ runs from the outer boundary
//! inwards: k particles at one level have l descendants one level in. The
//! forward chain runs outwards with q(l→k) = F₀ₖ K(k,l) / F₀ₗ.

pub mod forest;
pub mod kernel;
pub mod simulate;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::gf::{f0_coefficient_gamma, u0_at_x0, w_series_at_x0, GfError};
use crate::numeric::{int, rat, rational_sqrt, rational_to_f64, BigRational, SqrtSixNumber as S6};
use crate::series::{binomial_series, PowerSeries, SeriesError};

type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BranchingError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error("truncation order {got} is below the minimum {min}")]
    OrderTooSmall { got: usize, min: usize },
    #[error("iterate is evaluated only for t in [0, 1), got {0}")]
    PointOutOfDomain(f64),
    #[error("state {state} is outside the chain's state space")]
    InvalidState { state: usize },
    #[error("row from state {state} holds mass {mass:.17} after k = {ceiling}; missing mass exceeds {eps:e}")]
    CeilingExceeded {
        state: usize,
        ceiling: usize,
        mass: f64,
        eps: f64,
    },
    #[error("truncation bound {bound:e} exceeds tolerance {tolerance:e}")]
    TruncationBound { bound: f64, tolerance: f64 },
    #[error("forest is malformed: {0}")]
    MalformedForest(String),
    #[error("level gap {r} needs a forest of depth at least {need}, got {depth}")]
    InsufficientDepth { r: usize, need: usize, depth: usize },
}

/// The probability of degeneration k → 0 under ζ̄.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegenerationRule {
    /// p₀ᵏ + k(φ̄(0) − φ(0))p₀^{k−1}: the single-parent correction applied
    /// uniformly at l = 0, which keeps every row normalized.
    #[default]
    Uniform,
    /// φ̄(0)·φ(0)^{k−1} as literally stated; rows for k ≥ 2 then sum to
    /// 1 − (k−1)p₀^{k−1}/6.
    Printed,
}

fn check_order(got: usize, min: usize) -> Result<(), BranchingError> {
    if got < min {
        Err(BranchingError::OrderTooSmall { got, min })
    } else {
        Ok(())
    }
}

/// (1−t)^{1/2} as a series.
fn sigma(order: usize) -> PowerSeries<Q> {
    binomial_series(&int(-1), &rat(1, 2), order)
}

/// φ applied to a series argument whose constant term c has 1 − c a perfect
/// square: φ(s) = (1+2σ)/(1+σ)², σ = √(1−s).
pub fn phi_of(s: &PowerSeries<Q>) -> Result<PowerSeries<Q>, BranchingError> {
    let sig = s.neg().add_constant(&Q::one()).sqrt()?;
    let num = sig.scale(&int(2)).add_constant(&Q::one());
    let den = sig.add_constant(&Q::one()).pow(2);
    Ok(num.div(&den)?)
}

/// φ(t) = 1 − (1 + (1−t)^{−1/2})^{−2}.
pub fn phi_series(order: usize) -> PowerSeries<Q> {
    let sig = sigma(order);
    let num = sig.scale(&int(2)).add_constant(&Q::one());
    let den = sig.add_constant(&Q::one()).pow(2);
    num.div(&den).expect("(1+σ)² has constant term 4")
}

/// φ̄(t) = φ(t) − tφ(t)/6 + 1/6.
pub fn phibar_series(order: usize) -> PowerSeries<Q> {
    let phi = phi_series(order);
    phi.sub(&phi.shift_up(1).scale(&rat(1, 6)))
        .add_constant(&rat(1, 6))
}

/// p_d = 3·Cat_d / (2(d+2)4ᵈ), exact, for d < n.
pub fn offspring_table(n: usize) -> Vec<Q> {
    let mut out = Vec::with_capacity(n);
    let mut p = rat(3, 4);
    for d in 0..n {
        out.push(p.clone());
        p *= rat(2 * d as i64 + 1, 2 * (d as i64 + 3));
    }
    out
}

/// p̄_d, exact, for d < n.
pub fn modified_table(n: usize) -> Vec<Q> {
    let p = offspring_table(n);
    (0..n)
        .map(|d| {
            if d == 0 {
                &p[0] + rat(1, 6)
            } else {
                &p[d] - &p[d - 1] * rat(1, 6)
            }
        })
        .collect()
}

/// φ̄ read off the three-point function:
/// [tᵈ]φ̄ = y₀^{d−1}[yᵈ](x₀U₀(x₀,y) − x₀·y·[z]W(x₀,y,z)) + [d = 0]/6.
pub fn phibar_from_w(order: usize) -> Result<PowerSeries<S6>, BranchingError> {
    check_order(order, 2)?;
    let u = u0_at_x0(order)?;
    let w = w_series_at_x0(order, 2)?;
    let x0 = S6::x0();
    let y0 = S6::y0();
    let y0_inv = y0.inv().expect("y0 is nonzero");
    let mut scale = y0_inv;
    let mut out = Vec::with_capacity(order);
    for d in 0..order {
        let mut v = u.c(d).clone();
        if d >= 1 {
            v = v - w.c(d - 1, 1).clone();
        }
        let mut v = v * &x0 * &scale;
        if d == 0 {
            v = v + S6::from_rational(rat(1, 6));
        }
        out.push(v);
        scale = scale * &y0;
    }
    Ok(PowerSeries::new(out))
}

/// A truncated offspring distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    pub exact: Vec<Q>,
    pub float: Vec<f64>,
}

impl OffspringLaw {
    fn from_exact(exact: Vec<Q>) -> Self {
        let float = exact.iter().map(rational_to_f64).collect();
        OffspringLaw { exact, float }
    }

    pub fn order(&self) -> usize {
        self.exact.len()
    }

    pub fn partial_sum(&self) -> Q {
        self.exact.iter().fold(Q::zero(), |a, p| a + p)
    }

    pub fn partial_mean(&self) -> Q {
        self.exact
            .iter()
            .enumerate()
            .fold(Q::zero(), |a, (d, p)| a + p * int(d as i64))
    }
}

pub fn phi_coeffs(order: usize) -> Result<OffspringLaw, BranchingError> {
    check_order(order, 2)?;
    Ok(OffspringLaw::from_exact(phi_series(order).into_coeffs()))
}

pub fn phibar_coeffs(order: usize) -> Result<OffspringLaw, BranchingError> {
    check_order(order, 2)?;
    Ok(OffspringLaw::from_exact(phibar_series(order).into_coeffs()))
}

/// φ_r(t) = 1 − (r + (1−t)^{−1/2})^{−2} as a series.
pub fn phi_iter_series(r: usize, order: usize) -> PowerSeries<Q> {
    let s = binomial_series(&int(-1), &rat(-1, 2), order);
    let inv = s
        .add_constant(&int(r as i64))
        .reciprocal()
        .expect("constant r+1");
    inv.pow(2).neg().add_constant(&Q::one())
}

/// φ_r applied to a series whose constant term c has 1 − c a perfect square.
pub fn phi_iter_of(r: usize, s: &PowerSeries<Q>) -> Result<PowerSeries<Q>, BranchingError> {
    let root = s.neg().add_constant(&Q::one()).sqrt()?;
    let inv = root
        .reciprocal()?
        .add_constant(&int(r as i64))
        .reciprocal()?;
    Ok(inv.pow(2).neg().add_constant(&Q::one()))
}

/// φ_r(t) for t in [0, 1).
pub fn phi_iter_point(r: usize, t: f64) -> Result<f64, BranchingError> {
    if !(0.0..1.0).contains(&t) {
        return Err(BranchingError::PointOutOfDomain(t));
    }
    let s = r as f64 + 1.0 / (1.0 - t).sqrt();
    Ok(1.0 - 1.0 / (s * s))
}

/// φ_r at t = 1 − q², exactly: 1 − q²/(rq + 1)².
pub fn phi_iter_exact(r: usize, q: &Q) -> Q {
    let d = int(r as i64) * q + Q::one();
    Q::one() - q * q / (&d * &d)
}

/// φ at t = 1 − q² through the offspring closed form: (1+2q)/(1+q)².
pub fn phi_exact(q: &Q) -> Q {
    let d = q + Q::one();
    (q * int(2) + Q::one()) / (&d * &d)
}

/// 1 − φ_r(0) = 1/(r+1)².
pub fn survival_probability(r: usize) -> Q {
    Q::one() - phi_iter_exact(r, &Q::one())
}

/// Square root of 1 − t for a rational t when it is rational.
pub fn sqrt_one_minus(t: &Q) -> Option<Q> {
    if t > &Q::one() {
        return None;
    }
    rational_sqrt(&(Q::one() - t))
}

/// Exact ζ̄ kernel: P{ζ̄ moves from k to l}.
pub fn kernel_modified(k: usize, l: usize) -> Q {
    kernel_modified_with(k, l, DegenerationRule::Uniform)
}

pub fn kernel_modified_with(k: usize, l: usize, rule: DegenerationRule) -> Q {
    if k == 0 {
        return if l == 0 { Q::one() } else { Q::zero() };
    }
    let p = offspring_table(l + 1);
    let p0_pow = p[0].pow(k as i32 - 1);
    if l == 0 {
        return match rule {
            DegenerationRule::Uniform => &p0_pow * &p[0] + &p0_pow * rat(k as i64, 6),
            DegenerationRule::Printed => (&p[0] + rat(1, 6)) * p0_pow,
        };
    }
    let phi = PowerSeries::new(p.clone());
    let a = phi.pow(k as u32).c(l).clone();
    a - int(k as i64) * &p[l - 1] * rat(1, 6) * p0_pow
}

/// [tᵏ]F₀ as an exact rational.
pub fn f0_exact(k: usize) -> Q {
    if k < 2 {
        Q::zero()
    } else {
        f0_coefficient_gamma(k as u64)
    }
}

/// Exact forward transition q(l→k) = F₀ₖ K(k,l)/F₀ₗ.
pub fn forward_exact(l: usize, k: usize) -> Result<Q, BranchingError> {
    if l < 2 {
        return Err(BranchingError::InvalidState { state: l });
    }
    Ok(f0_exact(k) * kernel_modified(k, l) / f0_exact(l))
}

/// Catalan number, exact.
pub fn catalan(n: u64) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..n {
        c = c * BigInt::from(2 * (2 * i + 1)) / BigInt::from(i + 2);
    }
    c
}

/// True when all entries are ≥ 0.
pub fn nonnegative(v: &[Q]) -> bool {
    v.iter().all(|x| !x.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_offspring_probabilities() {
        let law = phi_coeffs(4).unwrap();
        assert_eq!(&law.exact[..3], &[rat(3, 4), rat(1, 8), rat(3, 64)]);
        assert_eq!(phibar_coeffs(2).unwrap().exact[0], rat(11, 12));
    }

    #[test]
    fn closed_form_table_matches_series() {
        assert_eq!(offspring_table(40), phi_series(40).into_coeffs());
        assert_eq!(modified_table(40), phibar_series(40).into_coeffs());
        for d in 0..10u64 {
            let c = Q::from_integer(catalan(d)) * int(3)
                / (int(2) * int(d as i64 + 2) * int(4).pow(d as i32));
            assert_eq!(offspring_table(11)[d as usize], c);
        }
    }

    #[test]
    fn phibar_from_three_point_function() {
        let from_w = phibar_from_w(20).unwrap();
        let direct = phibar_series(20);
        for d in 0..20 {
            assert_eq!(
                from_w.c(d),
                &S6::from_rational(direct.c(d).clone()),
                "d={d}"
            );
        }
    }

    #[test]
    fn iterates() {
        assert_eq!(phi_iter_series(0, 8), PowerSeries::var(8));
        assert_eq!(phi_iter_series(1, 20), phi_series(20));
        for r in 1..20 {
            assert_eq!(survival_probability(r), int((r as i64 + 1).pow(2)).recip());
        }
        assert!(phi_iter_point(2, 1.0).is_err());
    }

    #[test]
    fn degeneration_variants() {
        assert_eq!(kernel_modified(1, 0), rat(11, 12));
        assert_eq!(
            kernel_modified_with(2, 0, DegenerationRule::Printed),
            rat(11, 16)
        );
        assert_eq!(kernel_modified(2, 0), rat(13, 16));
        assert_eq!(kernel_modified(3, 1), Q::zero());
    }
}
