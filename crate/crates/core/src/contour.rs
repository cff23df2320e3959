//! Ancestor counts between hull levels r and 2r, and the linear contour
//! bound built on them.
//!
//! Exact values use the unmodified process ζ, whose weights dominate those of
//! ζ̄; Monte Carlo counts come from ζ̄ skeletons.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::branching::forest::SkeletonForest;
use crate::branching::simulate::simulate_skeleton;
use crate::branching::{f0_exact, phi_iter_series, BranchingError};
use crate::numeric::{int, rat, rational_to_f64, BigRational};
use crate::series::{binomial_series, BivariateSeries, PowerSeries, SeriesError};

type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContourError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Branching(#[from] BranchingError),
    #[error("conditioning on n = {0} edges needs n >= 2")]
    SmallBoundary(usize),
    #[error("forest of depth {depth} cannot hold levels r = {r} and 2r")]
    InsufficientDepth { r: usize, depth: usize },
    #[error("closed form and partial fractions differ at t^{degree} for r = {r}")]
    Disagreement { r: usize, degree: usize },
}

/// Γ(j+1/2)/(√π j!) = C(2j,j)/4ʲ, the coefficients of (1−t)^{−1/2}.
fn central(n: usize) -> Vec<Q> {
    let mut out = Vec::with_capacity(n + 1);
    let mut g = Q::one();
    for j in 0..=n {
        out.push(g.clone());
        g *= rat(2 * j as i64 + 1, 2 * (j as i64 + 1));
    }
    out
}

/// F₀(z(φ_r(t) − φ_r(0)) + φ_r(0)); `grid[i][j]` is the coefficient of tⁱzʲ.
pub fn ancestor_pgf(r: usize, order: usize) -> BivariateSeries<Q> {
    let phi = phi_iter_series(r, order);
    let c = int((r as i64 + 1).pow(2)).recip();
    let root_c = int(r as i64 + 1).recip();
    // D/c with D = φ_r − φ_r(0)
    let d = phi.add_constant(&-phi.c(0).clone()).scale(&c.recip());
    let mut powers = vec![PowerSeries::one(order)];
    for j in 1..order {
        let next = powers[j - 1].mul(&d);
        powers.push(next);
    }
    // 2(1−v)^{−1/2} + 2(1−v)^{1/2}, each expanded in z
    let neg = binomial_series(&int(-1), &rat(-1, 2), order);
    let pos = binomial_series(&int(-1), &rat(1, 2), order);
    let inv_root = root_c.recip();
    BivariateSeries::from_fn(order, order, |i, j| {
        let w = neg.c(j) * &inv_root + pos.c(j) * &root_c;
        let mut v = int(2) * w * powers[j].c(i);
        if i == 0 && j == 0 {
            v -= int(4);
        }
        v
    })
}

/// F₀′(φ_r)(φ_r − φ_r(0)) from F₀′(u) = u(1−u)^{−3/2}.
pub fn f_anc_composed(r: usize, order: usize) -> Result<PowerSeries<Q>, ContourError> {
    let u = phi_iter_series(r, order);
    let one_minus = u.neg().add_constant(&Q::one());
    let root = one_minus.sqrt()?;
    let f0_prime = u.div(&one_minus.mul(&root))?;
    let gap = u.add_constant(&-u.c(0).clone());
    Ok(f0_prime.mul(&gap))
}

/// [tⁿ](r + (1−t)^{−1/2})^{−1}, exact.
pub fn tail_coefficient(r: usize, n: usize) -> Q {
    let g = central(n + 1);
    match r {
        0 => {
            // √(1−t)
            let pos = binomial_series(&int(-1), &rat(1, 2), n + 1);
            pos.c(n).clone()
        }
        1 => {
            // (s − 1)(1 − t)/t
            let prev = if n >= 1 { g[n].clone() } else { Q::zero() };
            &g[n + 1] - prev
        }
        _ => {
            // (r − s)(1 − t)/((r²−1) − r²t) over the denominator 4ⁿ(r²−1)^{n+1}
            let r2 = BigInt::from(r as u64).pow(2);
            let a = &r2 - BigInt::one();
            let mut r2_pow = vec![BigInt::one()];
            let mut a_pow = vec![BigInt::one()];
            for k in 1..=n {
                r2_pow.push(&r2_pow[k - 1] * &r2);
                a_pow.push(&a_pow[k - 1] * &a);
            }
            // numerators of e_k over (r²−1)^{n+1}
            let e = |k: usize| -> BigInt {
                if k == 0 {
                    a_pow[n].clone()
                } else {
                    &r2_pow[k - 1] * &a_pow[n - k]
                }
            };
            let four = |k: usize| BigInt::one() << (2 * k);
            let mut num = BigInt::from(r as u64) * e(n) * four(n);
            let mut binom = BigInt::one();
            for j in 0..=n {
                num -= &binom * four(n - j) * e(n - j);
                binom = binom * BigInt::from(2 * (2 * j as u64 + 1)) / BigInt::from(j as u64 + 1);
            }
            Q::new(num, four(n) * &a_pow[n] * &a)
        }
    }
}

/// r^{2n−1}/(r²−1)^{n+1}, the bound on the tail term for r ≥ 2.
pub fn tail_bound(r: usize, n: usize) -> Option<Q> {
    if r < 2 {
        return None;
    }
    let r = int(r as i64);
    let a = &r * &r - Q::one();
    Some(r.pow(2 * n as i32 - 1) / a.pow(n as i32 + 1))
}

/// [tⁿ]F_anc from the partial fraction expansion
/// s³/(r+1)² + 3r s²/(r+1)² + 2(r²−r−1)s/(r+1)² − 2r/(r+1) + 1/(r+s),
/// s = (1−t)^{−1/2}.
pub fn f_anc_coefficient(r: usize, n: usize) -> Q {
    let g = &central(n)[n];
    let rr = int(r as i64);
    let sq = int((r as i64 + 1).pow(2));
    let cube = int(2 * n as i64 + 1) * g;
    let lin = int(2) * (&rr * &rr - &rr - Q::one()) * g;
    let mut v = (cube + int(3) * &rr + lin) / sq;
    if n == 0 {
        v -= int(2) * &rr / int(r as i64 + 1);
    }
    v + tail_coefficient(r, n)
}

pub fn f_anc_partial_fractions(r: usize, order: usize) -> PowerSeries<Q> {
    PowerSeries::new(
        (0..order)
            .into_par_iter()
            .map(|n| f_anc_coefficient(r, n))
            .collect(),
    )
}

/// F_anc to the given order, computed both ways; errors if they differ.
pub fn f_anc_series(r: usize, order: usize) -> Result<PowerSeries<Q>, ContourError> {
    let composed = f_anc_composed(r, order)?;
    let split = f_anc_partial_fractions(r, order);
    if let Some(degree) = (0..order).find(|&i| composed.c(i) != split.c(i)) {
        return Err(ContourError::Disagreement { r, degree });
    }
    Ok(composed)
}

/// 3√π/2.
pub fn sqrt_pi_weight() -> f64 {
    1.5 * std::f64::consts::PI.sqrt()
}

/// x + (3√π/2)√x + 1.
pub fn asymptotic_ancestors(x: f64) -> f64 {
    x + sqrt_pi_weight() * x.sqrt() + 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct AncestorReport {
    pub r: usize,
    pub n: usize,
    pub x: f64,
    pub exact: Q,
    pub value: f64,
    pub asymptotic: f64,
}

impl AncestorReport {
    pub fn relative_gap(&self) -> f64 {
        (self.value - self.asymptotic).abs() / self.asymptotic
    }
}

/// E[ancestors at level 2r | n edges at level r] = [tⁿ]F_anc/[tⁿ]F₀.
pub fn expected_ancestors(r: usize, n: usize) -> Result<AncestorReport, ContourError> {
    if n < 2 {
        return Err(ContourError::SmallBoundary(n));
    }
    let exact = f_anc_coefficient(r, n) / f0_exact(n);
    let x = if r == 0 {
        f64::INFINITY
    } else {
        n as f64 / (r * r) as f64
    };
    Ok(AncestorReport {
        r,
        n,
        x,
        value: rational_to_f64(&exact),
        exact,
        asymptotic: if r == 0 {
            f64::NAN
        } else {
            asymptotic_ancestors(x)
        },
    })
}

/// E ξ + (3√π/2) E √ξ + 1 for ξ ~ Gamma(3/2, 1).
/// E ξ = 3/2 and E √ξ = Γ(2)/Γ(3/2) = 2/√π, so the √π cancels.
pub fn contour_coefficient() -> Q {
    let mean = rat(3, 2);
    let weight_times_root_moment = rat(3, 2) * int(2);
    mean + weight_times_root_moment + Q::one()
}

/// r(Eξ + (3√π/2)E√ξ + 1), an upper bound on the expected contour length.
pub fn contour_length_bound(r: usize) -> f64 {
    let bound = r as f64 * rational_to_f64(&contour_coefficient());
    debug_assert!(r == 0 || bound < 10.0 * r as f64);
    bound
}

/// Vertices of generation `outer` with a descendant in generation `inner`.
pub fn ancestors_between(forest: &SkeletonForest, outer: usize, inner: usize) -> usize {
    forest
        .has_descendant(outer, inner)
        .into_iter()
        .filter(|&b| b)
        .count()
}

/// Ancestors at level 2r of level r, counting levels from the inner boundary.
pub fn monte_carlo_ancestors(forest: &SkeletonForest, r: usize) -> Result<usize, ContourError> {
    let depth = forest.depth();
    if depth < 2 * r {
        return Err(ContourError::InsufficientDepth { r, depth });
    }
    Ok(ancestors_between(forest, depth - 2 * r, depth - r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AncestorSamples {
    pub counts: Vec<usize>,
    pub mean: f64,
    pub stderr: f64,
}

/// Ancestor counts of ζ̄ skeletons conditioned on exactly n edges at level r.
/// The forward chain is Markov, so the r levels above are a fresh run from n.
/// Replica ids start at `first_replica`.
pub fn conditioned_ancestor_samples(
    r: usize,
    n: usize,
    replicas: usize,
    seed: u64,
    first_replica: u64,
    eps: f64,
) -> Result<AncestorSamples, ContourError> {
    let counts: Vec<usize> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            simulate_skeleton(r, n, seed, first_replica + i, eps)
                .map(|f| ancestors_between(&f, 0, r))
        })
        .collect::<Result<_, _>>()?;
    let len = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / len;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / (len - 1.0).max(1.0);
    Ok(AncestorSamples {
        counts,
        mean,
        stderr: (var / len).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gap_counts_every_edge() {
        for n in 2..20 {
            assert_eq!(expected_ancestors(0, n).unwrap().exact, int(n as i64));
        }
    }

    #[test]
    fn two_routes_agree() {
        for r in [0, 1, 2, 5] {
            f_anc_series(r, 24).unwrap();
        }
    }

    #[test]
    fn tail_matches_series() {
        for r in [0usize, 1, 3] {
            let s = binomial_series(&int(-1), &rat(-1, 2), 12).add_constant(&int(r as i64));
            let inv = s.reciprocal().unwrap();
            for n in 0..12 {
                assert_eq!(&tail_coefficient(r, n), inv.c(n), "r={r} n={n}");
            }
        }
    }

    #[test]
    fn coefficient_is_eleven_halves() {
        assert_eq!(contour_coefficient(), rat(11, 2));
        assert_eq!(contour_length_bound(1), 5.5);
    }
}
