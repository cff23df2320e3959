//! Local limit laws: root-neighborhood probabilities, which hole carries the
//! infinite part, and the volume law of the finite holes.

use thiserror::Error;

use crate::gf::{boundary_coeffs, boundary_series, BoundaryCoefficients, GfError};
use crate::numeric::SqrtSixNumber;
use crate::series::PowerSeries;

type S6 = SqrtSixNumber;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error("boundary length {0} is below 2")]
    InvalidBoundary(usize),
    #[error("a neighborhood needs at least one hole")]
    NoHoles,
    #[error("hole index {index} is out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("truncation at order {order} leaves mass {deficit:.3e} above tolerance {tolerance:.3e} for hole {hole}")]
    InsufficientTruncation {
        hole: usize,
        order: usize,
        deficit: f64,
        tolerance: f64,
    },
}

/// A rigid neighborhood of the root: n triangles, root boundary m0 and
/// holes of the given boundary lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodSpec {
    pub n: u64,
    pub m0: usize,
    pub holes: Vec<usize>,
}

impl NeighborhoodSpec {
    pub fn new(n: u64, m0: usize, holes: Vec<usize>) -> Result<Self, LimitError> {
        if m0 < 2 {
            return Err(LimitError::InvalidBoundary(m0));
        }
        validate_holes(&holes)?;
        Ok(NeighborhoodSpec { n, m0, holes })
    }
}

fn validate_holes(holes: &[usize]) -> Result<(), LimitError> {
    if holes.is_empty() {
        return Err(LimitError::NoHoles);
    }
    if let Some(&m) = holes.iter().find(|&&m| m < 2) {
        return Err(LimitError::InvalidBoundary(m));
    }
    Ok(())
}

fn coeffs_for(max_m: usize) -> Result<BoundaryCoefficients, LimitError> {
    Ok(boundary_coeffs(max_m.max(2))?)
}

fn ratio(c: &BoundaryCoefficients, m: usize) -> S6 {
    c.b(m).unwrap() * &c.a(m).unwrap().inv().expect("a(m) > 0")
}

/// Which formula produced a probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitFormula {
    /// The general product formula over all holes.
    General,
    /// The single-hole form b(m₁)/b(m₀)·x₀ⁿ.
    Cylinder,
}

impl LimitFormula {
    pub fn label(self) -> &'static str {
        match self {
            LimitFormula::General => "general",
            LimitFormula::Cylinder => "cylinder",
        }
    }
}

/// P{T is a root neighborhood} in the limit:
/// a(m₁)…a(m_k) Σ_j b(m_j)/a(m_j) · x₀ⁿ / b(m₀).
pub fn rn_probability(spec: &NeighborhoodSpec) -> Result<(S6, LimitFormula), LimitError> {
    validate_holes(&spec.holes)?;
    let max_m = spec.holes.iter().copied().chain([spec.m0]).max().unwrap();
    let c = coeffs_for(max_m)?;
    let x0n = S6::x0().pow(spec.n as u32);
    let inv_b0 = c.b(spec.m0).unwrap().inv().expect("b(m) > 0");
    if spec.holes.len() == 1 {
        let v = c.b(spec.holes[0]).unwrap() * &inv_b0 * x0n;
        return Ok((v, LimitFormula::Cylinder));
    }
    let prod = spec
        .holes
        .iter()
        .fold(S6::one(), |acc, &m| acc * c.a(m).unwrap());
    let sum = spec
        .holes
        .iter()
        .fold(S6::zero(), |acc, &m| acc + ratio(&c, m));
    Ok((inv_b0 * prod * sum * x0n, LimitFormula::General))
}

/// Probability that hole `j` (1-based) is the one containing infinity.
pub fn max_part_probability(j: usize, holes: &[usize]) -> Result<S6, LimitError> {
    validate_holes(holes)?;
    if j == 0 || j > holes.len() {
        return Err(LimitError::IndexOutOfRange {
            index: j,
            count: holes.len(),
        });
    }
    let c = coeffs_for(*holes.iter().max().unwrap())?;
    let total = holes.iter().fold(S6::zero(), |acc, &m| acc + ratio(&c, m));
    Ok(ratio(&c, holes[j - 1]) * total.inv().expect("positive sum"))
}

/// Volume law of one finite hole: `[t^N] = C₀(N,m) x₀ᴺ / u_m(x₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleVolumeLaw {
    pub hole: usize,
    pub m: usize,
    pub pgf: PowerSeries<S6>,
    /// u_m(x₀) = a(m), the exact normalizer.
    pub normalizer: S6,
    /// Mass beyond the truncation, 1 − Σ retained coefficients (exact).
    pub tail: S6,
}

/// Joint pgf of the finite holes, a product of independent factors.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumePgf {
    pub which_max: usize,
    pub factors: Vec<HoleVolumeLaw>,
}

impl VolumePgf {
    /// Joint coefficient at the given volumes, one per factor.
    pub fn joint_coefficient(&self, volumes: &[usize]) -> Option<S6> {
        if volumes.len() != self.factors.len() {
            return None;
        }
        let mut acc = S6::one();
        for (f, &n) in self.factors.iter().zip(volumes) {
            acc = acc * f.pgf.coefficient(n).ok()?;
        }
        Some(acc)
    }

    /// Value at t_i = 0 for all i: every finite hole is empty.
    pub fn all_empty(&self) -> S6 {
        self.factors
            .iter()
            .fold(S6::one(), |acc, f| acc * f.pgf.c(0))
    }

    /// Value of the truncated pgf at t_i = 1.
    pub fn value_at_ones(&self) -> S6 {
        self.factors
            .iter()
            .fold(S6::one(), |acc, f| acc * f.pgf.eval_truncated(&S6::one()))
    }
}

/// Conditional pgf of the volumes of the finite holes, given that hole
/// `which_max` (1-based) is infinite. Fails when some factor's untracked
/// mass exceeds `tolerance`.
pub fn conditional_volume_pgf(
    holes: &[usize],
    which_max: usize,
    order: usize,
    tolerance: f64,
) -> Result<VolumePgf, LimitError> {
    validate_holes(holes)?;
    if which_max == 0 || which_max > holes.len() {
        return Err(LimitError::IndexOutOfRange {
            index: which_max,
            count: holes.len(),
        });
    }
    let c = coeffs_for(*holes.iter().max().unwrap())?;
    let mut factors = Vec::new();
    for (i, &m) in holes.iter().enumerate() {
        if i + 1 == which_max {
            continue;
        }
        let u = boundary_series(m, order.max(1))?;
        let normalizer = c.a(m).unwrap().clone();
        let scale = normalizer.inv().expect("a(m) > 0");
        let mut x0n = S6::one();
        let pgf = PowerSeries::from_fn(order, |n| {
            let v = S6::from_rational(u.c(n).clone()) * &x0n * &scale;
            x0n = &x0n * &S6::x0();
            v
        });
        let tail = S6::one() - pgf.eval_truncated(&S6::one());
        let deficit = tail.to_f64();
        if deficit > tolerance {
            return Err(LimitError::InsufficientTruncation {
                hole: i + 1,
                order,
                deficit,
                tolerance,
            });
        }
        factors.push(HoleVolumeLaw {
            hole: i + 1,
            m,
            pgf,
            normalizer,
            tail,
        });
    }
    Ok(VolumePgf { which_max, factors })
}
