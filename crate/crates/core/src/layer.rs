//! The layer-transfer operator at criticality, in the w-coordinate
//! w = √(1 − √6y).
//!
//! A function g(w) is carried in its G-form, g = G(w)/(w³(1−w²)). Under this
//! substitution the one-layer operator splits as B = B₁ − ψ·g(1/2), where B₁
//! acts by a Möbius shift of G and ψ is a fixed rank-one factor. Powers of B₁
//! have closed forms, so Bᴿ reduces to a scalar recursion over the values
//! s_r = (Bʳg)(1/2).

use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::gf::{u0_at_x0, GfError};
use crate::numeric::{int, rat, rational_to_f64, BigRational, SqrtSixNumber};
use crate::series::{binomial_series, Field, PowerSeries, SeriesError};

type Q = BigRational;
type S6 = SqrtSixNumber;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayerError {
    #[error(transparent)]
    Gf(#[from] GfError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("evaluation hits a pole at w = {0}")]
    Pole(String),
    #[error("G(1) must vanish for the value at w = 1 to exist")]
    SingularAtOne,
    #[error("identity fails for j = {j} at R = {r}")]
    Mismatch { j: usize, r: usize },
    #[error("density is defined for x >= 0, got {0}")]
    NegativeArgument(f64),
}

/// Dense polynomial over ℚ, ascending coefficients, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    coeffs: Vec<Q>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![] }
    }

    pub fn constant(c: Q) -> Self {
        Self::new(vec![c])
    }

    /// c·wᵈ
    pub fn monomial(c: Q, d: usize) -> Self {
        let mut v = vec![Q::zero(); d + 1];
        v[d] = c;
        Self::new(v)
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| int(v)).collect())
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let z = Q::zero();
        Self::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&z) + rhs.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(&int(-1)))
    }

    pub fn scale(&self, k: &Q) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Q::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: usize) -> Self {
        (0..e).fold(Self::constant(Q::one()), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * int(i as i64))
                .collect(),
        )
    }

    pub fn eval(&self, w: &Q) -> Q {
        self.coeffs
            .iter()
            .rev()
            .fold(Q::zero(), |acc, c| acc * w + c)
    }

    /// p(w²)
    pub fn in_square(&self) -> Self {
        let mut v = vec![Q::zero(); 2 * self.coeffs.len()];
        for (i, c) in self.coeffs.iter().enumerate() {
            v[2 * i] = c.clone();
        }
        Self::new(v)
    }

    pub fn eval_series<T: Field>(&self, s: &PowerSeries<T>) -> PowerSeries<T> {
        let n = s.order();
        self.coeffs
            .iter()
            .rev()
            .fold(PowerSeries::zero(n), |acc, c| {
                acc.mul(s).add_constant(&T::from_rational(c))
            })
    }

    /// Σ pᵢ (aw+b)ⁱ (cw+d)^{deg−i}, the numerator of p((aw+b)/(cw+d)).
    fn homogenized_moebius(&self, a: &Q, b: &Q, c: &Q, d: &Q) -> Self {
        let deg = self.degree();
        let top = Polynomial::new(vec![b.clone(), a.clone()]);
        let bottom = Polynomial::new(vec![d.clone(), c.clone()]);
        let mut acc = Self::zero();
        for (i, p) in self.coeffs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            acc = acc.add(&top.pow(i).mul(&bottom.pow(deg - i)).scale(p));
        }
        acc
    }
}

/// N(w)/D(w) over ℚ. Not reduced; equality is by cross-multiplication.
#[derive(Debug, Clone)]
pub struct RationalFunction {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl PartialEq for RationalFunction {
    fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        RationalFunction { num, den }
    }

    pub fn polynomial(p: Polynomial) -> Self {
        Self::new(p, Polynomial::constant(Q::one()))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        if self.den == rhs.den {
            return Self::new(self.num.add(&rhs.num), self.den.clone());
        }
        Self::new(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(&int(-1)))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self::new(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }

    pub fn scale(&self, k: &Q) -> Self {
        Self::new(self.num.scale(k), self.den.clone())
    }

    pub fn eval(&self, w: &Q) -> Option<Q> {
        let d = self.den.eval(w);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(w) / d)
        }
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.num
                .derivative()
                .mul(&self.den)
                .sub(&self.num.mul(&self.den.derivative())),
            self.den.mul(&self.den),
        )
    }

    /// f((aw+b)/(cw+d))
    pub fn moebius(&self, a: &Q, b: &Q, c: &Q, d: &Q) -> Self {
        let n = self.num.homogenized_moebius(a, b, c, d);
        let m = self.den.homogenized_moebius(a, b, c, d);
        let lin = Polynomial::new(vec![d.clone(), c.clone()]);
        let (dn, dd) = (self.num.degree(), self.den.degree());
        if dd >= dn {
            Self::new(n.mul(&lin.pow(dd - dn)), m)
        } else {
            Self::new(n, m.mul(&lin.pow(dn - dd)))
        }
    }

    /// Series expansion at a series argument; the denominator may vanish to
    /// some order at t = 0 provided the numerator vanishes at least as much.
    /// The result has `s.order() − valuation` coefficients.
    pub fn eval_series<T: Field>(&self, s: &PowerSeries<T>) -> Result<PowerSeries<T>, SeriesError> {
        let n = self.num.eval_series(s);
        let d = self.den.eval_series(s);
        let v = d.coeffs().iter().take_while(|c| c.is_zero()).count();
        if v >= d.order() {
            return Err(SeriesError::NonInvertibleConstant);
        }
        n.shift_down(v)?.div(&d.shift_down(v)?)
    }
}

/// g(w) = G(w)/(w³(1−w²)), carried through G.
#[derive(Debug, Clone, PartialEq)]
pub struct WFunction {
    g: RationalFunction,
}

fn w3_one_minus_w2() -> Polynomial {
    Polynomial::from_ints(&[0, 0, 0, 1, 0, -1])
}

fn is_pole_free_point(w: &Q) -> bool {
    !w.is_zero() && *w != Q::one() && *w != int(-1)
}

/// (2j+1)!!/2ʲ
pub fn double_factorial_ratio(j: usize) -> Q {
    (0..j).fold(Q::one(), |acc, i| acc * rat(2 * i as i64 + 3, 2))
}

/// P_j with P₀ = 1 and P_{j+1}(t) = (P_j(t) − 2tP_j′(t)/(2j+3))(1−t).
pub fn p_polynomial(j: usize) -> Polynomial {
    let one_minus_t = Polynomial::from_ints(&[1, -1]);
    let t = Polynomial::from_ints(&[0, 1]);
    let mut p = Polynomial::constant(Q::one());
    for i in 0..j {
        let corr = t.mul(&p.derivative()).scale(&rat(2, 2 * i as i64 + 3));
        p = p.sub(&corr).mul(&one_minus_t);
    }
    p
}

impl WFunction {
    pub fn from_g_form(g: RationalFunction) -> Self {
        WFunction { g }
    }

    pub fn g_form(&self) -> &RationalFunction {
        &self.g
    }

    /// g(w) as a rational function of w.
    pub fn as_rational(&self) -> RationalFunction {
        self.g.mul(&RationalFunction::new(
            Polynomial::constant(Q::one()),
            w3_one_minus_w2(),
        ))
    }

    /// g₀(w) = 1/w³, the fixed point; G = 1 − w².
    pub fn g0() -> Self {
        WFunction::from_g_form(RationalFunction::polynomial(Polynomial::from_ints(&[
            1, 0, -1,
        ])))
    }

    /// The j-th moment function (y d/dy)ʲ B(y) in w:
    /// (2j+1)!!/2ʲ · w^{−(2j+3)} P_j(w²), so G = c_j w^{−2j} P_j(w²)(1−w²).
    pub fn f_j(j: usize) -> Self {
        let num = p_polynomial(j)
            .in_square()
            .mul(&Polynomial::from_ints(&[1, 0, -1]))
            .scale(&double_factorial_ratio(j));
        let den = Polynomial::monomial(Q::one(), 2 * j);
        WFunction::from_g_form(RationalFunction::new(num, den))
    }

    /// The rank-one factor ψ of the layer operator;
    /// Ψ(w) = (w+2)w³/(8(1+w)²) − 3/32.
    pub fn psi() -> Self {
        let a = RationalFunction::new(
            Polynomial::from_ints(&[0, 0, 0, 2, 1]).scale(&rat(1, 8)),
            Polynomial::from_ints(&[1, 2, 1]),
        );
        let b = RationalFunction::polynomial(Polynomial::constant(rat(3, 32)));
        WFunction::from_g_form(a.sub(&b))
    }

    pub fn add(&self, rhs: &Self) -> Self {
        WFunction::from_g_form(self.g.add(&rhs.g))
    }

    pub fn scale(&self, k: &Q) -> Self {
        WFunction::from_g_form(self.g.scale(k))
    }

    fn g_at(&self, w: &Q) -> Result<Q, LayerError> {
        self.g
            .eval(w)
            .ok_or_else(|| LayerError::Pole(w.to_string()))
    }

    fn g_prime_at(&self, w: &Q) -> Result<Q, LayerError> {
        self.g
            .derivative()
            .eval(w)
            .ok_or_else(|| LayerError::Pole(w.to_string()))
    }

    /// g(w); at w = 1 the limit −G′(1)/2, which needs G(1) = 0.
    pub fn value_at(&self, w: &Q) -> Result<Q, LayerError> {
        if *w == Q::one() {
            if !self.g_at(w)?.is_zero() {
                return Err(LayerError::SingularAtOne);
            }
            return Ok(-self.g_prime_at(w)? / int(2));
        }
        if !is_pole_free_point(w) {
            return Err(LayerError::Pole(w.to_string()));
        }
        Ok(self.g_at(w)? / w3_one_minus_w2().eval(w))
    }

    /// (B₁ᵏ g)(w) from the closed form
    /// [G(w/(kw+1)) − G(1/(k+1))]/(w³(1−w²)), with the derivative form
    /// −G′(1/(k+1))/(2(k+1)²) at w = 1.
    pub fn b1_power(&self, k: usize, w: &Q) -> Result<Q, LayerError> {
        if k == 0 {
            return self.value_at(w);
        }
        let k1 = int(k as i64 + 1);
        let at = k1.recip();
        if *w == Q::one() {
            return Ok(-self.g_prime_at(&at)? / (int(2) * &k1 * &k1));
        }
        let kw1 = int(k as i64) * w + Q::one();
        if !is_pole_free_point(w) || kw1.is_zero() {
            return Err(LayerError::Pole(w.to_string()));
        }
        let shifted = self.g_at(&(w / kw1))?;
        Ok((shifted - self.g_at(&at)?) / w3_one_minus_w2().eval(w))
    }

    /// B g as a new G-form: G(w/(1+w)) − (w+2)w³ g(1/2)/(8(1+w)²).
    pub fn apply_b(&self) -> Result<Self, LayerError> {
        let (one, zero) = (Q::one(), Q::zero());
        let shifted = self.g.moebius(&one, &zero, &one, &one);
        let half = self.value_at(&rat(1, 2))?;
        let corr = RationalFunction::new(
            Polynomial::from_ints(&[0, 0, 0, 2, 1]).scale(&(half / int(8))),
            Polynomial::from_ints(&[1, 2, 1]),
        );
        Ok(WFunction::from_g_form(shifted.sub(&corr)))
    }

    /// g(w(t)) for a series w(t); the pole of g at w = 1 is allowed when the
    /// numerator cancels it. Loses as many orders as the pole's depth.
    pub fn eval_series(&self, w: &PowerSeries<S6>) -> Result<PowerSeries<S6>, LayerError> {
        Ok(self.as_rational().eval_series(w)?)
    }
}

/// Values of Bʳg at w = 1 and w = 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateValues {
    pub at_one: Q,
    pub at_half: Q,
}

/// (Bʳg)(1) and (Bʳg)(1/2) for every r ≤ r_max, in one pass.
pub fn iterate_b_all(g: &WFunction, r_max: usize) -> Result<Vec<IterateValues>, LayerError> {
    let half = rat(1, 2);
    let one = Q::one();
    let psi = WFunction::psi();
    let mut g1 = Vec::with_capacity(r_max + 1);
    let mut gh = Vec::with_capacity(r_max + 1);
    let mut p1 = Vec::with_capacity(r_max + 1);
    let mut ph = Vec::with_capacity(r_max + 1);
    for k in 0..=r_max {
        g1.push(g.b1_power(k, &one)?);
        gh.push(g.b1_power(k, &half)?);
        p1.push(psi.b1_power(k, &one)?);
        ph.push(psi.b1_power(k, &half)?);
    }
    // Bʳg = B₁ʳg − Σ_{i<r} B₁^{r−1−i}ψ · s_i
    let mut s: Vec<Q> = Vec::with_capacity(r_max + 1);
    let mut out = Vec::with_capacity(r_max + 1);
    for r in 0..=r_max {
        let mut at_half = gh[r].clone();
        let mut at_one = g1[r].clone();
        for (i, si) in s.iter().enumerate() {
            at_half -= &ph[r - 1 - i] * si;
            at_one -= &p1[r - 1 - i] * si;
        }
        s.push(at_half.clone());
        out.push(IterateValues { at_one, at_half });
    }
    Ok(out)
}

pub fn iterate_b_exact(g: &WFunction, r: usize) -> Result<IterateValues, LayerError> {
    Ok(iterate_b_all(g, r)?.pop().expect("nonempty"))
}

fn binomial(n: usize, k: usize) -> Q {
    (0..k).fold(Q::one(), |acc, i| {
        acc * int((n - i) as i64) / int(i as i64 + 1)
    })
}

/// E[m₁ʲ | m₀ = 2] after R layers, for every R ≤ r_max.
pub fn moments_all(j: usize, r_max: usize) -> Result<Vec<Q>, LayerError> {
    // f_i yields E[(m−2)ⁱ]; assemble E[mʲ] = Σ C(j,i) 2^{j−i} E[(m−2)ⁱ]
    let mut total = vec![Q::zero(); r_max + 1];
    for i in 0..=j {
        let w = binomial(j, i) * int(2).pow((j - i) as i32);
        let vals = if i == 0 {
            vec![Q::one(); r_max + 1]
        } else {
            iterate_b_all(&WFunction::f_j(i), r_max)?
                .into_iter()
                .map(|v| v.at_one)
                .collect()
        };
        for (t, v) in total.iter_mut().zip(vals) {
            *t += &w * v;
        }
    }
    Ok(total)
}

/// E[(m−2)ʲ | m₀ = 2] after R layers, for every R ≤ r_max.
pub fn shifted_moments_all(j: usize, r_max: usize) -> Result<Vec<Q>, LayerError> {
    Ok(iterate_b_all(&WFunction::f_j(j), r_max)?
        .into_iter()
        .map(|v| v.at_one)
        .collect())
}

pub fn moment_exact(j: usize, r: usize) -> Result<Q, LayerError> {
    Ok(moments_all(j, r)?.pop().expect("nonempty"))
}

/// One row of a moment table.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub r: usize,
    pub j: usize,
    pub exact: Q,
    pub value: f64,
    /// value / R^{2j}
    pub scaled: f64,
    /// (2j+1)!!/2ʲ
    pub asymptote: f64,
}

pub fn moment_table(j_max: usize, r_list: &[usize]) -> Result<Vec<MomentRow>, LayerError> {
    let r_max = r_list.iter().copied().max().unwrap_or(0);
    let mut rows = Vec::new();
    for j in 0..=j_max {
        let all = moments_all(j, r_max)?;
        let asymptote = rational_to_f64(&limit_moment(j));
        for &r in r_list {
            let exact = all[r].clone();
            let value = rational_to_f64(&exact);
            let scaled = if r == 0 {
                f64::NAN
            } else {
                value / (r as f64).powi(2 * j as i32)
            };
            rows.push(MomentRow {
                r,
                j,
                exact,
                value,
                scaled,
                asymptote,
            });
        }
    }
    Ok(rows)
}

/// w(y) = √(1 − √6y) as a series.
pub fn w_of_y(order: usize) -> PowerSeries<S6> {
    binomial_series(&-S6::sqrt6(), &rat(1, 2), order)
}

/// y-series of the one-layer operator applied to F(y) = g(w(y)):
/// (AF)(y) = [u u′ F(u) − (u + y u′) u′(0) F(u(0))]/y with u = x₀U₀(x₀, y).
pub fn apply_a(g: &WFunction, order: usize) -> Result<PowerSeries<S6>, LayerError> {
    let n = order + 1;
    let u = u0_at_x0(n + 1)?.truncate(n).scale(&S6::x0());
    let du = u0_at_x0(n + 2)?.derivative().truncate(n).scale(&S6::x0());
    let du0 = du.c(0).clone();
    // w at u(y): 1 − √6u has constant term 1/4
    let inner = u.scale(&-S6::sqrt6()).add_constant(&S6::one());
    let wu = inner.sqrt()?;
    let fu = g.eval_series(&wu)?;
    let f_at_u0 = S6::from_rational(g.value_at(&rat(1, 2))?);
    let y = PowerSeries::<S6>::var(n);
    let first = u.mul(&du).mul(&fu);
    let second = u.add(&y.mul(&du)).scale(&(du0 * f_at_u0));
    Ok(first.sub(&second).shift_down(1)?)
}

/// Report of the cross-checks between the rank-one recursion and the
/// generating-operator formula.
#[derive(Debug, Clone, PartialEq)]
pub struct MIdentityReport {
    pub j_max: usize,
    pub r_max: usize,
    /// [z^R] M(g_j)(1) / ((2j+1)!!/2ʲ R^{2j}) at R = r_max, per j.
    pub growth: Vec<f64>,
}

/// [z^R] M(g)(1) for R < order_z from
/// M(g)(1) = M₁(g)(1) − M₁(g)(1/2)(H₁ − 1/(1−z))/H₂, with
/// H₁ = Σ zᵏ/(k+1)³ and H₂ = (32/3)Σ(1/(k+1)² − 1/(k+2)²)zᵏ.
pub fn m_series_at_one(g: &WFunction, order_z: usize) -> Result<PowerSeries<Q>, LayerError> {
    let half = rat(1, 2);
    let one = Q::one();
    let mut m1_one = Vec::with_capacity(order_z);
    let mut m1_half = Vec::with_capacity(order_z);
    for k in 0..order_z {
        m1_one.push(g.b1_power(k, &one)?);
        m1_half.push(g.b1_power(k, &half)?);
    }
    let h1 = PowerSeries::from_fn(order_z, |k| int(k as i64 + 1).pow(3).recip());
    let h2 = PowerSeries::from_fn(order_z, |k| {
        let (a, b) = (int(k as i64 + 1), int(k as i64 + 2));
        rat(32, 3) * ((&a * &a).recip() - (&b * &b).recip())
    });
    let geometric = PowerSeries::from_fn(order_z, |_| Q::one());
    let theta = h1.sub(&geometric).div(&h2)?;
    Ok(PowerSeries::new(m1_one).sub(&PowerSeries::new(m1_half).mul(&theta)))
}

/// Checks [z^R] M(g_j)(1) = (B^R g_j)(1) exactly for j ≤ j_max, R ≤ r_max.
pub fn verify_m_identities(j_max: usize, r_max: usize) -> Result<MIdentityReport, LayerError> {
    let mut growth = Vec::new();
    for j in 0..=j_max {
        let g = if j == 0 {
            WFunction::g0()
        } else {
            WFunction::f_j(j)
        };
        let m = m_series_at_one(&g, r_max + 1)?;
        let direct = iterate_b_all(&g, r_max)?;
        for (r, v) in direct.iter().enumerate() {
            if m.c(r) != &v.at_one {
                return Err(LayerError::Mismatch { j, r });
            }
        }
        let lead = double_factorial_ratio(j) * int(r_max.max(1) as i64).pow(2 * j as i32);
        growth.push(rational_to_f64(&(m.c(r_max) / lead)));
    }
    Ok(MIdentityReport {
        j_max,
        r_max,
        growth,
    })
}

/// Checks B g₀ = g₀ as an identity of rational functions.
pub fn fixed_point_holds() -> Result<bool, LayerError> {
    let g0 = WFunction::g0();
    Ok(g0.apply_b()? == g0)
}

/// Limit density of m₁/R²: (2/√π) e^{−x} √x.
pub fn limit_density(x: f64) -> Result<f64, LayerError> {
    if x < 0.0 || x.is_nan() {
        return Err(LayerError::NegativeArgument(x));
    }
    Ok(2.0 / std::f64::consts::PI.sqrt() * (-x).exp() * x.sqrt())
}

/// E ξʲ = (2j+1)!!/2ʲ.
pub fn limit_moment(j: usize) -> Q {
    double_factorial_ratio(j)
}

/// Float view of a rational; for reporting only.
pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or_else(|| rational_to_f64(v))
}

/// True when every value is strictly positive.
pub fn all_positive(values: &[Q]) -> bool {
    values.iter().all(|v| v.is_positive())
}
