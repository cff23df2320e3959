//! Exact arithmetic: big rationals and the quadratic field Q(sqrt 6).
//!
//! Every constant evaluated at the critical point lives in Q(sqrt 6), so the
//! extension is hard-coded rather than built on a generic number-field layer.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse {0:?} as a number in Q(sqrt6)")]
    Parse(String),
    #[error("precision must be at least 53 bits, got {0}")]
    Precision(u32),
}

/// Shorthand for the rational `n/d`.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact square root of a rational, when it exists.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer();
    let d = r.denom();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(BigRational::new(sn, sd))
    } else {
        None
    }
}

/// Canonical "n/d" rendering used in every exact output.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Result<BigRational, NumericError> {
    let err = || NumericError::Parse(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(
            BigInt::from_str(s).map_err(|_| err())?,
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// The number `a + b*sqrt(6)` with rational `a`, `b`.
///
/// `BigRational` keeps both parts reduced with a positive denominator, so the
/// pair is already canonical and structural equality is field equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SqrtSixNumber {
    a: BigRational,
    b: BigRational,
}

impl SqrtSixNumber {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        SqrtSixNumber { a, b }
    }

    pub fn from_rational(a: BigRational) -> Self {
        SqrtSixNumber {
            a,
            b: BigRational::zero(),
        }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(int(n))
    }

    pub fn sqrt6() -> Self {
        SqrtSixNumber {
            a: BigRational::zero(),
            b: BigRational::one(),
        }
    }

    /// x₀ = sqrt(6)/9, the critical value of the triangle weight.
    pub fn x0() -> Self {
        SqrtSixNumber::new(BigRational::zero(), rat(1, 9))
    }

    /// y₀ = 1/sqrt(6) = sqrt(6)/6.
    pub fn y0() -> Self {
        SqrtSixNumber::new(BigRational::zero(), rat(1, 6))
    }

    pub fn zero() -> Self {
        Self::from_rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn sqrt6_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.b.is_zero() {
            Some(&self.a)
        } else {
            None
        }
    }

    pub fn conjugate(&self) -> Self {
        SqrtSixNumber::new(self.a.clone(), -&self.b)
    }

    /// Field norm a² − 6b².
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - int(6) * &self.b * &self.b
    }

    pub fn inv(&self) -> Result<Self, NumericError> {
        if self.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        let n = self.norm();
        Ok(SqrtSixNumber::new(&self.a / &n, -(&self.b / &n)))
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, NumericError> {
        Ok(self * &rhs.inv()?)
    }

    pub fn field_op(lhs: &Self, rhs: &Self, op: FieldOp) -> Result<Self, NumericError> {
        Ok(match op {
            FieldOp::Add => lhs + rhs,
            FieldOp::Sub => lhs - rhs,
            FieldOp::Mul => lhs * rhs,
            FieldOp::Div => lhs.checked_div(rhs)?,
        })
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn powi(&self, e: i32) -> Result<Self, NumericError> {
        if e >= 0 {
            Ok(self.pow(e as u32))
        } else {
            Ok(self.inv()?.pow(e.unsigned_abs()))
        }
    }

    /// Sign of the real number a + b·sqrt(6).
    pub fn signum(&self) -> i8 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        // opposite signs: compare a² with 6b²
        match (&self.a * &self.a).cmp(&(int(6) * &self.b * &self.b)) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }

    /// Exact square root inside Q(sqrt 6), when one exists.
    pub fn sqrt_exact(&self) -> Option<Self> {
        if self.is_zero() {
            return Some(Self::zero());
        }
        if self.b.is_zero() {
            if let Some(r) = rational_sqrt(&self.a) {
                return Some(Self::from_rational(r));
            }
            return rational_sqrt(&(&self.a / int(6)))
                .map(|d| SqrtSixNumber::new(BigRational::zero(), d));
        }
        // (c + d√6)² = c² + 6d² + 2cd√6, so c² solves c⁴ − a c² + 6(b/2)² = 0
        let disc = &self.a * &self.a - int(6) * &self.b * &self.b;
        let root = rational_sqrt(&disc)?;
        for c2 in [(&self.a + &root) / int(2), (&self.a - &root) / int(2)] {
            if let Some(c) = rational_sqrt(&c2) {
                if c.is_zero() {
                    continue;
                }
                let d = &self.b / (int(2) * &c);
                let cand = SqrtSixNumber::new(c, d);
                let cand = if cand.signum() < 0 { -cand } else { cand };
                if &(&cand * &cand) == self {
                    return Some(cand);
                }
            }
        }
        None
    }

    pub fn to_f64(&self) -> f64 {
        if self.b.is_zero() {
            return rational_to_f64(&self.a);
        }
        to_float(self, 64).map(|h| h.to_f64()).unwrap_or(f64::NAN)
    }
}

fn sign_of(r: &BigRational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl PartialOrd for SqrtSixNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SqrtSixNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

impl From<BigRational> for SqrtSixNumber {
    fn from(a: BigRational) -> Self {
        Self::from_rational(a)
    }
}

impl fmt::Display for SqrtSixNumber {
    /// Renders as `a/b+c/d*sqrt6` (with `-` in place of `+` for a negative
    /// irrational part).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.b.is_negative() { "-" } else { "+" };
        write!(
            f,
            "{}{}{}*sqrt6",
            rational_string(&self.a),
            sep,
            rational_string(&self.b.abs())
        )
    }
}

impl FromStr for SqrtSixNumber {
    type Err = NumericError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let Some(body) = t.strip_suffix("*sqrt6") else {
            return Ok(Self::from_rational(parse_rational(t)?));
        };
        // split at the last sign that is not the leading one
        let idx = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last()
            .ok_or_else(|| NumericError::Parse(s.to_string()))?;
        let a = parse_rational(&body[..idx])?;
        let mut b = parse_rational(&body[idx + 1..])?;
        if &body[idx..idx + 1] == "-" {
            b = -b;
        }
        Ok(SqrtSixNumber::new(a, b))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<SqrtSixNumber> for SqrtSixNumber {
            type Output = SqrtSixNumber;
            fn $m(self, rhs: SqrtSixNumber) -> SqrtSixNumber {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a SqrtSixNumber> for SqrtSixNumber {
            type Output = SqrtSixNumber;
            fn $m(self, rhs: &'a SqrtSixNumber) -> SqrtSixNumber {
                (&self).$m(rhs)
            }
        }
    };
}

impl<'b> Add<&'b SqrtSixNumber> for &SqrtSixNumber {
    type Output = SqrtSixNumber;
    fn add(self, rhs: &'b SqrtSixNumber) -> SqrtSixNumber {
        SqrtSixNumber::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl<'b> Sub<&'b SqrtSixNumber> for &SqrtSixNumber {
    type Output = SqrtSixNumber;
    fn sub(self, rhs: &'b SqrtSixNumber) -> SqrtSixNumber {
        SqrtSixNumber::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl<'b> Mul<&'b SqrtSixNumber> for &SqrtSixNumber {
    type Output = SqrtSixNumber;
    fn mul(self, rhs: &'b SqrtSixNumber) -> SqrtSixNumber {
        if self.b.is_zero() && rhs.b.is_zero() {
            return SqrtSixNumber::from_rational(&self.a * &rhs.a);
        }
        SqrtSixNumber::new(
            &self.a * &rhs.a + int(6) * &self.b * &rhs.b,
            &self.a * &rhs.b + &self.b * &rhs.a,
        )
    }
}

impl<'b> Div<&'b SqrtSixNumber> for &SqrtSixNumber {
    type Output = SqrtSixNumber;
    /// Panics on a zero divisor, like `BigRational`; use `checked_div` to
    /// get an error instead.
    fn div(self, rhs: &'b SqrtSixNumber) -> SqrtSixNumber {
        self.checked_div(rhs).expect("division by zero in Q(sqrt6)")
    }
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Zero for SqrtSixNumber {
    fn zero() -> Self {
        SqrtSixNumber::zero()
    }
    fn is_zero(&self) -> bool {
        SqrtSixNumber::is_zero(self)
    }
}

impl One for SqrtSixNumber {
    fn one() -> Self {
        SqrtSixNumber::one()
    }
}

impl Neg for SqrtSixNumber {
    type Output = SqrtSixNumber;
    fn neg(self) -> SqrtSixNumber {
        SqrtSixNumber::new(-self.a, -self.b)
    }
}

impl Neg for &SqrtSixNumber {
    type Output = SqrtSixNumber;
    fn neg(self) -> SqrtSixNumber {
        SqrtSixNumber::new(-&self.a, -&self.b)
    }
}

/// A binary floating value `mantissa · 2^exponent` with a fixed number of
/// mantissa bits, produced by correctly rounding an exact quantity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HighPrecisionReal {
    pub mantissa: BigInt,
    pub exponent: i64,
    pub precision: u32,
}

impl HighPrecisionReal {
    pub fn to_rational(&self) -> BigRational {
        let m = BigRational::from_integer(self.mantissa.clone());
        if self.exponent >= 0 {
            m * BigRational::from_integer(BigInt::one() << self.exponent as usize)
        } else {
            m / BigRational::from_integer(BigInt::one() << (-self.exponent) as usize)
        }
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.to_rational())
    }

    /// Number of leading bits on which two approximations agree, measured as
    /// −log2 of their relative difference (capped at the smaller precision).
    pub fn agreeing_bits(&self, other: &HighPrecisionReal) -> u32 {
        let cap = self.precision.min(other.precision);
        let x = self.to_rational();
        let y = other.to_rational();
        let diff = (&x - &y).abs();
        if diff.is_zero() {
            return cap;
        }
        if x.is_zero() {
            return 0;
        }
        let rel = diff / x.abs();
        // floor(-log2(rel)) via bit lengths
        let bits = rel.denom().bits() as i64 - rel.numer().bits() as i64 - 1;
        bits.clamp(0, cap as i64) as u32
    }

    /// Decimal rendering with `digits` significant digits (truncated).
    pub fn to_decimal_string(&self, digits: usize) -> String {
        let r = self.to_rational();
        if r.is_zero() {
            return "0".to_string();
        }
        let neg = r.is_negative();
        let r = r.abs();
        let mut exp10: i64 = 0;
        let ten = int(10);
        let mut scaled = r.clone();
        while scaled >= ten {
            scaled = &scaled / &ten;
            exp10 += 1;
        }
        while scaled < BigRational::one() {
            scaled = &scaled * &ten;
            exp10 -= 1;
        }
        let pow =
            BigRational::from_integer(num_traits::pow(BigInt::from(10), digits.saturating_sub(1)));
        let n = (scaled * pow).floor().to_integer().to_string();
        let (head, tail) = n.split_at(1);
        format!("{}{}.{}e{}", if neg { "-" } else { "" }, head, tail, exp10)
    }
}

/// Round a positive integer to `p` significant bits, ties to even.
fn round_to_bits(n: &BigInt, p: u32) -> (BigInt, i64) {
    let len = n.bits() as i64;
    if len <= p as i64 {
        return (n.clone(), 0);
    }
    let shift = (len - p as i64) as usize;
    let mut q: BigInt = n >> shift;
    let rem: BigInt = n - (&q << shift);
    let half: BigInt = BigInt::one() << (shift - 1);
    match rem.cmp(&half) {
        Ordering::Greater => q += 1,
        Ordering::Equal if q.is_odd() => q += 1,
        _ => {}
    }
    let mut e = shift as i64;
    if q.bits() as i64 > p as i64 {
        q >>= 1;
        e += 1;
    }
    (q, e)
}

fn normalize(m: BigInt, e: i64, p: u32) -> (BigInt, i64) {
    if m.is_zero() {
        return (m, 0);
    }
    let len = m.bits() as i64;
    let shift = p as i64 - len;
    if shift > 0 {
        (m << shift as usize, e - shift)
    } else {
        (m, e)
    }
}

/// Correctly rounded (nearest, ties to even) binary approximation of
/// `a + b·sqrt(6)` with `precision` mantissa bits.
pub fn to_float(v: &SqrtSixNumber, precision: u32) -> Result<HighPrecisionReal, NumericError> {
    if precision < 53 {
        return Err(NumericError::Precision(precision));
    }
    if v.is_zero() {
        return Ok(HighPrecisionReal {
            mantissa: BigInt::zero(),
            exponent: 0,
            precision,
        });
    }
    let sign = v.signum();
    let mag = if sign < 0 { -v } else { v.clone() };
    let (an, ad) = (mag.a.numer().clone(), mag.a.denom().clone());
    let (bn, bd) = (mag.b.numer().clone(), mag.b.denom().clone());
    let mut s: i64 = precision as i64 + 24 - mag.to_rough_log2().floor() as i64;
    loop {
        let (lo, hi) = bracket(&an, &ad, &bn, &bd, s);
        if lo.is_positive() {
            let (ml, el) = round_to_bits(&lo, precision);
            let (mh, eh) = round_to_bits(&hi, precision);
            let (ml, el) = normalize(ml, el, precision);
            let (mh, eh) = normalize(mh, eh, precision);
            if ml == mh && el == eh {
                let m = if sign < 0 { -ml } else { ml };
                return Ok(HighPrecisionReal {
                    mantissa: m,
                    exponent: el - s,
                    precision,
                });
            }
        }
        s += 32;
    }
}

/// Integers lo ≤ (a + b√6)·2^s ≤ hi, for nonnegative a = an/ad and b = bn/bd
/// possibly of mixed sign.
fn bracket(an: &BigInt, ad: &BigInt, bn: &BigInt, bd: &BigInt, s: i64) -> (BigInt, BigInt) {
    let scale = |x: &BigInt| -> BigInt {
        if s >= 0 {
            x << s as usize
        } else {
            x >> (-s) as usize
        }
    };
    let num_a = scale(an);
    let (qa, ra) = num_a.div_mod_floor(ad);
    let (a_lo, a_hi) = if ra.is_zero() {
        (qa.clone(), qa)
    } else {
        (qa.clone(), qa + 1)
    };
    if bn.is_zero() {
        return (a_lo, a_hi);
    }
    // |b|√6·2^s = √(6 bn² 4^s) / bd
    let t = BigInt::from(6) * bn * bn;
    let t = if s >= 0 {
        t << (2 * s) as usize
    } else {
        t >> (2 * -s) as usize
    };
    let r = t.sqrt();
    let exact = &r * &r == t;
    let (b_lo, b_hi) = {
        let lo = r.div_floor(bd);
        let top = if exact { r.clone() } else { &r + 1 };
        let (q, rem) = top.div_mod_floor(bd);
        let hi = if rem.is_zero() { q } else { q + 1 };
        (lo, hi)
    };
    if bn.sign() == Sign::Minus {
        (a_lo - b_hi, a_hi - b_lo)
    } else {
        (a_lo + b_lo, a_hi + b_hi)
    }
}

impl SqrtSixNumber {
    fn to_rough_log2(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(0.0);
        let b = self.b.to_f64().unwrap_or(0.0);
        let v = (a + b * 6f64.sqrt()).abs();
        if v > 0.0 && v.is_finite() {
            v.log2()
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt6_squared_is_six() {
        let s = SqrtSixNumber::sqrt6();
        assert_eq!(&s * &s, SqrtSixNumber::from_integer(6));
    }

    #[test]
    fn inverse_of_one_plus_sqrt6() {
        let x = SqrtSixNumber::new(int(1), int(1));
        let q = SqrtSixNumber::field_op(&SqrtSixNumber::one(), &x, FieldOp::Div).unwrap();
        assert_eq!(q, SqrtSixNumber::new(rat(-1, 5), rat(1, 5)));
        assert_eq!(&q * &x, SqrtSixNumber::one());
    }

    #[test]
    fn x0_squared() {
        let x0 = SqrtSixNumber::x0();
        assert_eq!(&x0 * &x0, SqrtSixNumber::from_rational(rat(2, 27)));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let r = SqrtSixNumber::one().checked_div(&SqrtSixNumber::zero());
        assert_eq!(r, Err(NumericError::DivisionByZero));
    }

    #[test]
    fn float_values() {
        let v = to_float(&SqrtSixNumber::x0(), 128).unwrap().to_f64();
        assert!((v - 0.272_165_526_975_908_7).abs() < 1e-16);
        let v = to_float(&SqrtSixNumber::y0(), 128).unwrap().to_f64();
        assert!((v - 0.408_248_290_463_863).abs() < 1e-15);
        assert_eq!(to_float(&SqrtSixNumber::zero(), 64).unwrap().to_f64(), 0.0);
        assert!(to_float(&SqrtSixNumber::one(), 32).is_err());
    }

    #[test]
    fn float_matches_f64_sqrt() {
        let v = SqrtSixNumber::new(rat(-3, 7), rat(5, 11));
        let f = to_float(&v, 53).unwrap().to_f64();
        let g = -3.0 / 7.0 + 5.0 / 11.0 * 6f64.sqrt();
        assert!((f - g).abs() <= 4.0 * f64::EPSILON * g.abs());
    }

    #[test]
    fn display_round_trip() {
        let v = SqrtSixNumber::new(rat(-1, 5), rat(-3, 4));
        let s = v.to_string();
        assert_eq!(s, "-1/5-3/4*sqrt6");
        assert_eq!(s.parse::<SqrtSixNumber>().unwrap(), v);
        assert_eq!(
            "6".parse::<SqrtSixNumber>().unwrap(),
            SqrtSixNumber::from_integer(6)
        );
    }

    #[test]
    fn signs_and_order() {
        assert_eq!(SqrtSixNumber::new(int(3), int(-1)).signum(), 1);
        assert_eq!(SqrtSixNumber::new(int(2), int(-1)).signum(), -1);
        assert!(SqrtSixNumber::x0() < SqrtSixNumber::y0());
    }

    #[test]
    fn exact_square_roots() {
        let x = SqrtSixNumber::new(int(7), int(2)); // (1+√6)² = 7 + 2√6
        assert_eq!(x.sqrt_exact(), Some(SqrtSixNumber::new(int(1), int(1))));
        assert_eq!(
            SqrtSixNumber::from_integer(6).sqrt_exact(),
            Some(SqrtSixNumber::sqrt6())
        );
        assert_eq!(SqrtSixNumber::from_integer(2).sqrt_exact(), None);
        assert_eq!(
            SqrtSixNumber::from_rational(rat(4, 9)).sqrt_exact(),
            Some(SqrtSixNumber::from_rational(rat(2, 3)))
        );
    }
}
