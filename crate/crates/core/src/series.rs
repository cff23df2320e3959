//! Truncated formal power series over an exact coefficient field.

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::numeric::{int, rational_sqrt, BigRational, SqrtSixNumber};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("constant term is not invertible")]
    NonInvertibleConstant,
    #[error("constant term has no exact square root in the coefficient field")]
    NoExactSquareRoot,
    #[error("composition needs an inner series with zero constant term")]
    NonZeroInnerConstant,
    #[error("coefficient of degree {degree} lies beyond truncation order {order}")]
    BeyondTruncation { degree: usize, order: usize },
    #[error("series is not divisible by the requested monomial")]
    NotDivisible,
}

/// Coefficient field for exact series.
pub trait Field: Zero + One + Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn plus(&self, rhs: &Self) -> Self;
    fn minus(&self, rhs: &Self) -> Self;
    fn times(&self, rhs: &Self) -> Self;
    fn negated(&self) -> Self;
    fn inverse(&self) -> Option<Self>;
    fn from_rational(r: &BigRational) -> Self;
    fn sqrt_exact(&self) -> Option<Self>;

    fn from_int(n: i64) -> Self {
        Self::from_rational(&int(n))
    }
}

impl Field for BigRational {
    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn minus(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn times(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn negated(&self) -> Self {
        -self
    }
    fn inverse(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(num_traits::Inv::inv(self.clone()))
        }
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn sqrt_exact(&self) -> Option<Self> {
        rational_sqrt(self)
    }
}

impl Field for SqrtSixNumber {
    fn plus(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn minus(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn times(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn negated(&self) -> Self {
        -self
    }
    fn inverse(&self) -> Option<Self> {
        self.inv().ok()
    }
    fn from_rational(r: &BigRational) -> Self {
        SqrtSixNumber::from_rational(r.clone())
    }
    fn sqrt_exact(&self) -> Option<Self> {
        SqrtSixNumber::sqrt_exact(self)
    }
}

/// A power series known modulo t^order.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries<T: Field> {
    coeffs: Vec<T>,
}

impl<T: Field> PowerSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        PowerSeries { coeffs }
    }

    /// A polynomial read as a series truncated at `order`.
    pub fn from_polynomial(poly: &[T], order: usize) -> Self {
        Self::from_fn(order, |i| poly.get(i).cloned().unwrap_or_else(T::zero))
    }

    pub fn from_fn(order: usize, f: impl FnMut(usize) -> T) -> Self {
        PowerSeries {
            coeffs: (0..order).map(f).collect(),
        }
    }

    pub fn zero(order: usize) -> Self {
        Self::from_fn(order, |_| T::zero())
    }

    pub fn constant(c: T, order: usize) -> Self {
        let mut s = Self::zero(order);
        if order > 0 {
            s.coeffs[0] = c;
        }
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(T::one(), order)
    }

    /// The series `c·t^deg`.
    pub fn monomial(c: T, deg: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if deg < order {
            s.coeffs[deg] = c;
        }
        s
    }

    /// The variable `t` itself.
    pub fn var(order: usize) -> Self {
        Self::monomial(T::one(), 1, order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coefficient(&self, degree: usize) -> Result<&T, SeriesError> {
        self.coeffs
            .get(degree)
            .ok_or(SeriesError::BeyondTruncation {
                degree,
                order: self.order(),
            })
    }

    /// Coefficient by index; panics beyond the truncation order.
    pub fn c(&self, degree: usize) -> &T {
        &self.coeffs[degree]
    }

    pub fn truncate(&self, order: usize) -> Self {
        PowerSeries {
            coeffs: self.coeffs.iter().take(order).cloned().collect(),
        }
    }

    pub fn map<U: Field>(&self, f: impl FnMut(&T) -> U) -> PowerSeries<U> {
        PowerSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        Self::from_fn(n, |i| self.coeffs[i].plus(&rhs.coeffs[i]))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        Self::from_fn(n, |i| self.coeffs[i].minus(&rhs.coeffs[i]))
    }

    pub fn neg(&self) -> Self {
        self.map(|c| c.negated())
    }

    pub fn scale(&self, k: &T) -> Self {
        self.map(|c| c.times(k))
    }

    pub fn add_constant(&self, k: &T) -> Self {
        let mut s = self.clone();
        if let Some(c) = s.coeffs.first_mut() {
            *c = c.plus(k);
        }
        s
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let n = self.order().min(rhs.order());
        let mut out = vec![T::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate().take(n) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(n - i) {
                if b.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].plus(&a.times(b));
            }
        }
        PowerSeries { coeffs: out }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        let n = self.order();
        if n == 0 {
            return Ok(self.clone());
        }
        let inv0 = self.coeffs[0]
            .inverse()
            .ok_or(SeriesError::NonInvertibleConstant)?;
        let mut out: Vec<T> = Vec::with_capacity(n);
        out.push(inv0.clone());
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                if !self.coeffs[j].is_zero() {
                    acc = acc.plus(&self.coeffs[j].times(&out[k - j]));
                }
            }
            out.push(acc.times(&inv0).negated());
        }
        Ok(PowerSeries { coeffs: out })
    }

    pub fn div(&self, rhs: &Self) -> Result<Self, SeriesError> {
        Ok(self.mul(&rhs.reciprocal()?))
    }

    /// Square root with constant term the exact root of the constant term.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let n = self.order();
        if n == 0 {
            return Ok(self.clone());
        }
        let s0 = self.coeffs[0]
            .sqrt_exact()
            .ok_or(SeriesError::NoExactSquareRoot)?;
        let inv2s0 = s0
            .plus(&s0)
            .inverse()
            .ok_or(SeriesError::NonInvertibleConstant)?;
        let mut out = vec![s0];
        for k in 1..n {
            let mut acc = self.coeffs[k].clone();
            for i in 1..k {
                acc = acc.minus(&out[i].times(&out[k - i]));
            }
            out.push(acc.times(&inv2s0));
        }
        Ok(PowerSeries { coeffs: out })
    }

    /// f^α for rational α, for f with constant term 1.
    pub fn pow_rational(&self, alpha: &BigRational) -> Result<Self, SeriesError> {
        let n = self.order();
        if n == 0 {
            return Ok(self.clone());
        }
        if self.coeffs[0] != T::one() {
            return Err(SeriesError::NonInvertibleConstant);
        }
        // n g_n = Σ_{k=1}^{n} (α k − (n−k)) f_k g_{n−k}
        let a = T::from_rational(alpha);
        let mut g = vec![T::one()];
        for m in 1..n {
            let mut acc = T::zero();
            for k in 1..=m {
                if self.coeffs[k].is_zero() {
                    continue;
                }
                let w = a
                    .times(&T::from_int(k as i64))
                    .minus(&T::from_int((m - k) as i64));
                acc = acc.plus(&w.times(&self.coeffs[k]).times(&g[m - k]));
            }
            g.push(acc.times(&T::from_int(m as i64).inverse().unwrap()));
        }
        Ok(PowerSeries { coeffs: g })
    }

    /// f(g(t)) for g with zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if inner.order() > 0 && !inner.coeffs[0].is_zero() {
            return Err(SeriesError::NonZeroInnerConstant);
        }
        let n = self.order().min(inner.order());
        let mut acc = Self::zero(n);
        for c in self.coeffs.iter().take(n).rev() {
            acc = acc.mul(inner).add_constant(c);
        }
        Ok(acc.truncate(n))
    }

    pub fn derivative(&self) -> Self {
        let n = self.order();
        if n == 0 {
            return self.clone();
        }
        Self::from_fn(n - 1, |i| {
            self.coeffs[i + 1].times(&T::from_int(i as i64 + 1))
        })
    }

    pub fn integral(&self) -> Self {
        let n = self.order();
        Self::from_fn(n + 1, |i| {
            if i == 0 {
                T::zero()
            } else {
                self.coeffs[i - 1].times(&T::from_int(i as i64).inverse().unwrap())
            }
        })
    }

    /// Multiply by t^k, keeping the truncation order.
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.order();
        Self::from_fn(n, |i| {
            if i < k {
                T::zero()
            } else {
                self.coeffs[i - k].clone()
            }
        })
    }

    /// Divide by t^k; the low coefficients must vanish. Loses k orders.
    pub fn shift_down(&self, k: usize) -> Result<Self, SeriesError> {
        if self.coeffs.iter().take(k).any(|c| !c.is_zero()) {
            return Err(SeriesError::NotDivisible);
        }
        Ok(PowerSeries {
            coeffs: self.coeffs.iter().skip(k).cloned().collect(),
        })
    }

    /// f(c·t).
    pub fn dilate(&self, c: &T) -> Self {
        let mut p = T::one();
        let mut out = Vec::with_capacity(self.order());
        for a in &self.coeffs {
            out.push(a.times(&p));
            p = p.times(c);
        }
        PowerSeries { coeffs: out }
    }

    /// Σ c_i x^i for the retained coefficients: the value of the truncated
    /// polynomial at `x`.
    pub fn eval_truncated(&self, x: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.times(x).plus(c);
        }
        acc
    }
}

/// (1+c·t)^α, the binomial series.
pub fn binomial_series<T: Field>(c: &T, alpha: &BigRational, order: usize) -> PowerSeries<T> {
    let mut out = Vec::with_capacity(order);
    let mut coef = BigRational::one();
    let mut cp = T::one();
    for k in 0..order {
        out.push(T::from_rational(&coef).times(&cp));
        coef = coef * (alpha - int(k as i64)) / int(k as i64 + 1);
        cp = cp.times(c);
    }
    PowerSeries::new(out)
}

/// A bivariate series; `grid[i][j]` is the coefficient of x^i y^j.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariateSeries<T: Field> {
    grid: Vec<Vec<T>>,
    order_y: usize,
}

impl<T: Field> BivariateSeries<T> {
    pub fn from_fn(order_x: usize, order_y: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        BivariateSeries {
            grid: (0..order_x)
                .map(|i| (0..order_y).map(|j| f(i, j)).collect())
                .collect(),
            order_y,
        }
    }

    pub fn zero(order_x: usize, order_y: usize) -> Self {
        Self::from_fn(order_x, order_y, |_, _| T::zero())
    }

    pub fn constant(c: T, order_x: usize, order_y: usize) -> Self {
        let mut s = Self::zero(order_x, order_y);
        if order_x > 0 && order_y > 0 {
            s.grid[0][0] = c;
        }
        s
    }

    /// Embed a series in x.
    pub fn from_x(s: &PowerSeries<T>, order_y: usize) -> Self {
        Self::from_fn(s.order(), order_y, |i, j| {
            if j == 0 {
                s.c(i).clone()
            } else {
                T::zero()
            }
        })
    }

    /// Embed a series in y.
    pub fn from_y(s: &PowerSeries<T>, order_x: usize) -> Self {
        Self::from_fn(order_x, s.order(), |i, j| {
            if i == 0 {
                s.c(j).clone()
            } else {
                T::zero()
            }
        })
    }

    pub fn order_x(&self) -> usize {
        self.grid.len()
    }

    pub fn order_y(&self) -> usize {
        self.order_y
    }

    pub fn coefficient(&self, i: usize, j: usize) -> Result<&T, SeriesError> {
        self.grid
            .get(i)
            .and_then(|row| row.get(j))
            .ok_or(SeriesError::BeyondTruncation {
                degree: i.max(j),
                order: self.order_x().min(self.order_y()),
            })
    }

    pub fn c(&self, i: usize, j: usize) -> &T {
        &self.grid[i][j]
    }

    pub fn grid(&self) -> &[Vec<T>] {
        &self.grid
    }

    /// The coefficient series of y^j, as a series in x.
    pub fn y_coefficient(&self, j: usize) -> PowerSeries<T> {
        PowerSeries::from_fn(self.order_x(), |i| self.grid[i][j].clone())
    }

    /// The coefficient series of x^i, as a series in y.
    pub fn x_coefficient(&self, i: usize) -> PowerSeries<T> {
        PowerSeries::new(self.grid[i].clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.order_y, self.order_x(), |i, j| self.grid[j][i].clone())
    }

    pub fn truncate(&self, order_x: usize, order_y: usize) -> Self {
        Self::from_fn(
            order_x.min(self.order_x()),
            order_y.min(self.order_y),
            |i, j| self.grid[i][j].clone(),
        )
    }

    fn dims(&self, rhs: &Self) -> (usize, usize) {
        (
            self.order_x().min(rhs.order_x()),
            self.order_y.min(rhs.order_y),
        )
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let (nx, ny) = self.dims(rhs);
        Self::from_fn(nx, ny, |i, j| self.grid[i][j].plus(&rhs.grid[i][j]))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let (nx, ny) = self.dims(rhs);
        Self::from_fn(nx, ny, |i, j| self.grid[i][j].minus(&rhs.grid[i][j]))
    }

    pub fn scale(&self, k: &T) -> Self {
        Self::from_fn(self.order_x(), self.order_y, |i, j| {
            self.grid[i][j].times(k)
        })
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let (nx, ny) = self.dims(rhs);
        let mut out = Self::zero(nx, ny);
        for i1 in 0..nx {
            for j1 in 0..ny {
                let a = &self.grid[i1][j1];
                if a.is_zero() {
                    continue;
                }
                for i2 in 0..nx - i1 {
                    for j2 in 0..ny - j1 {
                        let b = &rhs.grid[i2][j2];
                        if b.is_zero() {
                            continue;
                        }
                        out.grid[i1 + i2][j1 + j2] = out.grid[i1 + i2][j1 + j2].plus(&a.times(b));
                    }
                }
            }
        }
        out
    }

    /// Square root, processed degree by degree in x then y.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let (nx, ny) = (self.order_x(), self.order_y);
        let s0 = self.grid[0][0]
            .sqrt_exact()
            .ok_or(SeriesError::NoExactSquareRoot)?;
        let inv2s0 = s0
            .plus(&s0)
            .inverse()
            .ok_or(SeriesError::NonInvertibleConstant)?;
        let mut out = Self::zero(nx, ny);
        out.grid[0][0] = s0;
        for i in 0..nx {
            for j in 0..ny {
                if i == 0 && j == 0 {
                    continue;
                }
                // a_ij = Σ s_{pq} s_{i−p, j−q}; the two terms with (p,q) = (0,0)
                // or (i,j) contain the unknown
                let mut acc = self.grid[i][j].clone();
                for p in 0..=i {
                    for q in 0..=j {
                        if (p == 0 && q == 0) || (p == i && q == j) {
                            continue;
                        }
                        acc = acc.minus(&out.grid[p][q].times(&out.grid[i - p][j - q]));
                    }
                }
                out.grid[i][j] = acc.times(&inv2s0);
            }
        }
        Ok(out)
    }

    /// Divide by x^k; the low x-rows must vanish.
    pub fn shift_down_x(&self, k: usize) -> Result<Self, SeriesError> {
        if self.grid.iter().take(k).flatten().any(|c| !c.is_zero()) {
            return Err(SeriesError::NotDivisible);
        }
        Ok(BivariateSeries {
            grid: self.grid.iter().skip(k).cloned().collect(),
            order_y: self.order_y,
        })
    }

    /// Divide by y^k; the low y-columns must vanish.
    pub fn shift_down_y(&self, k: usize) -> Result<Self, SeriesError> {
        if self
            .grid
            .iter()
            .any(|row| row.iter().take(k).any(|c| !c.is_zero()))
        {
            return Err(SeriesError::NotDivisible);
        }
        Ok(BivariateSeries {
            grid: self
                .grid
                .iter()
                .map(|row| row.iter().skip(k).cloned().collect())
                .collect(),
            order_y: self.order_y.saturating_sub(k),
        })
    }
}
