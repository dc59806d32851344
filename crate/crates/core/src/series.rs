//! Truncated complex power series.
//!
//! A [`TruncatedSeries`] stores the coefficients `c_0..c_N` of a formal power
//! series modulo `z^{N+1}`. Every operation returns an exact truncation: the
//! `k`-th output coefficient only depends on input coefficients `0..=k`.
//! Binary operations on series of different orders return a result at the
//! smaller order.
//!
//! Coefficients are stored in floating point. Above order ~200 the caller is
//! expected to rescale the expansion variable so that coefficients stay in
//! range; nothing here does that automatically.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{cr, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("inner series of a composition must have zero constant term (got {0})")]
    NonzeroConstantTerm(String),
    #[error("series is not invertible for composition: linear coefficient vanishes")]
    NonInvertibleJet,
    #[error("series is not invertible for composition: constant term must vanish (got {0})")]
    ConstantTermForInversion(String),
    #[error("reciprocal of a series with vanishing constant term")]
    ZeroConstantTerm,
    #[error("{func} requires a zero constant term (principal branch around 1), got {constant}")]
    BranchViolation { func: &'static str, constant: String },
}

/// Elementary functions available through [`TruncatedSeries::elementary`].
///
/// `Log1p`, `Sqrt1p` and `Pow` act on `1 + a` and therefore require `a_0 = 0`;
/// `Exp` accepts any constant term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary<T> {
    Exp,
    Log1p,
    Sqrt1p,
    /// `(1 + a)^p`, principal branch.
    Pow(Complex<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> TruncatedSeries<T> {
    /// Builds a series of order `coeffs.len() - 1`. An empty vector yields the
    /// order-0 zero series.
    pub fn new(mut coeffs: Vec<Complex<T>>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(Complex::new(T::zero(), T::zero()));
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[T]) -> Self {
        Self::new(coeffs.iter().map(|&x| cr(x)).collect())
    }

    /// Series of order `order` from a coefficient function.
    pub fn from_fn(order: usize, f: impl FnMut(usize) -> Complex<T>) -> Self {
        Self::new((0..=order).map(f).collect())
    }

    pub fn zero(order: usize) -> Self {
        Self::new(vec![Complex::new(T::zero(), T::zero()); order + 1])
    }

    pub fn constant(order: usize, value: Complex<T>) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = value;
        s
    }

    pub fn one(order: usize) -> Self {
        Self::constant(order, cr(T::one()))
    }

    /// The series `z`.
    pub fn identity(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = cr(T::one());
        }
        s
    }

    /// `1 / (1 - c z)`.
    pub fn geometric(order: usize, ratio: Complex<T>) -> Self {
        let mut p = cr(T::one());
        Self::from_fn(order, |_| {
            let out = p;
            p = p * ratio;
            out
        })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex<T> {
        self.coeffs.get(k).copied().unwrap_or_else(|| cr(T::zero()))
    }

    /// Real parts of the coefficients.
    pub fn re(&self) -> Vec<T> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    /// Truncates (or zero-extends) to the given order.
    pub fn with_order(&self, order: usize) -> Self {
        Self::from_fn(order, |k| self.coeff(k))
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// `f(z) -> f(s z)`.
    pub fn rescale_argument(&self, s: Complex<T>) -> Self {
        let mut p = cr(T::one());
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let out = c * p;
                    p = p * s;
                    out
                })
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k] + other.coeffs[k])
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| self.coeffs[k] - other.coeffs[k])
    }

    /// Cauchy product truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let a = &self.coeffs;
        let b = &other.coeffs;
        Self::from_fn(n, |k| {
            let mut acc = cr(T::zero());
            for i in 0..=k {
                acc = acc + a[i] * b[k - i];
            }
            acc
        })
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Self, SeriesError> {
        let a = &self.coeffs;
        if a[0].norm() == T::zero() {
            return Err(SeriesError::ZeroConstantTerm);
        }
        let inv0 = cr(T::one()) / a[0];
        let mut b = vec![cr(T::zero()); a.len()];
        b[0] = inv0;
        for k in 1..a.len() {
            let mut acc = cr(T::zero());
            for i in 1..=k {
                acc = acc + a[i] * b[k - i];
            }
            b[k] = -acc * inv0;
        }
        Ok(Self::new(b))
    }

    pub fn div(&self, other: &Self) -> Result<Self, SeriesError> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn derivative(&self) -> Self {
        let n = self.order();
        Self::from_fn(n, |k| {
            if k < n {
                self.coeffs[k + 1] * T::from_usize(k + 1).unwrap()
            } else {
                cr(T::zero())
            }
        })
    }

    /// Antiderivative with zero constant term, same order.
    pub fn integral(&self) -> Self {
        Self::from_fn(self.order(), |k| {
            if k == 0 {
                cr(T::zero())
            } else {
                self.coeffs[k - 1] / T::from_usize(k).unwrap()
            }
        })
    }

    /// Evaluates the truncated polynomial at `z` (Horner).
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(cr(T::zero()), |acc, &c| acc * z + c)
    }

    /// `self ∘ inner`, via Horner's scheme in the series ring.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if inner.coeffs[0].norm() != T::zero() {
            return Err(SeriesError::NonzeroConstantTerm(format!("{:?}", inner.coeffs[0])));
        }
        let n = self.order().min(inner.order());
        let inner = inner.with_order(n);
        let mut acc = Self::zero(n);
        for &c in self.coeffs[..=n].iter().rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] = acc.coeffs[0] + c;
        }
        Ok(acc)
    }

    /// Compositional inverse `g` with `f(g(z)) = z` to the working order.
    ///
    /// Newton iteration `g <- g - (f∘g - z) / (f'∘g)` starting from `z / f_1`;
    /// each pass doubles the number of accurate coefficients.
    pub fn invert_composition(&self) -> Result<Self, SeriesError> {
        let n = self.order();
        if self.coeffs[0].norm() != T::zero() {
            return Err(SeriesError::ConstantTermForInversion(format!("{:?}", self.coeffs[0])));
        }
        if n == 0 {
            return Ok(Self::zero(0));
        }
        let f1 = self.coeffs[1];
        if f1.norm() == T::zero() {
            return Err(SeriesError::NonInvertibleJet);
        }
        let mut g = Self::zero(n);
        g.coeffs[1] = cr(T::one()) / f1;
        let mut accurate = 1;
        while accurate < n {
            accurate = (2 * accurate).min(n);
            let f = self.with_order(accurate);
            let gk = g.with_order(accurate);
            let fg = f.compose(&gk)?;
            let dfg = f.derivative().compose(&gk)?;
            let residual = fg.sub(&Self::identity(accurate));
            let correction = residual.div(&dfg)?;
            for k in 0..=accurate {
                g.coeffs[k] = g.coeffs[k] - correction.coeffs[k];
            }
        }
        Ok(g)
    }

    /// Elementary function of a series, via the coefficient recurrences of the
    /// defining differential equations.
    pub fn elementary(&self, f: Elementary<T>) -> Result<Self, SeriesError> {
        match f {
            Elementary::Exp => Ok(self.exp()),
            Elementary::Log1p => self.log1p(),
            Elementary::Sqrt1p => self.pow1p(cr(T::lit(0.5)), "sqrt1p"),
            Elementary::Pow(p) => self.pow1p(p, "pow"),
        }
    }

    /// `exp(a)`; `b' = a' b`.
    pub fn exp(&self) -> Self {
        let a = &self.coeffs;
        let n = self.order();
        let mut b = vec![cr(T::zero()); n + 1];
        b[0] = a[0].exp();
        for k in 1..=n {
            let mut acc = cr(T::zero());
            for j in 1..=k {
                acc = acc + a[j] * b[k - j] * T::from_usize(j).unwrap();
            }
            b[k] = acc / T::from_usize(k).unwrap();
        }
        Self::new(b)
    }

    /// `log(1 + a)` with `a_0 = 0`.
    pub fn log1p(&self) -> Result<Self, SeriesError> {
        self.require_zero_constant("log1p")?;
        let one_plus = {
            let mut s = self.clone();
            s.coeffs[0] = cr(T::one());
            s
        };
        Ok(self.derivative().div(&one_plus)?.integral())
    }

    /// `(1 + a)^p` with `a_0 = 0`; `(1 + a) b' = p a' b`.
    fn pow1p(&self, p: Complex<T>, func: &'static str) -> Result<Self, SeriesError> {
        self.require_zero_constant(func)?;
        let a = &self.coeffs;
        let n = self.order();
        let mut b = vec![cr(T::zero()); n + 1];
        b[0] = cr(T::one());
        for k in 1..=n {
            // k b_k = sum_{j=1}^{k} (p j - (k - j)) a_j b_{k-j}
            let mut acc = cr(T::zero());
            for j in 1..=k {
                let w = p * T::from_usize(j).unwrap() - cr(T::from_usize(k - j).unwrap());
                acc = acc + w * a[j] * b[k - j];
            }
            b[k] = acc / T::from_usize(k).unwrap();
        }
        Ok(Self::new(b))
    }

    fn require_zero_constant(&self, func: &'static str) -> Result<(), SeriesError> {
        if self.coeffs[0].norm() != T::zero() {
            return Err(SeriesError::BranchViolation {
                func,
                constant: format!("{:?}", self.coeffs[0]),
            });
        }
        Ok(())
    }

    /// Largest coefficientwise distance, over the common order.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let n = self.order().min(other.order());
        (0..=n)
            .map(|k| (self.coeffs[k] - other.coeffs[k]).norm())
            .fold(T::zero(), T::max)
    }
}

impl<T: Real> Add for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn add(self, rhs: Self) -> TruncatedSeries<T> {
        TruncatedSeries::add(self, rhs)
    }
}

impl<T: Real> Sub for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn sub(self, rhs: Self) -> TruncatedSeries<T> {
        TruncatedSeries::sub(self, rhs)
    }
}

impl<T: Real> Mul for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn mul(self, rhs: Self) -> TruncatedSeries<T> {
        TruncatedSeries::mul(self, rhs)
    }
}

impl<T: Real> Neg for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn neg(self) -> TruncatedSeries<T> {
        self.scale(cr(-T::one()))
    }
}
