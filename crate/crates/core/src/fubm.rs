//! Free unitary Brownian motion: the map ξ, the Herglotz transform, moments,
//! and the square-root conformal map ψ.
//!
//! Everything here is parametrised by the operator time `s` of `Y_s`. Callers
//! working with a process observed at time `2t` pass `s = 2t` themselves.

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::{cr, Real};
use crate::series::TruncatedSeries;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FubmError {
    #[error("xi has a pole at u = -1")]
    Pole,
    #[error("Newton iteration for the Herglotz transform did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("z = {0} lies on the branch cut [1, inf)")]
    OnBranchCut(String),
    #[error("argument {0} is outside the open unit disc")]
    OutsideDisc(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("moment order must be at least 1")]
    EmptyOrder,
}

/// `τ(Y_s^n)` for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FubmMoments<T> {
    pub time: T,
    pub moments: Vec<T>,
}

const HERGLOTZ_SERIES_ORDER: usize = 64;
const HERGLOTZ_SERIES_RADIUS: f64 = 0.5;

/// `ξ(u) = (u - 1)/(u + 1) · e^{s u / 2}`, the inverse of the Herglotz
/// transform of `Y_s`.
pub fn xi<T: Real>(s: T, u: Complex<T>) -> Result<Complex<T>, FubmError> {
    let den = u + T::one();
    if den.norm() == T::zero() {
        return Err(FubmError::Pole);
    }
    Ok((u - T::one()) / den * (u * (s * T::lit(0.5))).exp())
}

fn xi_derivative<T: Real>(s: T, u: Complex<T>) -> Complex<T> {
    let den = u + T::one();
    let e = (u * (s * T::lit(0.5))).exp();
    e * (cr(T::lit(2.0)) / (den * den) + (u - T::one()) / den * (s * T::lit(0.5)))
}

/// Series of `v ↦ v/(1+v) · e^{(s/2)(1+2v)}`, the compositional inverse of `η_s`.
pub fn eta_inverse_series<T: Real>(s: T, order: usize) -> TruncatedSeries<T> {
    let v = TruncatedSeries::<T>::identity(order);
    let one_plus_v = TruncatedSeries::<T>::geometric(order, cr(-T::one()));
    let exponent = TruncatedSeries::constant(order, cr(s * T::lit(0.5))).add(&v.scale(cr(s)));
    v.mul(&one_plus_v).mul(&exponent.exp())
}

/// Series `η_s(z) = Σ_{n≥1} τ(Y_s^n) z^n` to the given order.
pub fn eta_series<T: Real>(s: T, order: usize) -> TruncatedSeries<T> {
    eta_inverse_series(s, order)
        .invert_composition()
        .expect("eta inverse has a unit linear coefficient up to e^{s/2} != 0")
}

pub fn fubm_moments<T: Real>(s: T, n_max: usize) -> Result<FubmMoments<T>, FubmError> {
    if n_max == 0 {
        return Err(FubmError::EmptyOrder);
    }
    if s < T::zero() {
        return Err(FubmError::NegativeTime(s.as_f64()));
    }
    let eta = eta_series(s, n_max);
    Ok(FubmMoments {
        time: s,
        moments: eta.coeffs()[1..].iter().map(|c| c.re).collect(),
    })
}

/// `H_s(z) = 1 + 2 η_s(z)` for `|z| < 1`.
///
/// Uses the η series up to radius 1/2 and Newton on `ξ(H) = z` beyond,
/// continued along the ray from the series value at radius 1/2.
pub fn herglotz<T: Real>(s: T, z: Complex<T>) -> Result<Complex<T>, FubmError> {
    if s < T::zero() {
        return Err(FubmError::NegativeTime(s.as_f64()));
    }
    let r = z.norm();
    if r >= T::one() {
        return Err(FubmError::OutsideDisc(format!("{z}")));
    }
    let h_series = |w: Complex<T>| {
        let eta = eta_series(s, HERGLOTZ_SERIES_ORDER);
        eta.eval(w) * T::lit(2.0) + T::one()
    };
    let r0 = T::lit(HERGLOTZ_SERIES_RADIUS);
    if r <= r0 {
        return Ok(h_series(z));
    }
    let dir = z / r;
    let mut h = h_series(dir * r0);
    let steps = 16;
    for k in 1..=steps {
        let frac = T::from_usize(k).unwrap() / T::from_usize(steps).unwrap();
        let target = dir * (r0 + (r - r0) * frac);
        h = newton_xi(s, target, h)?;
    }
    Ok(h)
}

fn newton_xi<T: Real>(s: T, target: Complex<T>, mut h: Complex<T>) -> Result<Complex<T>, FubmError> {
    let tol = T::tol(1e-14);
    let mut residual = T::infinity();
    for _ in 0..100 {
        let f = xi(s, h)? - target;
        residual = f.norm();
        let d = xi_derivative(s, h);
        let step = f / d;
        h = h - step;
        if step.norm() <= tol * (T::one() + h.norm()) {
            return Ok(h);
        }
    }
    Err(FubmError::NoConvergence { residual: residual.as_f64() })
}

/// `ψ(z) = (1 - √(1-z)) / (1 + √(1-z))`, principal branch.
pub fn psi_map<T: Real>(z: Complex<T>) -> Result<Complex<T>, FubmError> {
    if z.im == T::zero() && z.re >= T::one() {
        return Err(FubmError::OnBranchCut(format!("{z}")));
    }
    let r = (cr(T::one()) - z).sqrt();
    Ok((cr(T::one()) - r) / (cr(T::one()) + r))
}

/// `ψ^{-1}(w) = 4w / (1 + w)^2` on the unit disc.
pub fn psi_inverse<T: Real>(w: Complex<T>) -> Result<Complex<T>, FubmError> {
    if w.norm() >= T::one() {
        return Err(FubmError::OutsideDisc(format!("{w}")));
    }
    let d = w + T::one();
    Ok(w * T::lit(4.0) / (d * d))
}
