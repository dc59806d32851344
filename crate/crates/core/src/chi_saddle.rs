//! The deformed χ-transform
//! `χ(u) = u(u+α)/((u+1)(u+1-α)) · e^{(1+2u)t}`, its phase function
//! `φ(w) = 2tw - log[(1+w)(w+1-α)/(w(w+α))]` and the Taylor coefficients of
//! the local inverse `χ^{-1}(y) = Σ a_n (e^{-t} y)^n`.

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::{cr, Real};
use crate::series::{SeriesError, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SaddleError {
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("t must be positive, got {0}")]
    Time(f64),
    #[error("u = {0} is a pole of chi")]
    Pole(String),
    #[error("w = {0} is outside (-alpha, 0) or 1 - alpha + w <= 0")]
    PhiDomain(f64),
    #[error("contour radius {radius} must lie in (0, alpha = {alpha})")]
    Radius { radius: f64, alpha: f64 },
    #[error("at least 8 quadrature points are needed, got {0}")]
    Points(usize),
    #[error("order {0} exceeds the double-precision guard of 200")]
    OrderGuard(usize),
    #[error("coefficient overflow at n = {0}; use a smaller order or the scaled coefficients")]
    Overflow(usize),
    #[error("contour quadrature did not settle (last change {change:e} at {points} points)")]
    ContourNotConverged { change: f64, points: usize },
    #[error("the asymptotic formula needs alpha >= 1/2 and t >= t1 (regime {0:?})")]
    NotRealFour(SaddleRegime),
    #[error("discriminant has no real root for alpha = {0}")]
    NoTransition(f64),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaddleRegime {
    /// Four real critical points (`t ≥ t1` when `α ≥ 1/2`).
    RealFour,
    /// `Z±` real below `-1/4`: two conjugate pairs on `Re w = -1/2`.
    ComplexTwoPairs,
    /// `Δ < 0`.
    ComplexConjugate,
    /// `Z±` real on both sides of `-1/4`; only reachable for `α < 1/2`.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityProbe<T> {
    pub alpha: T,
    /// `α/(1-α)`, the value of `S(0)` at `t = 0`.
    pub s0: T,
    /// Roots of `q(z) = α²(1-z)² + 4(1-α)²z`.
    pub q_roots: [Complex<T>; 2],
    /// Largest root modulus; the roots multiply to 1, so this is 1 when they are conjugate.
    pub q_root_modulus: T,
    /// Abscissa `(α² - 2(1-α)²)/α²` of the vertical line through the roots.
    pub vertical_line: T,
}

pub fn admissibility_probe<T: Real>(alpha: T) -> Result<AdmissibilityProbe<T>, SaddleError> {
    check_alpha(alpha)?;
    let one = T::one();
    let a2 = alpha * alpha;
    let b = (one - alpha) * (one - alpha);
    // α² z² + (4(1-α)² - 2α²) z + α²
    let lin = T::lit(4.0) * b - a2 - a2;
    let half = -lin / (a2 + a2);
    let disc = cr(lin * lin - T::lit(4.0) * a2 * a2).sqrt() / (a2 + a2);
    let roots = [cr(half) + disc, cr(half) - disc];
    Ok(AdmissibilityProbe {
        alpha,
        s0: alpha / (one - alpha),
        q_root_modulus: roots[0].norm().max(roots[1].norm()),
        q_roots: roots,
        vertical_line: (a2 - b - b) / a2,
    })
}

/// `S(u) = (u+α)/(u+1-α) · e^{(1+2u)t}`.
pub fn s_transform<T: Real>(alpha: T, t: T, u: Complex<T>) -> Result<Complex<T>, SaddleError> {
    let den = u + T::one() - alpha;
    if den.norm() == T::zero() {
        return Err(SaddleError::Pole(format!("{u}")));
    }
    Ok((u + alpha) / den * (u * (t + t) + t).exp())
}

pub fn chi<T: Real>(alpha: T, t: T, u: Complex<T>) -> Result<Complex<T>, SaddleError> {
    let d1 = u + T::one();
    let d2 = u + T::one() - alpha;
    if d1.norm() == T::zero() || d2.norm() == T::zero() {
        return Err(SaddleError::Pole(format!("{u}")));
    }
    Ok(u * (u + alpha) / (d1 * d2) * (u * (t + t) + t).exp())
}

/// Real `φ` on `(-α, 0)`: `2tw - ln[(1+w)(1-α+w)/((-w)(α+w))]`.
pub fn phi<T: Real>(alpha: T, t: T, w: T) -> Result<T, SaddleError> {
    let one = T::one();
    if !(w > -alpha && w < T::zero() && one - alpha + w > T::zero()) {
        return Err(SaddleError::PhiDomain(w.as_f64()));
    }
    Ok((t + t) * w - ((one + w) * (one - alpha + w) / ((-w) * (alpha + w))).ln())
}

/// `φ` with the principal logarithm, for complex critical points.
pub fn phi_complex<T: Real>(alpha: T, t: T, w: Complex<T>) -> Complex<T> {
    let one = T::one();
    w * (t + t) - ((w + one) * (w + one - alpha) / (w * (w + alpha))).ln()
}

/// `φ″(w) = 1/(1+w)² - 1/w² + 1/(1-α+w)² - 1/(α+w)²`.
pub fn phi_second<T: Real>(alpha: T, w: Complex<T>) -> Complex<T> {
    let one = T::one();
    let inv2 = |z: Complex<T>| (z * z).inv();
    inv2(w + one) - inv2(w) + inv2(w + one - alpha) - inv2(w + alpha)
}

/// `Δ = (1-α)[(1-α)(1+αt)² - 2αt]`.
pub fn discriminant<T: Real>(alpha: T, t: T) -> T {
    let one = T::one();
    let b = one + alpha * t;
    (one - alpha) * ((one - alpha) * b * b - (alpha + alpha) * t)
}

/// Roots of `t ↦ Δ` found by bisection, independent of the closed forms.
/// `Δ` is a convex quadratic in `t` with minimum at `1/(1-α)`.
pub fn discriminant_roots<T: Real>(alpha: T) -> Result<(T, T), SaddleError> {
    check_alpha(alpha)?;
    let t_star = (T::one() - alpha).recip();
    let d_star = discriminant(alpha, t_star);
    if d_star > T::zero() {
        return Err(SaddleError::NoTransition(alpha.as_f64()));
    }
    if d_star == T::zero() {
        return Ok((t_star, t_star));
    }
    let mut hi = t_star + t_star;
    while discriminant(alpha, hi) <= T::zero() {
        hi = hi + hi;
    }
    let f = |t: T| discriminant(alpha, t);
    Ok((bisect(f, T::zero(), t_star), bisect(f, t_star, hi)))
}

fn bisect<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let pos_lo = f(lo) > T::zero();
    for _ in 0..300 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > T::zero()) == pos_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleReport<T> {
    pub alpha: T,
    pub t: T,
    /// `S(0) = α/(1-α) · e^t`.
    pub s0: T,
    pub delta: T,
    pub z_plus: Complex<T>,
    pub z_minus: Complex<T>,
    /// `[w₊₊, w₊₋, w₋₊, w₋₋]` with `w±· = -1/2 ± √(1/4 + Z·)`.
    pub w: [Complex<T>; 4],
    pub regime: SaddleRegime,
    pub phi_at_w: [Complex<T>; 4],
    pub phi2_at_w: [Complex<T>; 4],
    /// `U± = √(1 + 4Z±)`.
    pub u_plus: Complex<T>,
    pub u_minus: Complex<T>,
    /// `t + Re φ(w₊₊)`; only meaningful in the real-four regime.
    pub decay_plus: Option<T>,
    /// `t + Re φ(w₊₋)`.
    pub decay_minus: Option<T>,
}

impl<T: Real> SaddleReport<T> {
    /// Largest residual of `t Z² + (1-α)(1+αt) Z + α(1-α)/2` over `Z±`.
    pub fn z_residual(&self) -> T {
        let (a, t) = (self.alpha, self.t);
        let one = T::one();
        let b = (one - a) * (one + a * t);
        let c = a * (one - a) * T::lit(0.5);
        [self.z_plus, self.z_minus]
            .iter()
            .map(|&z| (z * z * t + z * b + c).norm())
            .fold(T::zero(), T::max)
    }

    /// Largest residual of `w(w+1) = Z` over the four points.
    pub fn w_residual(&self) -> T {
        let zs = [self.z_plus, self.z_minus, self.z_plus, self.z_minus];
        self.w
            .iter()
            .zip(zs)
            .map(|(&w, z)| (w * (w + T::one()) - z).norm())
            .fold(T::zero(), T::max)
    }

    /// Largest residual of `(1-α)(w²+w+α/2) + tw(1+w)(w+α)(w+1-α)`.
    pub fn quartic_residual(&self) -> T {
        let (a, t) = (self.alpha, self.t);
        let one = T::one();
        self.w
            .iter()
            .map(|&w| {
                let lhs = (w * w + w + a * T::lit(0.5)) * (one - a);
                let rhs = w * (w + one) * (w + a) * (w + one - a) * t;
                (lhs + rhs).norm()
            })
            .fold(T::zero(), T::max)
    }
}

pub fn critical_points<T: Real>(alpha: T, t: T) -> Result<SaddleReport<T>, SaddleError> {
    check_alpha(alpha)?;
    if !(t > T::zero()) {
        return Err(SaddleError::Time(t.as_f64()));
    }
    let one = T::one();
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let b = (one - alpha) * (one + alpha * t);
    let c = alpha * (one - alpha) * half;
    let mut delta = discriminant(alpha, t);
    let scale = b * b * T::epsilon() * T::lit(16.0);
    if delta.abs() <= scale {
        delta = T::zero();
    }
    let sq = cr(delta).sqrt();
    // Z₋ carries no cancellation; Z₊ follows from Z₊Z₋ = c/t.
    let z_minus = (cr(-b) - sq) / (t + t);
    let z_plus = cr(c / t) / z_minus;
    let root = |z: Complex<T>| {
        let mut r = z + quarter;
        if r.norm() <= T::epsilon() * T::lit(16.0) {
            r = Complex::new(T::zero(), T::zero());
        }
        r.sqrt()
    };
    let (sp, sm) = (root(z_plus), root(z_minus));
    // w₊ = Z/(1/2 + s) avoids cancellation when Z is small.
    let upper = |z: Complex<T>, s: Complex<T>| {
        let d = s + half;
        if d.norm() == T::zero() {
            cr(-half)
        } else {
            z / d
        }
    };
    let w = [upper(z_plus, sp), upper(z_minus, sm), -sp - half, -sm - half];
    let real = |x: Complex<T>| x.im == T::zero();
    let regime = if delta < T::zero() {
        SaddleRegime::ComplexConjugate
    } else if real(sp) && real(sm) {
        SaddleRegime::RealFour
    } else if !real(sp) && !real(sm) {
        SaddleRegime::ComplexTwoPairs
    } else {
        SaddleRegime::Mixed
    };
    let phi_at_w = w.map(|x| phi_complex(alpha, t, x));
    let phi2_at_w = w.map(|x| phi_second(alpha, x));
    let (decay_plus, decay_minus) = if regime == SaddleRegime::RealFour {
        (Some(t + phi_at_w[0].re), Some(t + phi_at_w[1].re))
    } else {
        (None, None)
    };
    Ok(SaddleReport {
        alpha,
        t,
        s0: alpha / (one - alpha) * t.exp(),
        delta,
        z_plus,
        z_minus,
        w,
        regime,
        phi_at_w,
        phi2_at_w,
        u_plus: sp + sp,
        u_minus: sm + sm,
        decay_plus,
        decay_minus,
    })
}

pub const MAX_LAGRANGE_ORDER: usize = 200;

/// `b_n = a_n e^{-nt}`, `n = 1..=N`: Taylor coefficients of the inverse of `χ` itself.
/// These decay whenever the inverse extends past the unit disc, so they stay
/// representable where the `a_n` do not.
pub fn scaled_coeffs_lagrange<T: Real>(alpha: T, t: T, n: usize) -> Result<Vec<T>, SaddleError> {
    check_alpha(alpha)?;
    if n > MAX_LAGRANGE_ORDER {
        return Err(SaddleError::OrderGuard(n));
    }
    let one = T::one();
    let u = TruncatedSeries::<T>::identity(n);
    let num = u.mul(&u.add(&TruncatedSeries::constant(n, cr(alpha))));
    // 1/(1+u) and 1/(1-α+u) = (1/(1-α)) Σ (-u/(1-α))^k.
    let r1 = TruncatedSeries::geometric(n, cr(-one));
    let r2 = TruncatedSeries::geometric(n, cr(-(one - alpha).recip())).scale(cr((one - alpha).recip()));
    let e = TruncatedSeries::constant(n, cr(t)).add(&u.scale(cr(t + t))).exp();
    let chi = num.mul(&r1).mul(&r2).mul(&e);
    let inv = chi.invert_composition()?;
    let out: Vec<T> = inv.coeffs()[1..].iter().map(|c| c.re).collect();
    if let Some(k) = out.iter().position(|x| !x.is_finite()) {
        return Err(SaddleError::Overflow(k + 1));
    }
    Ok(out)
}

/// `a_1..a_N` by Lagrange inversion; `a_1 = (1-α)/α`.
pub fn coeffs_lagrange<T: Real>(alpha: T, t: T, n: usize) -> Result<Vec<T>, SaddleError> {
    let b = scaled_coeffs_lagrange(alpha, t, n)?;
    let out: Vec<T> = b
        .iter()
        .enumerate()
        .map(|(k, &x)| x * (t * T::from_usize(k + 1).unwrap()).exp())
        .collect();
    if let Some(k) = out.iter().position(|x| !x.is_finite()) {
        return Err(SaddleError::Overflow(k + 1));
    }
    Ok(out)
}

/// `log` of the contour integrand `(1+1/w)^n ((w+1-α)/(w+α))^n e^{-2ntw} · w`
/// (the trailing `w` comes from `dw = i w dθ`).
fn log_integrand<T: Real>(alpha: T, t: T, n: T, w: Complex<T>) -> Complex<T> {
    let one = T::one();
    ((w.inv() + one).ln() + ((w + one - alpha) / (w + alpha)).ln() - w * (t + t)) * n + w.ln()
}

/// `a_n` by the trapezoidal rule on `|w| = radius`.
pub fn coeffs_contour<T: Real>(alpha: T, t: T, n: usize, radius: T, points: usize) -> Result<Complex<T>, SaddleError> {
    check_alpha(alpha)?;
    if !(radius > T::zero() && radius < alpha) {
        return Err(SaddleError::Radius { radius: radius.as_f64(), alpha: alpha.as_f64() });
    }
    if points < 8 {
        return Err(SaddleError::Points(points));
    }
    let nn = T::from_usize(n).unwrap();
    let p = T::from_usize(points).unwrap();
    let logs: Vec<Complex<T>> = (0..points)
        .map(|k| {
            let th = T::TAU() * T::from_usize(k).unwrap() / p;
            log_integrand(alpha, t, nn, Complex::from_polar(radius, th))
        })
        .collect();
    let peak = logs.iter().map(|l| l.re).fold(T::neg_infinity(), T::max);
    let sum = logs
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, l| acc + (l - peak).exp());
    let value = sum * (peak.exp() / (p * nn));
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(SaddleError::Overflow(n));
    }
    Ok(value)
}

/// Radius minimising the peak of the integrand modulus on the circle. The
/// logarithm of the maximum modulus is convex in `log r`, so golden-section
/// search applies.
pub fn optimal_radius<T: Real>(alpha: T, t: T, n: usize) -> T {
    let nn = T::from_usize(n.max(1)).unwrap();
    let samples = 256;
    let peak = |lr: T| {
        let r = lr.exp();
        (0..samples)
            .map(|k| {
                let th = T::TAU() * T::from_usize(k).unwrap() / T::from_usize(samples).unwrap();
                log_integrand(alpha, t, nn, Complex::from_polar(r, th)).re
            })
            .fold(T::neg_infinity(), T::max)
    };
    let g = T::lit(0.618_033_988_749_894_8);
    let mut lo = (alpha * T::lit(1e-3)).ln();
    let mut hi = (alpha * T::lit(0.995)).ln();
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (peak(x1), peak(x2));
    for _ in 0..60 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = peak(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = peak(x2);
        }
    }
    ((lo + hi) * T::lit(0.5)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourEstimate<T> {
    pub n: usize,
    pub value: Complex<T>,
    pub radius: T,
    pub points: usize,
}

pub const CONTOUR_START_POINTS: usize = 2048;
const CONTOUR_MAX_POINTS: usize = 1 << 20;

/// Contour estimate at `radius` (or the optimal radius), doubling the node
/// count from 2048 until two successive results agree to `1e-10` relative.
pub fn coeffs_contour_auto<T: Real>(alpha: T, t: T, n: usize, radius: Option<T>) -> Result<ContourEstimate<T>, SaddleError> {
    check_alpha(alpha)?;
    let radius = radius.unwrap_or_else(|| optimal_radius(alpha, t, n));
    let tol = T::tol(1e-10);
    let mut points = CONTOUR_START_POINTS;
    let mut prev = coeffs_contour(alpha, t, n, radius, points)?;
    loop {
        let next_points = points * 2;
        let next = coeffs_contour(alpha, t, n, radius, next_points)?;
        let change = (next - prev).norm() / next.norm().max(T::min_positive_value());
        if change <= tol {
            return Ok(ContourEstimate { n, value: next, radius, points: next_points });
        }
        if next_points >= CONTOUR_MAX_POINTS {
            return Err(SaddleError::ContourNotConverged { change: change.as_f64(), points: next_points });
        }
        prev = next;
        points = next_points;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleAsymptotic<T> {
    pub n: usize,
    /// Leading steepest-descent approximation of `|a_n e^{-nt}|` through `w₊₊`:
    /// `e^{-n(t + Re φ(w₊₊))} / (n √(2πn |φ″(w₊₊)|))`.
    pub magnitude: T,
    pub log_magnitude: T,
    /// Predicted sign of `a_n`, `-(-1)^n`.
    pub sign: i8,
    /// `|c₊ + c₋|` with `c± = e^{-nt-nφ(w₊±)} / √(∓2iπn φ″(w₊±))` and `e^{-nφ} = (-1)^n e^{-n Re φ}`.
    pub two_saddle_magnitude: T,
    /// `t + min(Re φ(w₊₊), Re φ(w₊₋))`.
    pub rate: T,
    pub rate_plus: T,
    pub rate_minus: T,
}

pub fn saddle_asymptotic<T: Real>(alpha: T, t: T, n: usize) -> Result<SaddleAsymptotic<T>, SaddleError> {
    let report = critical_points(alpha, t)?;
    if alpha < T::lit(0.5) || report.regime != SaddleRegime::RealFour {
        return Err(SaddleError::NotRealFour(report.regime));
    }
    let nn = T::from_usize(n).unwrap();
    let two_pi = T::TAU();
    let rate_plus = t + report.phi_at_w[0].re;
    let rate_minus = t + report.phi_at_w[1].re;
    let p2p = report.phi2_at_w[0].re;
    let p2m = report.phi2_at_w[1].re;
    let log_magnitude = -nn * rate_plus - nn.ln() - (two_pi * nn * p2p.abs()).ln() * T::lit(0.5);
    let odd = n % 2 == 1;
    let sign = if odd { 1 } else { -1 };

    let i = Complex::new(T::zero(), T::one());
    let sqrt_plus = (i * (-two_pi * nn * p2p)).sqrt();
    let sqrt_minus = (i * (two_pi * nn * p2m.abs())).sqrt();
    let (lp, lm) = (-nn * rate_plus, -nn * rate_minus);
    let top = lp.max(lm);
    let sum = sqrt_plus.inv() * (lp - top).exp() + sqrt_minus.inv() * (lm - top).exp();
    let two_saddle_magnitude = top.exp() * sum.norm();
    Ok(SaddleAsymptotic {
        n,
        magnitude: log_magnitude.exp(),
        log_magnitude,
        sign,
        two_saddle_magnitude,
        rate: rate_plus.min(rate_minus),
        rate_plus,
        rate_minus,
    })
}

/// `U₊(t1) = √((x⁴+x)/(1+x))` with `x = √(2α-1)`.
pub fn u_plus_at_t1<T: Real>(alpha: T) -> T {
    let x = (alpha + alpha - T::one()).sqrt();
    ((x * x * x * x + x) / (T::one() + x)).sqrt()
}

fn check_alpha<T: Real>(alpha: T) -> Result<(), SaddleError> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(SaddleError::Alpha(alpha.as_f64()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vmap::{alpha_at_time, transition_times};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn t1(alpha: f64) -> f64 {
        transition_times(alpha).unwrap().1
    }

    #[test]
    fn admissibility_examples() {
        let p = admissibility_probe::<f64>(0.5).unwrap();
        assert!((p.q_roots[0] - c(-1.0, 0.0)).norm() < 1e-7);
        assert!((p.q_roots[1] - c(-1.0, 0.0)).norm() < 1e-7);
        assert!((p.q_root_modulus - 1.0).abs() < 1e-12);
        let p = admissibility_probe::<f64>(0.8).unwrap();
        let im = 2.0 * 0.2 * 0.6f64.sqrt() / 0.64;
        assert!((p.q_roots[0] - c(0.875, im)).norm() < 1e-12);
        assert!((p.q_roots[1] - c(0.875, -im)).norm() < 1e-12);
        assert!((p.q_root_modulus - 1.0).abs() < 1e-12);
        assert!((admissibility_probe::<f64>(0.6).unwrap().q_root_modulus - 1.0).abs() < 1e-12);
        assert!((p.s0 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn chi_examples() {
        for u in [c(0.3, 0.1), c(-0.2, 0.4), c(1.5, 0.0)] {
            let t = 0.9;
            let expected = u / (u + 1.0) * (u * 2.0 * t + t).exp();
            assert!((chi::<f64>(0.5, t, u).unwrap() - expected).norm() < 1e-14);
            let s = s_transform::<f64>(0.5, t, u).unwrap();
            assert!((s - (u * 2.0 * t + t).exp()).norm() < 1e-13);
        }
        assert_eq!(chi::<f64>(0.7, 2.0, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!(chi::<f64>(0.7, 1.0, c(-1.0, 0.0)).is_err());
        assert!(chi::<f64>(0.7, 1.0, c(-0.3, 0.0)).is_err());
    }

    #[test]
    fn phi_forms_agree() {
        for (alpha, t, w) in [(0.7, 2.0, -0.25), (0.6, 7.0, -0.1), (0.9, 0.3, -0.05)] {
            let real = phi::<f64>(alpha, t, w).unwrap();
            let log_form = 2.0 * t * w - ((1.0 + w) * (w + 1.0 - alpha)).ln() + (-w * (w + alpha)).ln();
            assert!((real - log_form).abs() < 1e-12);
            assert!((phi_complex::<f64>(alpha, t, c(w, 0.0)).re - real).abs() < 1e-12);
        }
        assert!(phi::<f64>(0.7, 1.0, -0.8).is_err());
        assert!(phi::<f64>(0.7, 1.0, 0.1).is_err());
    }

    #[test]
    fn regime_examples() {
        let r = critical_points::<f64>(0.5, 2.0).unwrap();
        assert_eq!(r.delta, 0.0);
        let r = critical_points::<f64>(0.7, 7.0).unwrap();
        assert_eq!(r.regime, SaddleRegime::RealFour);
        assert!(r.w[..2].iter().all(|w| w.re > -0.7 && w.re < 0.0 && w.im == 0.0));
        assert!(r.w[2..].iter().all(|w| w.re <= -0.7));
        assert!(r.phi2_at_w[0].re < 0.0 && r.phi2_at_w[1].re > 0.0);
        assert!((r.w[0].re + 0.106_371_837_433_205_16).abs() < 1e-12);
        assert!((r.w[1].re + 0.196_355_920_892_328_16).abs() < 1e-12);
        assert!(r.decay_plus.unwrap() > 0.0 && r.decay_minus.unwrap() > 0.0);

        let r = critical_points::<f64>(0.7, 1.0).unwrap();
        assert_eq!(r.regime, SaddleRegime::ComplexConjugate);
        assert!((r.z_plus - r.z_minus.conj()).norm() < 1e-14);
        let x = (2.0f64 * 0.7 - 1.0).sqrt();
        let re = 0.25 + r.z_plus.re;
        assert!(r.z_plus.re < 0.0);
        assert!(re >= 0.25 - 0.35 * (1.0 + x) - 1e-12 && re <= 0.25 - 0.35 * (1.0 - x) + 1e-12);

        let r = critical_points::<f64>(0.7, 0.2).unwrap();
        assert_eq!(r.regime, SaddleRegime::ComplexTwoPairs);
        assert!(r.w.iter().all(|w| (w.re + 0.5).abs() < 1e-12));
        for r in [critical_points::<f64>(0.7, 7.0).unwrap(), critical_points::<f64>(0.7, 1.0).unwrap(), critical_points::<f64>(0.3, 1.0).unwrap()] {
            assert!(r.z_residual() < 1e-12);
            assert!(r.w_residual() < 1e-12);
            assert!(r.quartic_residual() < 1e-10);
        }
    }

    #[test]
    fn half_alpha_retrieves_fubm_saddles() {
        for t in [2.5, 4.0, 9.0] {
            let r = critical_points::<f64>(0.5, t).unwrap();
            let roots: Vec<_> = r.w.iter().filter(|&&w| (w * (w + 1.0) * t + 0.5).norm() < 1e-12).collect();
            assert_eq!(roots.len(), 2, "t = {t}");
            assert!(saddle_asymptotic::<f64>(0.5, t, 30).unwrap().rate > 0.0);
        }
    }

    #[test]
    fn discriminant_roots_match_closed_form() {
        for alpha in [0.5, 0.55, 0.7, 0.9, 0.95] {
            let (a, b) = discriminant_roots::<f64>(alpha).unwrap();
            let (t0, t1) = transition_times(alpha).unwrap();
            assert!((a - t0).abs() < 1e-10 && (b - t1).abs() < 1e-10, "alpha = {alpha}");
        }
        assert!(discriminant_roots::<f64>(0.4).is_err());
    }

    #[test]
    fn lagrange_first_coefficients() {
        let a = coeffs_lagrange::<f64>(0.7, 1.0, 30).unwrap();
        assert!((a[0] - 0.3 / 0.7).abs() < 1e-14);
        assert!((a[1] - 0.166_180_76).abs() < 1e-8);
        assert!((a[29] / -222_352.350_688_2 - 1.0).abs() < 1e-9);
        assert!((coeffs_lagrange::<f64>(0.5, 3.0, 1).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!(matches!(coeffs_lagrange::<f64>(0.7, 1.0, 201), Err(SaddleError::OrderGuard(201))));
    }

    #[test]
    fn contour_matches_lagrange() {
        for alpha in [0.5, 0.6, 0.7] {
            for t in [1.0, t1(alpha) + 0.5] {
                let a = coeffs_lagrange::<f64>(alpha, t, 30).unwrap();
                for n in [1, 2, 5, 10, 20, 30] {
                    let est = coeffs_contour_auto::<f64>(alpha, t, n, None).unwrap();
                    let rel = (est.value.re - a[n - 1]).abs() / a[n - 1].abs();
                    assert!(rel < 1e-8, "alpha {alpha} t {t} n {n}: rel {rel:e}");
                    assert!(est.value.im.abs() / est.value.norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn contour_radius_independence() {
        for n in [1, 10, 30] {
            let a = coeffs_contour_auto::<f64>(0.7, 1.0, n, Some(0.35)).unwrap().value;
            let b = coeffs_contour_auto::<f64>(0.7, 1.0, n, Some(0.7 / 3.0)).unwrap().value;
            assert!((a - b).norm() / a.norm() < 1e-9);
        }
        let n1 = coeffs_contour::<f64>(0.8, 2.0, 1, 0.4, 2048).unwrap();
        assert!((n1.re - 0.25).abs() < 1e-10);
        assert!(coeffs_contour::<f64>(0.7, 1.0, 3, 0.7, 64).is_err());
    }

    #[test]
    fn asymptotic_ratio_improves() {
        let (alpha, t) = (0.7, 7.0);
        let b = scaled_coeffs_lagrange::<f64>(alpha, t, 60).unwrap();
        let mut prev = 0.0;
        for n in [20, 40, 60] {
            let s = saddle_asymptotic::<f64>(alpha, t, n).unwrap();
            let ratio = b[n - 1].abs() / s.magnitude;
            assert!(ratio > prev);
            prev = ratio;
            assert_eq!(b[n - 1].signum() as i8, s.sign);
        }
        assert!((prev - 1.0).abs() < 0.1);
        let err = saddle_asymptotic::<f64>(0.7, 1.0, 10).unwrap_err();
        assert_eq!(err, SaddleError::NotRealFour(SaddleRegime::ComplexConjugate));
    }

    #[test]
    fn rates_positive_on_grid() {
        for alpha in [0.5, 0.6, 0.7, 0.8] {
            for dt in [0.5, 2.0, 5.0] {
                let s = saddle_asymptotic::<f64>(alpha, t1(alpha) + dt, 10).unwrap();
                assert!(s.rate > 0.0, "alpha {alpha} dt {dt}");
            }
        }
    }

    #[test]
    fn u_plus_endpoint_identity() {
        for alpha in [0.55, 0.7, 0.85] {
            let r = critical_points::<f64>(alpha, t1(alpha)).unwrap();
            assert!((r.u_plus.re - u_plus_at_t1::<f64>(alpha)).abs() < 1e-7);
        }
    }

    #[test]
    fn scalar_inequality() {
        let h = |y: f64| 2.0 * y / (1.0 - y * y) - ((1.0 + y) / (1.0 - y)).ln();
        assert_eq!(h(0.0), 0.0);
        let mut prev = 0.0;
        for k in 1..=100 {
            let v = h(k as f64 / 101.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn single_precision_critical_points() {
        let r32 = critical_points(0.7f32, 7.0).unwrap();
        let r64 = critical_points::<f64>(0.7f64, 7.0).unwrap();
        for (a, b) in r32.w.iter().zip(&r64.w) {
            assert!((a.re as f64 - b.re).abs() < 1e-5);
        }
    }

    const LADDER_ALPHAS: [f64; 3] = [0.55, 0.7, 0.85];

    proptest! {
        #[test]
        fn saddle_ordering_ladder(ai in 0usize..3, dt in 0.0f64..10.0) {
            let alpha = LADDER_ALPHAS[ai];
            let t = t1(alpha) + dt;
            let r = critical_points::<f64>(alpha, t).unwrap();
            prop_assert_eq!(r.regime, SaddleRegime::RealFour);
            let (wp, wm) = (r.w[0].re, r.w[1].re);
            prop_assert!(1.0 - alpha + wp >= 0.0 && 1.0 - alpha + wm >= 0.0);
            let sq = |x: f64| x * x;
            let s = 2.0 * alpha - 1.0;
            let lhs = |w: f64| sq(1.0 - alpha + w) * sq(alpha + w);
            let rhs = |w: f64| s * sq(1.0 + w) * sq(w);
            prop_assert!(lhs(wp) >= rhs(wp) * (1.0 - 1e-12));
            prop_assert!(lhs(wm) <= rhs(wm) * (1.0 + 1e-12));
            prop_assert!(r.phi2_at_w[0].re < 0.0 && r.phi2_at_w[1].re > 0.0);
            prop_assert!(r.decay_plus.unwrap() > 0.0 && r.decay_minus.unwrap() > 0.0);
            prop_assert!(r.w[2].re <= -alpha && r.w[3].re <= -alpha);
            prop_assert!(r.quartic_residual() < 1e-10);

            let later = critical_points::<f64>(alpha, t + 0.1).unwrap();
            prop_assert!(-later.z_plus.re < -r.z_plus.re);
            prop_assert!(-later.z_minus.re > -r.z_minus.re);
        }

        #[test]
        fn z_minus_increasing_in_alpha(t in 2.05f64..20.0, f in 0.0f64..0.98) {
            let top = alpha_at_time(t).unwrap();
            let a = 0.5 + f * (top - 0.5);
            let b = a + 0.01 * (top - 0.5);
            let za = critical_points::<f64>(a, t).unwrap().z_minus.re;
            let zb = critical_points::<f64>(b, t).unwrap().z_minus.re;
            prop_assert!(zb > za);
        }

        #[test]
        fn critical_residuals(alpha in 0.05f64..0.95, t in 0.05f64..30.0) {
            let r = critical_points::<f64>(alpha, t).unwrap();
            prop_assert!(r.z_residual() < 1e-12);
            prop_assert!(r.w_residual() < 1e-12);
        }
    }
}
