//! Characteristic-flow representation of the moment generating function of
//! the equal-ranks free Jacobi process started at `δ_1`.
//!
//! With `A = (1-2α)/(2α)`,
//!
//! ```text
//! V(u) = (u-A-1)(u-A) / ((u+A+1)(u+A)) · e^{2αut}
//! z    = 1 + 2A q - (u² - A²) q²,   q = (1 - V) / ((u-A) + (u+A) V)
//! ```
//!
//! and `J(z)` is the local inverse of `u ↦ z` with `J(0) = 1/(2α)`. Then
//!
//! ```text
//! M_t(z) = (-A + √(A² z + (1-z) J²)) / (1-z) = J (1+ψ)/(1-ψ) - A,   ψ = V(J(z)).
//! ```

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::{cr, sqrt_near, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("u = {0} is the pole -A-1 of V")]
    PoleOuter(String),
    #[error("u = {0} is the pole -A of V")]
    PoleInner(String),
    #[error("denominator (u-A) + (u+A)V vanishes at u = {0}")]
    VanishingDenominator(String),
    #[error("continuation towards z = {z} failed at fraction {reached} (step underflow)")]
    Continuation { z: String, reached: f64 },
    #[error("|1 - z| is too small to fix the square-root branch (z = {0})")]
    BranchAmbiguity(String),
}

/// `A(α) = (1-2α)/(2α)`.
pub fn constant_a<T: Real>(alpha: T) -> T {
    (T::one() - alpha - alpha) / (alpha + alpha)
}

/// `B(1-z₀, α) = (1-α)/(α(1-z₀)) + A²`.
pub fn constant_b<T: Real>(alpha: T, z0: Complex<T>) -> Complex<T> {
    let a = constant_a(alpha);
    (cr(T::one()) - z0).inv() * ((T::one() - alpha) / alpha) + a * a
}

/// `C(z₀, α) = (α-1)/(1-z₀)`.
pub fn constant_c<T: Real>(alpha: T, z0: Complex<T>) -> Complex<T> {
    (cr(T::one()) - z0).inv() * (alpha - T::one())
}

fn check_alpha<T: Real>(alpha: T) -> Result<(), FlowError> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(FlowError::Alpha(alpha.as_f64()))
    }
}

struct VParts<T> {
    v: Complex<T>,
    dv: Complex<T>,
}

fn v_parts<T: Real>(alpha: T, t: T, u: Complex<T>) -> Result<VParts<T>, FlowError> {
    let a = constant_a(alpha);
    let outer = u + a + T::one();
    let inner = u + a;
    let pole_tol = T::epsilon() * T::lit(8.0) * (T::one() + u.norm() + a.abs());
    if outer.norm() <= pole_tol {
        return Err(FlowError::PoleOuter(format!("{u}")));
    }
    if inner.norm() <= pole_tol {
        return Err(FlowError::PoleInner(format!("{u}")));
    }
    let p = (u - a - T::one()) * (u - a);
    let dp = u * T::lit(2.0) - a * T::lit(2.0) - T::one();
    let den = outer * inner;
    let dden = u * T::lit(2.0) + a * T::lit(2.0) + T::one();
    let r = p / den;
    let dr = (dp * den - p * dden) / (den * den);
    let k = T::lit(2.0) * alpha * t;
    let e = (u * k).exp();
    Ok(VParts { v: r * e, dv: (dr + r * k) * e })
}

/// `V_{4αt}(u)`.
pub fn v_map<T: Real>(alpha: T, t: T, u: Complex<T>) -> Result<Complex<T>, FlowError> {
    Ok(v_parts(alpha, t, u)?.v)
}

/// `∂_u V_{4αt}(u)`.
pub fn v_map_derivative<T: Real>(alpha: T, t: T, u: Complex<T>) -> Result<Complex<T>, FlowError> {
    Ok(v_parts(alpha, t, u)?.dv)
}

fn inversion_parts<T: Real>(alpha: T, t: T, u: Complex<T>) -> Result<(Complex<T>, Complex<T>), FlowError> {
    let a = constant_a(alpha);
    let VParts { v, dv } = v_parts(alpha, t, u)?;
    let d = (u - a) + (u + a) * v;
    if d.norm() == T::zero() {
        return Err(FlowError::VanishingDenominator(format!("{u}")));
    }
    let dd = cr(T::one()) + v + (u + a) * dv;
    let one_m_v = cr(T::one()) - v;
    let q = one_m_v / d;
    let dq = (-dv * d - one_m_v * dd) / (d * d);
    let w = u * u - a * a;
    let z = cr(T::one()) + q * (a + a) - w * q * q;
    let dz = dq * (a + a) - u * q * q * T::lit(2.0) - w * q * dq * T::lit(2.0);
    Ok((z, dz))
}

/// Right-hand side of the inversion relation: the characteristic endpoint `z_t`
/// as a function of `u = √B(1-z₀, α)`.
pub fn inversion_rhs<T: Real>(alpha: T, t: T, u: Complex<T>) -> Result<Complex<T>, FlowError> {
    check_alpha(alpha)?;
    Ok(inversion_parts(alpha, t, u)?.0)
}

/// `∂_u` of [`inversion_rhs`]; equals `e^t/(1-α)` at `u = 1/(2α)`.
pub fn inversion_derivative<T: Real>(alpha: T, t: T, u: Complex<T>) -> Result<Complex<T>, FlowError> {
    check_alpha(alpha)?;
    Ok(inversion_parts(alpha, t, u)?.1)
}

/// Continuation parameters for [`local_inverse_j`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Continuation {
    pub initial_steps: usize,
    pub max_newton: usize,
    pub min_fraction_step: f64,
}

impl Default for Continuation {
    fn default() -> Self {
        Self { initial_steps: 20, max_newton: 30, min_fraction_step: 1e-9 }
    }
}

/// Damped Newton for `inversion_rhs(u) = target`. Returns the root and the
/// number of iterations used.
fn newton<T: Real>(
    alpha: T,
    t: T,
    target: Complex<T>,
    mut u: Complex<T>,
    max_iter: usize,
) -> Option<(Complex<T>, usize)> {
    let tol = T::epsilon() * T::lit(16.0);
    let (z, _) = inversion_parts(alpha, t, u).ok()?;
    let mut res = (z - target).norm();
    for it in 1..=max_iter {
        let (z, dz) = inversion_parts(alpha, t, u).ok()?;
        let f = z - target;
        if dz.norm() == T::zero() {
            return None;
        }
        let step = f / dz;
        let mut lambda = T::one();
        let mut accepted = None;
        for _ in 0..12 {
            let cand = u - step * lambda;
            if let Ok((zc, _)) = inversion_parts(alpha, t, cand) {
                let rc = (zc - target).norm();
                if rc < res || rc <= tol * (T::one() + target.norm()) || step.norm() * lambda <= tol {
                    accepted = Some((cand, rc));
                    break;
                }
            }
            lambda = lambda * T::lit(0.5);
        }
        let (cand, rc) = accepted?;
        let moved = (cand - u).norm();
        u = cand;
        res = rc;
        if moved <= tol * (T::one() + u.norm()) {
            return Some((u, it));
        }
    }
    (res <= T::tol(1e-12) * (T::one() + target.norm())).then_some((u, max_iter))
}

/// Walks `s ↦ J(s z)` from `s = 0` to `s = 1`, calling `visit(s, J)` at every
/// accepted node (including both ends).
fn continue_path<T: Real>(
    alpha: T,
    t: T,
    z: Complex<T>,
    opts: Continuation,
    mut visit: impl FnMut(T, Complex<T>),
) -> Result<Complex<T>, FlowError> {
    check_alpha(alpha)?;
    let mut u = cr(T::one() / (alpha + alpha));
    visit(T::zero(), u);
    if z.norm() == T::zero() {
        return Ok(u);
    }
    let fail = |s: T| FlowError::Continuation { z: format!("{z}"), reached: s.as_f64() };
    let min_ds = T::lit(opts.min_fraction_step);
    let mut s = T::zero();
    let mut ds = T::one() / T::from_usize(opts.initial_steps.max(1)).unwrap();
    while s < T::one() {
        let s_next = (s + ds).min(T::one());
        let target = z * s_next;
        // Euler predictor from the current point.
        let predictor = inversion_parts(alpha, t, u)
            .ok()
            .filter(|(_, dz)| dz.norm() > T::zero())
            .map_or(u, |(zc, dz)| u + (target - zc) / dz);
        match newton(alpha, t, target, predictor, opts.max_newton) {
            Some((next, iters)) => {
                u = next;
                s = s_next;
                visit(s, u);
                if iters < 4 {
                    ds = ds + ds;
                }
            }
            None => {
                ds = ds * T::lit(0.5);
                if ds < min_ds {
                    return Err(fail(s));
                }
            }
        }
    }
    Ok(u)
}

/// `J_{4αt}(z)`: the local inverse of the inversion relation with
/// `J(0) = 1/(2α)`, continued along the segment `0 → z`.
pub fn local_inverse_j<T: Real>(alpha: T, t: T, z: Complex<T>) -> Result<Complex<T>, FlowError> {
    local_inverse_j_with(alpha, t, z, Continuation::default())
}

pub fn local_inverse_j_with<T: Real>(
    alpha: T,
    t: T,
    z: Complex<T>,
    opts: Continuation,
) -> Result<Complex<T>, FlowError> {
    continue_path(alpha, t, z, opts, |_, _| {})
}

/// One evaluation of both closed forms of `M_t(z)` with every intermediate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowPoint<T> {
    pub alpha: T,
    pub t: T,
    pub z: Complex<T>,
    /// Characteristic variable `√B(1-z₀, α)`; equals `J`.
    pub u: Complex<T>,
    pub a: T,
    pub b: Complex<T>,
    pub c: Complex<T>,
    pub j: Complex<T>,
    pub psi_t: Complex<T>,
    pub m_sqrt: Complex<T>,
    pub m_homographic: Complex<T>,
}

impl<T: Real> FlowPoint<T> {
    pub fn m(&self) -> Complex<T> {
        self.m_sqrt
    }

    pub fn forms_gap(&self) -> T {
        (self.m_sqrt - self.m_homographic).norm()
    }
}

/// The moment generating function in its square-root and homographic forms.
///
/// The branch of `√(A² z + (1-z) J²)` is followed continuously along the
/// continuation path from its value `1/(2α)` at `z = 0`.
pub fn mgf_theorem1<T: Real>(alpha: T, t: T, z: Complex<T>) -> Result<FlowPoint<T>, FlowError> {
    let one = cr(T::one());
    if (one - z).norm() < T::lit(1e-8) {
        return Err(FlowError::BranchAmbiguity(format!("{z}")));
    }
    let a = constant_a(alpha);
    let radicand = |zs: Complex<T>, j: Complex<T>| zs * (a * a) + (one - zs) * j * j;
    let mut root = cr(T::one() / (alpha + alpha));
    let j = continue_path(alpha, t, z, Continuation::default(), |s, j| {
        root = sqrt_near(radicand(z * s, j), root);
    })?;
    let m_sqrt = (root - a) / (one - z);
    let psi_t = v_map(alpha, t, j)?;
    let m_homographic = j * (one + psi_t) / (one - psi_t) - a;
    let b = j * j;
    Ok(FlowPoint {
        alpha,
        t,
        z,
        u: j,
        a,
        b,
        c: (b - a * a) * (-alpha),
        j,
        psi_t,
        m_sqrt,
        m_homographic,
    })
}

/// Taylor coefficients `m_0..m_n` of `M_t` by the trapezoidal rule on
/// `|z| = radius` applied to [`mgf_theorem1`].
pub fn mgf_taylor_coefficients(
    alpha: f64,
    t: f64,
    radius: f64,
    points: usize,
    n: usize,
) -> Result<Vec<f64>, FlowError> {
    let values: Vec<Complex<f64>> = (0..points)
        .map(|k| {
            let z = Complex::from_polar(radius, std::f64::consts::TAU * k as f64 / points as f64);
            mgf_theorem1(alpha, t, z).map(|p| p.m_sqrt)
        })
        .collect::<Result<_, _>>()?;
    Ok((0..=n)
        .map(|j| {
            let acc: Complex<f64> = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex::from_polar(1.0, -std::f64::consts::TAU * (j * k) as f64 / points as f64))
                .sum();
            acc.re / points as f64 / radius.powi(j as i32)
        })
        .collect())
}

/// Largest radius (searched by bisection up to `r_cap`) for which
/// continuation succeeds in every one of `directions` equally spaced
/// directions and both closed forms agree to `1e-10`. This is an empirical
/// lower estimate of the local invertibility radius, not a proven bound.
pub fn empirical_radius(alpha: f64, t: f64, directions: usize, r_cap: f64) -> f64 {
    let ok = |r: f64| {
        (0..directions).all(|k| {
            let z = Complex::from_polar(r, std::f64::consts::TAU * k as f64 / directions as f64);
            mgf_theorem1(alpha, t, z).is_ok_and(|p| {
                p.forms_gap() < 1e-10
                    && inversion_rhs(alpha, t, p.j).is_ok_and(|zz| (zz - z).norm() < 1e-10)
            })
        })
    };
    if ok(r_cap) {
        return r_cap;
    }
    let (mut lo, mut hi) = (0.0, r_cap);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// State `(z_t, f_t, y_t)` on a characteristic curve, `y_t = ∫₀ᵗ z_s ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicPoint<T> {
    pub t: T,
    pub z: Complex<T>,
    pub f: Complex<T>,
    pub y: Complex<T>,
}

/// Integrates `z' = (1-2α) z + 2α z (1-z) f`, `f' = α z f²` from
/// `(z₀, 1/(1-z₀))` by RK4, returning every node.
pub fn characteristic_curve<T: Real>(
    alpha: T,
    z0: Complex<T>,
    t_end: T,
    steps: usize,
) -> Vec<CharacteristicPoint<T>> {
    let one = cr(T::one());
    let k1c = T::one() - alpha - alpha;
    let field = |z: Complex<T>, f: Complex<T>| {
        (
            z * k1c + z * (one - z) * f * (alpha + alpha),
            z * f * f * alpha,
            z,
        )
    };
    let h = t_end / T::from_usize(steps.max(1)).unwrap();
    let half = h * T::lit(0.5);
    let mut p = CharacteristicPoint { t: T::zero(), z: z0, f: (one - z0).inv(), y: cr(T::zero()) };
    let mut out = vec![p];
    for k in 1..=steps {
        let (a1, b1, c1) = field(p.z, p.f);
        let (a2, b2, c2) = field(p.z + a1 * half, p.f + b1 * half);
        let (a3, b3, c3) = field(p.z + a2 * half, p.f + b2 * half);
        let (a4, b4, c4) = field(p.z + a3 * h, p.f + b3 * h);
        let w = h / T::lit(6.0);
        p = CharacteristicPoint {
            t: h * T::from_usize(k).unwrap(),
            z: p.z + (a1 + (a2 + a3) * T::lit(2.0) + a4) * w,
            f: p.f + (b1 + (b2 + b3) * T::lit(2.0) + b4) * w,
            y: p.y + (c1 + (c2 + c3) * T::lit(2.0) + c4) * w,
        };
        out.push(p);
    }
    out
}

/// Residual of the completed-square Riccati equation
/// `f' = α (f + A)² - (1-α)/(1-z₀) - (1-2α)²/(4α)` at a curve point.
pub fn riccati_residual<T: Real>(alpha: T, z0: Complex<T>, p: &CharacteristicPoint<T>) -> T {
    let a = constant_a(alpha);
    let df = p.z * p.f * p.f * alpha;
    let k = T::one() - alpha - alpha;
    let rhs = (p.f + a) * (p.f + a) * alpha - (cr(T::one()) - z0).inv() * (T::one() - alpha)
        - k * k / (T::lit(4.0) * alpha);
    (df - rhs).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fubm::{herglotz, psi_map};
    use crate::jacobi_moments::{dirac_one, integrate, Family};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constants() {
        assert!((constant_a(0.7f64) - (1.0 - 1.4) / 1.4).abs() < 1e-16);
        let z0 = c(0.03, 0.0);
        let (alpha, a) = (0.4f64, constant_a(0.4f64));
        let b = constant_b(alpha, z0);
        let cc = constant_c(alpha, z0);
        assert!((cc + (b - a * a) * alpha).norm() < 1e-15);
        // (g_0 + A)² - B = z₀/(1-z₀)² with g_0 = 1/(1-z₀).
        let g0 = 1.0 / (1.0 - z0);
        assert!(((g0 + a) * (g0 + a) - b - z0 / ((1.0 - z0) * (1.0 - z0))).norm() < 1e-14);
        assert!((constant_b(alpha, c(0.0, 0.0)) - c(1.0 / (4.0 * alpha * alpha), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn v_map_examples() {
        for alpha in [0.3, 0.5, 0.7] {
            let u0 = c(1.0 / (2.0 * alpha), 0.0);
            assert_eq!(v_map(alpha, 1.3, u0).unwrap().norm(), 0.0);
            let t = 0.8;
            let h = 1e-6;
            let fd = (v_map(alpha, t, u0 + h).unwrap() - v_map(alpha, t, u0 - h).unwrap()) / (2.0 * h);
            let expected = t.exp() * alpha * alpha / (1.0 - alpha);
            assert!((fd.re - expected).abs() < 1e-8);
            assert!((v_map_derivative(alpha, t, u0).unwrap().re - expected).abs() < 1e-13);
        }
        for u in [0.2, 1.0, 3.5] {
            let v = v_map(0.5, 0.9, c(u, 0.0)).unwrap();
            let xi = (u - 1.0) / (u + 1.0) * (0.9 * u).exp();
            assert!((v.re - xi).abs() < 1e-14);
        }
        let a = constant_a(0.3);
        assert!(matches!(v_map(0.3, 1.0, c(-a - 1.0, 0.0)), Err(FlowError::PoleOuter(_))));
        assert!(matches!(v_map(0.3, 1.0, c(-a, 0.0)), Err(FlowError::PoleInner(_))));
    }

    #[test]
    fn inversion_examples() {
        for alpha in [0.3, 0.5, 0.7] {
            let u0 = c(1.0 / (2.0 * alpha), 0.0);
            assert!(inversion_rhs(alpha, 1.0, u0).unwrap().norm() < 1e-15);
            for t in [0.5, 1.0, 2.0] {
                let d = inversion_derivative(alpha, t, u0).unwrap();
                assert!((d.re - t.exp() / (1.0 - alpha)).abs() < 1e-12 * t.exp());
                let h = 1e-6;
                let fd = (inversion_rhs(alpha, t, u0 + h).unwrap() - inversion_rhs(alpha, t, u0 - h).unwrap())
                    / (2.0 * h);
                assert!((fd - d).norm() < 1e-7 * t.exp());
            }
        }
        // α = 1/2: z = ψ^{-1}(ξ(√B)) with ξ the Herglotz inverse at operator time 2t.
        let (t, z0) = (0.7, 0.2f64);
        let u = c((1.0 / (1.0 - z0)).sqrt(), 0.0);
        let xi = (u - 1.0) / (u + 1.0) * (u * t).exp();
        let expected = xi * 4.0 / ((1.0 + xi) * (1.0 + xi));
        assert!((inversion_rhs(0.5, t, u).unwrap() - expected).norm() < 1e-14);
    }

    #[test]
    fn analytic_derivative_matches_finite_differences() {
        let (alpha, t) = (0.35, 1.7);
        for u in [c(0.9, 0.2), c(2.0, -0.4), c(1.2, 0.0)] {
            let h = 1e-6;
            let fd = (inversion_rhs(alpha, t, u + h).unwrap() - inversion_rhs(alpha, t, u - h).unwrap()) / (2.0 * h);
            let d = inversion_derivative(alpha, t, u).unwrap();
            assert!((fd - d).norm() < 1e-6 * (1.0 + d.norm()));
        }
    }

    #[test]
    fn local_inverse_examples() {
        assert_eq!(local_inverse_j(0.7, 1.0, c(0.0, 0.0)).unwrap(), c(1.0 / 1.4, 0.0));
        for alpha in [0.3, 0.5, 0.7] {
            for t in [0.5, 1.0, 2.0] {
                for k in 0..8 {
                    let z = Complex64::from_polar(0.05, k as f64 * 0.785);
                    let j = local_inverse_j(alpha, t, z).unwrap();
                    assert!((inversion_rhs(alpha, t, j).unwrap() - z).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn half_alpha_matches_herglotz() {
        for t in [0.5, 1.0, 2.0] {
            for z in [c(0.1, 0.05), c(-0.2, 0.1), c(0.25, 0.0)] {
                let j = local_inverse_j(0.5, t, z).unwrap();
                let h = herglotz(2.0 * t, psi_map(z).unwrap()).unwrap();
                assert!((j - h).norm() < 1e-9);
                let m = mgf_theorem1(0.5, t, z).unwrap();
                assert!((m.m_sqrt - h / (1.0 - z).sqrt()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn mgf_at_origin_and_forms_agree() {
        let p = mgf_theorem1(0.4, 1.0, c(0.0, 0.0)).unwrap();
        assert!((p.m_sqrt - 1.0).norm() < 1e-15 && (p.m_homographic - 1.0).norm() < 1e-15);
        assert!(p.psi_t.norm() < 1e-15);
        for alpha in [0.25, 0.6] {
            for k in 0..6 {
                let z = Complex64::from_polar(0.05, k as f64);
                assert!(mgf_theorem1(alpha, 1.5, z).unwrap().forms_gap() < 1e-10);
            }
        }
        assert!(matches!(mgf_theorem1(0.4, 1.0, c(1.0, 0.0)), Err(FlowError::BranchAmbiguity(_))));
    }

    #[test]
    fn taylor_coefficients_match_hierarchy() {
        for alpha in [0.4, 0.6] {
            let m = mgf_taylor_coefficients(alpha, 1.0, 0.02, 64, 5).unwrap();
            let traj = integrate(Family::EqualRanks, alpha, &dirac_one(5), 1.0, 1e-3).unwrap();
            for n in 1..=2 {
                assert!((m[n] - traj.last()[n]).abs() < 1e-6, "n = {n}");
            }
        }
    }

    #[test]
    fn characteristic_curve_lands_on_closed_form() {
        let alpha = 0.6;
        for z0 in [c(0.02, 0.0), c(-0.03, 0.0)] {
            let curve = characteristic_curve(alpha, z0, 1.0, 2000);
            let end = curve.last().unwrap();
            let m = mgf_theorem1(alpha, 1.0, end.z).unwrap();
            assert!((m.m_sqrt - end.f).norm() < 1e-6);
            for p in &curve {
                assert!(riccati_residual(alpha, z0, p) < 1e-8);
                let f_from_y = 1.0 / (1.0 - z0 - p.y * alpha);
                assert!((f_from_y - p.f).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn empirical_radius_is_reported() {
        let r = empirical_radius(0.6, 1.0, 8, 0.1);
        assert!(r > 0.05 && r <= 0.1);
    }

    proptest! {
        #[test]
        fn round_trip(alpha in 0.2f64..0.8, t in 0.1f64..2.0, r in 0.0f64..0.05, th in 0.0f64..std::f64::consts::TAU) {
            let z = Complex64::from_polar(r, th);
            let j = local_inverse_j(alpha, t, z).unwrap();
            prop_assert!((inversion_rhs(alpha, t, j).unwrap() - z).norm() < 1e-10);
            let p = mgf_theorem1(alpha, t, z).unwrap();
            prop_assert!(p.forms_gap() < 1e-10);
        }
    }
}
