//! Real-line analysis of the rescaled map
//! `Ṽ(u) = (u-1)(u-1+2α) / ((u+1)(u+1-2α)) · e^{tu}`, `u ≥ 0`.
//!
//! `∂_u Ṽ(u) = e^{ut} R(u²) / ((u+1)²(u+1-2α)²)` with
//! `R(y) = 4(1-α)(y-1+2α) + t(y-1)(y-(2α-1)²)`.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VmapError {
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("this operation needs alpha >= 1/2, got {0}")]
    AlphaBelowHalf(f64),
    #[error("u = {0} is the singularity 2 alpha - 1")]
    Singular(f64),
    #[error("u must be non-negative, got {0}")]
    NegativeU(f64),
    #[error("t must be >= 2, got {0}")]
    TimeBelowTwo(f64),
    #[error("could not bracket V = {target} on [{lo}, {hi}]")]
    Bracket { target: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Ṽ increasing on `(2α-1, ∞)`.
    Increasing,
    /// A local minimum below `-1` precedes the branch through `u = 1`.
    InteriorMin,
    /// `α < 1/2`.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    BijectionOntoUnitInterval,
    /// The minimum of Ṽ on `(0, ∞)` exceeds `-1`, so `(-1, 1)` is not covered.
    ProperSubset,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport<T> {
    pub alpha: T,
    pub t: T,
    pub t_alpha: T,
    pub t0: Option<T>,
    pub t1: Option<T>,
    pub regime: Regime,
    pub critical_points: Vec<T>,
    /// `(a, b)` with `Ṽ(a) = -1`, `Ṽ(b) = 1`.
    pub interval: Option<(T, T)>,
    /// `(a - 1, b - 1)` at full precision; `v_at_a`, `v_at_b` are evaluated there.
    pub offsets: Option<(T, T)>,
    pub v_at_a: Option<T>,
    pub v_at_b: Option<T>,
    pub min_location: Option<T>,
    pub min_value: Option<T>,
    pub verdict: Verdict,
}

const LOG_SWITCH: f64 = 300.0;

fn check_alpha<T: Real>(alpha: T) -> Result<(), VmapError> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(VmapError::Alpha(alpha.as_f64()))
    }
}

fn rational<T: Real>(alpha: T, u: T) -> T {
    let s = alpha + alpha - T::one();
    (u - T::one()) * (u + s) / ((u + T::one()) * (u - s))
}

fn check_domain<T: Real>(alpha: T, u: T) -> Result<(), VmapError> {
    check_alpha(alpha)?;
    if u < T::zero() {
        return Err(VmapError::NegativeU(u.as_f64()));
    }
    let s = alpha + alpha - T::one();
    if s >= T::zero() && (u - s).abs() <= T::epsilon() * T::lit(4.0) * (T::one() + u) {
        return Err(VmapError::Singular(u.as_f64()));
    }
    Ok(())
}

pub fn v_tilde<T: Real>(alpha: T, t: T, u: T) -> Result<T, VmapError> {
    check_domain(alpha, u)?;
    Ok(rational(alpha, u) * (t * u).exp())
}

/// `(sign, ln|Ṽ(u)|)`, safe for large `u t`.
pub fn v_tilde_signed_log<T: Real>(alpha: T, t: T, u: T) -> Result<(T, T), VmapError> {
    check_domain(alpha, u)?;
    let r = rational(alpha, u);
    Ok((r.signum(), r.abs().ln() + t * u))
}

/// `Ṽ(1 + d)`, written in the offset `d` so that endpoints close to `u = 1`
/// (steep regimes, large `t`) are resolved far below the spacing of doubles
/// near 1. At `α = 1/2` the removable factor `u/u` is cancelled, so `d = -1`
/// (`u = 0`) gives the limit `-1`.
pub fn v_tilde_near_one<T: Real>(alpha: T, t: T, d: T) -> T {
    rational_near_one(alpha, d) * (t * (T::one() + d)).exp()
}

fn rational_near_one<T: Real>(alpha: T, d: T) -> T {
    let two = T::lit(2.0);
    if alpha == T::lit(0.5) {
        d / (two + d)
    } else {
        d * (alpha + alpha + d) / ((two + d) * (two - alpha - alpha + d))
    }
}

/// Signed distance of `Ṽ(1 + d)` from `target ∈ {-1, 1}` that stays finite:
/// for `target = 1` it compares logarithms when `u t` is large.
fn offset<T: Real>(alpha: T, t: T, d: T, target: T) -> T {
    let r = rational_near_one(alpha, d);
    let tu = t * (T::one() + d);
    if target > T::zero() && tu > T::lit(LOG_SWITCH) {
        if r <= T::zero() {
            return -T::one();
        }
        return r.ln() + tu;
    }
    r * tu.exp() - target
}

/// `R_{t,α}(y)`.
pub fn r_poly<T: Real>(alpha: T, t: T, y: T) -> T {
    let s = alpha + alpha - T::one();
    T::lit(4.0) * (T::one() - alpha) * (y - T::one() + alpha + alpha) + t * (y - T::one()) * (y - s * s)
}

/// `T(α) = 4(1-α)/(1 + (1-2α)²)`.
pub fn threshold_t<T: Real>(alpha: T) -> T {
    let s = T::one() - alpha - alpha;
    T::lit(4.0) * (T::one() - alpha) / (T::one() + s * s)
}

pub fn transition_times<T: Real>(alpha: T) -> Result<(T, T), VmapError> {
    check_alpha(alpha)?;
    if alpha < T::lit(0.5) {
        return Err(VmapError::AlphaBelowHalf(alpha.as_f64()));
    }
    let r = (alpha + alpha - T::one()).sqrt();
    let d = alpha * (T::one() - alpha);
    Ok(((alpha - r) / d, (alpha + r) / d))
}

/// Positive `u` with `R(u²) = 0`, increasing.
pub fn critical_points<T: Real>(alpha: T, t: T) -> Vec<T> {
    let s = alpha + alpha - T::one();
    let four = T::lit(4.0);
    let qa = t;
    let qb = four * (T::one() - alpha) - t * (T::one() + s * s);
    let qc = t * s * s + four * (T::one() - alpha) * s;
    let mut ys = Vec::new();
    if qa == T::zero() {
        if qb != T::zero() {
            ys.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - four * qa * qc;
        if disc >= T::zero() {
            let sq = disc.sqrt();
            // Stable pair of roots.
            let q = -(qb + qb.signum() * sq) * T::lit(0.5);
            if q != T::zero() {
                ys.push(q / qa);
                ys.push(qc / q);
            } else {
                ys.push(T::zero());
            }
        }
    }
    let mut us: Vec<T> = ys.into_iter().filter(|&y| y > T::zero()).map(|y| y.sqrt()).collect();
    us.sort_by(|a, b| a.partial_cmp(b).unwrap());
    us.dedup();
    us
}

fn bisect<T: Real>(
    mut lo: T,
    mut hi: T,
    f: impl Fn(T) -> T,
    target: f64,
) -> Result<T, VmapError> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() && flo != T::zero() && fhi != T::zero() {
        return Err(VmapError::Bracket { target, lo: lo.as_f64(), hi: hi.as_f64() });
    }
    let increasing = flo < fhi;
    for _ in 0..400 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm < T::zero()) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Full real-line phase analysis for one `(α, t)`.
pub fn phase_report<T: Real>(alpha: T, t: T) -> Result<PhaseReport<T>, VmapError> {
    check_alpha(alpha)?;
    let half = T::lit(0.5);
    let t_alpha = threshold_t(alpha);
    let crit = critical_points(alpha, t);
    if alpha >= half {
        let (t0, t1) = transition_times(alpha)?;
        let s = alpha + alpha - T::one();
        // Monotone branch through u = 1: from the last critical point below 1
        // (or the singularity) to the first one above 1 (or infinity).
        let left_crit = crit.iter().copied().filter(|&u| u > s && u < T::one()).fold(None, |_, u| Some(u));
        let right_cap = crit.iter().copied().find(|&u| u > T::one()).unwrap_or(T::lit(50.0));
        let regime = if left_crit.is_some() { Regime::InteriorMin } else { Regime::Increasing };

        // Bisection runs in the offset d = u - 1.
        let (da, v_a) = match left_crit {
            None if alpha == half => (-T::one(), -T::one()),
            _ => {
                let left = left_crit.unwrap_or(s) - T::one();
                let f = |d: T| offset(alpha, t, d, -T::one());
                let mut lo = None;
                let mut gap = -left;
                for _ in 0..200 {
                    gap = gap * half;
                    let d = left + gap;
                    if d <= left {
                        break;
                    }
                    if f(d) < T::zero() {
                        lo = Some(d);
                        break;
                    }
                }
                let lo = lo.ok_or(VmapError::Bracket { target: -1.0, lo: (left + T::one()).as_f64(), hi: 1.0 })?;
                let d = bisect(lo, T::zero(), f, -1.0)?;
                (d, v_tilde_near_one(alpha, t, d))
            }
        };

        let f = |d: T| offset(alpha, t, d, T::one());
        let cap = right_cap - T::one();
        let mut hi = T::one().min(cap);
        while f(hi) < T::zero() {
            if hi >= cap {
                return Err(VmapError::Bracket { target: 1.0, lo: 1.0, hi: right_cap.as_f64() });
            }
            hi = (hi + hi).min(cap);
        }
        let db = bisect(T::zero(), hi, f, 1.0)?;
        let v_b = v_tilde_near_one(alpha, t, db);
        let min_location = left_crit;
        Ok(PhaseReport {
            alpha,
            t,
            t_alpha,
            t0: Some(t0),
            t1: Some(t1),
            regime,
            critical_points: crit,
            interval: Some((T::one() + da, T::one() + db)),
            offsets: Some((da, db)),
            v_at_a: Some(v_a),
            v_at_b: Some(v_b),
            min_location,
            min_value: min_location.map(|u| v_tilde_near_one(alpha, t, u - T::one())),
            verdict: Verdict::BijectionOntoUnitInterval,
        })
    } else {
        // R(0) < 0 for α < 1/2: the local minima of Ṽ on (0, ∞) sit at the
        // critical points where R changes sign from - to +.
        let mut best: Option<(T, T)> = None;
        for &u in &crit {
            let h = T::tol(1e-7) * (T::one() + u);
            let y_lo = (u - h).max(T::zero());
            if r_poly(alpha, t, y_lo * y_lo) < T::zero() && r_poly(alpha, t, (u + h) * (u + h)) > T::zero() {
                let v = v_tilde_near_one(alpha, t, u - T::one());
                if best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((u, v));
                }
            }
        }
        let verdict = match best {
            Some((_, v)) if v > -T::one() => Verdict::ProperSubset,
            _ => Verdict::Undetermined,
        };
        Ok(PhaseReport {
            alpha,
            t,
            t_alpha,
            t0: None,
            t1: None,
            regime: Regime::NotApplicable,
            critical_points: crit,
            interval: None,
            offsets: None,
            v_at_a: None,
            v_at_b: None,
            min_location: best.map(|b| b.0),
            min_value: best.map(|b| b.1),
            verdict,
        })
    }
}

/// The unique `α ∈ [1/2, 1)` with `t_1(α) = t`.
pub fn alpha_at_time<T: Real>(t: T) -> Result<T, VmapError> {
    if t < T::lit(2.0) {
        return Err(VmapError::TimeBelowTwo(t.as_f64()));
    }
    let t1 = |a: T| transition_times(a).map(|p| p.1).unwrap_or(T::infinity());
    let (mut lo, mut hi) = (T::lit(0.5), T::one() - T::epsilon());
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if t1(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// `Ṽ_t(√(√(2α-1)(2α-√(2α-1))))`, tabulated by the CLI. At `α = 1/2` the
/// argument is `0` and the removable singularity is cancelled, giving `-1`.
pub fn remark_probe<T: Real>(alpha: T, t: T) -> Result<T, VmapError> {
    check_alpha(alpha)?;
    if alpha < T::lit(0.5) {
        return Err(VmapError::AlphaBelowHalf(alpha.as_f64()));
    }
    let r = (alpha + alpha - T::one()).sqrt();
    let u = (r * (alpha + alpha - r)).sqrt();
    Ok(v_tilde_near_one(alpha, t, u - T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn v_tilde_examples() {
        for alpha in [0.3f64, 0.5, 0.8] {
            assert_eq!(v_tilde(alpha, 1.7, 1.0).unwrap(), 0.0);
        }
        for alpha in [0.1f64, 0.3, 0.45] {
            assert!((v_tilde(alpha, 1.3, 0.0).unwrap() - 1.0).abs() < 1e-15);
        }
        for alpha in [0.6f64, 0.75, 0.9] {
            let t = 1.4;
            let r = (2.0 * alpha - 1.0).sqrt();
            assert!((v_tilde(alpha, t, r).unwrap() + (t * r).exp()).abs() < 1e-12);
        }
        assert!(matches!(v_tilde(0.7f64, 1.0, 0.4), Err(VmapError::Singular(_))));
        assert!(matches!(v_tilde(0.5f64, 1.0, 0.0), Err(VmapError::Singular(_))));
    }

    #[test]
    fn signed_log_matches_direct() {
        let (s, l) = v_tilde_signed_log(0.7f64, 1.0, 3.0).unwrap();
        assert!((s * l.exp() - v_tilde(0.7, 1.0, 3.0).unwrap()).abs() < 1e-12);
        let (s, l) = v_tilde_signed_log(0.7f64, 100.0, 40.0).unwrap();
        assert!(s > 0.0 && l.is_finite() && l > 3000.0);
    }

    #[test]
    fn transition_time_examples() {
        let (t0, t1) = transition_times(0.5f64).unwrap();
        assert!((t0 - 2.0).abs() < 1e-12 && (t1 - 2.0).abs() < 1e-12);
        let (t0, t1) = transition_times(0.7f64).unwrap();
        // Closed form evaluated in extended precision.
        assert!((t0 - 0.321_640_323_649_162_5).abs() < 1e-14);
        assert!((t1 - 6.345_026_343_017_504).abs() < 1e-13);
        for k in 0..50 {
            let alpha = 0.5 + 0.45 * k as f64 / 49.0;
            let (t0, t1) = transition_times(alpha).unwrap();
            let ta = threshold_t(alpha);
            assert!(t0 <= 2.0 && 2.0 <= t1);
            assert!(t0 <= ta + 1e-12 && ta <= t1 + 1e-12);
            // t0 and t1 are the roots of α²(1-α)t² - 2α²t + (1-α).
            for tt in [t0, t1] {
                let q = alpha * alpha * (1.0 - alpha) * tt * tt - 2.0 * alpha * alpha * tt + (1.0 - alpha);
                assert!(q.abs() < 1e-12);
            }
        }
        assert!(transition_times(0.4f64).is_err());
        assert!(transition_times(1.0f64).is_err());
    }

    #[test]
    fn bijection_example() {
        let rep = phase_report(0.7f64, 1.0).unwrap();
        assert_eq!(rep.verdict, Verdict::BijectionOntoUnitInterval);
        assert_eq!(rep.regime, Regime::Increasing);
        let (a, b) = rep.interval.unwrap();
        assert!((rep.v_at_a.unwrap() + 1.0).abs() < 1e-10);
        assert!((rep.v_at_b.unwrap() - 1.0).abs() < 1e-10);
        assert!(a > 0.4f64.sqrt() && a < 1.0 && b > 1.0);
    }

    #[test]
    fn proper_subset_example() {
        let rep = phase_report(0.3f64, 1.0).unwrap();
        assert_eq!(rep.verdict, Verdict::ProperSubset);
        let v = rep.min_value.unwrap();
        assert!(v > -1.0 && v < 0.0);
        let u = rep.min_location.unwrap();
        assert!(u > 0.4f64.sqrt() && u < 1.0);
    }

    #[test]
    fn interior_min_example() {
        let (_, t1) = transition_times(0.9f64).unwrap();
        assert!((t1 - 19.938079899999065).abs() < 1e-12);
        assert_eq!(phase_report(0.9f64, 8.0).unwrap().regime, Regime::Increasing);
        assert!(v_tilde(0.9f64, 8.0, 0.8f64.powf(0.25)).unwrap() < -1.0);
        let rep = phase_report(0.9f64, 21.0).unwrap();
        assert_eq!(rep.regime, Regime::InteriorMin);
        assert!(v_tilde(0.9f64, 21.0, 0.8f64.powf(0.25)).unwrap() < -1.0);
        assert!(rep.min_value.unwrap() < -1.0);
        let (a, _) = rep.interval.unwrap();
        let r = 0.8f64.sqrt();
        assert!(a > (r * (1.8 - r)).sqrt());
        assert!((rep.v_at_b.unwrap() - 1.0).abs() < 1e-10);
        assert!((rep.v_at_a.unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn half_alpha_uses_limit_at_zero() {
        let rep = phase_report(0.5f64, 1.0).unwrap();
        let (a, b) = rep.interval.unwrap();
        assert_eq!(a, 0.0);
        assert_eq!(rep.v_at_a, Some(-1.0));
        assert!((v_tilde(0.5, 1.0, b).unwrap() - 1.0).abs() < 1e-10);
        let rep = phase_report(0.5f64, 3.0).unwrap();
        assert_eq!(rep.regime, Regime::InteriorMin);
        assert!((rep.v_at_a.unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn alpha_at_time_examples() {
        assert!((alpha_at_time(2.0f64).unwrap() - 0.5).abs() < 1e-12);
        assert!((alpha_at_time(6.3450263428f64).unwrap() - 0.7).abs() < 1e-8);
        let mut prev = 0.0;
        for k in 0..20 {
            let t = 2.0 + 18.0 * k as f64 / 19.0;
            let a = alpha_at_time(t).unwrap();
            assert!((transition_times(a).unwrap().1 - t).abs() < 1e-10 * t.max(1.0));
            assert!(a > prev || k == 0);
            prev = a;
        }
        assert!(alpha_at_time(1.5f64).is_err());
    }

    #[test]
    fn remark_probe_examples() {
        assert!((remark_probe(0.5f64, 1.0).unwrap() + 1.0).abs() < 1e-15);
        let v = remark_probe(0.6f64, 1.0).unwrap();
        assert!(v > -1.0);
        let t1 = transition_times(0.9f64).unwrap().1;
        assert!(remark_probe(0.9f64, t1).unwrap() <= -1.0);
    }

    #[test]
    fn derivative_sign_matches_r() {
        for (alpha, t) in [(0.7f64, 1.0f64), (0.7, 8.0), (0.9, 9.0), (0.55, 3.0), (0.3, 1.0), (0.3, 6.0)] {
            let s = 2.0 * alpha - 1.0;
            let lo = s.max(0.0);
            for k in 1..=200 {
                let u = lo + 4.0 * k as f64 / 200.0;
                let r = r_poly(alpha, t, u * u);
                if r.abs() < 1e-6 {
                    continue;
                }
                let h = 1e-7;
                let d = (v_tilde(alpha, t, u + h).unwrap() - v_tilde(alpha, t, u - h).unwrap()) / (2.0 * h);
                assert_eq!(d > 0.0, r > 0.0, "alpha {alpha} t {t} u {u}");
            }
        }
    }

    #[test]
    fn increasing_below_threshold() {
        for alpha in [0.55f64, 0.7, 0.9] {
            let t = threshold_t(alpha) * 0.9;
            assert!(r_poly(alpha, t, 0.0) > 0.0);
            let s = 2.0 * alpha - 1.0;
            let mut prev = f64::NEG_INFINITY;
            for k in 1..200 {
                let v = v_tilde(alpha, t, s + 5.0 * k as f64 / 200.0).unwrap();
                assert!(v > prev);
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn bound_below_half(alpha in 0.01f64..0.49, t in 0.0f64..2.0, frac in 0.0f64..1.0) {
            // |Ṽ(u)| ≤ α/(1-α) for √(1-2α) ≤ u < 1.
            let lo = (1.0 - 2.0 * alpha).sqrt();
            let u = lo + (1.0 - lo) * frac;
            prop_assume!(u < 1.0);
            prop_assert!(v_tilde(alpha, t, u).unwrap().abs() <= alpha / (1.0 - alpha) + 1e-12);
        }

        #[test]
        fn single_precision_agrees(alpha in 0.5f64..0.95, t in 0.2f64..4.0) {
            let r64 = phase_report(alpha, t).unwrap();
            let r32 = phase_report(alpha as f32, t as f32).unwrap();
            let (a64, b64) = r64.interval.unwrap();
            let (a32, b32) = r32.interval.unwrap();
            prop_assert!((a64 - a32 as f64).abs() < 1e-3 && (b64 - b32 as f64).abs() < 1e-3);
        }
    }
}
