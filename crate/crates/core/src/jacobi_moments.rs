//! Moment hierarchies of the free Jacobi process.
//!
//! Writing `s_n = Σ_{i+j=n} m_i m_j`, the moments of the equal-ranks process
//! `(α, α)` obey
//!
//! ```text
//! dm_n/dt = -n [ (1 - 2α) m_n + α (s_n - s_{n-1}) ]
//! ```
//!
//! and those of the half-rank process `(1/2, α)` obey
//!
//! ```text
//! dm_n/dt = (n/2) [ -(1 - 2α) m_{n-1} - s_n + s_{n-1} ].
//! ```
//!
//! The right-hand side for `m_n` only involves `m_0..m_n`, so truncating the
//! hierarchy at order `N` is exact for the first `N` moments.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{cr, Real};
use crate::series::{Elementary, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("time step must be positive and finite, got {0}")]
    Step(f64),
    #[error("end time must be non-negative, got {0}")]
    EndTime(f64),
    #[error("initial data must start with m_0 = 1, got {0}")]
    InitialMass(f64),
    #[error("moment invariant violated at n = {n}, t = {t}: {what}")]
    Invariant { n: usize, t: f64, what: &'static str },
    #[error("time {t} with step {h} is not on the trajectory grid (spacing {dt}) or too close to its ends")]
    Grid { t: f64, h: f64, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `μ_t^{(α,α)}`.
    EqualRanks,
    /// `μ_t^{(1/2,α)}`.
    HalfRank,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTrajectory<T> {
    pub alpha: T,
    pub family: Family,
    pub times: Vec<T>,
    /// `moments[k][n] = m_n` at `times[k]`.
    pub moments: Vec<Vec<T>>,
}

impl<T: Real> MomentTrajectory<T> {
    /// A trajectory constant in time, e.g. for stationary data.
    pub fn constant(family: Family, alpha: T, m: Vec<T>, t_end: T, dt: T) -> Self {
        let steps = step_count(t_end, dt);
        let h = if steps == 0 { dt } else { t_end / T::from_usize(steps).unwrap() };
        Self {
            alpha,
            family,
            times: (0..=steps).map(|k| h * T::from_usize(k).unwrap()).collect(),
            moments: vec![m; steps + 1],
        }
    }

    pub fn order(&self) -> usize {
        self.moments[0].len() - 1
    }

    pub fn last(&self) -> &[T] {
        self.moments.last().expect("trajectory is never empty")
    }

    /// Grid spacing (zero for a single-point trajectory).
    pub fn spacing(&self) -> T {
        if self.times.len() < 2 {
            T::zero()
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// Index of the grid time closest to `t`.
    pub fn index_of(&self, t: T) -> usize {
        let dt = self.spacing();
        if dt == T::zero() {
            return 0;
        }
        let k = (t / dt).round().to_usize().unwrap_or(0);
        k.min(self.times.len() - 1)
    }

    pub fn moments_at(&self, t: T) -> &[T] {
        &self.moments[self.index_of(t)]
    }

    /// Cauchy transform `G(z) = Σ m_n z^{-n-1}` at grid index `k`.
    pub fn cauchy(&self, k: usize, z: Complex<T>) -> Complex<T> {
        cauchy_from_moments(&self.moments[k], z)
    }
}

/// `Σ_n m_n z^{-n-1}` from a truncated moment sequence.
pub fn cauchy_from_moments<T: Real>(m: &[T], z: Complex<T>) -> Complex<T> {
    let w = cr(T::one()) / z;
    m.iter().rev().fold(cr(T::zero()), |acc, &mn| acc * w + mn) * w
}

fn self_convolution<T: Real>(m: &[T]) -> Vec<T> {
    (0..m.len())
        .map(|n| (0..=n).fold(T::zero(), |acc, i| acc + m[i] * m[n - i]))
        .collect()
}

pub fn equal_rank_rhs<T: Real>(alpha: T, m: &[T]) -> Vec<T> {
    let s = self_convolution(m);
    let a = T::one() - alpha - alpha;
    (0..m.len())
        .map(|n| {
            if n == 0 {
                return T::zero();
            }
            let nn = T::from_usize(n).unwrap();
            -nn * (a * m[n] + alpha * (s[n] - s[n - 1]))
        })
        .collect()
}

pub fn half_rank_rhs<T: Real>(alpha: T, m: &[T]) -> Vec<T> {
    let s = self_convolution(m);
    let a = T::one() - alpha - alpha;
    (0..m.len())
        .map(|n| {
            if n == 0 {
                return T::zero();
            }
            let half_n = T::from_usize(n).unwrap() * T::lit(0.5);
            half_n * (-a * m[n - 1] - s[n] + s[n - 1])
        })
        .collect()
}

pub fn rhs<T: Real>(family: Family, alpha: T, m: &[T]) -> Vec<T> {
    match family {
        Family::EqualRanks => equal_rank_rhs(alpha, m),
        Family::HalfRank => half_rank_rhs(alpha, m),
    }
}

/// Moments of `δ_1`: all ones.
pub fn dirac_one<T: Real>(order: usize) -> Vec<T> {
    vec![T::one(); order + 1]
}

/// Moments at `t = 0` of the corner process started from aligned projections:
/// `δ_1` for equal ranks, and for the half-rank family `δ_1` when `α ≥ 1/2`,
/// `2α δ_1 + (1-2α) δ_0` otherwise.
pub fn corner_initial<T: Real>(family: Family, alpha: T, order: usize) -> Vec<T> {
    let mut m = dirac_one(order);
    if family == Family::HalfRank && alpha < T::lit(0.5) {
        for x in m.iter_mut().skip(1) {
            *x = alpha + alpha;
        }
    }
    m
}

fn step_count<T: Real>(t_end: T, dt: T) -> usize {
    (t_end / dt - T::tol(1e-9)).ceil().max(T::zero()).to_usize().unwrap_or(0)
}

fn check_alpha<T: Real>(alpha: T) -> Result<(), MomentError> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(MomentError::Alpha(alpha.as_f64()))
    }
}

/// Checks `m_0 = 1`, `0 ≤ m_n ≤ 1` and `m_{n+1} ≤ m_n` up to `tol`.
pub fn check_moment_invariants<T: Real>(m: &[T], t: T, tol: T) -> Result<(), MomentError> {
    let t = t.as_f64();
    if (m[0] - T::one()).abs() > tol {
        return Err(MomentError::Invariant { n: 0, t, what: "m_0 != 1" });
    }
    for n in 0..m.len() {
        if !m[n].is_finite() {
            return Err(MomentError::Invariant { n, t, what: "non-finite moment" });
        }
        if m[n] < -tol || m[n] > T::one() + tol {
            return Err(MomentError::Invariant { n, t, what: "moment outside [0, 1]" });
        }
        if n + 1 < m.len() && m[n + 1] > m[n] + tol {
            return Err(MomentError::Invariant { n: n + 1, t, what: "moments not decreasing" });
        }
    }
    Ok(())
}

/// Classical RK4 integration of the hierarchy on a uniform grid that ends
/// exactly at `t_end` (the step is shrunk to `t_end / ceil(t_end / dt)`).
pub fn integrate<T: Real>(
    family: Family,
    alpha: T,
    m0: &[T],
    t_end: T,
    dt: T,
) -> Result<MomentTrajectory<T>, MomentError> {
    check_alpha(alpha)?;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(MomentError::Step(dt.as_f64()));
    }
    if !(t_end >= T::zero()) {
        return Err(MomentError::EndTime(t_end.as_f64()));
    }
    if m0.is_empty() || (m0[0] - T::one()).abs() > T::tol(1e-12) {
        return Err(MomentError::InitialMass(m0.first().map_or(f64::NAN, |x| x.as_f64())));
    }
    let tol = T::tol(1e-8);
    check_moment_invariants(m0, T::zero(), tol)?;

    let steps = step_count(t_end, dt);
    let h = if steps == 0 { dt } else { t_end / T::from_usize(steps).unwrap() };
    let half = h * T::lit(0.5);
    let sixth = h / T::lit(6.0);
    let axpy = |y: &[T], k: &[T], c: T| -> Vec<T> { y.iter().zip(k).map(|(&a, &b)| a + c * b).collect() };

    let mut times = Vec::with_capacity(steps + 1);
    let mut moments = Vec::with_capacity(steps + 1);
    let mut m = m0.to_vec();
    times.push(T::zero());
    moments.push(m.clone());
    for k in 1..=steps {
        let k1 = rhs(family, alpha, &m);
        let k2 = rhs(family, alpha, &axpy(&m, &k1, half));
        let k3 = rhs(family, alpha, &axpy(&m, &k2, half));
        let k4 = rhs(family, alpha, &axpy(&m, &k3, h));
        for n in 0..m.len() {
            m[n] = m[n] + sixth * (k1[n] + (k2[n] + k3[n]) * T::lit(2.0) + k4[n]);
        }
        let t = h * T::from_usize(k).unwrap();
        check_moment_invariants(&m, t, tol)?;
        times.push(t);
        moments.push(m.clone());
    }
    Ok(MomentTrajectory { alpha, family, times, moments })
}

/// `m_1(t) = α + (m_1(0) - α) e^{-t}`, the same for both families.
pub fn first_moment_closed_form<T: Real>(alpha: T, m1_initial: T, t: T) -> T {
    alpha + (m1_initial - alpha) * (-t).exp()
}

/// Taylor coefficients of the stationary moment generating function
/// `M_∞(z) = (-A + √(A² z + (A+1)² (1 - z))) / (1 - z)`, `A = (1-2α)/(2α)`.
pub fn stationary_moments<T: Real>(alpha: T, n_max: usize) -> Result<Vec<T>, MomentError> {
    check_alpha(alpha)?;
    let a = (T::one() - alpha - alpha) / (alpha + alpha);
    let a1 = a + T::one();
    let c = -(a + a1) / (a1 * a1);
    let root = TruncatedSeries::<T>::identity(n_max)
        .scale(cr(c))
        .elementary(Elementary::Sqrt1p)
        .expect("zero constant term");
    let numerator = root
        .scale(cr(a1))
        .add(&TruncatedSeries::constant(n_max, cr(-a)));
    let m = numerator.mul(&TruncatedSeries::geometric(n_max, cr(T::one())));
    Ok(m.re())
}

/// Residual `|∂_t G - RHS(G)|` of the Cauchy-transform PDE of the family at
/// grid time `t`, with central differences of step `h` in `t` and `z`.
///
/// Equal ranks: `∂_t G = ∂_z[(1-2α) z G + α z (z-1) G²]`.
/// Half rank: `∂_t G = (1/2) ∂_z[(1-2α) G + z (z-1) G²]`.
pub fn pde_residual<T: Real>(
    trajectory: &MomentTrajectory<T>,
    z: Complex<T>,
    t: T,
    h: T,
) -> Result<T, MomentError> {
    let dt = trajectory.spacing();
    let grid_err = || MomentError::Grid { t: t.as_f64(), h: h.as_f64(), dt: dt.as_f64() };
    let (k, dk) = if dt == T::zero() {
        return Err(grid_err());
    } else {
        let k = (t / dt).round();
        let dk = (h / dt).round();
        let slack = T::tol(1e-6) * dt;
        if dk < T::one() || (dk * dt - h).abs() > slack || (k * dt - t).abs() > slack {
            return Err(grid_err());
        }
        (k.to_usize().unwrap(), dk.to_usize().unwrap())
    };
    if k < dk || k + dk >= trajectory.times.len() {
        return Err(grid_err());
    }
    let alpha = trajectory.alpha;
    let one_m_2a = T::one() - alpha - alpha;
    let flux = |w: Complex<T>| {
        let g = trajectory.cauchy(k, w);
        match trajectory.family {
            Family::EqualRanks => w * g * one_m_2a + w * (w - T::one()) * g * g * alpha,
            Family::HalfRank => (g * one_m_2a + w * (w - T::one()) * g * g) * T::lit(0.5),
        }
    };
    let two_h = h + h;
    let dg_dt = (trajectory.cauchy(k + dk, z) - trajectory.cauchy(k - dk, z)) / two_h;
    let df_dz = (flux(z + h) - flux(z - h)) / two_h;
    Ok((dg_dt - df_dz).norm())
}
