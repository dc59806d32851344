//! Normalised Cauchy transforms of the two Jacobi families, the `u`/`v`
//! transform chain, residuals of their common transport equation, an evenness
//! monitor, and the initial-data identity checked on random projections.
//!
//! Time bookkeeping: `v` at time `t` is built from the half-rank trajectory at
//! `t/2` ([`v_source_time`]); the chain-rule test function `ū_t(z) = z g_{2t}(z²)`
//! reads the equal-ranks trajectory at `2t` ([`u_bar_source_time`]).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::jacobi_moments::{cauchy_from_moments, Family, MomentTrajectory};
use crate::linalg::{corner_projection, identity, power_traces, random_projection, CMatrix};
use crate::matrix_mc::replica_rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicError {
    #[error("alpha must lie in [1/2, 1), got {0}")]
    Alpha(f64),
    #[error("expected a {expected:?} trajectory")]
    Family { expected: Family },
    #[error("evenness proxy {proxy:e} exceeds {limit:e} at t = {t}")]
    Evenness { proxy: f64, limit: f64, t: f64 },
    #[error("z = {0} is too close to the support for the truncated moment series")]
    NearSupport(String),
    #[error("times t = {t} +- h = {h} are not on the trajectory grid (spacing {dt})")]
    Grid { t: f64, h: f64, dt: f64 },
    #[error("N must be even, got {0}")]
    OddDimension(usize),
    #[error("rank floor(alpha N) must be positive")]
    Rank,
}

pub const EVENNESS_LIMIT: f64 = 1e-6;
pub const EVENNESS_ORDER: usize = 9;
const MIN_MODULUS: f64 = 1.2;

/// Time of the half-rank trajectory that feeds `v` at time `t`.
pub fn v_source_time(t: f64) -> f64 {
    0.5 * t
}

/// Time of the equal-ranks trajectory that feeds `ū` at time `t`.
pub fn u_bar_source_time(t: f64) -> f64 {
    2.0 * t
}

fn check_alpha(alpha: f64) -> Result<(), DynamicError> {
    if (0.5..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(DynamicError::Alpha(alpha))
    }
}

fn check_z(z: Complex64) -> Result<(), DynamicError> {
    if z.norm() < MIN_MODULUS {
        Err(DynamicError::NearSupport(format!("{z}")))
    } else {
        Ok(())
    }
}

/// Weight removed at `x = 1` and the remaining mass, per family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomBookkeeping {
    pub atom_at_one: f64,
    pub remaining_mass: f64,
}

pub fn atom_bookkeeping(family: Family, alpha: f64) -> AtomBookkeeping {
    match family {
        Family::HalfRank => AtomBookkeeping { atom_at_one: 2.0 * alpha - 1.0, remaining_mass: 2.0 * (1.0 - alpha) },
        Family::EqualRanks => AtomBookkeeping {
            atom_at_one: (2.0 * alpha - 1.0) / alpha,
            remaining_mass: (1.0 - alpha) / alpha,
        },
    }
}

/// `(1/(2(1-α))) [G(z) - (2α-1)/(z-1)]` from half-rank moments.
pub fn tilde_half_from_moments(alpha: f64, m: &[f64], z: Complex64) -> Complex64 {
    (cauchy_from_moments(m, z) - (2.0 * alpha - 1.0) / (z - 1.0)) / (2.0 * (1.0 - alpha))
}

/// `(α/(1-α)) [G(z) - (2α-1)/(α(z-1))]` from equal-ranks moments.
pub fn tilde_equal_from_moments(alpha: f64, m: &[f64], z: Complex64) -> Complex64 {
    (cauchy_from_moments(m, z) - (2.0 * alpha - 1.0) / (alpha * (z - 1.0))) * (alpha / (1.0 - alpha))
}

fn expect(traj: &MomentTrajectory<f64>, family: Family) -> Result<(), DynamicError> {
    check_alpha(traj.alpha)?;
    if traj.family == family {
        Ok(())
    } else {
        Err(DynamicError::Family { expected: family })
    }
}

pub fn tilde_half(traj: &MomentTrajectory<f64>, t: f64, z: Complex64) -> Result<Complex64, DynamicError> {
    expect(traj, Family::HalfRank)?;
    check_z(z)?;
    Ok(tilde_half_from_moments(traj.alpha, traj.moments_at(t), z))
}

pub fn tilde_equal(traj: &MomentTrajectory<f64>, t: f64, z: Complex64) -> Result<Complex64, DynamicError> {
    expect(traj, Family::EqualRanks)?;
    check_z(z)?;
    Ok(tilde_equal_from_moments(traj.alpha, traj.moments_at(t), z))
}

/// `u(z) = ½ G̃((z+1)/2)`.
pub fn u_from_tilde(tilde: impl Fn(Complex64) -> Complex64, z: Complex64) -> Complex64 {
    tilde((z + 1.0) * 0.5) * 0.5
}

/// `v(w) = u(√w)/√w`.
pub fn v_from_u(u: impl Fn(Complex64) -> Complex64, w: Complex64) -> Complex64 {
    let r = w.sqrt();
    u(r) / r
}

/// `max_{odd j ≤ j_max} |∫ (2x-1)^j k(dx)|` where `k` is the normalised
/// half-rank density, from the moments `m` via binomial expansion.
pub fn evenness_proxy_from_moments(alpha: f64, m: &[f64], j_max: usize) -> f64 {
    let book = atom_bookkeeping(Family::HalfRank, alpha);
    let normalized: Vec<f64> = m.iter().map(|&x| (x - book.atom_at_one) / book.remaining_mass).collect();
    let j_max = j_max.min(m.len() - 1);
    (1..=j_max)
        .step_by(2)
        .map(|j| {
            let mut binom = 1.0;
            let mut acc = 0.0;
            for i in 0..=j {
                let sign = if (j - i) % 2 == 0 { 1.0 } else { -1.0 };
                acc += binom * 2f64.powi(i as i32) * sign * normalized[i];
                binom *= (j - i) as f64 / (i + 1) as f64;
            }
            acc.abs()
        })
        .fold(0.0, f64::max)
}

pub fn evenness_proxy(traj: &MomentTrajectory<f64>, t: f64) -> Result<f64, DynamicError> {
    expect(traj, Family::HalfRank)?;
    Ok(evenness_proxy_from_moments(traj.alpha, traj.moments_at(t), EVENNESS_ORDER))
}

/// Half-rank moments of `(1-α)(δ_{(1-a)/2} + δ_{(1+a)/2}) + (2α-1)δ₁`: even
/// normalised data with an atom of the right weight at 1.
pub fn symmetric_two_atom(alpha: f64, a: f64, order: usize) -> Vec<f64> {
    (0..=order)
        .map(|n| {
            let n = n as i32;
            (1.0 - alpha) * (((1.0 - a) / 2.0).powi(n) + ((1.0 + a) / 2.0).powi(n)) + (2.0 * alpha - 1.0)
        })
        .collect()
}

/// Largest amount by which a moment drops below the weight of the atom at 1
/// along the trajectory; positive values mean the atom is not conserved.
pub fn atom_floor_violation(traj: &MomentTrajectory<f64>) -> f64 {
    let atom = atom_bookkeeping(traj.family, traj.alpha).atom_at_one;
    traj.moments.iter().flatten().map(|&m| atom - m).fold(f64::NEG_INFINITY, f64::max)
}

/// `v_t(w)` built from the half-rank trajectory at time `t/2`, gated on evenness.
pub fn v_at(traj: &MomentTrajectory<f64>, t: f64, w: Complex64) -> Result<Complex64, DynamicError> {
    expect(traj, Family::HalfRank)?;
    let s = v_source_time(t);
    let proxy = evenness_proxy(traj, s)?;
    if proxy > EVENNESS_LIMIT {
        return Err(DynamicError::Evenness { proxy, limit: EVENNESS_LIMIT, t: s });
    }
    let m = traj.moments_at(s);
    let inner = (w.sqrt() + 1.0) * 0.5;
    check_z(inner)?;
    Ok(v_from_u(|z| u_from_tilde(|x| tilde_half_from_moments(traj.alpha, m, x), z), w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `g = v_{t/2}` from the half-rank trajectory.
    V,
    /// `g = G̃_t` from the equal-ranks trajectory.
    Alpha,
}

fn grid_index(traj: &MomentTrajectory<f64>, t: f64) -> Option<usize> {
    let dt = traj.spacing();
    if dt == 0.0 {
        return None;
    }
    let k = (t / dt).round();
    if (k * dt - t).abs() > 1e-9 * dt.max(1.0) || k < 0.0 || k as usize >= traj.times.len() {
        return None;
    }
    Some(k as usize)
}

/// `|∂_t g - ∂_z[(2α-1) z g + (1-α) z(z-1) g²]|` by central differences of step `h`.
/// The `V` branch reads the half-rank grid at `(t ± h)/2`.
pub fn same_pde_residual(
    traj: &MomentTrajectory<f64>,
    branch: Branch,
    t: f64,
    z: Complex64,
    h: f64,
) -> Result<f64, DynamicError> {
    let alpha = traj.alpha;
    let grid_err = || DynamicError::Grid { t, h, dt: traj.spacing() };
    let eval = |s: f64, w: Complex64| -> Result<Complex64, DynamicError> {
        match branch {
            Branch::V => {
                grid_index(traj, v_source_time(s)).ok_or_else(grid_err)?;
                v_at(traj, s, w)
            }
            Branch::Alpha => {
                let k = grid_index(traj, s).ok_or_else(grid_err)?;
                expect(traj, Family::EqualRanks)?;
                check_z(w)?;
                Ok(tilde_equal_from_moments(alpha, &traj.moments[k], w))
            }
        }
    };
    let flux = |w: Complex64| -> Result<Complex64, DynamicError> {
        let g = eval(t, w)?;
        Ok(w * g * (2.0 * alpha - 1.0) + w * (w - 1.0) * g * g * (1.0 - alpha))
    };
    let dg_dt = (eval(t + h, z)? - eval(t - h, z)?) / (2.0 * h);
    let df_dz = (flux(z + h)? - flux(z - h)?) / (2.0 * h);
    Ok((dg_dt - df_dz).norm())
}

/// Residual of `∂_t ū = ∂_z[(2α-1) z ū + (1-α)(z²-1) ū²]` for
/// `ū_t(z) = z G̃_{2t}(z²)` built from an equal-ranks trajectory.
pub fn chain_rule_residual(traj: &MomentTrajectory<f64>, t: f64, z: Complex64, h: f64) -> Result<f64, DynamicError> {
    expect(traj, Family::EqualRanks)?;
    check_z(z * z)?;
    let alpha = traj.alpha;
    let grid_err = || DynamicError::Grid { t, h, dt: traj.spacing() };
    let u_bar = |s: f64, w: Complex64| -> Result<Complex64, DynamicError> {
        let k = grid_index(traj, u_bar_source_time(s)).ok_or_else(grid_err)?;
        Ok(w * tilde_equal_from_moments(alpha, &traj.moments[k], w * w))
    };
    let flux = |w: Complex64| -> Result<Complex64, DynamicError> {
        let u = u_bar(t, w)?;
        Ok(w * u * (2.0 * alpha - 1.0) + (w * w - 1.0) * u * u * (1.0 - alpha))
    };
    let du_dt = (u_bar(t + h, z)? - u_bar(t - h, z)?) / (2.0 * h);
    let df_dz = (flux(z + h)? - flux(z - h)?) / (2.0 * h);
    Ok((du_dt - df_dz).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformRow {
    pub t: f64,
    pub z: Complex64,
    pub g: Complex64,
    pub tilde: Complex64,
    pub u: Complex64,
    pub v: Option<Complex64>,
    pub evenness: f64,
}

/// `G`, `G̃`, `u` at `z` and `v` at `z²` for every grid time of a half-rank
/// trajectory; `v` is omitted where the evenness proxy fails.
pub fn transform_grid(traj: &MomentTrajectory<f64>, z_nodes: &[Complex64]) -> Result<Vec<TransformRow>, DynamicError> {
    expect(traj, Family::HalfRank)?;
    for &z in z_nodes {
        check_z((z + 1.0) * 0.5)?;
    }
    let alpha = traj.alpha;
    let mut rows = Vec::new();
    for (k, &t) in traj.times.iter().enumerate() {
        let m = &traj.moments[k];
        let evenness = evenness_proxy_from_moments(alpha, m, EVENNESS_ORDER);
        for &z in z_nodes {
            let tilde = |x| tilde_half_from_moments(alpha, m, x);
            let u = u_from_tilde(tilde, z);
            let v = (evenness <= EVENNESS_LIMIT).then(|| v_from_u(|w| u_from_tilde(tilde, w), z * z));
            rows.push(TransformRow { t, z, g: cauchy_from_moments(m, z), tilde: tilde(z), u, v, evenness });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `Q`, `Q₁`, `Q₂` independent uniformly rotated projections.
    Free,
    /// `Q` the corner projection, aligned with `P`; `Q₁`, `Q₂` still rotated.
    Aligned,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equa3Row {
    pub j: usize,
    /// `2τ[(2PQP-P)^{2j}]`.
    pub lhs: f64,
    /// `τ[(Q₁+Q₂-1)^{2j}]`.
    pub rhs: f64,
    pub gap: f64,
    pub stderr: f64,
}

/// Replica averages of both sides of `2τ[(2PQP-P)^{2j}] = τ[(Q₁+Q₂-1)^{2j}]`
/// for `j = 1..=j_max`, with `P` the rank-`N/2` corner projection.
pub fn equa3_check(
    n: usize,
    alpha: f64,
    seed: u64,
    j_max: usize,
    replicas: usize,
    coupling: Coupling,
) -> Result<Vec<Equa3Row>, DynamicError> {
    if n % 2 == 1 {
        return Err(DynamicError::OddDimension(n));
    }
    let rank = (alpha * n as f64 + 1e-9).floor() as usize;
    if rank == 0 || rank > n {
        return Err(DynamicError::Rank);
    }
    let half = n / 2;
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..replicas.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let q: CMatrix = match coupling {
                Coupling::Free => random_projection(n, rank, &mut rng),
                Coupling::Aligned => corner_projection(n, rank),
            };
            let q1 = random_projection(n, rank, &mut rng);
            let q2 = random_projection(n, rank, &mut rng);
            // 2PQP - P restricted to the range of P is the top-left block of 2Q - 1.
            let a = q.slice(ndarray::s![..half, ..half]).mapv(|x| x * 2.0) - identity(half);
            let lhs_traces = power_traces(&a.dot(&a), j_max);
            let s = &q1 + &q2 - &identity(n);
            let rhs_traces = power_traces(&s.dot(&s), j_max);
            let scale = half as f64 / n as f64;
            let lhs = (1..=j_max).map(|j| 2.0 * scale * lhs_traces[j].re).collect();
            let rhs = (1..=j_max).map(|j| rhs_traces[j].re).collect();
            (lhs, rhs)
        })
        .collect();
    let r = samples.len() as f64;
    Ok((1..=j_max)
        .map(|j| {
            let lhs = samples.iter().map(|s| s.0[j - 1]).sum::<f64>() / r;
            let rhs = samples.iter().map(|s| s.1[j - 1]).sum::<f64>() / r;
            let diffs: Vec<f64> = samples.iter().map(|s| s.0[j - 1] - s.1[j - 1]).collect();
            let mean = lhs - rhs;
            let stderr = if samples.len() > 1 {
                (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
            } else {
                f64::NAN
            };
            Equa3Row { j, lhs, rhs, gap: mean.abs(), stderr }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi_moments::{dirac_one, half_rank_rhs, integrate, stationary_moments};
    use crate::wachter::{make_measure, MeasureKind};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const ORDER: usize = 80;

    fn stationary_half(alpha: f64) -> Vec<f64> {
        make_measure(MeasureKind::MuInf, 0.5, alpha).unwrap().moments(ORDER as u32).unwrap()
    }

    #[test]
    fn time_conversions() {
        assert_eq!(v_source_time(1.0), 0.5);
        assert_eq!(u_bar_source_time(0.25), 0.5);
        assert_eq!(v_source_time(u_bar_source_time(0.3)), 0.3);
    }

    #[test]
    fn atom_bookkeeping_matches_measures() {
        for a in [0.55, 0.7, 0.9] {
            let half = make_measure(MeasureKind::MuInf, 0.5, a).unwrap();
            let b = atom_bookkeeping(Family::HalfRank, a);
            assert!((half.atoms[0].weight - b.atom_at_one).abs() < 1e-15);
            assert!((half.mass_ac - b.remaining_mass).abs() < 1e-10);
            let eq = make_measure(MeasureKind::MuInf, a, a).unwrap();
            let b = atom_bookkeeping(Family::EqualRanks, a);
            assert!((eq.atoms[0].weight - b.atom_at_one).abs() < 1e-15);
            assert!((eq.mass_ac - b.remaining_mass).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_half_rank_is_a_fixed_point() {
        for a in [0.5, 0.7, 0.85] {
            let m = stationary_half(a);
            let r = half_rank_rhs(a, &m[..30]);
            assert!(r.iter().all(|x| x.abs() < 1e-8), "alpha {a}: {r:?}");
        }
    }

    #[test]
    fn tilde_examples() {
        let a = 0.7;
        let m = stationary_half(a);
        let z = c(2.0, 0.0);
        let measure = make_measure(MeasureKind::MuInf, 0.5, a).unwrap();
        let oracle = measure.normalized_density_cauchy(z).unwrap();
        assert!((tilde_half_from_moments(a, &m, z) - oracle).norm() < 1e-7);
        let m = stationary_half(0.5);
        let z = c(1.5, 0.7);
        assert!((tilde_half_from_moments(0.5, &m, z) - cauchy_from_moments(&m, z)).norm() < 1e-15);
        let big = c(1e6, 0.0);
        assert!((tilde_half_from_moments(0.5, &m, big) * big - 1.0).norm() < 1e-5);
    }

    #[test]
    fn v_moments_are_pushforward_moments() {
        let a = 0.7;
        let m = stationary_half(a);
        let measure = make_measure(MeasureKind::MuInf, 0.5, a).unwrap();
        for w in [c(3.0, 0.0), c(2.5, 1.0)] {
            let v = v_from_u(|z| u_from_tilde(|x| tilde_half_from_moments(a, &m, x), z), w);
            let re = measure.density_integral(|x| (1.0 / (w - (2.0 * x - 1.0).powi(2))).re).unwrap();
            let im = measure.density_integral(|x| (1.0 / (w - (2.0 * x - 1.0).powi(2))).im).unwrap();
            let oracle = Complex64::new(re, im) / measure.mass_ac;
            assert!((v - oracle).norm() < 1e-7);
        }
        let u = |z| u_from_tilde(|x| tilde_half_from_moments(a, &m, x), z);
        let z = c(4.0, 1.0);
        assert!((u(-z) + u(z)).norm() < 1e-9);
        assert!((u(z.conj()) - u(z).conj()).norm() < 1e-14);
    }

    #[test]
    fn evenness_examples() {
        let a = 0.7;
        assert!(evenness_proxy_from_moments(a, &stationary_half(a), EVENNESS_ORDER) < 1e-9);
        let m = symmetric_two_atom(a, 0.6, 20);
        assert!(evenness_proxy_from_moments(a, &m, EVENNESS_ORDER) < 1e-12);
        let traj = integrate(Family::HalfRank, a, &m, 0.5, 1e-3).unwrap();
        let drift = evenness_proxy(&traj, 0.5).unwrap();
        println!("evenness proxy of evolved two-atom data at t = 0.5: {drift:e}");
        assert!(drift.is_finite());
        let lopsided: Vec<f64> = (0..=20).map(|n| 0.9f64.powi(n)).collect();
        assert!(evenness_proxy_from_moments(0.5, &lopsided, EVENNESS_ORDER) > 0.1);
    }

    #[test]
    fn alpha_branch_residuals() {
        let a = 0.7;
        let traj = integrate(Family::EqualRanks, a, &dirac_one(60), 1.5, 5e-4).unwrap();
        let r1 = same_pde_residual(&traj, Branch::Alpha, 1.0, c(2.0, 0.0), 1e-3).unwrap();
        let r2 = same_pde_residual(&traj, Branch::Alpha, 1.0, c(2.0, 0.0), 5e-4).unwrap();
        assert!(r1 < 1e-4);
        assert!(r2 < r1 / 3.0, "{r1:e} {r2:e}");
        let c1 = chain_rule_residual(&traj, 0.5, c(1.6, 0.3), 1e-3).unwrap();
        let c2 = chain_rule_residual(&traj, 0.5, c(1.6, 0.3), 5e-4).unwrap();
        assert!(c1 < 1e-4 && c2 < c1 / 3.0, "{c1:e} {c2:e}");
        assert!(same_pde_residual(&traj, Branch::Alpha, 1.0, c(2.0, 0.0), 3e-4).is_err());
    }

    #[test]
    fn stationary_branches() {
        let a = 0.7;
        let half = MomentTrajectory::constant(Family::HalfRank, a, stationary_half(a), 1.0, 5e-4);
        let eq_m = stationary_moments(a, ORDER).unwrap();
        let eq = MomentTrajectory::constant(Family::EqualRanks, a, eq_m, 2.0, 1e-3);
        let z = c(3.0, 0.5);
        assert!(same_pde_residual(&half, Branch::V, 1.0, z, 1e-3).unwrap() < 1e-8);
        assert!(same_pde_residual(&eq, Branch::Alpha, 1.0, z, 1e-3).unwrap() < 1e-8);
        let v = v_at(&half, 1.0, z).unwrap();
        let g = tilde_equal(&eq, 1.0, z).unwrap();
        assert!((v - g).norm() < 1e-7);
    }

    #[test]
    fn v_branch_on_evolved_even_data() {
        let a = 0.7;
        let traj = integrate(Family::HalfRank, a, &symmetric_two_atom(a, 0.6, ORDER), 0.6, 2.5e-4).unwrap();
        let z = c(3.0, 0.5);
        let r1 = same_pde_residual(&traj, Branch::V, 1.0, z, 1e-3).unwrap();
        let r2 = same_pde_residual(&traj, Branch::V, 1.0, z, 5e-4).unwrap();
        assert!(r1 < 1e-6 && r2 < 1e-6, "{r1:e} {r2:e}");
    }

    #[test]
    fn same_equation_different_solutions() {
        let a = 0.7;
        let half = integrate(Family::HalfRank, a, &symmetric_two_atom(a, 0.6, ORDER), 0.6, 5e-4).unwrap();
        let eq = integrate(Family::EqualRanks, a, &dirac_one(ORDER), 1.2, 5e-4).unwrap();
        let z = c(3.0, 0.5);
        assert!(same_pde_residual(&half, Branch::V, 1.0, z, 1e-3).unwrap() < 1e-6);
        assert!(same_pde_residual(&eq, Branch::Alpha, 1.0, z, 1e-3).unwrap() < 1e-6);
        let gap = (v_at(&half, 1.0, z).unwrap() - tilde_equal(&eq, 1.0, z).unwrap()).norm();
        assert!(gap > 1e-3, "{gap:e}");
        assert!(atom_floor_violation(&half) < 1e-10);
        assert!(atom_floor_violation(&eq) < 1e-10);
    }

    #[test]
    fn v_branch_refuses_uneven_data() {
        let traj = integrate(Family::HalfRank, 0.7, &dirac_one(30), 0.5, 1e-3).unwrap();
        assert!(matches!(v_at(&traj, 0.2, c(3.0, 0.0)), Err(DynamicError::Evenness { .. })));
        let grid = transform_grid(&traj, &[c(2.0, 0.0)]).unwrap();
        assert!(grid.iter().all(|r| r.v.is_none()));
    }

    #[test]
    fn equa3_small() {
        let rows = equa3_check(60, 0.5, 3, 2, 4, Coupling::Free).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].gap < 0.1);
        let rows = equa3_check(60, 0.5, 3, 1, 2, Coupling::Aligned).unwrap();
        assert!((rows[0].lhs - 1.0).abs() < 1e-12);
        assert!(rows[0].gap > 0.2);
        assert!(equa3_check(61, 0.5, 3, 1, 2, Coupling::Free).is_err());
    }

    proptest! {
        #[test]
        fn conjugate_symmetry_and_unit_mass(a in 0.5f64..0.95, re in -4.0f64..4.0, im in 0.01f64..4.0) {
            let m = stationary_half(a);
            let z = c(re, im);
            prop_assume!(z.norm() > 1.5 && ((z + 1.0) * 0.5).norm() > 1.5);
            let g = tilde_half_from_moments(a, &m, z);
            prop_assert!((tilde_half_from_moments(a, &m, z.conj()) - g.conj()).norm() < 1e-12);
            let u = |w| u_from_tilde(|x| tilde_half_from_moments(a, &m, x), w);
            prop_assert!((u(z.conj()) - u(z).conj()).norm() < 1e-12);
            let big = z * 1e6;
            prop_assert!((cauchy_from_moments(&m, big) * big - 1.0).norm() < 1e-5);
        }

        #[test]
        fn symmetric_data_is_even(a in 0.5f64..0.95, s in 0.0f64..1.0) {
            prop_assert!(evenness_proxy_from_moments(a, &symmetric_two_atom(a, s, 12), EVENNESS_ORDER) < 1e-10);
        }

        #[test]
        fn bookkeeping_is_a_partition(a in 0.5f64..0.99) {
            for family in [Family::HalfRank, Family::EqualRanks] {
                let b = atom_bookkeeping(family, a);
                prop_assert!((b.atom_at_one + b.remaining_mass - 1.0).abs() < 1e-14);
                prop_assert!(b.atom_at_one >= 0.0 && b.remaining_mass > 0.0);
            }
        }

        #[test]
        fn time_changes_invert(t in 0.0f64..50.0) {
            prop_assert!((v_source_time(u_bar_source_time(t)) - t).abs() <= 1e-15 * t.max(1.0));
        }
    }
}
