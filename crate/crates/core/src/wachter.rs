//! The free MANOVA law `ν^{(β,α)}`, the stationary law `μ_∞^{(β,α)}`, their
//! moments by quadrature, and algebraic moment identities for pairs of
//! orthogonal projections checked on explicit matrices.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{corner_projection, identity, power_traces, random_projection, CMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WachterError {
    #[error("{name} must lie in (0, 1), got {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("kunisky identity needs alpha in [1/2, 1), got {0}")]
    AlphaBelowHalf(f64),
    #[error("quadrature did not settle: change {change:e} at {nodes} nodes")]
    Quadrature { change: f64, nodes: usize },
    #[error("total mass {0} differs from 1")]
    Mass(f64),
    #[error("ranks must agree, got {0} and {1}")]
    RankMismatch(usize, usize),
    #[error("rank {rank} out of range for N = {n}")]
    Rank { rank: usize, n: usize },
    #[error("N must be even, got {0}")]
    OddDimension(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    /// `ν^{(β,α)}`: the law of `PUQU*P` in the full algebra.
    Nu,
    /// `μ_∞^{(β,α)}`: the same operator in the algebra compressed by `P`.
    MuInf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub beta: f64,
    pub alpha: f64,
    pub atoms: Vec<Atom>,
    pub x_minus: f64,
    pub x_plus: f64,
    /// Density is `density_scale · √((x₊-x)(x-x₋)) / (x(1-x))` on `[x₋, x₊]`:
    /// `1/(2π)` for `ν`, `1/(2πβ)` for `μ_∞`.
    pub density_scale: f64,
    pub mass_ac: f64,
}

pub const QUADRATURE_NODES: usize = 1024;
const MAX_NODES: usize = 1 << 16;
const QUADRATURE_TOL: f64 = 1e-10;

/// `x± = (√(α(1-β)) ± √(β(1-α)))²`.
pub fn edges(beta: f64, alpha: f64) -> (f64, f64) {
    let a = (alpha * (1.0 - beta)).sqrt();
    let b = (beta * (1.0 - alpha)).sqrt();
    (((a - b) * (a - b)).clamp(0.0, 1.0), ((a + b) * (a + b)).clamp(0.0, 1.0))
}

pub fn make_measure(kind: MeasureKind, beta: f64, alpha: f64) -> Result<MeasureSpec, WachterError> {
    check("beta", beta)?;
    check("alpha", alpha)?;
    let (x_minus, x_plus) = edges(beta, alpha);
    let (w0, w1, density_scale) = match kind {
        MeasureKind::Nu => (1.0 - beta.min(alpha), (alpha + beta - 1.0).max(0.0), 0.5 / PI),
        MeasureKind::MuInf => ((1.0 - alpha / beta).max(0.0), ((alpha + beta - 1.0) / beta).max(0.0), 0.5 / (PI * beta)),
    };
    let mut atoms = Vec::new();
    if w0 > 0.0 {
        atoms.push(Atom { location: 0.0, weight: w0 });
    }
    if w1 > 0.0 {
        atoms.push(Atom { location: 1.0, weight: w1 });
    }
    let mut m = MeasureSpec { kind, beta, alpha, atoms, x_minus, x_plus, density_scale, mass_ac: 0.0 };
    m.mass_ac = m.density_integral(|_| 1.0)?;
    let total = m.mass_ac + w0 + w1;
    if (total - 1.0).abs() > QUADRATURE_TOL {
        return Err(WachterError::Mass(total));
    }
    Ok(m)
}

impl MeasureSpec {
    pub fn density(&self, x: f64) -> f64 {
        if x <= self.x_minus || x >= self.x_plus {
            return 0.0;
        }
        self.density_scale * ((self.x_plus - x) * (x - self.x_minus)).sqrt() / (x * (1.0 - x))
    }

    /// `∫ g f` over the absolutely continuous part.
    ///
    /// With `x = x₋ + r(1 + cos θ)`, `r = (x₊ - x₋)/2`, the integrand becomes
    /// `g(x) r² sin²θ / (x(1-x))`; writing `sin²θ = (1-cos θ)(1+cos θ)` and
    /// pairing each factor with the edge it vanishes at keeps it smooth when an
    /// edge sits on `0` or `1`. Midpoint nodes in `θ` converge spectrally.
    pub fn density_integral(&self, g: impl Fn(f64) -> f64) -> Result<f64, WachterError> {
        let mut nodes = QUADRATURE_NODES;
        let mut prev = self.theta_rule(&g, nodes);
        loop {
            nodes *= 2;
            let next = self.theta_rule(&g, nodes);
            let change = (next - prev).abs();
            if change <= QUADRATURE_TOL * next.abs().max(1.0) {
                return Ok(next);
            }
            if nodes >= MAX_NODES {
                return Err(WachterError::Quadrature { change, nodes });
            }
            prev = next;
        }
    }

    fn theta_rule(&self, g: &impl Fn(f64) -> f64, nodes: usize) -> f64 {
        let r = 0.5 * (self.x_plus - self.x_minus);
        if r <= 0.0 {
            return 0.0;
        }
        let h = PI / nodes as f64;
        let mut sum = 0.0;
        for k in 0..nodes {
            let c = ((k as f64 + 0.5) * h).cos();
            let lower = r * (1.0 + c);
            let upper = r * (1.0 - c);
            let x = self.x_minus + lower;
            let one_minus_x = (1.0 - self.x_plus) + upper;
            // r² sin²θ / (x(1-x)) = [r(1+c)/x] [r(1-c)/(1-x)]
            let left = if self.x_minus == 0.0 { 1.0 } else { lower / x };
            let right = if self.x_plus == 1.0 { 1.0 } else { upper / one_minus_x };
            sum += g(x) * left * right;
        }
        self.density_scale * sum * h
    }

    /// `∫ x^j dμ`, atoms included.
    pub fn moment(&self, j: u32) -> Result<f64, WachterError> {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * a.location.powi(j as i32)).sum();
        Ok(atoms + self.density_integral(|x| x.powi(j as i32))?)
    }

    pub fn moments(&self, j_max: u32) -> Result<Vec<f64>, WachterError> {
        (0..=j_max).map(|j| self.moment(j)).collect()
    }

    /// `∫ (z - x)^{-1} dμ` for `z` off `[0, 1]`.
    pub fn cauchy(&self, z: Complex64) -> Result<Complex64, WachterError> {
        let atoms: Complex64 = self.atoms.iter().map(|a| a.weight / (z - a.location)).sum();
        let re = self.density_integral(|x| (1.0 / (z - x)).re)?;
        let im = self.density_integral(|x| (1.0 / (z - x)).im)?;
        Ok(atoms + Complex64::new(re, im))
    }

    /// Cauchy transform of the absolutely continuous part normalised to unit mass.
    pub fn normalized_density_cauchy(&self, z: Complex64) -> Result<Complex64, WachterError> {
        let re = self.density_integral(|x| (1.0 / (z - x)).re)?;
        let im = self.density_integral(|x| (1.0 / (z - x)).im)?;
        Ok(Complex64::new(re, im) / self.mass_ac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KunRow {
    pub j: u32,
    /// `(1/(2(1-α))) ∫ (2x-1)^{2j} f_∞^{(1/2,α)}`.
    pub pushforward: f64,
    /// `(α/(1-α)) ∫ x^j f_∞^{(α,α)}`.
    pub target: f64,
    pub rel_error: f64,
}

/// Moments of the normalised `μ_∞^{(1/2,α)}` density pushed forward by
/// `x ↦ (2x-1)²` against those of the normalised `μ_∞^{(α,α)}` density.
pub fn kunisky_table(alpha: f64, j_max: u32) -> Result<Vec<KunRow>, WachterError> {
    check("alpha", alpha)?;
    if alpha < 0.5 {
        return Err(WachterError::AlphaBelowHalf(alpha));
    }
    let half = make_measure(MeasureKind::MuInf, 0.5, alpha)?;
    let equal = make_measure(MeasureKind::MuInf, alpha, alpha)?;
    (0..=j_max)
        .map(|j| {
            let pushforward = half.density_integral(|x| (2.0 * x - 1.0).powi(2 * j as i32))? / (2.0 * (1.0 - alpha));
            let target = equal.density_integral(|x| x.powi(j as i32))? * alpha / (1.0 - alpha);
            let rel_error = (pushforward - target).abs() / target.abs();
            Ok(KunRow { j, pushforward, target, rel_error })
        })
        .collect()
}

pub fn kunisky_check(alpha: f64, j_max: u32) -> Result<f64, WachterError> {
    Ok(kunisky_table(alpha, j_max)?.iter().map(|r| r.rel_error).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub error: f64,
}

/// `τ[(Q₁+Q₂-1)^{2j}]` against `2τ[(Q₁Q₂Q₁)^j] - (2α-1)` with `α = τ(Q₁) = τ(Q₂)`.
/// At `j = 0` the power `(Q₁Q₂Q₁)⁰` is read as `Q₁`, the unit of the corner algebra.
pub fn demham_identity(q1: &CMatrix, q2: &CMatrix, j_max: usize) -> Vec<IdentityRow> {
    let n = q1.nrows();
    let alpha = crate::linalg::normalized_trace(q1).re;
    let sum = q1 + q2 - &identity(n);
    let lhs = power_traces(&sum.dot(&sum), j_max);
    let mut rhs = power_traces(&q1.dot(q2).dot(q1), j_max);
    rhs[0] = Complex64::new(alpha, 0.0);
    (0..=j_max)
        .map(|j| {
            let l = lhs[j].re;
            let r = 2.0 * rhs[j].re - (2.0 * alpha - 1.0);
            IdentityRow { j, lhs: l, rhs: r, error: (l - r).abs() }
        })
        .collect()
}

pub fn demham_matrix_check(n: usize, rank1: usize, rank2: usize, seed: u64, j_max: usize) -> Result<f64, WachterError> {
    if rank1 != rank2 {
        return Err(WachterError::RankMismatch(rank1, rank2));
    }
    check_rank(rank1, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q1 = random_projection(n, rank1, &mut rng);
    let q2 = random_projection(n, rank2, &mut rng);
    Ok(demham_identity(&q1, &q2, j_max).iter().map(|r| r.error).fold(0.0, f64::max))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `τ[(PQP)^j]` against
/// `C(2j,j)/2^{2j+1} + τ(S)/4 + 2^{-2j} Σ_{k=1}^{j} C(2j, j-k) τ[(RS)^k]`
/// with `R = 2P-1`, `S = 2Q-1`, for `j = 1..=j_max`. Needs `τ(P) = 1/2`.
pub fn pqp_binomial_identity(p: &CMatrix, q: &CMatrix, j_max: usize) -> Vec<IdentityRow> {
    let n = p.nrows();
    let one = identity(n);
    let r = p * 2.0 - &one;
    let s = q * 2.0 - &one;
    let tau_s = crate::linalg::normalized_trace(&s).re;
    let rs = power_traces(&r.dot(&s), j_max);
    let lhs = power_traces(&p.dot(q).dot(p), j_max);
    (1..=j_max)
        .map(|j| {
            let scale = 0.25f64.powi(j as i32);
            let tail: f64 = (1..=j).map(|k| binomial(2 * j, j - k) * rs[k].re).sum();
            let rhs = binomial(2 * j, j) * scale * 0.5 + tau_s / 4.0 + scale * tail;
            IdentityRow { j, lhs: lhs[j].re, rhs, error: (lhs[j].re - rhs).abs() }
        })
        .collect()
}

/// `P` is the corner projection of rank `N/2`, `Q` a random projection of rank `rank_q`.
pub fn pqp_binomial_check(n: usize, rank_q: usize, seed: u64, j_max: usize) -> Result<f64, WachterError> {
    if n % 2 == 1 {
        return Err(WachterError::OddDimension(n));
    }
    check_rank(rank_q, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = corner_projection(n, n / 2);
    let q = random_projection(n, rank_q, &mut rng);
    Ok(pqp_binomial_identity(&p, &q, j_max).iter().map(|r| r.error).fold(0.0, f64::max))
}

fn check(name: &'static str, value: f64) -> Result<(), WachterError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(WachterError::Parameter { name, value })
    }
}

fn check_rank(rank: usize, n: usize) -> Result<(), WachterError> {
    if rank == 0 || rank > n {
        Err(WachterError::Rank { rank, n })
    } else {
        Ok(())
    }
}
