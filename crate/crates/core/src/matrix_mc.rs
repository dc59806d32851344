//! Finite-N random matrices: Haar unitaries, unitary Brownian motion and the
//! matrix Jacobi process `P U_t Q U_t* P`.

use ndarray::s;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, adjoint, gaussian_matrix, identity, orthonormalize_columns, CMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("N must be at least 2, got {0}")]
    Size(usize),
    #[error("dt must lie in (0, 0.01], got {0}")]
    Step(f64),
    #[error("t_end must be non-negative, got {0}")]
    EndTime(f64),
    #[error("at least one replica is needed")]
    Replicas,
    #[error("snapshot time {0} is outside [0, t_end]")]
    Snapshot(f64),
    #[error("rank floor({name} N) is zero")]
    Rank { name: &'static str },
    #[error("{name} must lie in (0, 1], got {value}")]
    Parameter { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub replicas: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { n: 200, dt: 0.005, t_end: 1.0, replicas: 100, seed: 0 }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.n < 2 {
            return Err(McError::Size(self.n));
        }
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(McError::Step(self.dt));
        }
        if !(self.t_end >= 0.0) {
            return Err(McError::EndTime(self.t_end));
        }
        if self.replicas == 0 {
            return Err(McError::Replicas);
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Generator for replica `replica`: one ChaCha stream per replica, so results
/// do not depend on scheduling.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

pub fn haar_unitary(n: usize, seed: u64) -> CMatrix {
    linalg::haar_unitary(n, &mut replica_rng(seed, 0))
}

/// Hermitian matrix with `E|H_ij|² = 1/N`.
pub fn gue<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(n, n, rng);
    let scale = (0.5 / n as f64).sqrt();
    (&g + &adjoint(&g)) * scale
}

const REORTHONORMALIZE_EVERY: usize = 100;

/// `U ← T₄(i√dt H) U` with `T₄` the degree-4 Taylor polynomial of `exp`,
/// evaluated in Horner form.
fn step(u: &CMatrix, h: &CMatrix, dt: f64) -> CMatrix {
    let x = h * Complex64::new(0.0, dt.sqrt());
    let mut acc = u.clone();
    for k in (1..=4).rev() {
        acc = u + &(x.dot(&acc) / k as f64);
    }
    acc
}

/// Runs one path from `U_0 = I`, calling `observe(step_index, U)` at the
/// requested step indices (sorted, each at most `steps`).
pub fn simulate_path<F>(n: usize, dt: f64, steps: usize, observe_at: &[usize], rng: &mut ChaCha8Rng, mut observe: F)
where
    F: FnMut(usize, &CMatrix),
{
    let mut u = identity(n);
    let mut next = 0;
    while next < observe_at.len() && observe_at[next] == 0 {
        observe(0, &u);
        next += 1;
    }
    for k in 1..=steps {
        let h = gue(n, rng);
        u = step(&u, &h, dt);
        if k % REORTHONORMALIZE_EVERY == 0 || k == steps {
            orthonormalize_columns(&mut u);
        }
        while next < observe_at.len() && observe_at[next] == k {
            observe(k, &u);
            next += 1;
        }
    }
}

/// Endpoint of a single unitary Brownian path.
pub fn unitary_bm(n: usize, t_end: f64, dt: f64, seed: u64) -> Result<CMatrix, McError> {
    let cfg = EnsembleConfig { n, dt, t_end, replicas: 1, seed };
    cfg.validate()?;
    let mut out = identity(n);
    let steps = cfg.steps();
    simulate_path(n, dt, steps, &[steps], &mut replica_rng(seed, 0), |_, u| out = u.clone());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub t: f64,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Runs `cfg.replicas` independent paths in parallel. At each snapshot time
/// `observer(U)` returns a vector of scalars; means and standard errors over
/// replicas are reported per snapshot.
pub fn run_ensemble<F>(cfg: &EnsembleConfig, snapshots: &[f64], observer: F) -> Result<Vec<Estimate>, McError>
where
    F: Fn(&CMatrix) -> Vec<f64> + Sync,
{
    cfg.validate()?;
    let steps = cfg.steps();
    let mut idx: Vec<usize> = Vec::with_capacity(snapshots.len());
    for &t in snapshots {
        if !(t >= 0.0 && t <= cfg.t_end + 1e-12) {
            return Err(McError::Snapshot(t));
        }
        idx.push(((t / cfg.dt).round() as usize).min(steps));
    }
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.sort_by_key(|&i| idx[i]);
    let sorted: Vec<usize> = order.iter().map(|&i| idx[i]).collect();

    let samples: Vec<Vec<Vec<f64>>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(cfg.seed, r as u64);
            let mut obs = vec![Vec::new(); idx.len()];
            let mut slot = 0;
            simulate_path(cfg.n, cfg.dt, steps, &sorted, &mut rng, |_, u| {
                obs[order[slot]] = observer(u);
                slot += 1;
            });
            obs
        })
        .collect();

    Ok(snapshots
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let rows: Vec<&Vec<f64>> = samples.iter().map(|s| &s[i]).collect();
            let (mean, stderr) = mean_and_stderr(&rows);
            Estimate { t, mean, stderr }
        })
        .collect())
}

pub fn mean_and_stderr(rows: &[&Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let r = rows.len() as f64;
    let width = rows.first().map_or(0, |v| v.len());
    let mean: Vec<f64> = (0..width).map(|k| rows.iter().map(|v| v[k]).sum::<f64>() / r).collect();
    let stderr = (0..width)
        .map(|k| {
            if rows.len() < 2 {
                return f64::NAN;
            }
            let var = rows.iter().map(|v| (v[k] - mean[k]).powi(2)).sum::<f64>() / (r - 1.0);
            (var / r).sqrt()
        })
        .collect();
    (mean, stderr)
}

/// `Re τ_N(U^k)` for `k = 1..=k_max`.
pub fn trace_moments(u: &CMatrix, k_max: usize) -> Vec<f64> {
    linalg::power_traces(u, k_max)[1..].iter().map(|c| c.re).collect()
}

/// `tr((BB*)^j)/p` for `j = 1..=j_max`, with `B` the top-left `p × q` block of
/// `U`: the moments of `P U Q U* P` in the algebra compressed by the rank-`p`
/// corner projection `P`, for `Q` the rank-`q` corner projection.
pub fn corner_jacobi_moments(u: &CMatrix, p: usize, q: usize, j_max: usize) -> Vec<f64> {
    let b = u.slice(s![..p, ..q]).to_owned();
    let w = b.dot(&adjoint(&b));
    linalg::power_traces(&w, j_max)[1..].iter().map(|c| c.re).collect()
}

pub fn rank_of(name: &'static str, frac: f64, n: usize) -> Result<usize, McError> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(McError::Parameter { name, value: frac });
    }
    let r = (frac * n as f64 + 1e-9).floor() as usize;
    if r == 0 {
        Err(McError::Rank { name })
    } else {
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimates {
    pub t: f64,
    pub j: Vec<usize>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Moments of `P U_t Q U_t* P` normalised by `τ(P)`, with `P`, `Q` corner
/// projections of ranks `⌊βN⌋`, `⌊αN⌋` (so `Q = P` when `β = α`).
#[allow(clippy::too_many_arguments)]
pub fn jacobi_matrix_moments(
    n: usize,
    beta: f64,
    alpha: f64,
    t: f64,
    dt: f64,
    replicas: usize,
    seed: u64,
    j_max: usize,
) -> Result<MomentEstimates, McError> {
    let p = rank_of("beta", beta, n)?;
    let q = rank_of("alpha", alpha, n)?;
    let cfg = EnsembleConfig { n, dt, t_end: t, replicas, seed };
    let est = run_ensemble(&cfg, &[t], |u| corner_jacobi_moments(u, p, q, j_max))?;
    let e = &est[0];
    Ok(MomentEstimates { t, j: (1..=j_max).collect(), mean: e.mean.clone(), stderr: e.stderr.clone() })
}
