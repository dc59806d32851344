//! The acceptance suite: thirteen numerical criteria, each returning a
//! pass/fail verdict with a one-line summary of the measured quantities.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::chi_saddle::{self, coeffs_contour_auto, critical_points, saddle_asymptotic, scaled_coeffs_lagrange};
use crate::dynamic::{self, Branch, Coupling};
use crate::flow::{mgf_taylor_coefficients, mgf_theorem1};
use crate::fubm::{fubm_moments, herglotz, psi_map};
use crate::jacobi_moments::{corner_initial, dirac_one, first_moment_closed_form, integrate, stationary_moments, Family, MomentTrajectory};
use crate::matrix_mc::{corner_jacobi_moments, run_ensemble, EnsembleConfig};
use crate::positivity::{hausdorff_check, toeplitz_min_eigenvalue};
use crate::vmap::{phase_report, transition_times, v_tilde, Verdict};
use crate::wachter::{demham_matrix_check, kunisky_check, make_measure, pqp_binomial_check, MeasureKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

pub const NAMES: [&str; 13] = [
    "moment hierarchy exactness",
    "characteristic-flow consistency",
    "alpha = 1/2 retrieval",
    "phase transitions",
    "V-tilde bijection",
    "coefficient agreement",
    "saddle-point asymptotics",
    "static Kunisky identity",
    "projection identities",
    "dynamical identity",
    "initial-data freeness proxy",
    "matrix Monte Carlo limits",
    "moment positivity",
];

type Outcome = Result<(bool, String), String>;

fn finish(id: usize, outcome: Outcome) -> CriterionResult {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { id, name: NAMES[id - 1], passed, detail }
}

/// Runs criterion `id` (1-based); `None` for an unknown id.
pub fn run(id: usize) -> Option<CriterionResult> {
    let outcome = match id {
        1 => hierarchy(),
        2 => flow_consistency(),
        3 => half_retrieval(),
        4 => transitions(),
        5 => bijection(),
        6 => coefficients(),
        7 => asymptotics(),
        8 => kunisky(),
        9 => projections(),
        10 => dynamical(),
        11 => freeness_proxy(),
        12 => monte_carlo(),
        13 => positivity(),
        _ => return None,
    };
    Some(finish(id, outcome))
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=NAMES.len()).filter_map(run).collect()
}

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

fn hierarchy() -> Outcome {
    let mut worst = 0.0f64;
    for alpha in [0.3f64, 0.5, 0.7] {
        let traj = integrate(Family::EqualRanks, alpha, &dirac_one(8), 2.0, 1e-3).map_err(err)?;
        for t in [0.5f64, 1.0, 2.0] {
            let m1 = traj.moments_at(t)[1];
            worst = worst.max((m1 - first_moment_closed_form(alpha, 1.0, t)).abs());
        }
    }
    Ok((worst < 1e-8, format!("max |m1 - closed form| = {worst:.2e}")))
}

fn flow_consistency() -> Outcome {
    let mut coeff_err = 0.0f64;
    let mut gap = 0.0f64;
    for alpha in [0.4f64, 0.6] {
        let m = mgf_taylor_coefficients(alpha, 1.0, 0.02, 64, 5).map_err(err)?;
        let traj = integrate(Family::EqualRanks, alpha, &dirac_one(5), 1.0, 1e-3).map_err(err)?;
        for n in 1..=5 {
            coeff_err = coeff_err.max((m[n] - traj.last()[n]).abs());
        }
        for r in [0.01f64, 0.03, 0.05] {
            for k in 0..16 {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / 16.0);
                gap = gap.max(mgf_theorem1(alpha, 1.0, z).map_err(err)?.forms_gap());
            }
        }
    }
    Ok((
        coeff_err < 1e-6 && gap < 1e-10,
        format!("max |m_n contour - hierarchy| = {coeff_err:.2e}, max form gap = {gap:.2e}"),
    ))
}

fn half_retrieval() -> Outcome {
    let mut worst = 0.0f64;
    for t in [0.5f64, 1.0, 2.0] {
        for r in [0.1f64, 0.2, 0.3] {
            for k in 0..12 {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / 12.0);
                let m = mgf_theorem1(0.5, t, z).map_err(err)?.m();
                let h = herglotz(2.0 * t, psi_map(z).map_err(err)?).map_err(err)?;
                worst = worst.max((m - h / (1.0 - z).sqrt()).norm());
            }
        }
    }
    Ok((worst < 1e-9, format!("max |M - H(psi(z))/sqrt(1-z)| = {worst:.2e}")))
}

fn transitions() -> Outcome {
    let mut root_err = 0.0f64;
    let mut ordered = true;
    for k in 0..50 {
        let alpha = 0.5f64 + 0.45 * k as f64 / 49.0;
        let (t0, t1) = transition_times(alpha).map_err(err)?;
        let (r0, r1) = chi_saddle::discriminant_roots(alpha).map_err(err)?;
        root_err = root_err.max((t0 - r0).abs()).max((t1 - r1).abs());
        ordered &= t0 <= 2.0 && 2.0 <= t1;
    }
    let (h0, h1) = transition_times(0.5f64).map_err(err)?;
    let half = (h0 - 2.0).abs().max((h1 - 2.0).abs());
    Ok((
        root_err < 1e-10 && half < 1e-12 && ordered,
        format!("max root disagreement = {root_err:.2e}, |t(1/2) - 2| = {half:.2e}, ordering holds: {ordered}"),
    ))
}

fn bijection() -> Outcome {
    let mut endpoint = 0.0f64;
    let mut monotone = true;
    for alpha in [0.5f64, 0.6, 0.7, 0.85] {
        let (_, t1) = transition_times(alpha).map_err(err)?;
        for t in [0.5f64, 2.0, t1 + 1.0] {
            let rep = phase_report(alpha, t).map_err(err)?;
            let (a, b) = rep.interval.ok_or_else(|| format!("no interval at alpha {alpha}, t {t}"))?;
            let va = rep.v_at_a.ok_or("missing V(a)")?;
            let vb = rep.v_at_b.ok_or("missing V(b)")?;
            endpoint = endpoint.max((va + 1.0).abs()).max((vb - 1.0).abs());
            let mut prev = f64::NEG_INFINITY;
            for k in 1..=200 {
                let u = a + (b - a) * k as f64 / 201.0;
                let v = v_tilde(alpha, t, u).map_err(err)?;
                monotone &= v > prev;
                prev = v;
            }
        }
    }
    let mut subset = true;
    let mut highest_min = f64::NEG_INFINITY;
    for alpha in [0.2f64, 0.35, 0.45] {
        for t in [0.5f64, 1.0, 2.0] {
            let rep = phase_report(alpha, t).map_err(err)?;
            let min = rep.min_value.ok_or("missing minimum")?;
            subset &= min > -1.0 && rep.verdict == Verdict::ProperSubset;
            highest_min = highest_min.max(min);
        }
    }
    Ok((
        endpoint < 1e-10 && monotone && subset,
        format!(
            "max endpoint error = {endpoint:.2e}, increasing on samples: {monotone}, proper subset below 1/2: {subset} (largest minimum {highest_min:.4})"
        ),
    ))
}

fn coefficients() -> Outcome {
    let mut rel = 0.0f64;
    let mut radius_rel = 0.0f64;
    for alpha in [0.5f64, 0.6, 0.7] {
        let (_, t1) = transition_times(alpha).map_err(err)?;
        for t in [1.0f64, t1 + 0.5] {
            let lagrange = chi_saddle::coeffs_lagrange(alpha, t, 30).map_err(err)?;
            for n in 1..=30 {
                let est = coeffs_contour_auto(alpha, t, n, None).map_err(err)?;
                let exact = lagrange[n - 1];
                rel = rel.max((est.value.re - exact).abs() / exact.abs());
                let other = coeffs_contour_auto(alpha, t, n, Some(0.9 * est.radius)).map_err(err)?;
                radius_rel = radius_rel.max((other.value - est.value).norm() / est.value.norm());
            }
        }
    }
    Ok((
        rel < 1e-8 && radius_rel < 1e-9,
        format!("max rel |contour - Lagrange| = {rel:.2e}, max rel radius change = {radius_rel:.2e}"),
    ))
}

fn asymptotics() -> Outcome {
    let (alpha, t) = (0.7f64, 7.0);
    let report = critical_points(alpha, t).map_err(err)?;
    let signs = report.phi2_at_w[0].re < 0.0 && report.phi2_at_w[1].re > 0.0;
    let b = scaled_coeffs_lagrange(alpha, t, 60).map_err(err)?;
    let mut rates = true;
    let mut ratios = Vec::new();
    let mut literal = Vec::new();
    for n in [20, 40, 60] {
        let s = saddle_asymptotic(alpha, t, n).map_err(err)?;
        rates &= s.rate_plus > 0.0 && s.rate_minus > 0.0;
        ratios.push(b[n - 1].abs() / s.magnitude);
        literal.push(b[n - 1].abs() / s.two_saddle_magnitude);
    }
    let improving = ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    let last = ratios[2];
    Ok((
        signs && rates && improving && (last - 1.0).abs() < 0.1,
        format!(
            "phi'' signs ok: {signs}, rates positive: {rates}, ratios n=20,40,60: {:.4} {:.4} {:.4} (two-saddle sum ratios {:.2e} {:.2e} {:.2e})",
            ratios[0], ratios[1], ratios[2], literal[0], literal[1], literal[2]
        ),
    ))
}

fn kunisky() -> Outcome {
    let mut worst = 0.0f64;
    for alpha in [0.5f64, 0.6, 0.7, 0.85] {
        worst = worst.max(kunisky_check(alpha, 10).map_err(err)?);
    }
    Ok((worst < 1e-8, format!("max relative moment error = {worst:.2e}")))
}

fn projections() -> Outcome {
    let mut dem = 0.0f64;
    let mut pqp = 0.0f64;
    for seed in 0..5 {
        dem = dem.max(demham_matrix_check(50, 20, 20, seed, 6).map_err(err)?);
        dem = dem.max(demham_matrix_check(60, 30, 30, seed, 6).map_err(err)?);
        pqp = pqp.max(pqp_binomial_check(60, 40, seed, 6).map_err(err)?);
        pqp = pqp.max(pqp_binomial_check(50, 20, seed, 6).map_err(err)?);
    }
    Ok((dem < 1e-10 && pqp < 1e-10, format!("max Dem-Ham error = {dem:.2e}, max binomial error = {pqp:.2e}")))
}

fn dynamical() -> Outcome {
    let alpha = 0.7f64;
    let traj = integrate(Family::EqualRanks, alpha, &dirac_one(60), 1.5, 5e-4).map_err(err)?;
    let z = Complex64::new(2.0, 0.0);
    let r1 = dynamic::same_pde_residual(&traj, Branch::Alpha, 1.0, z, 1e-3).map_err(err)?;
    let r2 = dynamic::same_pde_residual(&traj, Branch::Alpha, 1.0, z, 5e-4).map_err(err)?;
    let zc = Complex64::new(1.6, 0.3);
    let c1 = dynamic::chain_rule_residual(&traj, 0.5, zc, 1e-3).map_err(err)?;
    let c2 = dynamic::chain_rule_residual(&traj, 0.5, zc, 5e-4).map_err(err)?;
    let transient = r1 < 1e-4 && c1 < 1e-4 && r2 < r1 / 3.0 && c2 < c1 / 3.0;

    let mut stationary = 0.0f64;
    let mut shadow = 0.0f64;
    for alpha in [0.6f64, 0.7] {
        let half_m = make_measure(MeasureKind::MuInf, 0.5, alpha).map_err(err)?.moments(80).map_err(err)?;
        let half = MomentTrajectory::constant(Family::HalfRank, alpha, half_m, 1.0, 5e-4);
        let eq_m = stationary_moments(alpha, 80).map_err(err)?;
        let eq = MomentTrajectory::constant(Family::EqualRanks, alpha, eq_m, 2.0, 5e-4);
        for z in [Complex64::new(3.0, 0.5), Complex64::new(4.0, -1.0)] {
            stationary = stationary.max(dynamic::same_pde_residual(&half, Branch::V, 1.0, z, 1e-3).map_err(err)?);
            stationary = stationary.max(dynamic::same_pde_residual(&eq, Branch::Alpha, 1.0, z, 1e-3).map_err(err)?);
            let v = dynamic::v_at(&half, 1.0, z).map_err(err)?;
            let g = dynamic::tilde_equal(&eq, 1.0, z).map_err(err)?;
            shadow = shadow.max((v - g).norm());
        }
    }
    Ok((
        transient && stationary < 1e-8 && shadow < 1e-7,
        format!(
            "transport residual h=1e-3: {r1:.2e} (h/2: {r2:.2e}), chain rule: {c1:.2e} (h/2: {c2:.2e}), stationary: {stationary:.2e}, |v - G~| = {shadow:.2e}"
        ),
    ))
}

fn freeness_proxy() -> Outcome {
    let free = dynamic::equa3_check(400, 0.5, 11, 3, 20, Coupling::Free).map_err(err)?;
    let aligned = dynamic::equa3_check(400, 0.5, 11, 3, 20, Coupling::Aligned).map_err(err)?;
    let free_gap = free.iter().map(|r| r.gap).fold(0.0, f64::max);
    let control_gap = aligned.iter().map(|r| r.gap).fold(0.0, f64::max);
    Ok((
        free_gap < 0.05 && control_gap > 0.2,
        format!("max free gap = {free_gap:.2e}, aligned control gap = {control_gap:.3}"),
    ))
}

fn monte_carlo() -> Outcome {
    let (n, alpha) = (200, 0.6f64);
    let p = (alpha * n as f64).floor() as usize;
    let cfg = EnsembleConfig { n, dt: 0.005, t_end: 1.0, replicas: 100, seed: 2024 };
    let est = run_ensemble(&cfg, &[0.5, 1.0], |u| {
        let trace = crate::linalg::normalized_trace(u).re;
        vec![trace, corner_jacobi_moments(u, p, p, 1)[0]]
    })
    .map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for e in &est {
        let target = (-e.t / 2.0).exp();
        let dev = (e.mean[0] - target).abs();
        ok &= dev <= 3.0 * e.stderr[0] + 0.02;
        parts.push(format!("tau(U_{}) = {:.5} +- {:.1e} vs {target:.5}", e.t, e.mean[0], e.stderr[0]));
    }
    let last = &est[1];
    let target = first_moment_closed_form(alpha, 1.0, 1.0);
    ok &= (last.mean[1] - target).abs() <= 3.0 * last.stderr[1] + 0.02;
    parts.push(format!("m1 = {:.5} +- {:.1e} vs {target:.6}", last.mean[1], last.stderr[1]));
    Ok((ok, parts.join(", ")))
}

fn positivity() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut sequences = 0usize;
    for alpha in [0.3f64, 0.5, 0.7] {
        for family in [Family::EqualRanks, Family::HalfRank] {
            let traj = integrate(family, alpha, &corner_initial(family, alpha, 13), 3.0, 5e-3).map_err(err)?;
            for m in traj.moments.iter().step_by(20) {
                worst = worst.min(hausdorff_check(m, 6));
                sequences += 1;
            }
        }
    }
    for alpha in [0.5f64, 0.6, 0.7, 0.85] {
        worst = worst.min(hausdorff_check(&stationary_moments(alpha, 13).map_err(err)?, 6));
        for (kind, beta) in [(MeasureKind::Nu, 0.4), (MeasureKind::MuInf, 0.5), (MeasureKind::MuInf, alpha)] {
            let m = make_measure(kind, beta, alpha).map_err(err)?.moments(13).map_err(err)?;
            worst = worst.min(hausdorff_check(&m, 6));
        }
        sequences += 4;
    }
    for s in [0.5f64, 2.0, 4.0] {
        let f = fubm_moments(s, 10).map_err(err)?;
        let mut c = vec![1.0];
        c.extend(f.moments);
        worst = worst.min(toeplitz_min_eigenvalue(&c));
        sequences += 1;
    }
    Ok((worst >= -1e-8, format!("{sequences} sequences, smallest eigenvalue = {worst:.2e}")))
}
