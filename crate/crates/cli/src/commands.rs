//! One pipeline per subcommand.

use freejacobi::acceptance;
use freejacobi::chi_saddle::{self, SaddleRegime, MAX_LAGRANGE_ORDER};
use freejacobi::dynamic::{self, Branch, Coupling};
use freejacobi::flow::{mgf_taylor_coefficients, mgf_theorem1};
use freejacobi::fubm::fubm_moments;
use freejacobi::jacobi_moments::{corner_initial, first_moment_closed_form, integrate, Family};
use freejacobi::matrix_mc::{corner_jacobi_moments, rank_of, run_ensemble, trace_moments, EnsembleConfig};
use freejacobi::positivity::hausdorff_check;
use freejacobi::vmap::{phase_report, remark_probe, v_tilde};
use freejacobi::wachter::{kunisky_table, make_measure, MeasureKind};
use num_complex::Complex64;
use serde_json::json;

use crate::output::{Artifact, Cell, Output, Table};
use crate::{at_least, open_range, positive, CliError, Command, Ctx};

pub struct Run {
    pub artifacts: Vec<Artifact>,
    pub failures: Vec<String>,
}

impl Run {
    fn single(output: Output) -> Self {
        Run { artifacts: vec![Artifact { suffix: None, output }], failures: Vec::new() }
    }

    fn with(mut self, suffix: &'static str, output: Output) -> Self {
        self.artifacts.push(Artifact { suffix: Some(suffix), output });
        self
    }

    fn fail_if(mut self, cond: bool, msg: impl FnOnce() -> String) -> Self {
        if cond {
            self.failures.push(msg());
        }
        self
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn dispatch(cmd: Command, ctx: &mut Ctx) -> Result<Run, CliError> {
    match cmd {
        Command::Moments => moments(ctx),
        Command::Flow => flow(ctx),
        Command::Vmap => vmap(ctx),
        Command::Saddle => saddle(ctx),
        Command::Coeffs => coeffs(ctx),
        Command::Wachter => wachter(ctx),
        Command::Kunisky => kunisky(ctx),
        Command::Dynamic => dynamic_residuals(ctx),
        Command::Equa3 => equa3(ctx),
        Command::Mc => mc(ctx),
        Command::Selftest => selftest(),
    }
}

fn family_of(alpha: f64, beta: f64) -> Result<Family, CliError> {
    if (beta - alpha).abs() < 1e-12 {
        Ok(Family::EqualRanks)
    } else if (beta - 0.5).abs() < 1e-12 {
        Ok(Family::HalfRank)
    } else {
        Err(CliError::Usage(format!("--beta must equal --alpha or 1/2, got {beta}")))
    }
}

fn moments(ctx: &mut Ctx) -> Result<Run, CliError> {
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.6)?;
    open_range("alpha", alpha, 0.0, 1.0)?;
    let beta = ctx.f("beta", ctx.p.beta, alpha)?;
    let family = family_of(alpha, beta)?;
    let t_end = ctx.f("t-end", ctx.p.t_end, 1.0)?;
    positive("t-end", t_end)?;
    let dt = ctx.f("dt", ctx.p.dt, 1e-3)?;
    positive("dt", dt)?;
    let order = ctx.u("order", ctx.p.order, 20);
    at_least("order", order, 1)?;

    let traj = integrate(family, alpha, &corner_initial(family, alpha, order), t_end, dt).map_err(validation)?;
    let mut columns = vec!["t".to_string()];
    columns.extend((0..=order).map(|n| format!("m{n}")));
    let mut table = Table::with_columns(columns);
    let mut m1_error = 0.0f64;
    for (t, m) in traj.times.iter().zip(&traj.moments) {
        let mut row = vec![Cell::F(*t)];
        row.extend(m.iter().map(|&x| Cell::F(x)));
        table.push(row);
        if family == Family::EqualRanks {
            m1_error = m1_error.max((m[1] - first_moment_closed_form(alpha, 1.0, *t)).abs());
        }
    }
    let size = (order / 2).min(6);
    let positivity = if size >= 1 { hausdorff_check(traj.last(), size) } else { 0.0 };
    Ok(Run::single(Output::Table(table))
        .fail_if(m1_error > 1e-8, || format!("m1 deviates from its closed form by {m1_error:e}"))
        .fail_if(positivity < -1e-8, || format!("final moments fail positivity (eigenvalue {positivity:e})")))
}

fn flow(ctx: &mut Ctx) -> Result<Run, CliError> {
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.6)?;
    open_range("alpha", alpha, 0.0, 1.0)?;
    let t = ctx.f("t", ctx.p.t, 1.0)?;
    positive("t", t)?;
    let radius = ctx.f("radius", ctx.p.radius, 0.05)?;
    open_range("radius", radius, 0.0, 1.0)?;
    let points = ctx.u("points", ctx.p.points, 16);
    at_least("points", points, 1)?;
    let order = ctx.optional_u("order", ctx.p.order);

    let mut table = Table::new(&[
        "re_z", "im_z", "re_j", "im_j", "re_m", "im_m", "re_m_homographic", "im_m_homographic", "forms_gap",
    ]);
    let mut gap = 0.0f64;
    for k in 0..points {
        let z = Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / points as f64);
        let p = mgf_theorem1(alpha, t, z).map_err(validation)?;
        gap = gap.max(p.forms_gap());
        table.push(
            [z.re, z.im, p.j.re, p.j.im, p.m_sqrt.re, p.m_sqrt.im, p.m_homographic.re, p.m_homographic.im, p.forms_gap()]
                .map(Cell::F)
                .to_vec(),
        );
    }
    let mut run = Run::single(Output::Table(table)).fail_if(gap > 1e-10, || format!("closed forms differ by {gap:e}"));
    if let Some(order) = order {
        at_least("order", order, 1)?;
        let coeffs = mgf_taylor_coefficients(alpha, t, radius, points.max(64), order).map_err(validation)?;
        let traj = integrate(Family::EqualRanks, alpha, &corner_initial(Family::EqualRanks, alpha, order), t, 1e-3)
            .map_err(validation)?;
        let mut taylor = Table::new(&["n", "contour", "hierarchy", "abs_diff"]);
        for (n, c) in coeffs.iter().enumerate() {
            let h = traj.last()[n];
            taylor.push(vec![n.into(), (*c).into(), h.into(), (c - h).abs().into()]);
        }
        run = run.with("taylor", Output::Table(taylor));
    }
    Ok(run)
}

fn vmap(ctx: &mut Ctx) -> Result<Run, CliError> {
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.7)?;
    open_range("alpha", alpha, 0.0, 1.0)?;
    let t = ctx.f("t", ctx.p.t, 1.0)?;
    positive("t", t)?;
    let points = ctx.u("points", ctx.p.points, 200);
    at_least("points", points, 2)?;

    let report = phase_report(alpha, t).map_err(usage)?;
    let probe = if alpha >= 0.5 { remark_probe(alpha, t).ok() } else { None };
    let hi = report.interval.map_or(3.0, |(_, b)| (2.0 * b).max(3.0));
    let mut samples = Table::new(&["u", "v_tilde"]);
    for k in 0..points {
        let u = hi * k as f64 / (points - 1) as f64;
        samples.push(vec![u.into(), v_tilde(alpha, t, u).unwrap_or(f64::NAN).into()]);
    }
    let json = json!({ "phase": serde_json::to_value(&report).expect("report serializes"), "remark_probe": probe });
    Ok(Run::single(Output::Report(json)).with("samples", Output::Table(samples)))
}

fn saddle(ctx: &mut Ctx) -> Result<Run, CliError> {
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.7)?;
    open_range("alpha", alpha, 0.0, 1.0)?;
    let t = ctx.f("t", ctx.p.t, 7.0)?;
    positive("t", t)?;
    let n = ctx.u("n", ctx.p.n, 60);
    at_least("n", n, 1)?;
    if n > MAX_LAGRANGE_ORDER {
        return Err(CliError::Usage(format!("--n must be at most {MAX_LAGRANGE_ORDER}, got {n}")));
    }

    let report = chi_saddle::critical_points(alpha, t).map_err(usage)?;
    let scaled = chi_saddle::scaled_coeffs_lagrange(alpha, t, n).map_err(validation)?;
    let mut table = Table::new(&[
        "n",
        "scaled_coefficient",
        "asymptotic_magnitude",
        "ratio",
        "predicted_sign",
        "two_saddle_magnitude",
        "two_saddle_ratio",
    ]);
    let asymptotic = alpha >= 0.5 && report.regime == SaddleRegime::RealFour;
    for k in 1..=n {
        let b = scaled[k - 1];
        let row = if asymptotic {
            let s = chi_saddle::saddle_asymptotic(alpha, t, k).map_err(validation)?;
            vec![
                k.into(),
                b.into(),
                s.magnitude.into(),
                (b.abs() / s.magnitude).into(),
                i64::from(s.sign).into(),
                s.two_saddle_magnitude.into(),
                (b.abs() / s.two_saddle_magnitude).into(),
            ]
        } else {
            let nan = || Cell::F(f64::NAN);
            vec![k.into(), b.into(), nan(), nan(), Cell::I(0), nan(), nan()]
        };
        table.push(row);
    }
    Ok(Run::single(Output::report(&report)).with("comparison", Output::Table(table)))
}

fn coeffs(ctx: &mut Ctx) -> Result<Run, CliError> {
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.7)?;
    open_range("alpha", alpha, 0.0, 1.0)?;
    let t = ctx.f("t", ctx.p.t, 1.0)?;
    positive("t", t)?;
    let n = ctx.u("n", ctx.p.n, 30);
    at_least("n", n, 1)?;
    if n > MAX_LAGRANGE_ORDER {
        return Err(CliError::Usage(format!("--n must be at most {MAX_LAGRANGE_ORDER}, got {n}")));
    }
    let radius = ctx.optional_f("radius", ctx.p.radius);
    let points = ctx.optional_u("points", ctx.p.points);
    if let Some(r) = radius {
        positive("radius", r)?;
    }
    if points.is_some() && radius.is_none() {
        return Err(CliError::Usage("--points requires --radius".into()));
    }

    let lagrange = chi_saddle::coeffs_lagrange(alpha, t, n).map_err(validation)?;
    let mut table = Table::new(&["n", "lagrange", "contour_re", "contour_im", "radius", "points", "rel_error"]);
    let mut worst = 0.0f64;
    for k in 1..=n {
        let (value, r, pts) = match (radius, points) {
            (Some(r), Some(p)) => (chi_saddle::coeffs_contour(alpha, t, k, r, p).map_err(validation)?, r, p),
            _ => {
                let e = chi_saddle::coeffs_contour_auto(alpha, t, k, radius).map_err(validation)?;
                (e.value, e.radius, e.points)
            }
        };
        let exact = lagrange[k - 1];
        let rel = (value.re - exact).abs() / exact.abs();
        worst = worst.max(rel);
        table.push(vec![k.into(), exact.into(), value.re.into(), value.im.into(), r.into(), pts.into(), rel.into()]);
    }
    Ok(Run::single(Output::Table(table))
        .fail_if(worst > 1e-8, || format!("contour and Lagrange coefficients differ by {worst:e} (relative)")))
}

fn wachter(ctx: &mut Ctx) -> Result<Run, CliError> {
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.7)?;
    let beta = ctx.f("beta", ctx.p.beta, 0.5)?;
    let order = ctx.u("order", ctx.p.order, 10);
    let nu = make_measure(MeasureKind::Nu, beta, alpha).map_err(usage)?;
    let mu = make_measure(MeasureKind::MuInf, beta, alpha).map_err(usage)?;
    let nu_m = nu.moments(order as u32).map_err(validation)?;
    let mu_m = mu.moments(order as u32).map_err(validation)?;
    let mut table = Table::new(&["j", "nu", "mu_inf"]);
    for j in 0..=order {
        table.push(vec![j.into(), nu_m[j].into(), mu_m[j].into()]);
    }
    let report = json!({
        "nu": serde_json::to_value(&nu).expect("measure serializes"),
        "mu_inf": serde_json::to_value(&mu).expect("measure serializes"),
    });
    let mass = |m: &[f64]| (m[0] - 1.0).abs();
    let defect = mass(&nu_m).max(mass(&mu_m));
    Ok(Run::single(Output::Report(report))
        .with("moments", Output::Table(table))
        .fail_if(defect > 1e-10, || format!("total mass off by {defect:e}")))
}

fn kunisky(ctx: &mut Ctx) -> Result<Run, CliError> {
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.7)?;
    let order = ctx.u("order", ctx.p.order, 10);
    at_least("order", order, 1)?;
    let rows = kunisky_table(alpha, order as u32).map_err(usage)?;
    let mut table = Table::new(&["j", "pushforward", "target", "rel_error"]);
    let mut worst = 0.0f64;
    for r in &rows {
        worst = worst.max(r.rel_error);
        table.push(vec![(r.j as usize).into(), r.pushforward.into(), r.target.into(), r.rel_error.into()]);
    }
    Ok(Run::single(Output::Table(table)).fail_if(worst > 1e-8, || format!("relative moment error {worst:e}")))
}

fn dynamic_residuals(ctx: &mut Ctx) -> Result<Run, CliError> {
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.7)?;
    if !(0.5..1.0).contains(&alpha) {
        return Err(CliError::Usage(format!("--alpha must lie in [0.5, 1), got {alpha}")));
    }
    let t_end = ctx.f("t-end", ctx.p.t_end, 1.0)?;
    positive("t-end", t_end)?;
    let dt = ctx.f("dt", ctx.p.dt, 5e-4)?;
    positive("dt", dt)?;
    let order = ctx.u("order", ctx.p.order, 60);
    at_least("order", order, 2)?;
    let points = ctx.u("points", ctx.p.points, 10);
    at_least("points", points, 1)?;

    let h = 2.0 * dt;
    let eq_init = corner_initial(Family::EqualRanks, alpha, order);
    let eq = integrate(Family::EqualRanks, alpha, &eq_init, 2.0 * t_end + 4.0 * h, dt).map_err(validation)?;
    let half_init = dynamic::symmetric_two_atom(alpha, 0.6, order);
    let half = integrate(Family::HalfRank, alpha, &half_init, 0.5 * t_end + h, dt).map_err(validation)?;
    let dt = eq.spacing();
    let h = 2.0 * dt;
    let z = Complex64::new(2.0, 0.0);
    let zc = Complex64::new(1.6, 0.3);
    let zv = Complex64::new(3.0, 0.5);

    let mut table =
        Table::new(&["t", "alpha_residual", "chain_rule_residual", "evenness_proxy", "v_residual"]);
    let mut worst = 0.0f64;
    for k in 1..=points {
        let steps = ((t_end * k as f64 / points as f64) / h).round().max(1.0);
        let t = steps * h;
        let r = dynamic::same_pde_residual(&eq, Branch::Alpha, t, z, h).map_err(validation)?;
        let c = dynamic::chain_rule_residual(&eq, t, zc, h).map_err(validation)?;
        let even = dynamic::evenness_proxy(&half, dynamic::v_source_time(t)).map_err(validation)?;
        let v = dynamic::same_pde_residual(&half, Branch::V, t, zv, h).unwrap_or(f64::NAN);
        worst = worst.max(r).max(c);
        table.push(vec![t.into(), r.into(), c.into(), even.into(), v.into()]);
    }
    Ok(Run::single(Output::Table(table)).fail_if(worst > 1e-4, || format!("transport residual {worst:e} exceeds 1e-4")))
}

fn equa3(ctx: &mut Ctx) -> Result<Run, CliError> {
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.5)?;
    open_range("alpha", alpha, 0.0, 1.0)?;
    let n = ctx.u("N", ctx.p.big_n, 200);
    at_least("N", n, 2)?;
    let replicas = ctx.u("replicas", ctx.p.replicas, 10);
    at_least("replicas", replicas, 1)?;
    let order = ctx.u("order", ctx.p.order, 3);
    at_least("order", order, 1)?;
    let seed = ctx.seed(0);

    let mut table = Table::new(&["coupling", "j", "lhs", "rhs", "gap", "stderr"]);
    for (name, coupling) in [("free", Coupling::Free), ("aligned", Coupling::Aligned)] {
        for r in dynamic::equa3_check(n, alpha, seed, order, replicas, coupling).map_err(usage)? {
            table.push(vec![name.into(), r.j.into(), r.lhs.into(), r.rhs.into(), r.gap.into(), r.stderr.into()]);
        }
    }
    Ok(Run::single(Output::Table(table)))
}

fn mc(ctx: &mut Ctx) -> Result<Run, CliError> {
    let n = ctx.u("N", ctx.p.big_n, 100);
    at_least("N", n, 1)?;
    let alpha = ctx.f("alpha", ctx.p.alpha, 0.6)?;
    open_range("alpha", alpha, 0.0, 1.0 + 1e-12)?;
    let beta = ctx.f("beta", ctx.p.beta, alpha)?;
    open_range("beta", beta, 0.0, 1.0 + 1e-12)?;
    let t_end = ctx.f("t-end", ctx.p.t_end, 1.0)?;
    positive("t-end", t_end)?;
    let dt = ctx.f("dt", ctx.p.dt, 0.005)?;
    positive("dt", dt)?;
    let replicas = ctx.u("replicas", ctx.p.replicas, 20);
    at_least("replicas", replicas, 1)?;
    let order = ctx.u("order", ctx.p.order, 3);
    at_least("order", order, 1)?;
    let points = ctx.u("points", ctx.p.points, 2);
    at_least("points", points, 1)?;
    let seed = ctx.seed(0);

    let p = rank_of("beta", beta, n).map_err(usage)?;
    let q = rank_of("alpha", alpha, n).map_err(usage)?;
    let cfg = EnsembleConfig { n, dt, t_end, replicas, seed };
    let snapshots: Vec<f64> = (1..=points).map(|k| t_end * k as f64 / points as f64).collect();
    let est = run_ensemble(&cfg, &snapshots, |u| {
        let mut v = trace_moments(u, order);
        v.extend(corner_jacobi_moments(u, p, q, order));
        v
    })
    .map_err(usage)?;

    let family = family_of(alpha, beta).ok();
    let mut table = Table::new(&["t", "observable", "k", "mean", "stderr", "limit"]);
    for e in &est {
        let trace_limit = fubm_moments(e.t, order).map_err(validation)?.moments;
        let jacobi_limit = match family {
            Some(f) => Some(integrate(f, alpha, &corner_initial(f, alpha, order), e.t, 1e-3).map_err(validation)?),
            None => None,
        };
        for k in 1..=order {
            table.push(vec![
                e.t.into(),
                "trace".into(),
                k.into(),
                e.mean[k - 1].into(),
                e.stderr[k - 1].into(),
                trace_limit[k - 1].into(),
            ]);
        }
        for k in 1..=order {
            let limit = jacobi_limit.as_ref().map_or(f64::NAN, |tr| tr.last()[k]);
            table.push(vec![
                e.t.into(),
                "jacobi".into(),
                k.into(),
                e.mean[order + k - 1].into(),
                e.stderr[order + k - 1].into(),
                limit.into(),
            ]);
        }
    }
    Ok(Run::single(Output::Table(table)))
}

fn selftest() -> Result<Run, CliError> {
    let mut table = Table::new(&["id", "name", "passed", "detail"]);
    let mut failures = Vec::new();
    for id in 1..=acceptance::NAMES.len() {
        let r = acceptance::run(id).expect("criterion ids are contiguous");
        eprintln!("{r}");
        if !r.passed {
            failures.push(format!("criterion {id} ({})", r.name));
        }
        table.push(vec![r.id.into(), r.name.into(), r.passed.into(), r.detail.clone().into()]);
    }
    let mut run = Run::single(Output::Table(table));
    run.failures = failures;
    Ok(run)
}
