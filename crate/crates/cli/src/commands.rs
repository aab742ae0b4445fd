//! The five subcommands. Each returns sorted rows plus the failing ones.

use crate::config::RunConfig;
use crate::{CliError, Command};
use regfield::electron::{
    comparison_report, hidden_momentum, radial_self_force, Observable, ObservableReport,
};
use regfield::embedding::TwoScale;
use regfield::exec::Execution;
use regfield::observables::{
    identity_radii, identity_residual, moment_mn_analytic, moment_mn_terms, rn_analytic, rn_terms,
    TermIntegrals,
};
use regfield::quadrature::{fit_asymptotics, fit_power_law};
use regfield::regularizers::{KernelKind, Regularizer};
use regfield::report::{fmt_num, sort_rows, Row};

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    /// One line per row that violates its threshold.
    pub failures: Vec<String>,
}

impl Outcome {
    fn push(&mut self, row: Row, pass: bool) {
        if !pass {
            self.failures.push(format!(
                "{} kernel={} a={} eps={} numeric={} analytic={} rel_dev={}",
                row.observable, row.kernel, row.a, row.eps, row.numeric, row.analytic, row.rel_dev
            ));
        }
        self.rows.push(row);
    }

    fn finish(mut self) -> Self {
        sort_rows(&mut self.rows);
        self.failures.sort();
        self
    }
}

pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let out = match cmd {
        Command::Moments => run_moments(cfg)?,
        Command::Electron => run_electron(cfg)?,
        Command::Convergence => run_convergence(cfg)?,
        Command::Identities => run_identities(cfg)?,
        Command::KernelInfo => run_kernel_info(cfg)?,
    };
    Ok(out.finish())
}

fn execution(cfg: &RunConfig) -> Execution {
    if cfg.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

struct Point<'a> {
    rho: &'a Regularizer,
    ts: TwoScale,
}

fn points<'a>(kernels: &'a [Regularizer], scales: &[TwoScale]) -> Vec<Point<'a>> {
    kernels
        .iter()
        .flat_map(|rho| scales.iter().map(move |ts| Point { rho, ts: *ts }))
        .collect()
}

fn regime_note(ts: &TwoScale) -> Option<String> {
    (!ts.in_regime()).then(|| "out-of-regime".to_string())
}

fn join_notes(parts: impl IntoIterator<Item = Option<String>>) -> String {
    parts.into_iter().flatten().collect::<Vec<_>>().join("; ")
}

#[allow(clippy::too_many_arguments)]
fn row(
    observable: &str,
    rho: &Regularizer,
    ts: &TwoScale,
    numeric: f64,
    analytic: f64,
    rel_dev: f64,
    notes: String,
) -> Result<Row, CliError> {
    Ok(Row {
        observable: observable.to_string(),
        kernel: rho.id().to_string(),
        a: ts.a,
        eps: ts.eps,
        numeric,
        analytic,
        rel_dev,
        notes,
        m20: rho.m20()?,
        m21: rho.m21()?,
    })
}

fn rel_dev(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(regfield::electron::REL_DEV_FLOOR)
}

fn term_notes(t: &TermIntegrals) -> String {
    format!(
        "h_h={}; mixed={}; delta_sq={}; quadrature_error={}",
        fmt_num(t.h_h.value),
        fmt_num(t.mixed.value),
        fmt_num(t.delta_sq.value),
        fmt_num(t.error())
    )
}

/// `M_n` and `R_n` rows, numeric against the instantiated expansion.
pub fn run_moments(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let kernels = cfg.build_kernels()?;
    let scales = cfg.scales()?;
    let spec = cfg.quadrature_spec()?;
    if cfg.m_powers.is_empty() && cfg.r_powers.is_empty() {
        return Err(CliError::Config("no moment powers selected".into()));
    }
    let pts = points(&kernels, &scales);
    let per_point = execution(cfg).try_map(&pts, |p| -> Result<Vec<Row>, CliError> {
        let mut rows = Vec::new();
        for &n in &cfg.m_powers {
            let t = moment_mn_terms(n, p.ts, p.rho, &spec)?;
            let ana = moment_mn_analytic(n, p.ts, p.rho)?.instantiate(p.ts.a, p.ts.eps);
            let num = t.total();
            rows.push(row(
                &format!("M_{n}"),
                p.rho,
                &p.ts,
                num,
                ana,
                rel_dev(num, ana),
                join_notes([Some(term_notes(&t)), regime_note(&p.ts)]),
            )?);
        }
        for &n in &cfg.r_powers {
            let t = rn_terms(n, p.ts, p.rho, &spec)?;
            let ana = rn_analytic(n, p.ts, p.rho)?.instantiate(p.ts.a, p.ts.eps);
            let num = t.total();
            rows.push(row(
                &format!("R_{n}"),
                p.rho,
                &p.ts,
                num,
                ana,
                rel_dev(num, ana),
                join_notes([Some(term_notes(&t)), regime_note(&p.ts)]),
            )?);
        }
        Ok(rows)
    })?;
    let mut out = Outcome::default();
    for r in per_point.into_iter().flatten() {
        let pass = r.rel_dev < cfg.thresholds.rel_dev;
        out.push(r, pass);
    }
    Ok(out)
}

fn report_row(r: &ObservableReport, rho: &Regularizer) -> Result<Row, CliError> {
    Ok(Row::from_report(r, rho.m20()?, rho.m21()?))
}

/// Observable rows, delta-squared comparison rows and (with three or more
/// eps values per `a`) eps-exponent rows.
pub fn run_electron(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let kernels = cfg.build_kernels()?;
    let scales = cfg.scales()?;
    let spec = cfg.quadrature_spec()?;
    let grid = cfg.sphere_grid()?;
    let p = cfg.electron_params()?;
    let selected = cfg.selected_observables()?;
    let exec = execution(cfg);
    let th = &cfg.thresholds;
    let mut out = Outcome::default();

    let wants = |o: Observable| selected.contains(&o);
    if [Observable::UEle, Observable::UMag, Observable::SVec, Observable::Mc2]
        .iter()
        .any(|o| wants(*o))
    {
        let rep = comparison_report(&p, &scales, &kernels, &spec, &grid, exec)?;
        for (pt, rho) in rep
            .points
            .iter()
            .zip(kernels.iter().flat_map(|k| scales.iter().map(move |_| k)))
        {
            let ts = &pt.scales;
            if wants(Observable::UEle) {
                let r = report_row(&pt.u_ele, rho)?;
                let pass = r.rel_dev < th.rel_dev;
                out.push(r, pass);
                let num = pt.u_ele_delta_sq;
                let m = pt.u_ele.numeric.magnitude();
                let dev = pt.u_ele_deviation();
                let r = row("U_ele:delta_sq_form", rho, ts, num, m, dev, join_notes([regime_note(ts)]))?;
                out.push(r, dev < th.rel_dev);
            }
            if wants(Observable::UMag) {
                let r = report_row(&pt.u_mag, rho)?;
                let pass = r.rel_dev < th.rel_dev;
                out.push(r, pass);
                let num = pt.u_mag_delta_sq;
                let m = pt.u_mag.numeric.magnitude();
                let dev = pt.u_mag_deviation();
                let r = row("U_mag:delta_sq_form", rho, ts, num, m, dev, join_notes([regime_note(ts)]))?;
                out.push(r, dev < th.rel_dev);
                let h = pt.u_mag.detail("h_sector").unwrap_or(f64::NAN);
                let scale = pt.u_mag.detail("h_term_scale").unwrap_or(f64::NAN);
                let dev = (h / scale).abs();
                let notes = join_notes([Some(format!("h_term_scale={}", fmt_num(scale))), regime_note(ts)]);
                let r = row("U_mag:h_sector", rho, ts, h, 0.0, dev, notes)?;
                out.push(r, dev < 1e-2);
            }
            if wants(Observable::SVec) {
                let r = report_row(&pt.spin, rho)?;
                let misaligned = pt.spin.detail("misalignment").unwrap_or(0.0);
                let pass = r.rel_dev < th.rel_dev && misaligned < 1e-10;
                out.push(r, pass);
                let num = pt.spin_delta_sq;
                let m = pt.spin.numeric.magnitude();
                let dev = pt.spin_deviation();
                let notes = join_notes([Some("prefactor (2/3) e mu / c".to_string()), regime_note(ts)]);
                let r = row("S_vec:delta_sq_form", rho, ts, num, m, dev, notes)?;
                out.push(r, dev < th.rel_dev);
            }
            if wants(Observable::Mc2) {
                let r = report_row(&pt.mc2, rho)?;
                let pass = r.rel_dev < th.rel_dev;
                out.push(r, pass);
            }
        }
        for fit in &rep.fits {
            if !wants(fit.observable) {
                continue;
            }
            let rho = kernels.iter().find(|k| k.id() == fit.kernel).expect("kernel of fit");
            let dev = (fit.exponent + 1.0).abs();
            let ts = TwoScale::new(fit.a, fit.samples[fit.samples.len() - 1].0)?;
            let notes = format!("prefactor={}; points={}", fmt_num(fit.prefactor), fit.samples.len());
            let r = row(&format!("{}:eps_exponent", fit.observable), rho, &ts, fit.exponent, -1.0, dev, notes)?;
            out.push(r, dev <= th.eps_exponent);
        }
    }

    if wants(Observable::Fr) || wants(Observable::PVec) {
        let pts = points(&kernels, &scales);
        let reports = exec.try_map(&pts, |pt| -> Result<Vec<(ObservableReport, bool)>, CliError> {
            let mut v = Vec::new();
            if wants(Observable::Fr) {
                let r = radial_self_force(&p, pt.ts, pt.rho, &spec, &grid)?;
                let fr = r.numeric.magnitude();
                let total = r.detail("total_force_norm").unwrap_or(f64::INFINITY);
                let ok = r.relative_deviation < th.rel_dev
                    && (fr >= 0.0 || !pt.ts.in_regime())
                    && total <= th.vanishing * 4.0 * std::f64::consts::PI * fr.abs();
                v.push((r, ok));
            }
            if wants(Observable::PVec) {
                let r = hidden_momentum(&p, pt.ts, pt.rho, &spec, &grid)?;
                let ok = r.relative_deviation <= th.vanishing
                    && r.detail("radial_rel_dev").unwrap_or(f64::INFINITY) < th.rel_dev;
                v.push((r, ok));
            }
            Ok(v)
        })?;
        for (pt, reps) in pts.iter().zip(reports) {
            for (r, ok) in reps {
                out.push(report_row(&r, pt.rho)?, ok);
            }
        }
    }
    Ok(out)
}

/// Geometric eps grid `a * ratio * 10^(-k/2)`, five points.
fn default_eps_grid(a: f64, ratio: f64) -> Vec<f64> {
    (0..5).map(|k| a * ratio * 10f64.powf(-0.5 * k as f64)).collect()
}

/// Fitted eps-exponents (expected -1) at each `a`, and a-exponents at each
/// fixed eps when three or more `a` values share it (expected 0 for U_ele,
/// -2 for U_mag).
pub fn run_convergence(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let kernels = cfg.build_kernels()?;
    let spec = cfg.quadrature_spec()?;
    let grid = cfg.sphere_grid()?;
    let p = cfg.electron_params()?;
    let exec = execution(cfg);
    let th = &cfg.thresholds;
    if cfg.a.is_empty() {
        return Err(CliError::Config("no cutoff values 'a' given".into()));
    }
    if !cfg.eps.is_empty() && cfg.eps.len() < 3 {
        return Err(CliError::Numerical(format!(
            "convergence fits need at least 3 eps values, got {}",
            cfg.eps.len()
        )));
    }
    let mut scales = Vec::new();
    for &a in &cfg.a {
        let grid_eps = if cfg.eps.is_empty() {
            default_eps_grid(a, cfg.eps_ratio)
        } else {
            cfg.eps.clone()
        };
        for eps in grid_eps {
            let ts = TwoScale::new(a, eps)?;
            if !ts.in_regime() && !cfg.allow_out_of_regime {
                return Err(CliError::Config(format!(
                    "(a = {a}, eps = {eps}) is outside the regime eps <= a/10"
                )));
            }
            scales.push(if cfg.allow_out_of_regime { ts.relaxed() } else { ts });
        }
    }
    let rep = comparison_report(&p, &scales, &kernels, &spec, &grid, exec)?;
    let mut out = Outcome::default();
    let mu2 = p.mu.norm_squared();

    for fit in &rep.fits {
        let rho = kernels.iter().find(|k| k.id() == fit.kernel).expect("kernel of fit");
        let m20 = rho.m20()?;
        let expected_c = match fit.observable {
            Observable::UEle => 0.5 * p.e * p.e * m20,
            Observable::UMag => mu2 * m20 / (3.0 * fit.a * fit.a),
            _ => 2.0 / 3.0 * p.e * p.mu.norm() / p.c * m20,
        };
        let coef = fit_asymptotics(&fit.samples, &[-1, 0])?.coefficient(-1).unwrap_or(f64::NAN);
        let dev = (fit.exponent + 1.0).abs();
        let smallest = fit.samples[fit.samples.len() - 1].0;
        let ts = TwoScale::new(fit.a, smallest)?;
        let notes = format!(
            "prefactor={}; c_-1={}; c_-1_expected={}; points={}",
            fmt_num(fit.prefactor),
            fmt_num(coef),
            fmt_num(expected_c),
            fit.samples.len()
        );
        let r = row(&format!("{}:eps_exponent", fit.observable), rho, &ts, fit.exponent, -1.0, dev, notes)?;
        out.push(r, dev <= th.eps_exponent);
    }

    // a-sweeps at fixed eps
    let mut eps_values: Vec<f64> = scales.iter().map(|t| t.eps).collect();
    eps_values.sort_by(f64::total_cmp);
    eps_values.dedup();
    for rho in &kernels {
        for &eps in &eps_values {
            let pts: Vec<_> = rep
                .points
                .iter()
                .filter(|pt| pt.kernel == rho.id() && pt.scales.eps == eps)
                .collect();
            let mut a_set: Vec<f64> = pts.iter().map(|pt| pt.scales.a).collect();
            a_set.dedup();
            if a_set.len() < 3 {
                continue;
            }
            let a_max = a_set.iter().copied().fold(f64::MIN, f64::max);
            for (obs, expected) in [(Observable::UEle, 0.0), (Observable::UMag, -2.0)] {
                let samples: Vec<(f64, f64)> = pts
                    .iter()
                    .map(|pt| {
                        let v = if obs == Observable::UEle { &pt.u_ele } else { &pt.u_mag };
                        (pt.scales.a, v.numeric.magnitude())
                    })
                    .collect();
                if samples.iter().any(|s| !(s.1 > 0.0)) {
                    continue;
                }
                let fit = fit_power_law(&samples)?;
                let dev = (fit.exponent - expected).abs();
                let (lo, hi) = samples
                    .iter()
                    .map(|s| s.1 * s.0.powf(-expected))
                    .fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(v), h.max(v)));
                let spread = (hi - lo) / hi;
                let ts = TwoScale::new(a_max, eps)?;
                let notes = format!("prefactor={}; relative_spread={}; points={}", fmt_num(fit.prefactor), fmt_num(spread), samples.len());
                let r = row(&format!("{obs}:a_exponent"), rho, &ts, fit.exponent, expected, dev, notes)?;
                out.push(r, dev <= th.a_exponent);
            }
        }
    }
    if out.rows.is_empty() {
        return Err(CliError::Numerical(
            "no sweep had enough points for a fit (need >= 3 eps per a or >= 3 a per eps)".into(),
        ));
    }
    Ok(out)
}

/// Maximum identity residual over 20 radii in `[a/2, 10a]`.
pub fn run_identities(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let kernels = cfg.build_kernels()?;
    let scales = cfg.scales()?;
    let tags = cfg.selected_identities();
    let pts = points(&kernels, &scales);
    let rows = execution(cfg).try_map(&pts, |p| -> Result<Vec<Row>, CliError> {
        let radii = identity_radii(p.ts.a);
        tags.iter()
            .map(|tag| {
                let res = identity_residual(*tag, p.ts, p.rho, &radii)?;
                row(
                    &format!("identity:{tag}"),
                    p.rho,
                    &p.ts,
                    res,
                    0.0,
                    res,
                    join_notes([Some(format!("radii={}", radii.len())), regime_note(&p.ts)]),
                )
            })
            .collect()
    })?;
    let mut out = Outcome::default();
    for r in rows.into_iter().flatten() {
        let pass = r.rel_dev < cfg.thresholds.identity;
        out.push(r, pass);
    }
    Ok(out)
}

/// Closed forms of `(integral, M20, M21)` where known.
fn closed_forms(rho: &Regularizer) -> (Option<f64>, Option<f64>, Option<f64>) {
    match rho.kind() {
        KernelKind::Gaussian { width } => (
            Some(1.0),
            Some(1.0 / (width * (2.0 * std::f64::consts::PI).sqrt())),
            Some(0.0),
        ),
        KernelKind::CompactBump => (Some(1.0), None, Some(0.0)),
        KernelKind::AsymmetricBump { shift } => (Some(1.0), None, rho.m20().ok().map(|m| m * shift)),
        KernelKind::Tabulated(_) => (Some(1.0), None, None),
    }
}

/// Normalization and moments of each kernel; `a` and `eps` are 0.
pub fn run_kernel_info(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let kernels = cfg.build_kernels()?;
    let mut out = Outcome::default();
    let ts = TwoScale {
        a: 0.0,
        eps: 0.0,
        allow_out_of_regime: true,
    };
    for rho in &kernels {
        let (lo, hi) = rho.support();
        let meta = format!(
            "parity={:?}; support=[{lo} {hi}]; peak_halfwidth={}",
            rho.parity(),
            rho.peak_halfwidth()
        );
        let (ci, c20, c21) = closed_forms(rho);
        for (name, num, closed) in [
            ("integral", rho.integral()?, ci),
            ("M20", rho.m20()?, c20),
            ("M21", rho.m21()?, c21),
        ] {
            let (ana, note) = match closed {
                Some(c) => (c, meta.clone()),
                None => (num, format!("{meta}; no closed form")),
            };
            let dev = if ana == 0.0 { num.abs() } else { rel_dev(num, ana) };
            let r = row(name, rho, &ts, num, ana, dev, note)?;
            out.push(r, dev < 1e-8);
        }
    }
    Ok(out)
}
