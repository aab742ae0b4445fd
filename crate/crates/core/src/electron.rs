//! Self-energies, self-force, hidden momentum and spin of the regularized
//! pole-dipole electron, each paired with its leading asymptotic form.

use crate::embedding::{Embedding, TwoScale};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fields::ElectronParams;
use crate::observables::{
    delta_sq_weighted, moment_mn_analytic, moment_mn_terms, rn_analytic, rn_numeric, AsymptoticValue,
};
use crate::quadrature::{fit_power_law, integrate_radial, QuadratureSpec, SphereGrid};
use crate::regularizers::Regularizer;
use nalgebra::Vector3;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

/// Denominator floor for relative deviations of scalar observables.
pub const REL_DEV_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Observable {
    #[serde(rename = "U_ele")]
    UEle,
    #[serde(rename = "U_mag")]
    UMag,
    #[serde(rename = "F_r")]
    Fr,
    #[serde(rename = "P_vec")]
    PVec,
    #[serde(rename = "S_vec")]
    SVec,
    #[serde(rename = "mc2")]
    Mc2,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::UEle,
        Observable::UMag,
        Observable::Fr,
        Observable::PVec,
        Observable::SVec,
        Observable::Mc2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Observable::UEle => "U_ele",
            Observable::UMag => "U_mag",
            Observable::Fr => "F_r",
            Observable::PVec => "P_vec",
            Observable::SVec => "S_vec",
            Observable::Mc2 => "mc2",
        }
    }

    /// Accepts the canonical name or a short alias (`spin`, `momentum`, ...).
    pub fn parse(s: &str) -> Result<Self> {
        let k = s.to_ascii_lowercase();
        let found = match k.as_str() {
            "u_ele" | "electric" | "self-energy-electric" => Observable::UEle,
            "u_mag" | "magnetic" | "self-energy-magnetic" => Observable::UMag,
            "f_r" | "force" | "self-force" => Observable::Fr,
            "p_vec" | "p" | "momentum" | "hidden-momentum" => Observable::PVec,
            "s_vec" | "s" | "spin" => Observable::SVec,
            "mc2" | "mass" => Observable::Mc2,
            _ => return Err(Error::Domain(format!("unknown observable '{s}'"))),
        };
        Ok(found)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Numeric {
    Scalar(f64),
    Vector(Vector3<f64>),
}

impl Numeric {
    /// The value for scalars, the Euclidean norm for vectors.
    pub fn magnitude(&self) -> f64 {
        match self {
            Numeric::Scalar(x) => *x,
            Numeric::Vector(v) => v.norm(),
        }
    }

    fn distance(&self, other: &Numeric) -> f64 {
        match (self, other) {
            (Numeric::Scalar(x), Numeric::Scalar(y)) => (x - y).abs(),
            (Numeric::Vector(x), Numeric::Vector(y)) => (x - y).norm(),
            _ => f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportParams {
    pub electron: ElectronParams,
    pub scales: TwoScale,
    pub kernel: String,
}

/// One observable at one `(kernel, a, eps)` point.
///
/// `relative_deviation = |numeric - analytic_value| / max(|analytic_value|, scale)`
/// where `scale` is [`REL_DEV_FLOOR`] for scalars and, for vectors whose
/// prediction is zero, the natural magnitude of the assembled product
/// (radial factor times angular scale times prefactors).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableReport {
    pub name: Observable,
    pub numeric: Numeric,
    pub analytic: AsymptoticValue,
    pub analytic_value: Numeric,
    pub relative_deviation: f64,
    pub scale: f64,
    pub params: ReportParams,
    /// Named intermediate quantities (term subtotals, radial factors).
    pub details: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl ObservableReport {
    fn new(
        name: Observable,
        numeric: Numeric,
        analytic: AsymptoticValue,
        analytic_value: Numeric,
        scale: f64,
        params: ReportParams,
    ) -> Self {
        let denom = analytic_value.magnitude().abs().max(scale);
        let relative_deviation = numeric.distance(&analytic_value) / denom;
        let mut notes = Vec::new();
        if !params.scales.in_regime() {
            notes.push("out-of-regime".to_string());
        }
        Self {
            name,
            numeric,
            analytic,
            analytic_value,
            relative_deviation,
            scale,
            params,
            details: Vec::new(),
            notes,
        }
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    fn with_detail(mut self, key: &str, v: f64) -> Self {
        self.details.push((key.to_string(), v));
        self
    }

    fn with_note(mut self, note: String) -> Self {
        self.notes.push(note);
        self
    }
}

fn params(p: &ElectronParams, ts: TwoScale, rho: &Regularizer) -> ReportParams {
    ReportParams {
        electron: *p,
        scales: ts,
        kernel: rho.id().to_string(),
    }
}

fn prepare(p: &ElectronParams, ts: TwoScale, spec: &QuadratureSpec) -> Result<()> {
    p.validate()?;
    spec.validate()?;
    ts.require_regime()
}

/// `U_ele = (e^2/2) int r^2 E^2 dr`; leading form `(e^2/2) M20/eps`.
pub fn self_energy_electric(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
    spec: &QuadratureSpec,
) -> Result<ObservableReport> {
    prepare(p, ts, spec)?;
    let k = 0.5 * p.e * p.e;
    let terms = moment_mn_terms(2, ts, rho, spec)?;
    let analytic = moment_mn_analytic(2, ts, rho)?.scaled(k);
    let av = analytic.instantiate(ts.a, ts.eps);
    Ok(ObservableReport::new(
        Observable::UEle,
        Numeric::Scalar(k * terms.total()),
        analytic,
        Numeric::Scalar(av),
        REL_DEV_FLOOR,
        params(p, ts, rho),
    )
    .with_detail("h_h", k * terms.h_h.value)
    .with_detail("mixed", k * terms.mixed.value)
    .with_detail("delta_sq", k * terms.delta_sq.value)
    .with_detail("quadrature_error", k * terms.error()))
}

/// The three radial integrals of `U_mag / mu^2`: pure `f_n` products,
/// `f_n` times delta, and delta squared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticTerms {
    pub h_h: f64,
    pub mixed: f64,
    pub delta_sq: f64,
    pub error: f64,
}

impl MagneticTerms {
    /// Sum of the parts without a delta-squared factor; vanishes to `O(eps)`.
    pub fn h_sector(&self) -> f64 {
        self.h_h + self.mixed
    }

    pub fn total(&self) -> f64 {
        self.h_h + self.mixed + self.delta_sq
    }
}

/// `int r^2 [h1^2 + (2/3) h1 h2 + (1/3) h2^2] dr` regrouped by term type.
pub fn magnetic_terms(ts: TwoScale, rho: &Regularizer, spec: &QuadratureSpec) -> Result<MagneticTerms> {
    spec.validate()?;
    ts.require_regime()?;
    let emb = Embedding::new(rho, ts);
    let q = emb.quadrature(spec);
    let a = ts.a;
    let a2 = a * a;
    let h_h = integrate_radial(
        |r| {
            let f = emb.power_heaviside_set::<4>(r);
            f[2] * f[2] - 4.0 / 3.0 * r * f[2] * f[3] + 4.0 / 3.0 * r * r * f[3] * f[3]
        },
        &q,
    )?;
    let mixed = integrate_radial(
        |r| {
            let g = emb.delta(0, r);
            if g == 0.0 {
                return 0.0;
            }
            let f = emb.power_heaviside_set::<4>(r);
            (2.0 / 3.0 * r * f[2] - 4.0 / 3.0 * r * r * f[3]) * g / a2
        },
        &q,
    )?;
    let delta_sq = integrate_radial(
        |r| {
            let g = emb.delta(0, r) / a2;
            r * r * g * g / 3.0
        },
        &q,
    )?;
    Ok(MagneticTerms {
        h_h: h_h.value,
        mixed: mixed.value,
        delta_sq: delta_sq.value,
        error: h_h.error + mixed.error + delta_sq.error,
    })
}

/// Leading form of `U_mag / mu^2`: `(1/3a^2)(M20/eps - (2/a) M21)`.
pub fn magnetic_analytic(rho: &Regularizer) -> Result<AsymptoticValue> {
    Ok(AsymptoticValue::new(1)
        .with_term(-2, -1, rho.m20()? / 3.0)
        .with_term(-3, 0, -2.0 * rho.m21()? / 3.0))
}

/// `U_mag = (1/8pi) int |H|^2 d^3r`.
///
/// Details carry `h_sector` (which cancels to `O(eps)`) and
/// `h_term_scale = 2/(3a^3)`, the magnitude of the individual terms that cancel.
pub fn self_energy_magnetic(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
    spec: &QuadratureSpec,
) -> Result<ObservableReport> {
    prepare(p, ts, spec)?;
    let mu2 = p.mu.norm_squared();
    let t = magnetic_terms(ts, rho, spec)?;
    let analytic = magnetic_analytic(rho)?.scaled(mu2);
    let av = analytic.instantiate(ts.a, ts.eps);
    Ok(ObservableReport::new(
        Observable::UMag,
        Numeric::Scalar(mu2 * t.total()),
        analytic,
        Numeric::Scalar(av),
        REL_DEV_FLOOR,
        params(p, ts, rho),
    )
    .with_detail("h_h", mu2 * t.h_h)
    .with_detail("mixed", mu2 * t.mixed)
    .with_detail("delta_sq", mu2 * t.delta_sq)
    .with_detail("h_sector", mu2 * t.h_sector())
    .with_detail("h_term_scale", mu2 * 2.0 / (3.0 * ts.a.powi(3)))
    .with_detail("quadrature_error", mu2 * t.error))
}

/// `int d^3r (mu - u(mu.u)) (a^-2 delta_a)_eps`; tends to `(8pi/3) mu`.
pub fn dipole_delta_volume_integral(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
    spec: &QuadratureSpec,
    grid: &SphereGrid,
) -> Result<Vector3<f64>> {
    prepare(p, ts, spec)?;
    let emb = Embedding::new(rho, ts);
    let radial = integrate_radial(|r| r * r * emb.delta(0, r) / (ts.a * ts.a), &emb.quadrature(spec))?;
    let mu = p.mu;
    let angular = grid.integrate_vector(|u| mu - u * mu.dot(u));
    Ok(angular * radial.value)
}

/// `F_r = e^2 int r E^2 dr`, leading form `e^2 (M20/(a eps) - 1/(2a^2))`.
///
/// Details: `total_force_norm = |F_r * int u domega|`, which must vanish.
pub fn radial_self_force(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
    spec: &QuadratureSpec,
    grid: &SphereGrid,
) -> Result<ObservableReport> {
    prepare(p, ts, spec)?;
    let e2 = p.e * p.e;
    let terms = moment_mn_terms(1, ts, rho, spec)?;
    let fr = e2 * terms.total();
    let analytic = moment_mn_analytic(1, ts, rho)?.scaled(e2);
    let av = analytic.instantiate(ts.a, ts.eps);
    let total = grid.integrate_vector(|u| *u) * fr;
    let mut rep = ObservableReport::new(
        Observable::Fr,
        Numeric::Scalar(fr),
        analytic,
        Numeric::Scalar(av),
        REL_DEV_FLOOR,
        params(p, ts, rho),
    )
    .with_detail("total_force_norm", total.norm())
    .with_detail("h_h", e2 * terms.h_h.value)
    .with_detail("mixed", e2 * terms.mixed.value)
    .with_detail("delta_sq", e2 * terms.delta_sq.value);
    if fr < 0.0 {
        rep = rep.with_note("negative radial self-force".to_string());
    }
    Ok(rep)
}

/// `P = (e/4pi c) R_2 int (mu x u) domega`; expected zero.
///
/// Details: `radial_factor` (numeric `R_2`), `radial_factor_analytic` and
/// `radial_rel_dev`. The deviation floor is `4pi |R_2| |mu| |e|/c`.
pub fn hidden_momentum(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
    spec: &QuadratureSpec,
    grid: &SphereGrid,
) -> Result<ObservableReport> {
    prepare(p, ts, spec)?;
    let r2 = rn_numeric(2, ts, rho, spec)?;
    let r2_analytic = rn_analytic(2, ts, rho)?;
    let r2a = r2_analytic.instantiate(ts.a, ts.eps);
    let mu = p.mu;
    let angular = grid.integrate_vector(|u| mu.cross(u));
    let k = p.e / (4.0 * PI * p.c);
    let vec = angular * (k * r2);
    let scale = (4.0 * PI * r2.abs() * mu.norm() * p.e.abs() / p.c).max(REL_DEV_FLOOR);
    Ok(ObservableReport::new(
        Observable::PVec,
        Numeric::Vector(vec),
        r2_analytic.scaled(0.0),
        Numeric::Vector(Vector3::zeros()),
        scale,
        params(p, ts, rho),
    )
    .with_detail("radial_factor", r2)
    .with_detail("radial_factor_analytic", r2a)
    .with_detail("radial_rel_dev", ((r2 - r2a) / r2a).abs())
    .with_detail("angular_norm", angular.norm()))
}

/// `S = (e/4pi c) R_3 int u x (mu x u) domega`; leading form `(2e/3c) mu M20/eps`.
///
/// `analytic` holds the component along `mu`.
pub fn spin(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
    spec: &QuadratureSpec,
    grid: &SphereGrid,
) -> Result<ObservableReport> {
    prepare(p, ts, spec)?;
    let r3 = rn_numeric(3, ts, rho, spec)?;
    let mu = p.mu;
    let angular = grid.integrate_vector(|u| u.cross(&mu.cross(u)));
    let k = p.e / (4.0 * PI * p.c);
    let s = angular * (k * r3);
    let mu_norm = mu.norm();
    let analytic = rn_analytic(3, ts, rho)?.scaled(2.0 * p.e * mu_norm / (3.0 * p.c));
    let along = analytic.instantiate(ts.a, ts.eps);
    let av = if mu_norm > 0.0 { mu / mu_norm * along } else { Vector3::zeros() };
    let alignment = if s.norm() > 0.0 && mu_norm > 0.0 {
        (s.cross(&mu)).norm() / (s.norm() * mu_norm)
    } else {
        0.0
    };
    Ok(ObservableReport::new(
        Observable::SVec,
        Numeric::Vector(s),
        analytic,
        Numeric::Vector(av),
        REL_DEV_FLOOR,
        params(p, ts, rho),
    )
    .with_detail("radial_factor", r3)
    .with_detail("misalignment", alignment))
}

/// `mc^2 = U_ele + U_mag`.
pub fn mass(u_ele: &ObservableReport, u_mag: &ObservableReport) -> ObservableReport {
    let num = u_ele.numeric.magnitude() + u_mag.numeric.magnitude();
    let analytic = u_ele.analytic.clone().plus(&u_mag.analytic);
    let av = u_ele.analytic_value.magnitude() + u_mag.analytic_value.magnitude();
    let mut r = ObservableReport::new(
        Observable::Mc2,
        Numeric::Scalar(num),
        analytic,
        Numeric::Scalar(av),
        REL_DEV_FLOOR,
        u_ele.params.clone(),
    );
    r.notes = u_ele.notes.clone();
    r
}

/// All observables at one point, in a fixed order.
pub fn all_observables(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
    spec: &QuadratureSpec,
    grid: &SphereGrid,
) -> Result<Vec<ObservableReport>> {
    let u_ele = self_energy_electric(p, ts, rho, spec)?;
    let u_mag = self_energy_magnetic(p, ts, rho, spec)?;
    let m = mass(&u_ele, &u_mag);
    Ok(vec![
        u_ele,
        u_mag,
        radial_self_force(p, ts, rho, spec, grid)?,
        hidden_momentum(p, ts, rho, spec, grid)?,
        spin(p, ts, rho, spec, grid)?,
        m,
    ])
}

/// Moment form versus delta-squared form at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonPoint {
    pub kernel: String,
    pub m20: f64,
    pub m21: f64,
    pub scales: TwoScale,
    pub u_ele: ObservableReport,
    pub u_mag: ObservableReport,
    pub spin: ObservableReport,
    pub mc2: ObservableReport,
    /// `int_0^inf g^2 dr`
    pub delta_sq_integral: f64,
    /// `(e^2/2) int g^2 dr`
    pub u_ele_delta_sq: f64,
    /// `(mu^2/3a^2) int g^2 dr`
    pub u_mag_delta_sq: f64,
    /// `(2/3)(e |mu|/c) int g^2 dr`
    pub spin_delta_sq: f64,
}

impl ComparisonPoint {
    fn dev(x: f64, y: f64) -> f64 {
        ((x - y) / y).abs()
    }

    pub fn u_ele_deviation(&self) -> f64 {
        Self::dev(self.u_ele.numeric.magnitude(), self.u_ele_delta_sq)
    }

    pub fn u_mag_deviation(&self) -> f64 {
        Self::dev(self.u_mag.numeric.magnitude(), self.u_mag_delta_sq)
    }

    pub fn spin_deviation(&self) -> f64 {
        Self::dev(self.spin.numeric.magnitude(), self.spin_delta_sq)
    }
}

/// Power-law fit `value ~ prefactor * eps^exponent` at fixed `(kernel, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub observable: Observable,
    pub kernel: String,
    pub a: f64,
    pub exponent: f64,
    pub prefactor: f64,
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub points: Vec<ComparisonPoint>,
    pub fits: Vec<ScalingFit>,
}

/// Evaluates U_ele, U_mag, S and mc^2 in moment and delta-squared form over
/// every `(kernel, a, eps)`, fanning out with `exec`; results are in input
/// order (kernels outer, scales inner) regardless of the execution mode.
/// Fits the eps-exponent for each `(kernel, a)` with at least three eps values.
pub fn comparison_report(
    p: &ElectronParams,
    ts_list: &[TwoScale],
    rho_list: &[Regularizer],
    spec: &QuadratureSpec,
    grid: &SphereGrid,
    exec: Execution,
) -> Result<ComparisonReport> {
    p.validate()?;
    for ts in ts_list {
        ts.require_regime()?;
    }
    let jobs: Vec<(usize, TwoScale)> = (0..rho_list.len())
        .flat_map(|k| ts_list.iter().map(move |ts| (k, *ts)))
        .collect();
    let points = exec.try_map(&jobs, |(k, ts)| comparison_point(p, *ts, &rho_list[*k], spec, grid))?;

    let mut fits = Vec::new();
    for rho in rho_list {
        let mut a_values: Vec<f64> = ts_list.iter().map(|t| t.a).collect();
        a_values.sort_by(f64::total_cmp);
        a_values.dedup();
        for a in a_values {
            let mut pts: Vec<&ComparisonPoint> = points
                .iter()
                .filter(|pt| pt.kernel == rho.id() && pt.scales.a == a)
                .collect();
            pts.sort_by(|x, y| y.scales.eps.total_cmp(&x.scales.eps));
            pts.dedup_by(|x, y| x.scales.eps == y.scales.eps);
            if pts.len() < 3 {
                continue;
            }
            for (obs, get) in [
                (Observable::UEle, (|pt: &ComparisonPoint| pt.u_ele.numeric.magnitude()) as fn(&ComparisonPoint) -> f64),
                (Observable::UMag, |pt: &ComparisonPoint| pt.u_mag.numeric.magnitude()),
                (Observable::SVec, |pt: &ComparisonPoint| pt.spin.numeric.magnitude()),
            ] {
                let samples: Vec<(f64, f64)> = pts.iter().map(|pt| (pt.scales.eps, get(pt))).collect();
                if samples.iter().any(|(_, v)| !(*v > 0.0)) {
                    continue;
                }
                let fit = fit_power_law(&samples)?;
                fits.push(ScalingFit {
                    observable: obs,
                    kernel: rho.id().to_string(),
                    a,
                    exponent: fit.exponent,
                    prefactor: fit.prefactor,
                    samples,
                });
            }
        }
    }
    Ok(ComparisonReport { points, fits })
}

fn comparison_point(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
    spec: &QuadratureSpec,
    grid: &SphereGrid,
) -> Result<ComparisonPoint> {
    let u_ele = self_energy_electric(p, ts, rho, spec)?;
    let u_mag = self_energy_magnetic(p, ts, rho, spec)?;
    let s = spin(p, ts, rho, spec, grid)?;
    let mc2 = mass(&u_ele, &u_mag);
    let dsq = delta_sq_weighted(|_| 1.0, ts, rho, spec)?;
    let mu2 = p.mu.norm_squared();
    Ok(ComparisonPoint {
        kernel: rho.id().to_string(),
        m20: rho.m20()?,
        m21: rho.m21()?,
        scales: ts,
        u_ele_delta_sq: 0.5 * p.e * p.e * dsq,
        u_mag_delta_sq: mu2 / (3.0 * ts.a * ts.a) * dsq,
        spin_delta_sq: 2.0 / 3.0 * p.e * p.mu.norm() / p.c * dsq,
        delta_sq_integral: dsq,
        u_ele,
        u_mag,
        spin: s,
        mc2,
    })
}
