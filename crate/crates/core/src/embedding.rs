//! Embedding of the singular building blocks into smooth families.
//!
//! The convolution convention is `f_eps(x) = int dy/eps rho((y - x)/eps) f(y)`,
//! which is the reflection of the usual mollification. Consequently the
//! embedded Dirac delta is `rho(-x/eps)/eps`, and the shifted delta at the
//! cutoff radius is `rho((a - r)/eps)/eps`.
//!
//! Two families carry all the fields:
//!
//! * `(r^-n H_a)_eps(r) = int_{(a-r)/eps}^inf rho(y) (r + eps y)^-n dy`, the
//!   embedded cutoff power. In the variable `w = r + eps y` the integrand is
//!   `rho((w - r)/eps) w^-n / eps` on `[a, inf)`, so it never sees the origin.
//! * `(delta_a^(k))_eps(r) = d^k/dr^k [rho((a - r)/eps)/eps]`.
//!
//! They satisfy `d/dr (r^-n H_a)_eps = a^-n (delta_a)_eps - n (r^-(n+1) H_a)_eps`,
//! which is what makes the integration-by-parts identities exact at finite
//! `eps`.

use crate::error::{Error, Result};
use crate::quadrature::{fit_power_law, integrate_radial, QuadratureSpec};
use crate::regularizers::Regularizer;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Cutoff radius `a` and regularization width `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoScale {
    pub a: f64,
    pub eps: f64,
    /// Lets [`require_regime`](Self::require_regime) pass outside `eps <= a/10`.
    #[serde(default)]
    pub allow_out_of_regime: bool,
}

/// `eps <= a / REGIME_RATIO` is the two-scale regime.
pub const REGIME_RATIO: f64 = 10.0;

impl TwoScale {
    pub fn new(a: f64, eps: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Domain(format!("cutoff a must be positive, got {a}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        Ok(Self {
            a,
            eps,
            allow_out_of_regime: false,
        })
    }

    /// Copy that is accepted by `require_regime` even when `eps > a/10`.
    pub fn relaxed(self) -> Self {
        Self {
            allow_out_of_regime: true,
            ..self
        }
    }

    pub fn in_regime(&self) -> bool {
        self.eps <= self.a / REGIME_RATIO * (1.0 + 1e-12)
    }

    /// Errors unless `eps <= a/10` or the scale pair was [`relaxed`](Self::relaxed).
    pub fn require_regime(&self) -> Result<()> {
        if self.in_regime() || self.allow_out_of_regime {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "out of regime: eps = {} > a/{REGIME_RATIO} = {}",
                self.eps,
                self.a / REGIME_RATIO
            )))
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must be positive, got {eps}")))
    }
}

/// `delta_eps(x) = rho(-x/eps) / eps`
pub fn delta_embed(rho: &Regularizer, eps: f64, x: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(rho.density(-x / eps) / eps)
}

/// `H_eps(x) = int_{-x/eps}^inf rho(z) dz`
pub fn heaviside_embed(rho: &Regularizer, eps: f64, x: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(rho.integrate_from(-x / eps, |z| rho.density(z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    /// `(r^-n H_a)_eps`
    PowerHeaviside { n: i32 },
    /// `(delta_a^(k))_eps`
    DeltaDerivative { k: u32 },
}

/// One embedded building block with its constant prefactor
/// `coefficient * a^a_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularTerm {
    pub kind: TermKind,
    pub coefficient: f64,
    pub a_power: i32,
}

impl SingularTerm {
    pub fn power_heaviside(n: i32) -> Self {
        Self {
            kind: TermKind::PowerHeaviside { n },
            coefficient: 1.0,
            a_power: 0,
        }
    }

    pub fn delta(k: u32) -> Self {
        Self {
            kind: TermKind::DeltaDerivative { k },
            coefficient: 1.0,
            a_power: 0,
        }
    }

    /// Multiplies the prefactor by `c * a^p`.
    pub fn scaled(mut self, c: f64, a_power: i32) -> Self {
        self.coefficient *= c;
        self.a_power += a_power;
        self
    }

    pub fn prefactor(&self, a: f64) -> f64 {
        self.coefficient * a.powi(self.a_power)
    }
}

impl fmt::Display for SingularTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        if self.a_power != 0 {
            write!(f, "*a^{}", self.a_power)?;
        }
        match self.kind {
            TermKind::PowerHeaviside { n } => write!(f, "*(r^-{n} H_a)_eps"),
            TermKind::DeltaDerivative { k: 0 } => write!(f, "*(delta_a)_eps"),
            TermKind::DeltaDerivative { k } => write!(f, "*(delta_a^({k}))_eps"),
        }
    }
}

/// A kernel together with the two scales: evaluates term families at `r`.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub rho: Regularizer,
    pub scales: TwoScale,
}

impl Embedding {
    pub fn new(rho: &Regularizer, scales: TwoScale) -> Self {
        Self {
            rho: rho.clone(),
            scales,
        }
    }

    pub fn a(&self) -> f64 {
        self.scales.a
    }

    pub fn eps(&self) -> f64 {
        self.scales.eps
    }

    /// `(r^-n H_a)_eps(r)`
    pub fn power_heaviside(&self, n: i32, r: f64) -> f64 {
        let TwoScale { a, eps, .. } = self.scales;
        let rho = &self.rho;
        rho.integrate_from((a - r) / eps, |y| rho.density(y) * (r + eps * y).powi(-n))
    }

    /// `(r^-n H_a)_eps(r)` for `n = 0..N` in one pass over the kernel.
    pub fn power_heaviside_set<const N: usize>(&self, r: f64) -> [f64; N] {
        let TwoScale { a, eps, .. } = self.scales;
        let rho = &self.rho;
        let mut acc = [0.0; N];
        // Same nodes as `Regularizer::integrate_from`.
        let (lo_s, hi_s) = rho.support();
        let lower = ((a - r) / eps).max(lo_s);
        if lower >= hi_s {
            return acc;
        }
        let (mul, off) = rho.panel_transform();
        let gl = rho.panel_gl();
        for w in rho.panel_edges().windows(2) {
            let p0 = w[0] * mul + off;
            let p1 = w[1] * mul + off;
            if p1 <= lower {
                continue;
            }
            let p0 = p0.max(lower);
            let c = 0.5 * (p0 + p1);
            let h = 0.5 * (p1 - p0);
            for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
                let y = c + h * x;
                let inv = 1.0 / (r + eps * y);
                let mut term = wt * h * rho.density(y);
                for slot in acc.iter_mut() {
                    *slot += term;
                    term *= inv;
                }
            }
        }
        acc
    }

    /// `d^k/dr^k [rho((a - r)/eps)/eps] = (-1)^k eps^(-1-k) rho^(k)((a - r)/eps)`
    pub fn delta(&self, k: u32, r: f64) -> f64 {
        let TwoScale { a, eps, .. } = self.scales;
        let z = (a - r) / eps;
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        sign * self.rho.derivative(z, k) / eps.powi(k as i32 + 1)
    }

    /// All building blocks needed by the field profiles at one radius.
    pub fn values(&self, r: f64) -> TermValues {
        TermValues {
            f: self.power_heaviside_set(r),
            delta: [self.delta(0, r), self.delta(1, r)],
        }
    }

    /// Evaluates a term including its prefactor.
    pub fn term(&self, t: &SingularTerm, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
        }
        let base = match t.kind {
            TermKind::PowerHeaviside { n } => self.power_heaviside(n, r),
            TermKind::DeltaDerivative { k } => self.delta(k, r),
        };
        Ok(t.prefactor(self.scales.a) * base)
    }

    /// Radii where the integrand structure changes: the compact-support
    /// edges of the kernel mapped to `r = a - eps z`.
    pub fn breakpoints(&self) -> Vec<f64> {
        if !self.rho.is_compact() {
            return Vec::new();
        }
        let (lo, hi) = self.rho.support();
        let TwoScale { a, eps, .. } = self.scales;
        let mut v: Vec<f64> = [a - eps * hi, a - eps * lo]
            .into_iter()
            .filter(|r| *r > 0.0)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Quadrature hints for integrands peaked at `r = a`.
    pub fn quadrature(&self, base: &QuadratureSpec) -> QuadratureSpec {
        let (lo, hi) = self.rho.support();
        // Centre the window on the kernel's image when it is shifted.
        let centre = self.scales.a - self.scales.eps * 0.5 * (lo + hi);
        let centre = if self.rho.is_compact() { centre } else { self.scales.a };
        base.peaked_at(
            &[centre],
            self.scales.eps * self.rho.peak_halfwidth(),
            &self.breakpoints(),
        )
    }
}

/// `f[n] = (r^-n H_a)_eps(r)` for `n < 6` and `delta[k] = (delta_a^(k))_eps(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermValues {
    pub f: [f64; 6],
    pub delta: [f64; 2],
}

impl TermValues {
    /// Value of a term including its prefactor, if it is covered.
    pub fn term(&self, t: &SingularTerm, a: f64) -> Option<f64> {
        let base = match t.kind {
            TermKind::PowerHeaviside { n } if (0..6).contains(&n) => self.f[n as usize],
            TermKind::DeltaDerivative { k } if k < 2 => self.delta[k as usize],
            _ => return None,
        };
        Some(t.prefactor(a) * base)
    }
}

/// A `SingularTerm` bound to its kernel and scales.
#[derive(Debug, Clone)]
pub struct SingularTermFamily {
    pub term: SingularTerm,
    pub embedding: Embedding,
}

impl SingularTermFamily {
    pub fn new(term: SingularTerm, rho: &Regularizer, scales: TwoScale) -> Self {
        Self {
            term,
            embedding: Embedding::new(rho, scales),
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        self.embedding.term(&self.term, r)
    }
}

/// Compactly supported test function.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    support: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish()
    }
}

fn smooth_step_down(t: f64) -> f64 {
    // 1 for t <= 0, 0 for t >= 1, C-infinity in between.
    let g = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let (a, b) = (g(1.0 - t), g(t));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl TestFunction {
    /// Evaluator is clamped to zero beyond `support`. Presets are even in `x`.
    pub fn new<F>(name: &str, support: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            support,
            f: Arc::new(f),
        }
    }

    /// `exp(-(x/w)^2)`, truncated at `8 w`.
    pub fn gaussian(width: f64) -> Self {
        Self::new(&format!("gaussian(w={width})"), 8.0 * width, move |x| {
            let t = x / width;
            (-t * t).exp()
        })
    }

    /// `p(|x|) * exp(-1/(1 - (x/R)^2))` with polynomial coefficients `p`.
    pub fn polynomial_bump(coefficients: Vec<f64>, radius: f64) -> Self {
        Self::new(
            &format!("poly{coefficients:?}*bump(R={radius})"),
            radius,
            move |x| {
                let t = x.abs() / radius;
                if t >= 1.0 {
                    return 0.0;
                }
                let p = coefficients.iter().rev().fold(0.0, |acc, c| acc * x.abs() + c);
                p * (-1.0 / (1.0 - t * t)).exp()
            },
        )
    }

    /// 1 on `|x| <= inner`, smooth decay to 0 at `|x| = outer`.
    pub fn plateau(inner: f64, outer: f64) -> Self {
        assert!(outer > inner && inner >= 0.0);
        Self::new(&format!("plateau({inner},{outer})"), outer, move |x| {
            smooth_step_down((x.abs() - inner) / (outer - inner))
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() > self.support {
            0.0
        } else {
            (self.f)(x)
        }
    }
}

/// Where a pairing integral lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingDomain {
    /// `int_{-inf}^{inf} f(x) T(x) dx`
    Line,
    /// `int_0^inf 4 pi r^2 f(r) T(r) dr`
    Radial,
}

/// An epsilon-indexed family to be paired with test functions.
pub struct Family<'a> {
    eval: Box<dyn Fn(f64, f64) -> f64 + Sync + 'a>,
    peak: f64,
    peak_halfwidth: f64,
    support: (f64, f64),
    compact: bool,
}

impl<'a> Family<'a> {
    /// `f(eps, x)` peaked at `x = peak` with width `eps * peak_halfwidth`.
    pub fn new<F>(f: F, peak: f64, rho: &Regularizer) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + 'a,
    {
        Self {
            eval: Box::new(f),
            peak,
            peak_halfwidth: rho.peak_halfwidth(),
            support: rho.support(),
            compact: rho.is_compact(),
        }
    }

    /// `delta_eps(x)` on the line.
    pub fn delta(rho: &'a Regularizer) -> Self {
        Self::new(move |eps, x| rho.density(-x / eps) / eps, 0.0, rho)
    }

    /// `delta_eps(x)^2` on the line.
    pub fn delta_squared(rho: &'a Regularizer) -> Self {
        Self::new(
            move |eps, x| {
                let d = rho.density(-x / eps) / eps;
                d * d
            },
            0.0,
            rho,
        )
    }

    /// A linear combination of terms at fixed cutoff `a`, each coefficient
    /// optionally multiplied by `r^r_power`.
    pub fn radial_terms(rho: &'a Regularizer, a: f64, terms: Vec<(i32, SingularTerm)>) -> Self {
        Self::new(
            move |eps, r| {
                let emb = Embedding::new(rho, TwoScale { a, eps, allow_out_of_regime: true });
                terms
                    .iter()
                    .map(|(p, t)| {
                        let c = if *p == 0 { 1.0 } else { r.powi(*p) };
                        if c == 0.0 {
                            0.0
                        } else {
                            c * emb.term(t, r).unwrap_or(f64::NAN)
                        }
                    })
                    .sum()
            },
            a,
            rho,
        )
    }

    fn spec_for(&self, eps: f64, base: &QuadratureSpec, reflected: bool) -> QuadratureSpec {
        let p = if reflected { -self.peak } else { self.peak };
        let mut bps = Vec::new();
        if self.compact {
            // x = peak - eps z on the support of rho
            for z in [self.support.0, self.support.1] {
                let x = self.peak - eps * z;
                bps.push(if reflected { -x } else { x });
            }
        }
        base.peaked_at(&[p.abs()], eps * self.peak_halfwidth, &bps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairingOutcome {
    /// `eps -> 0` limit by quadratic extrapolation.
    Converged {
        value: f64,
        error_estimate: f64,
        samples: Vec<(f64, f64)>,
    },
    /// Growth like `eps^exponent` with `exponent <= -1` (within fit error).
    Divergent {
        exponent: f64,
        samples: Vec<(f64, f64)>,
    },
}

/// Pairs `family` with `test` at each `eps` and extrapolates `eps -> 0`.
///
/// Divergence is declared when the pairing grows by at least 10x across
/// a 10x decrease of `eps`; otherwise `c0 + c1 eps + c2 eps^2` is fitted
/// and `c0` returned. With `cutoff = Some(a)` every `eps` must be `<= a/10`.
pub fn pair_with_test(
    family: &Family<'_>,
    test: &TestFunction,
    eps_grid: &[f64],
    domain: PairingDomain,
    cutoff: Option<f64>,
    quad: &QuadratureSpec,
) -> Result<PairingOutcome> {
    if eps_grid.len() < 3 {
        return Err(Error::Domain(format!(
            "pairing needs at least 3 eps values, got {}",
            eps_grid.len()
        )));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0)) || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain(
            "eps grid must be positive and strictly decreasing".into(),
        ));
    }
    if let Some(a) = cutoff {
        for &eps in eps_grid {
            TwoScale::new(a, eps)?.require_regime()?;
        }
    }

    let mut samples = Vec::with_capacity(eps_grid.len());
    let mut quad_err: f64 = 0.0;
    for &eps in eps_grid {
        let mut spec = family.spec_for(eps, quad, false);
        spec.breakpoints.push(test.support());
        let v = match domain {
            PairingDomain::Radial => integrate_radial(
                |r| {
                    let t = test.eval(r);
                    if t == 0.0 {
                        0.0
                    } else {
                        4.0 * std::f64::consts::PI * r * r * (family.eval)(eps, r) * t
                    }
                },
                &spec,
            )?,
            PairingDomain::Line => {
                let pos = integrate_radial(|x| (family.eval)(eps, x) * test.eval(x), &spec)?;
                let mut spec_neg = family.spec_for(eps, quad, true);
                spec_neg.breakpoints.push(test.support());
                let neg = integrate_radial(|x| (family.eval)(eps, -x) * test.eval(-x), &spec_neg)?;
                crate::quadrature::Integral {
                    value: pos.value + neg.value,
                    error: pos.error + neg.error,
                    evaluations: pos.evaluations + neg.evaluations,
                }
            }
        };
        quad_err = quad_err.max(v.error);
        samples.push((eps, v.value));
    }

    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let (ei, vi) = samples[i];
            let (ej, vj) = samples[j];
            if ei / ej >= 10.0 * (1.0 - 1e-12) && vj.abs() >= 10.0 * vi.abs() && vj != 0.0 {
                let exponent = fit_power_law(&samples)?.exponent;
                return Ok(PairingOutcome::Divergent { exponent, samples });
            }
        }
    }

    let (value, error_estimate) = extrapolate_quadratic(&samples)?;
    Ok(PairingOutcome::Converged {
        value,
        error_estimate: error_estimate + quad_err,
        samples,
    })
}

/// Least-squares `c0 + c1 eps + c2 eps^2`; the error estimate is the
/// disagreement with the linear extrapolation through the two smallest eps.
fn extrapolate_quadratic(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    let m = samples.len();
    let scale = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let design = DMatrix::from_fn(m, 3, |i, j| (samples[i].0 / scale).powi(j as i32));
    let rhs = DVector::from_iterator(m, samples.iter().map(|s| s.1));
    let svd = design.svd(true, true);
    let c = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Conditioning(e.to_string()))?;
    let value = c[0];
    let (e1, v1) = samples[m - 1];
    let (e2, v2) = samples[m - 2];
    let linear = v1 - e1 * (v2 - v1) / (e2 - e1);
    Ok((value, (value - linear).abs()))
}
