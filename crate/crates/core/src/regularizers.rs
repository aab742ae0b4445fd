//! Regularizing kernels.
//!
//! A kernel is a smooth, rapidly decaying function on the real line with unit
//! integral. Positivity is not assumed, but every kernel has one dominant
//! peak and a declared half-width so the radial quadrature knows where to
//! split.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_segments, GaussLegendre, Segment};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

/// Gaussian support is truncated at this many widths (exp(-144) ~ 3e-63).
pub const GAUSSIAN_CUTOFF: f64 = 12.0;

const MOMENT_ABS_TOL: f64 = 1e-13;
const MOMENT_REL_TOL: f64 = 1e-13;

/// Panel rule shared by all fixed-rule kernel integrals.
pub(crate) fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

fn table_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(4))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Even,
    General,
}

/// Natural cubic spline through `(z_i, v_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    z: Vec<f64>,
    v: Vec<f64>,
    second: Vec<f64>,
}

impl Table {
    pub fn new(z: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if z.len() != v.len() {
            return Err(Error::InvalidKernel(format!(
                "table has {} abscissae and {} values",
                z.len(),
                v.len()
            )));
        }
        if z.len() < 4 {
            return Err(Error::InvalidKernel("table needs at least 4 rows".into()));
        }
        if z.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidKernel("table contains non-finite entries".into()));
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidKernel(
                "table abscissae must be strictly increasing".into(),
            ));
        }
        let second = natural_spline_second_derivatives(&z, &v);
        Ok(Self { z, v, second })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.z[0], *self.z.last().unwrap())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.z
    }

    fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.range();
        if x < lo || x > hi {
            return 0.0;
        }
        let i = self.z.partition_point(|&t| t <= x).clamp(1, self.z.len() - 1) - 1;
        let h = self.z[i + 1] - self.z[i];
        let a = (self.z[i + 1] - x) / h;
        let b = (x - self.z[i]) / h;
        a * self.v[i]
            + b * self.v[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / 6.0
    }
}

fn natural_spline_second_derivatives(z: &[f64], v: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut m = vec![0.0; n];
    // Thomas algorithm on the interior equations.
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = z[i] - z[i - 1];
        let h1 = z[i + 1] - z[i];
        let a = h0 / 6.0;
        let b = (h0 + h1) / 3.0;
        let c = h1 / 6.0;
        let d = (v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0;
        let denom = b - a * c_prime[i - 1];
        c_prime[i] = c / denom;
        d_prime[i] = (d - a * d_prime[i - 1]) / denom;
    }
    for i in (1..n - 1).rev() {
        m[i] = d_prime[i] - c_prime[i] * m[i + 1];
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind {
    /// `exp(-(z/w)^2)`
    Gaussian { width: f64 },
    /// `exp(-1/(1 - z^2))` on (-1, 1)
    CompactBump,
    /// The compact bump shifted to (-1 + shift, 1 + shift).
    AsymmetricBump { shift: f64 },
    Tabulated(Arc<Table>),
}

/// Tail envelope: `|rho(z)| <= bound(|z|)` for `|z| >= r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBound {
    /// `scale * exp(-z^2 / (2 w^2))`
    Gaussian { width: f64, scale: f64, r0: f64 },
    /// Zero beyond `r0`.
    Compact { r0: f64 },
}

impl TailBound {
    pub fn r0(&self) -> f64 {
        match *self {
            TailBound::Gaussian { r0, .. } | TailBound::Compact { r0 } => r0,
        }
    }

    pub fn bound(&self, z: f64) -> f64 {
        let z = z.abs();
        match *self {
            TailBound::Gaussian { width, scale, .. } => {
                scale * (-(z * z) / (2.0 * width * width)).exp()
            }
            TailBound::Compact { r0 } => {
                if z >= r0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentValue {
    pub power: u32,
    pub order: u32,
    pub value: f64,
}

#[derive(Debug, Default)]
struct MomentCache(Mutex<HashMap<(u32, u32), f64>>);

/// A regularizing kernel. Cheap to clone; clones share the moment cache.
#[derive(Debug, Clone)]
pub struct Regularizer {
    kind: KernelKind,
    scale: f64,
    parity: Parity,
    peak_halfwidth: f64,
    id: String,
    moments: Arc<MomentCache>,
}

impl PartialEq for Regularizer {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.scale == other.scale
            && self.parity == other.parity
            && self.peak_halfwidth == other.peak_halfwidth
    }
}

impl Regularizer {
    fn raw(kind: KernelKind, scale: f64, parity: Parity, peak_halfwidth: f64, id: String) -> Self {
        Self {
            kind,
            scale,
            parity,
            peak_halfwidth,
            id,
            moments: Arc::default(),
        }
    }

    /// Normalized gaussian `exp(-(z/w)^2) / (w sqrt(pi))`.
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidKernel(format!("gaussian width {width}")));
        }
        Ok(Self::raw(
            KernelKind::Gaussian { width },
            1.0 / (width * PI.sqrt()),
            Parity::Even,
            width,
            format!("gaussian(w={width})"),
        ))
    }

    /// `exp(-(z/w)^2)` without the normalizing factor.
    pub fn gaussian_unnormalized(width: f64) -> Result<Self> {
        let mut g = Self::gaussian(width)?;
        g.scale = 1.0;
        g.id = format!("gaussian-raw(w={width})");
        Ok(g)
    }

    /// Even compact bump, normalized numerically.
    pub fn compact_bump() -> Result<Self> {
        Self::raw(
            KernelKind::CompactBump,
            1.0,
            Parity::Even,
            1.0,
            "compact-bump".into(),
        )
        .normalize()
    }

    /// Compact bump shifted by `shift` (non-zero) then normalized.
    pub fn asymmetric_bump(shift: f64) -> Result<Self> {
        if shift == 0.0 || !shift.is_finite() || shift.abs() >= GAUSSIAN_CUTOFF - 1.0 {
            return Err(Error::InvalidKernel(format!(
                "asymmetric bump needs a finite non-zero shift below {}, got {shift}",
                GAUSSIAN_CUTOFF - 1.0
            )));
        }
        Self::raw(
            KernelKind::AsymmetricBump { shift },
            1.0,
            Parity::General,
            1.0,
            format!("asymmetric-bump(s={shift})"),
        )
        .normalize()
    }

    /// Spline through tabulated samples, normalized.
    pub fn tabulated(z: Vec<f64>, values: Vec<f64>, peak_halfwidth: f64, id: &str) -> Result<Self> {
        if !(peak_halfwidth > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "peak half-width must be positive, got {peak_halfwidth}"
            )));
        }
        let table = Table::new(z, values)?;
        Self::raw(
            KernelKind::Tabulated(Arc::new(table)),
            1.0,
            Parity::General,
            peak_halfwidth,
            id.to_string(),
        )
        .normalize()
    }

    /// Loads a two-column CSV `z, rho(z)`; a non-numeric first row is
    /// treated as a header. The half-width defaults to the standard
    /// deviation of `|rho|`.
    pub fn from_csv<P: AsRef<Path>>(path: P, peak_halfwidth: Option<f64>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut z = Vec::new();
        let mut v = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::InvalidKernel(format!(
                    "{}: row {} has {} columns",
                    path.display(),
                    i + 1,
                    rec.len()
                )));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(a), Ok(b)) => {
                    z.push(a);
                    v.push(b);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::InvalidKernel(format!(
                        "{}: row {} is not numeric",
                        path.display(),
                        i + 1
                    )))
                }
            }
        }
        let hw = match peak_halfwidth {
            Some(h) => h,
            None => spread_of(&z, &v),
        };
        Self::tabulated(z, v, hw, &format!("tabulated({})", path.display()))
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_even(&self) -> bool {
        self.parity == Parity::Even
    }

    pub fn peak_halfwidth(&self) -> f64 {
        self.peak_halfwidth
    }

    /// Stable identifier used in reports and as the moment-cache identity.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tail_bound(&self) -> TailBound {
        match &self.kind {
            KernelKind::Gaussian { width } => TailBound::Gaussian {
                width: *width,
                scale: self.scale.abs(),
                r0: 2.0 * width,
            },
            KernelKind::CompactBump => TailBound::Compact { r0: 1.0 },
            KernelKind::AsymmetricBump { shift } => TailBound::Compact {
                r0: 1.0 + shift.abs(),
            },
            KernelKind::Tabulated(t) => {
                let (lo, hi) = t.range();
                TailBound::Compact {
                    r0: lo.abs().max(hi.abs()),
                }
            }
        }
    }

    /// Interval outside of which the kernel is treated as zero.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            KernelKind::Gaussian { width } => (-GAUSSIAN_CUTOFF * width, GAUSSIAN_CUTOFF * width),
            KernelKind::CompactBump => (-1.0, 1.0),
            KernelKind::AsymmetricBump { shift } => (shift - 1.0, shift + 1.0),
            KernelKind::Tabulated(t) => t.range(),
        }
    }

    /// True when the kernel vanishes identically outside [`support`](Self::support).
    pub fn is_compact(&self) -> bool {
        !matches!(self.kind, KernelKind::Gaussian { .. })
    }

    /// Panel edges for fixed-rule integration over the support.
    pub(crate) fn panel_edges(&self) -> &[f64] {
        // Cached per kind; tables use their own nodes.
        static GAUSS: OnceLock<Vec<f64>> = OnceLock::new();
        static BUMP: OnceLock<Vec<f64>> = OnceLock::new();
        match &self.kind {
            KernelKind::Gaussian { .. } => GAUSS.get_or_init(|| {
                (0..=48)
                    .map(|k| -GAUSSIAN_CUTOFF + k as f64 * 0.5)
                    .collect()
            }),
            KernelKind::CompactBump | KernelKind::AsymmetricBump { .. } => {
                BUMP.get_or_init(|| (0..=40).map(|k| -1.0 + k as f64 * 0.05).collect())
            }
            KernelKind::Tabulated(t) => t.nodes(),
        }
    }

    /// Maps unit panel edges onto this kernel's support.
    pub(crate) fn panel_transform(&self) -> (f64, f64) {
        match &self.kind {
            KernelKind::Gaussian { width } => (*width, 0.0),
            KernelKind::CompactBump => (1.0, 0.0),
            KernelKind::AsymmetricBump { shift } => (1.0, *shift),
            KernelKind::Tabulated(_) => (1.0, 0.0),
        }
    }

    pub(crate) fn panel_gl(&self) -> &'static GaussLegendre {
        match self.kind {
            KernelKind::Tabulated(_) => table_rule(),
            _ => panel_rule(),
        }
    }

    /// Fixed composite Gauss–Legendre integral of `g(z)` over
    /// `[lower, support_hi]`; smooth in `lower`.
    #[inline]
    pub(crate) fn integrate_from<G: FnMut(f64) -> f64>(&self, lower: f64, mut g: G) -> f64 {
        let (lo_s, hi_s) = self.support();
        let lower = lower.max(lo_s);
        if lower >= hi_s {
            return 0.0;
        }
        let (mul, off) = self.panel_transform();
        let gl = self.panel_gl();
        let edges = self.panel_edges();
        let mut total = 0.0;
        for w in edges.windows(2) {
            let p0 = w[0] * mul + off;
            let p1 = w[1] * mul + off;
            if p1 <= lower {
                continue;
            }
            let p0 = p0.max(lower);
            total += gl.integrate(p0, p1, &mut g);
        }
        total
    }

    /// `rho(z)`, zero outside the support.
    #[inline]
    pub fn density(&self, z: f64) -> f64 {
        self.scale * self.shape(z)
    }

    /// `rho(z)`; tabulated kernels reject points outside their table.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if let KernelKind::Tabulated(t) = &self.kind {
            let (lo, hi) = t.range();
            if z < lo || z > hi {
                return Err(Error::InterpolationRange { z, lo, hi });
            }
        }
        Ok(self.density(z))
    }

    #[inline]
    fn shape(&self, z: f64) -> f64 {
        match &self.kind {
            KernelKind::Gaussian { width } => {
                let x = z / width;
                (-x * x).exp()
            }
            KernelKind::CompactBump => bump(z),
            KernelKind::AsymmetricBump { shift } => bump(z - shift),
            KernelKind::Tabulated(t) => t.eval(z),
        }
    }

    /// `k`-th derivative of `rho` at `z`.
    ///
    /// Analytic for the gaussian (any order) and the bumps (order <= 2);
    /// central differences with step `peak_halfwidth / 1000` otherwise.
    pub fn derivative(&self, z: f64, k: u32) -> f64 {
        if k == 0 {
            return self.density(z);
        }
        match &self.kind {
            KernelKind::Gaussian { width } => {
                let x = z / width;
                let h = hermite(k, x);
                let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                self.scale * sign * h * (-x * x).exp() / width.powi(k as i32)
            }
            KernelKind::CompactBump if k <= 2 => self.scale * bump_derivative(z, k),
            KernelKind::AsymmetricBump { shift } if k <= 2 => {
                self.scale * bump_derivative(z - shift, k)
            }
            _ => {
                let h = self.peak_halfwidth / 1e3;
                (self.derivative(z + h, k - 1) - self.derivative(z - h, k - 1)) / (2.0 * h)
            }
        }
    }

    /// Integral over the support, by adaptive quadrature.
    pub fn integral(&self) -> Result<f64> {
        self.adaptive_integral(|z| self.density(z))
    }

    fn adaptive_integral<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let (mul, off) = self.panel_transform();
        let segs: Vec<Segment> = self
            .panel_edges()
            .windows(2)
            .map(|w| Segment::finite(w[0] * mul + off, w[1] * mul + off))
            .collect();
        integrate_segments(&g, &segs, MOMENT_ABS_TOL, MOMENT_REL_TOL, 4000).map(|i| i.value)
    }

    /// Rescales to unit integral. A kernel already normalized to within
    /// a few ulps is returned unchanged.
    pub fn normalize(&self) -> Result<Self> {
        let integral = self.integral()?;
        if !integral.is_finite() || integral.abs() < 1e-300 {
            return Err(Error::Normalization { integral });
        }
        if (integral - 1.0).abs() <= 1e-14 {
            return Ok(self.clone());
        }
        Ok(Self::raw(
            self.kind.clone(),
            self.scale / integral,
            self.parity,
            self.peak_halfwidth,
            self.id.clone(),
        ))
    }

    /// `M[p,n] = int y^n rho(y)^p dy`, cached per kernel.
    pub fn moment(&self, p: u32, n: u32) -> Result<MomentValue> {
        if p == 0 {
            return Err(Error::Domain("moment power must be >= 1".into()));
        }
        if let Some(v) = self.moments.0.lock().unwrap().get(&(p, n)) {
            return Ok(MomentValue {
                power: p,
                order: n,
                value: *v,
            });
        }
        let value = if self.is_even() && n % 2 == 1 {
            0.0
        } else {
            let v = self.adaptive_integral(|y| y.powi(n as i32) * self.density(y).powi(p as i32))?;
            if !v.is_finite() {
                return Err(Error::Divergence(format!(
                    "M[{p},{n}] of {} is not finite",
                    self.id
                )));
            }
            self.check_truncated_tail(p, n, v)?;
            v
        };
        self.moments.0.lock().unwrap().insert((p, n), value);
        Ok(MomentValue {
            power: p,
            order: n,
            value,
        })
    }

    /// Bounds the part of the moment integral dropped by support truncation.
    fn check_truncated_tail(&self, p: u32, n: u32, value: f64) -> Result<()> {
        let TailBound::Gaussian { .. } = self.tail_bound() else {
            return Ok(());
        };
        let bound = self.tail_bound();
        let (_, hi) = self.support();
        let tail = integrate_segments(
            &|y: f64| y.powi(n as i32) * bound.bound(y).powi(p as i32),
            &[Segment::tail(hi)],
            1e-300,
            1e-6,
            200,
        )
        .map_err(|e| Error::Divergence(format!("tail envelope of M[{p},{n}]: {e}")))?;
        let dropped = 2.0 * tail.value;
        if !dropped.is_finite() || dropped > 1e-12 * value.abs().max(1.0) {
            return Err(Error::Divergence(format!(
                "M[{p},{n}] of {}: truncated tail bound {dropped:e} is not negligible",
                self.id
            )));
        }
        Ok(())
    }

    /// `M[2,0]`
    pub fn m20(&self) -> Result<f64> {
        self.moment(2, 0).map(|m| m.value)
    }

    /// `M[2,1]`
    pub fn m21(&self) -> Result<f64> {
        self.moment(2, 1).map(|m| m.value)
    }
}

#[inline]
fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

fn bump_derivative(x: f64, k: u32) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - x * x;
    let f = (-1.0 / q).exp();
    match k {
        1 => f * (-2.0 * x / (q * q)),
        2 => f * (4.0 * x * x / q.powi(4) - 2.0 / (q * q) - 8.0 * x * x / q.powi(3)),
        _ => unreachable!("analytic bump derivatives only up to order 2"),
    }
}

/// Physicists' Hermite polynomial.
fn hermite(k: u32, x: f64) -> f64 {
    let mut h0 = 1.0;
    if k == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for j in 1..k {
        let h2 = 2.0 * x * h1 - 2.0 * j as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn spread_of(z: &[f64], v: &[f64]) -> f64 {
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for i in 1..z.len() {
        let h = z[i] - z[i - 1];
        let zm = 0.5 * (z[i] + z[i - 1]);
        let w = 0.5 * (v[i].abs() + v[i - 1].abs()) * h;
        m0 += w;
        m1 += w * zm;
        m2 += w * zm * zm;
    }
    if m0 > 0.0 {
        let var = m2 / m0 - (m1 / m0).powi(2);
        if var > 0.0 {
            return var.sqrt();
        }
    }
    (z[z.len() - 1] - z[0]) / 4.0
}

/// Kernel selection as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Gaussian {
        #[serde(default = "one")]
        width: f64,
    },
    CompactBump,
    AsymmetricBump {
        #[serde(default = "default_shift")]
        shift: f64,
    },
    Tabulated {
        path: String,
        #[serde(default)]
        peak_halfwidth: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn default_shift() -> f64 {
    0.3
}

impl KernelSpec {
    /// Parses the CLI shorthand: `gaussian`, `gaussian:0.5`, `compact-bump`,
    /// `asymmetric-bump`, `asymmetric-bump:0.4`, `tabulated:PATH`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>, default: f64| -> Result<f64> {
            match a {
                None => Ok(default),
                Some(t) => t
                    .parse()
                    .map_err(|_| Error::InvalidKernel(format!("bad kernel parameter '{t}'"))),
            }
        };
        match name {
            "gaussian" => Ok(KernelSpec::Gaussian { width: num(arg, 1.0)? }),
            "compact-bump" if arg.is_none() => Ok(KernelSpec::CompactBump),
            "asymmetric-bump" => Ok(KernelSpec::AsymmetricBump {
                shift: num(arg, default_shift())?,
            }),
            "tabulated" => match arg {
                Some(p) if !p.is_empty() => Ok(KernelSpec::Tabulated {
                    path: p.to_string(),
                    peak_halfwidth: None,
                }),
                _ => Err(Error::InvalidKernel("tabulated kernel needs a path".into())),
            },
            other => Err(Error::InvalidKernel(format!("unknown kernel '{other}'"))),
        }
    }

    pub fn build(&self) -> Result<Regularizer> {
        match self {
            KernelSpec::Gaussian { width } => Regularizer::gaussian(*width),
            KernelSpec::CompactBump => Regularizer::compact_bump(),
            KernelSpec::AsymmetricBump { shift } => Regularizer::asymmetric_bump(*shift),
            KernelSpec::Tabulated {
                path,
                peak_halfwidth,
            } => Regularizer::from_csv(path, *peak_halfwidth),
        }
    }
}
