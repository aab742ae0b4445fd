//! Radial integrals of products of embedded terms, their asymptotic forms,
//! and residuals of the integration-by-parts identities.
//!
//! Notation: `f_n = (r^-n H_a)_eps`, `g = (delta_a)_eps`, `E = f_2 - g/a`.

use crate::embedding::{Embedding, TwoScale};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_radial, Integral, QuadratureSpec};
use crate::regularizers::Regularizer;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Finite expansion `sum c_(i,j) a^i eps^j + O(eps^remainder_order)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AsymptoticValue {
    coefficients: BTreeMap<(i32, i32), f64>,
    pub remainder_order: i32,
}

impl AsymptoticValue {
    pub fn new(remainder_order: i32) -> Self {
        Self {
            coefficients: BTreeMap::new(),
            remainder_order,
        }
    }

    /// Adds `c a^a_power eps^eps_power`, merging with an existing key.
    pub fn add_term(&mut self, a_power: i32, eps_power: i32, c: f64) -> &mut Self {
        *self.coefficients.entry((a_power, eps_power)).or_insert(0.0) += c;
        self
    }

    pub fn with_term(mut self, a_power: i32, eps_power: i32, c: f64) -> Self {
        self.add_term(a_power, eps_power, c);
        self
    }

    pub fn coefficient(&self, a_power: i32, eps_power: i32) -> f64 {
        self.coefficients.get(&(a_power, eps_power)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        self.coefficients.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for c in self.coefficients.values_mut() {
            *c *= s;
        }
        self
    }

    pub fn plus(mut self, other: &Self) -> Self {
        for (i, j, c) in other.terms() {
            self.add_term(i, j, c);
        }
        self.remainder_order = self.remainder_order.min(other.remainder_order);
        self
    }

    pub fn instantiate(&self, a: f64, eps: f64) -> f64 {
        self.terms().map(|(i, j, c)| c * a.powi(i) * eps.powi(j)).sum()
    }
}

impl fmt::Display for AsymptoticValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, j, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}*a^{i}*eps^{j}")?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(eps^{})", self.remainder_order)
    }
}

/// A radial integral split by term type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermIntegrals {
    /// Products of two `f_n` families.
    pub h_h: Integral,
    /// Products of one `f_n` and one delta family.
    pub mixed: Integral,
    /// The delta-squared part.
    pub delta_sq: Integral,
}

impl TermIntegrals {
    pub fn total(&self) -> f64 {
        self.h_h.value + self.mixed.value + self.delta_sq.value
    }

    pub fn error(&self) -> f64 {
        self.h_h.error + self.mixed.error + self.delta_sq.error
    }
}

fn prepare(ts: TwoScale, rho: &Regularizer, spec: &QuadratureSpec) -> Result<(Embedding, QuadratureSpec)> {
    ts.require_regime()?;
    spec.validate()?;
    let emb = Embedding::new(rho, ts);
    let q = emb.quadrature(spec);
    Ok((emb, q))
}

/// `int_0^inf r^n E^2 dr`, integrated as `f_2^2`, `-2 f_2 g/a` and `g^2/a^2`.
///
/// Requires `n <= 2`; the integral diverges at infinity otherwise.
pub fn moment_mn_terms(n: i32, ts: TwoScale, rho: &Regularizer, spec: &QuadratureSpec) -> Result<TermIntegrals> {
    if n >= 3 {
        return Err(Error::Divergence(format!(
            "int r^{n} E^2 dr diverges at infinity for n >= 3"
        )));
    }
    let (emb, q) = prepare(ts, rho, spec)?;
    let a = ts.a;
    let rn = |r: f64| if n == 0 { 1.0 } else { r.powi(n) };
    let h_h = integrate_radial(
        |r| {
            let f2 = emb.power_heaviside_set::<3>(r)[2];
            rn(r) * f2 * f2
        },
        &q,
    )?;
    let mixed = integrate_radial(
        |r| {
            let g = emb.delta(0, r);
            if g == 0.0 {
                return 0.0;
            }
            -2.0 * rn(r) * emb.power_heaviside_set::<3>(r)[2] * g / a
        },
        &q,
    )?;
    let delta_sq = integrate_radial(
        |r| {
            let g = emb.delta(0, r) / a;
            rn(r) * g * g
        },
        &q,
    )?;
    Ok(TermIntegrals { h_h, mixed, delta_sq })
}

/// Total of [`moment_mn_terms`].
pub fn moment_mn_numeric(n: i32, ts: TwoScale, rho: &Regularizer, spec: &QuadratureSpec) -> Result<f64> {
    Ok(moment_mn_terms(n, ts, rho, spec)?.total())
}

/// Leading terms of `int r^n E^2 dr`:
/// `a^(n-2) M20/eps + a^(n-3) (1/(3-n) - 1 - n M21) + O(eps)`.
///
/// The `-n M21` term comes from expanding `int r^n g^2 dr` about `r = a`
/// with `r = a - eps z`; it vanishes for even kernels.
pub fn moment_mn_analytic(n: i32, _ts: TwoScale, rho: &Regularizer) -> Result<AsymptoticValue> {
    if n == 3 {
        return Err(Error::Pole { n });
    }
    let m20 = rho.m20()?;
    let m21 = rho.m21()?;
    Ok(AsymptoticValue::new(1)
        .with_term(n - 2, -1, m20)
        .with_term(n - 3, 0, 1.0 / (3 - n) as f64 - 1.0 - n as f64 * m21))
}

/// Variant carrying `+n M21` instead of `-n M21`; lets a comparison show
/// which sign the numerics select.
pub fn moment_mn_analytic_as_published(n: i32, ts: TwoScale, rho: &Regularizer) -> Result<AsymptoticValue> {
    let m21 = rho.m21()?;
    Ok(moment_mn_analytic(n, ts, rho)?.with_term(n - 3, 0, 2.0 * n as f64 * m21))
}

/// `int_0^inf r^n P dr` with `P = E [2 f_3 - f_2/r - g/a^2]`, split by term type.
///
/// Requires `n <= 3`.
pub fn rn_terms(n: i32, ts: TwoScale, rho: &Regularizer, spec: &QuadratureSpec) -> Result<TermIntegrals> {
    if n >= 4 {
        return Err(Error::Divergence(format!(
            "int r^{n} P dr diverges at infinity for n >= 4"
        )));
    }
    let (emb, q) = prepare(ts, rho, spec)?;
    let a = ts.a;
    let rn = |r: f64| if n == 0 { 1.0 } else { r.powi(n) };
    let h_h = integrate_radial(
        |r| {
            if r == 0.0 {
                return 0.0;
            }
            let f = emb.power_heaviside_set::<4>(r);
            rn(r) * (2.0 * f[2] * f[3] - f[2] * f[2] / r)
        },
        &q,
    )?;
    let mixed = integrate_radial(
        |r| {
            let g = emb.delta(0, r);
            if g == 0.0 || r == 0.0 {
                return 0.0;
            }
            let f = emb.power_heaviside_set::<4>(r);
            rn(r) * g * (-f[2] / (a * a) - 2.0 * f[3] / a + f[2] / (a * r))
        },
        &q,
    )?;
    let delta_sq = integrate_radial(
        |r| {
            let g = emb.delta(0, r);
            rn(r) * g * g / (a * a * a)
        },
        &q,
    )?;
    Ok(TermIntegrals { h_h, mixed, delta_sq })
}

/// Total of [`rn_terms`].
pub fn rn_numeric(n: i32, ts: TwoScale, rho: &Regularizer, spec: &QuadratureSpec) -> Result<f64> {
    Ok(rn_terms(n, ts, rho, spec)?.total())
}

/// `a^(n-3) M20/eps - (n-3)/(n-4) a^(n-4) - n a^(n-4) M21 + O(eps)`.
///
/// The `M21` term is zero for even kernels.
pub fn rn_analytic(n: i32, _ts: TwoScale, rho: &Regularizer) -> Result<AsymptoticValue> {
    if n == 4 {
        return Err(Error::Pole { n });
    }
    let m20 = rho.m20()?;
    let m21 = rho.m21()?;
    let mut v = AsymptoticValue::new(1).with_term(n - 3, -1, m20);
    let c = -((n - 3) as f64) / ((n - 4) as f64) - n as f64 * m21;
    if c != 0.0 {
        v.add_term(n - 4, 0, c);
    }
    Ok(v)
}

/// `int_0^inf g(r)^2 F(r) dr`.
pub fn delta_sq_weighted<F: Fn(f64) -> f64>(
    f: F,
    ts: TwoScale,
    rho: &Regularizer,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (emb, q) = prepare(ts, rho, spec)?;
    Ok(integrate_radial(
        |r| {
            let g = emb.delta(0, r);
            if g == 0.0 {
                0.0
            } else {
                g * g * f(r)
            }
        },
        &q,
    )?
    .value)
}

/// `F(a) M20/eps - F'(a) M21`, the first two terms of [`delta_sq_weighted`].
pub fn delta_sq_weighted_analytic(f_a: f64, df_a: f64, ts: TwoScale, rho: &Regularizer) -> Result<f64> {
    Ok(f_a * rho.m20()? / ts.eps - df_a * rho.m21()?)
}

/// The integration-by-parts identities between products of term families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IdentityTag {
    /// `(f_2^2)' = 2 f_2 g/a^2 - 4 f_2 f_3`
    Sen8,
    /// `E (E' + 2E/r) = (r^4 E^2)' / (2 r^4)`
    Sfo7,
    /// `r (f_2^2)' = 2 r f_2 g/a^2 - 4 r f_2 f_3`
    Dip13,
    /// `a r^2 (f_3^2)' = 2 a r^2 f_3 g/a^3 - 6 a r^2 f_3 f_4`
    Dip14,
    /// `a^2 r^n (f_3^2)' = 2 r^n f_3 g/a - 6 a^2 r^n f_3 f_4`, `n = 2, 3`
    Ele12,
    /// `w (f_2^2)'/2 = w f_2 g/a^2 - 2 w f_2 f_3`, `w = a r^(n-1) - r^n`, `n = 2, 3`
    Ele13,
}

impl IdentityTag {
    pub const ALL: [IdentityTag; 6] = [
        IdentityTag::Sen8,
        IdentityTag::Sfo7,
        IdentityTag::Dip13,
        IdentityTag::Dip14,
        IdentityTag::Ele12,
        IdentityTag::Ele13,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IdentityTag::Sen8 => "SEN8",
            IdentityTag::Sfo7 => "SFO7",
            IdentityTag::Dip13 => "DIP13",
            IdentityTag::Dip14 => "DIP14",
            IdentityTag::Ele12 => "ELE12",
            IdentityTag::Ele13 => "ELE13",
        }
    }
}

impl fmt::Display for IdentityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| Error::Domain(format!("unknown identity tag '{s}'")))
    }
}

/// Derivative by a 5-point central stencil at `h` and `h/2`, Richardson-combined.
fn derivative<F: Fn(f64) -> f64>(f: F, r: f64, h: f64) -> f64 {
    let d = |h: f64| (8.0 * (f(r + h) - f(r - h)) - (f(r + 2.0 * h) - f(r - 2.0 * h))) / (12.0 * h);
    let (d1, d2) = (d(h), d(0.5 * h));
    d2 + (d2 - d1) / 15.0
}

/// Max over `r_samples` of `|L - R| / (1 + |L|)`.
///
/// The left side differentiates quadrature values of the squared families
/// numerically (step `eps/100`); the right side is built from products of
/// the families. Both sides are quadratic in the field amplitude `scale`.
pub fn identity_residual_scaled(
    tag: IdentityTag,
    ts: TwoScale,
    rho: &Regularizer,
    r_samples: &[f64],
    scale: f64,
) -> Result<f64> {
    if let Some(r) = r_samples.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::Domain(format!("identity radii must be > 0, got {r}")));
    }
    let emb = Embedding::new(rho, ts);
    let a = ts.a;
    let h = ts.eps / 100.0;
    let f = |n: usize, r: f64| scale * emb.power_heaviside_set::<5>(r)[n];
    let e_field = |r: f64| {
        let v = emb.values(r);
        scale * (v.f[2] - v.delta[0] / a)
    };
    let mut worst: f64 = 0.0;
    for &r in r_samples {
        let v = emb.values(r);
        let f2 = scale * v.f[2];
        let f3 = scale * v.f[3];
        let f4 = scale * v.f[4];
        let g = v.delta[0];
        let d_f2sq = || derivative(|x| f(2, x).powi(2), r, h);
        let d_f3sq = || derivative(|x| f(3, x).powi(2), r, h);
        let pairs: Vec<(f64, f64)> = match tag {
            IdentityTag::Sen8 => vec![(d_f2sq(), 2.0 * f2 * g / (a * a) - 4.0 * f2 * f3)],
            IdentityTag::Dip13 => vec![(r * d_f2sq(), 2.0 * r * f2 * g / (a * a) - 4.0 * r * f2 * f3)],
            IdentityTag::Dip14 => vec![(
                a * r * r * d_f3sq(),
                2.0 * r * r * f3 * g / (a * a) - 6.0 * a * r * r * f3 * f4,
            )],
            IdentityTag::Ele12 => {
                let d = d_f3sq();
                [2, 3]
                    .iter()
                    .map(|&n| {
                        let rn = r.powi(n);
                        (a * a * rn * d, 2.0 * rn / a * f3 * g - 6.0 * a * a * rn * f3 * f4)
                    })
                    .collect()
            }
            IdentityTag::Ele13 => {
                let d = d_f2sq();
                [2, 3]
                    .iter()
                    .map(|&n| {
                        let w = a * r.powi(n - 1) - r.powi(n);
                        (0.5 * w * d, w / (a * a) * f2 * g - 2.0 * w * f2 * f3)
                    })
                    .collect()
            }
            IdentityTag::Sfo7 => {
                let e = scale * (v.f[2] - v.delta[0] / a);
                // E' + 2E/r from the five-term charge-density decomposition
                let div = scale
                    * (2.0 * v.f[2] / r - 2.0 * v.f[3] + v.delta[0] / (a * a)
                        - 2.0 * v.delta[0] / (a * r)
                        - v.delta[1] / a);
                let rhs = derivative(|x| x.powi(4) * e_field(x).powi(2), r, h) / (2.0 * r.powi(4));
                vec![(e * div, rhs)]
            }
        };
        for (l, rhs) in pairs {
            let res = (l - rhs).abs() / (1.0 + l.abs());
            if !res.is_finite() {
                return Err(Error::Domain(format!("non-finite identity residual at r = {r}")));
            }
            worst = worst.max(res);
        }
    }
    Ok(worst)
}

/// [`identity_residual_scaled`] at unit amplitude.
pub fn identity_residual(tag: IdentityTag, ts: TwoScale, rho: &Regularizer, r_samples: &[f64]) -> Result<f64> {
    identity_residual_scaled(tag, ts, rho, r_samples, 1.0)
}

/// 20 radii spanning `[a/2, 10a]`, clustered around `a`.
pub fn identity_radii(a: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..10).map(|i| a * (0.5 + 0.055 * i as f64)).collect();
    v.extend((0..10).map(|i| a * (1.0 + 9.0 * (i as f64 / 9.0).powi(2))));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn rel(x: f64, y: f64) -> f64 {
        ((x - y) / y).abs()
    }

    #[test]
    fn asymptotic_value_algebra() {
        let v = AsymptoticValue::new(1).with_term(-1, 0, 2.0).with_term(0, -1, 3.0).with_term(-1, 0, 1.0);
        assert_eq!(v.coefficient(-1, 0), 3.0);
        assert_eq!(v.instantiate(0.5, 0.25), 6.0 + 12.0);
        assert_eq!(v.clone().scaled(2.0).coefficient(0, -1), 6.0);
        let w = v.clone().plus(&AsymptoticValue::new(2).with_term(0, 0, 1.0));
        assert_eq!(w.remainder_order, 1);
        assert_eq!(w.instantiate(0.5, 0.25), 19.0);
        assert!(v.to_string().contains("O(eps^1)"));
    }

    #[test]
    fn moment_analytic_forms() {
        let g = Regularizer::gaussian(1.0).unwrap();
        let ts = TwoScale::new(0.1, 1e-3).unwrap();
        let m20 = g.m20().unwrap();
        let m2 = moment_mn_analytic(2, ts, &g).unwrap();
        assert_eq!(m2.coefficient(-1, 0), 0.0);
        assert_eq!(m2.coefficient(0, -1), m20);
        let m1 = moment_mn_analytic(1, ts, &g).unwrap();
        assert_eq!(m1.coefficient(-2, 0), -0.5);
        assert_eq!(m1.coefficient(-1, -1), m20);
        assert_eq!(moment_mn_analytic(3, ts, &g), Err(Error::Pole { n: 3 }));
        let asym = Regularizer::asymmetric_bump(0.3).unwrap();
        let m21 = asym.m21().unwrap();
        let diff = moment_mn_analytic_as_published(1, ts, &asym).unwrap().coefficient(-2, 0)
            - moment_mn_analytic(1, ts, &asym).unwrap().coefficient(-2, 0);
        assert!((diff - 2.0 * m21).abs() < 1e-15);
    }

    #[test]
    fn rn_analytic_forms() {
        let g = Regularizer::gaussian(1.0).unwrap();
        let ts = TwoScale::new(0.1, 1e-3).unwrap();
        let m20 = g.m20().unwrap();
        let r3 = rn_analytic(3, ts, &g).unwrap();
        assert_eq!(r3.terms().count(), 1);
        assert_eq!(r3.coefficient(0, -1), m20);
        let r2 = rn_analytic(2, ts, &g).unwrap();
        assert_eq!(r2.coefficient(-2, 0), -0.5);
        assert_eq!(r2.coefficient(-1, -1), m20);
        let r5 = rn_analytic(5, ts, &g).unwrap();
        assert_eq!(r5.coefficient(2, -1), m20);
        assert_eq!(r5.coefficient(1, 0), -2.0);
        assert_eq!(rn_analytic(4, ts, &g), Err(Error::Pole { n: 4 }));
    }

    #[test]
    fn moments_match_expansion() {
        for rho in [Regularizer::gaussian(1.0).unwrap(), Regularizer::compact_bump().unwrap()] {
            for a in [0.05, 0.1] {
                let ts = TwoScale::new(a, a / 100.0).unwrap();
                for n in [1, 2] {
                    let num = moment_mn_numeric(n, ts, &rho, &quad()).unwrap();
                    let ana = moment_mn_analytic(n, ts, &rho).unwrap().instantiate(a, ts.eps);
                    assert!(rel(num, ana) < 1e-3, "M{n} a={a} {num} {ana}");
                }
                for n in [2, 3] {
                    let num = rn_numeric(n, ts, &rho, &quad()).unwrap();
                    let ana = rn_analytic(n, ts, &rho).unwrap().instantiate(a, ts.eps);
                    assert!(rel(num, ana) < 1e-3, "R{n} a={a} {num} {ana}");
                }
            }
        }
    }

    #[test]
    fn m2_gaussian_reference_value() {
        let g = Regularizer::gaussian(1.0).unwrap();
        let ts = TwoScale::new(0.1, 1e-3).unwrap();
        let v = moment_mn_numeric(2, ts, &g, &quad()).unwrap();
        assert!(rel(v, 398.94) < 5e-3, "{v}");
        let r3 = rn_numeric(3, ts, &g, &quad()).unwrap();
        assert!(rel(r3, 398.94) < 5e-3, "{r3}");
    }

    #[test]
    fn m2_is_independent_of_cutoff() {
        let g = Regularizer::gaussian(1.0).unwrap();
        let eps = 5e-4;
        let m_a = moment_mn_numeric(2, TwoScale::new(0.05, eps).unwrap(), &g, &quad()).unwrap();
        let m_b = moment_mn_numeric(2, TwoScale::new(0.1, eps).unwrap(), &g, &quad()).unwrap();
        assert!(rel(m_a, m_b) < 5e-3);
    }

    #[test]
    fn asymmetric_kernel_shifts_m1() {
        let k = Regularizer::asymmetric_bump(0.3).unwrap();
        let a = 0.1;
        let ts = TwoScale::new(a, a / 100.0).unwrap();
        let num = moment_mn_numeric(1, ts, &k, &quad()).unwrap();
        let even = k.m20().unwrap() / (a * ts.eps) - 0.5 / (a * a);
        let shift = -k.m21().unwrap() / (a * a);
        assert!(rel(num - even, shift) < 0.05, "{} {}", num - even, shift);
    }

    #[test]
    fn moment_rejects_divergent_powers() {
        let g = Regularizer::gaussian(1.0).unwrap();
        let ts = TwoScale::new(0.1, 1e-3).unwrap();
        assert!(matches!(moment_mn_numeric(3, ts, &g, &quad()), Err(Error::Divergence(_))));
        assert!(matches!(rn_numeric(4, ts, &g, &quad()), Err(Error::Divergence(_))));
        let bad = TwoScale::new(0.1, 0.05).unwrap();
        assert!(moment_mn_numeric(2, bad, &g, &quad()).is_err());
    }

    #[test]
    fn delta_sq_weighted_law() {
        let g = Regularizer::gaussian(1.0).unwrap();
        let ts = TwoScale::new(0.1, 1e-3).unwrap();
        assert_eq!(delta_sq_weighted(|_| 0.0, ts, &g, &quad()).unwrap(), 0.0);
        let one = delta_sq_weighted(|_| 1.0, ts, &g, &quad()).unwrap();
        assert!(rel(one, g.m20().unwrap() / ts.eps) < 1e-8);
        let sq = delta_sq_weighted(|r| r * r, ts, &g, &quad()).unwrap();
        assert!(rel(sq, 3.9894) < 1e-2, "{sq}");
        let k = Regularizer::asymmetric_bump(0.3).unwrap();
        let lin = delta_sq_weighted(|r| r, ts, &k, &quad()).unwrap();
        let want = delta_sq_weighted_analytic(ts.a, 1.0, ts, &k).unwrap();
        assert!(rel(lin, want) < 1e-10, "{lin} {want}");
    }

    #[test]
    fn identities_hold_for_even_kernels() {
        for rho in [Regularizer::gaussian(1.0).unwrap(), Regularizer::compact_bump().unwrap()] {
            let ts = TwoScale::new(0.1, 1e-3).unwrap();
            let radii = identity_radii(ts.a);
            for tag in IdentityTag::ALL {
                let res = identity_residual(tag, ts, &rho, &radii).unwrap();
                assert!(res < 1e-5, "{tag} {} {res}", rho.id());
            }
        }
    }

    #[test]
    fn identities_vanish_at_zero_amplitude() {
        let g = Regularizer::gaussian(1.0).unwrap();
        let ts = TwoScale::new(0.1, 1e-3).unwrap();
        for tag in IdentityTag::ALL {
            assert_eq!(identity_residual_scaled(tag, ts, &g, &[0.09, 0.1, 0.2], 0.0).unwrap(), 0.0);
        }
        assert!(identity_residual(IdentityTag::Sen8, ts, &g, &[0.0]).is_err());
        assert_eq!("dip14".parse::<IdentityTag>().unwrap(), IdentityTag::Dip14);
        assert!("nope".parse::<IdentityTag>().is_err());
    }

    #[test]
    fn boundary_terms_vanish() {
        let g = Regularizer::gaussian(1.0).unwrap();
        let ts = TwoScale::new(0.1, 1e-3).unwrap();
        let emb = Embedding::new(&g, ts);
        for r in [ts.eps / 10.0, 1e3 * ts.a] {
            let f2 = emb.power_heaviside(2, r);
            assert!(r * r * f2 * f2 < 1e-3, "r={r}");
        }
    }
}
