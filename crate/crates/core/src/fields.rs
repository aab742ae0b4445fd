//! Regularized Coulomb and dipole fields assembled from term families.

use crate::embedding::{Embedding, Family, SingularTerm, TermKind, TwoScale};
use crate::error::{Error, Result};
use crate::regularizers::Regularizer;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Charge, magnetic moment and speed of light (Gaussian units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronParams {
    pub e: f64,
    pub mu: Vector3<f64>,
    #[serde(default = "unit_c")]
    pub c: f64,
}

fn unit_c() -> f64 {
    1.0
}

impl Default for ElectronParams {
    fn default() -> Self {
        Self {
            e: 1.0,
            mu: Vector3::z(),
            c: 1.0,
        }
    }
}

impl ElectronParams {
    pub fn new(e: f64, mu: Vector3<f64>, c: f64) -> Result<Self> {
        let p = Self { e, mu, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Domain(format!("c must be positive, got {}", self.c)));
        }
        if !self.e.is_finite() || !self.mu.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("e and mu must be finite".into()));
        }
        Ok(())
    }
}

/// Unit vector `u(theta, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereDirection(Vector3<f64>);

impl SphereDirection {
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain("direction must be a non-zero finite vector".into()));
        }
        Ok(Self(v / n))
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self(Vector3::new(st * cp, st * sp, ct))
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }
}

/// `sum_i r^p_i * term_i(r)`: a field profile kept in decomposed form.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    name: String,
    embedding: Embedding,
    terms: Vec<(i32, SingularTerm)>,
}

impl RadialProfile {
    pub fn new(name: &str, embedding: Embedding, terms: Vec<(i32, SingularTerm)>) -> Self {
        Self {
            name: name.to_string(),
            embedding,
            terms,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    /// `(r_power, term)` pairs; the term carries its own prefactor.
    pub fn terms(&self) -> &[(i32, SingularTerm)] {
        &self.terms
    }

    /// Value of each component at `r`.
    ///
    /// At `r = 0` a component with a negative power of `r` contributes zero
    /// when its term vanishes there (the cutoff makes every family vanish at
    /// the origin to all orders); otherwise the call fails with
    /// [`Error::PoleAtOrigin`].
    pub fn components_at(&self, r: f64) -> Result<Vec<f64>> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!("radius must be finite and >= 0, got {r}")));
        }
        let a = self.embedding.a();
        let vals = self.embedding.values(r);
        self.terms
            .iter()
            .map(|(p, t)| {
                let tv = match vals.term(t, a) {
                    Some(v) => v,
                    None => self.embedding.term(t, r)?,
                };
                if *p < 0 && r == 0.0 {
                    if tv == 0.0 {
                        Ok(0.0)
                    } else {
                        Err(Error::PoleAtOrigin)
                    }
                } else {
                    Ok(r.powi(*p) * tv)
                }
            })
            .collect()
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        Ok(self.components_at(r)?.iter().sum())
    }

    /// The same decomposition as an `eps`-indexed family at fixed `a`.
    pub fn family<'a>(&self, rho: &'a Regularizer) -> Family<'a> {
        Family::radial_terms(rho, self.embedding.a(), self.terms.clone())
    }

    /// Multiplies every component by `c`.
    pub fn scaled(mut self, c: f64) -> Self {
        for (_, t) in &mut self.terms {
            t.coefficient *= c;
        }
        self
    }
}

fn f(n: i32) -> SingularTerm {
    SingularTerm::power_heaviside(n)
}

fn delta(k: u32, a_power: i32) -> SingularTerm {
    SingularTerm::delta(k).scaled(1.0, a_power)
}

fn check(p: &ElectronParams) -> Result<()> {
    p.validate()
}

/// `phi = e (r^-1 H_a)_eps`
pub fn coulomb_potential(p: &ElectronParams, ts: TwoScale, rho: &Regularizer) -> Result<RadialProfile> {
    check(p)?;
    Ok(RadialProfile::new(
        "coulomb_potential",
        Embedding::new(rho, ts),
        vec![(0, f(1).scaled(p.e, 0))],
    ))
}

/// Radial component `E = e[(r^-2 H_a)_eps - (a^-1 delta_a)_eps]`.
pub fn coulomb_field(p: &ElectronParams, ts: TwoScale, rho: &Regularizer) -> Result<RadialProfile> {
    check(p)?;
    Ok(RadialProfile::new(
        "coulomb_field",
        Embedding::new(rho, ts),
        vec![(0, f(2).scaled(p.e, 0)), (0, delta(0, -1).scaled(-p.e, 0))],
    ))
}

/// `rho_charge = (e/4pi)[(2/r)(r^-2 H_a) - 2(r^-3 H_a) + a^-2 delta_a
/// - (2/r) a^-1 delta_a - a^-1 delta_a']`, all embedded.
pub fn charge_density(p: &ElectronParams, ts: TwoScale, rho: &Regularizer) -> Result<RadialProfile> {
    check(p)?;
    let k = p.e / (4.0 * PI);
    Ok(RadialProfile::new(
        "charge_density",
        Embedding::new(rho, ts),
        vec![
            (-1, f(2).scaled(2.0 * k, 0)),
            (0, f(3).scaled(-2.0 * k, 0)),
            (0, delta(0, -2).scaled(k, 0)),
            (-1, delta(0, -1).scaled(-2.0 * k, 0)),
            (0, delta(1, -1).scaled(-k, 0)),
        ],
    ))
}

/// `h1 = (1/r)(r^-2 H_a)_eps`, `h2 = (a^-2 delta_a)_eps - 2(r^-3 H_a)_eps`.
pub fn dipole_h1h2(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
) -> Result<(RadialProfile, RadialProfile)> {
    check(p)?;
    let emb = Embedding::new(rho, ts);
    Ok((
        RadialProfile::new("dipole_h1", emb.clone(), vec![(-1, f(2))]),
        RadialProfile::new(
            "dipole_h2",
            emb,
            vec![(0, delta(0, -2)), (0, f(3).scaled(-2.0, 0))],
        ),
    ))
}

/// `H = (mu + u(mu.u)) h1 + (mu - u(mu.u)) h2`
pub fn dipole_field(
    p: &ElectronParams,
    ts: TwoScale,
    rho: &Regularizer,
    u: SphereDirection,
    r: f64,
) -> Result<Vector3<f64>> {
    check(p)?;
    let emb = Embedding::new(rho, ts);
    let (h1, h2) = dipole_profiles_at(&emb, r)?;
    Ok(assemble_dipole(&p.mu, &u.vector(), h1, h2))
}

pub(crate) fn assemble_dipole(mu: &Vector3<f64>, u: &Vector3<f64>, h1: f64, h2: f64) -> Vector3<f64> {
    let par = u * mu.dot(u);
    (mu + par) * h1 + (mu - par) * h2
}

fn dipole_profiles_at(emb: &Embedding, r: f64) -> Result<(f64, f64)> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("radius must be >= 0, got {r}")));
    }
    let a = emb.a();
    let v = emb.values(r);
    let h1 = if r == 0.0 {
        if v.f[2] == 0.0 {
            0.0
        } else {
            return Err(Error::PoleAtOrigin);
        }
    } else {
        v.f[2] / r
    };
    let h2 = v.delta[0] / (a * a) - 2.0 * v.f[3];
    Ok((h1, h2))
}

/// Radial factor of `E x H = e (mu x u) P(r)`:
/// `P = [(r^-2 H_a) - a^-1 delta_a][2(r^-3 H_a) - (1/r)(r^-2 H_a) - a^-2 delta_a]`.
pub fn cross_profile(p: &ElectronParams, ts: TwoScale, rho: &Regularizer, r: f64) -> Result<f64> {
    check(p)?;
    let emb = Embedding::new(rho, ts);
    let (h1, h2) = dipole_profiles_at(&emb, r)?;
    let v = emb.values(r);
    let e = v.f[2] - v.delta[0] / ts.a;
    Ok(-e * (h1 + h2))
}

/// True if any term of `profile` is a delta-type family.
pub fn has_delta_terms(profile: &RadialProfile) -> bool {
    profile
        .terms()
        .iter()
        .any(|(_, t)| matches!(t.kind, TermKind::DeltaDerivative { .. }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{pair_with_test, PairingDomain, PairingOutcome, TestFunction};
    use crate::quadrature::{integrate_radial, QuadratureSpec};

    fn setup(a: f64, eps: f64) -> (ElectronParams, TwoScale, Regularizer) {
        (
            ElectronParams::default(),
            TwoScale::new(a, eps).unwrap(),
            Regularizer::gaussian(1.0).unwrap(),
        )
    }

    fn radii(a: f64) -> Vec<f64> {
        // 20 points spanning [a/2, 10a], denser near a
        let mut v: Vec<f64> = (0..10).map(|i| a * (0.5 + 0.06 * i as f64)).collect();
        v.extend((0..10).map(|i| a * (1.04 + 8.96 * (i as f64 / 9.0).powi(2))));
        v
    }

    fn d5(f: &dyn Fn(f64) -> f64, r: f64, h: f64) -> f64 {
        (8.0 * (f(r + h) - f(r - h)) - (f(r + 2.0 * h) - f(r - 2.0 * h))) / (12.0 * h)
    }

    #[test]
    fn field_is_minus_gradient_of_potential() {
        for rho in [Regularizer::gaussian(1.0).unwrap(), Regularizer::compact_bump().unwrap()] {
            let (p, ts, _) = setup(0.1, 1e-3);
            let phi = coulomb_potential(&p, ts, &rho).unwrap();
            let e = coulomb_field(&p, ts, &rho).unwrap();
            let h = ts.eps / 50.0;
            for r in radii(ts.a) {
                let fd = -d5(&|x| phi.eval(x).unwrap(), r, h);
                let v = e.eval(r).unwrap();
                assert!((fd - v).abs() <= 1e-8f64.max(1e-4 * v.abs()), "r={r} {fd} {v}");
            }
        }
    }

    #[test]
    fn density_is_divergence_of_field() {
        for rho in [Regularizer::gaussian(1.0).unwrap(), Regularizer::compact_bump().unwrap()] {
            let (p, ts, _) = setup(0.1, 1e-3);
            let e = coulomb_field(&p, ts, &rho).unwrap();
            let q = charge_density(&p, ts, &rho).unwrap();
            let h = ts.eps / 50.0;
            for r in radii(ts.a) {
                let ev = e.eval(r).unwrap();
                let div = (d5(&|x| e.eval(x).unwrap(), r, h) + 2.0 * ev / r) / (4.0 * PI);
                let v = q.eval(r).unwrap();
                assert!((div - v).abs() <= 1e-8f64.max(1e-4 * v.abs()), "r={r} {div} {v}");
            }
        }
    }

    #[test]
    fn classical_limits() {
        let (p, ts, rho) = setup(0.1, 1e-3);
        let phi = coulomb_potential(&p, ts, &rho).unwrap();
        let e = coulomb_field(&p, ts, &rho).unwrap();
        let (h1, h2) = dipole_h1h2(&p, ts, &rho).unwrap();
        for r in [1.0, 1.5, 3.0, 10.0] {
            let rel = |x: f64, y: f64| ((x - y) / y).abs();
            assert!(rel(phi.eval(r).unwrap(), 1.0 / r) < 1e-5);
            assert!(rel(e.eval(r).unwrap(), 1.0 / (r * r)) < 1e-5);
            assert!(rel(h1.eval(r).unwrap(), r.powi(-3)) < 1e-5);
            assert!(rel(h2.eval(r).unwrap(), -2.0 * r.powi(-3)) < 1e-5);
            assert!(rel(cross_profile(&p, ts, &rho, r).unwrap(), r.powi(-5)) < 1e-5);
            let u = SphereDirection::new(Vector3::z()).unwrap();
            let hz = dipole_field(&p, ts, &rho, u, r).unwrap();
            if r >= 3.0 {
                assert!(rel(hz.norm(), 2.0 * r.powi(-3)) < 1e-6);
            }
            let u = SphereDirection::from_angles(0.7, 1.9);
            let h = dipole_field(&p, ts, &rho, u, r).unwrap();
            let uv = u.vector();
            let classical = (uv * 3.0 * p.mu.dot(&uv) - p.mu) / r.powi(3);
            assert!((h - classical).norm() < 1e-5 * classical.norm());
        }
    }

    #[test]
    fn field_at_cutoff_matches_direct_quadrature() {
        let (p, ts, rho) = setup(0.1, 1e-3);
        let e = coulomb_field(&p, ts, &rho).unwrap();
        let got = e.eval(ts.a).unwrap();
        // Direct evaluation of the defining integral over y in [0, inf).
        let spec = QuadratureSpec::with_tolerances(1e-14, 1e-13).peaked_at(&[0.0], 1.0, &[]);
        let head = integrate_radial(|y| rho.density(y) / (ts.a + ts.eps * y).powi(2), &spec).unwrap();
        let want = head.value - rho.density(0.0) / (ts.eps * ts.a);
        assert!(((got - want) / want).abs() < 1e-10, "{got} {want}");
    }

    #[test]
    fn profiles_vanish_at_origin() {
        let (p, ts, rho) = setup(0.1, 1e-3);
        assert_eq!(coulomb_potential(&p, ts, &rho).unwrap().eval(0.0).unwrap(), 0.0);
        assert_eq!(charge_density(&p, ts, &rho).unwrap().eval(0.0).unwrap(), 0.0);
        assert_eq!(cross_profile(&p, ts, &rho, 0.0).unwrap(), 0.0);
        // Out of regime the kernel reaches the origin and the 1/r terms blow up.
        let wide = TwoScale::new(0.1, 0.05).unwrap();
        let q = charge_density(&p, wide, &rho).unwrap();
        assert_eq!(q.eval(0.0), Err(Error::PoleAtOrigin));
    }

    #[test]
    fn zero_charge_gives_zero_profiles() {
        let (_, ts, rho) = setup(0.1, 1e-3);
        let p = ElectronParams::new(0.0, Vector3::zeros(), 1.0).unwrap();
        for r in [0.05, 0.1, 0.2] {
            assert_eq!(coulomb_potential(&p, ts, &rho).unwrap().eval(r).unwrap(), 0.0);
            assert_eq!(coulomb_field(&p, ts, &rho).unwrap().eval(r).unwrap(), 0.0);
            assert_eq!(charge_density(&p, ts, &rho).unwrap().eval(r).unwrap(), 0.0);
            let u = SphereDirection::from_angles(0.3, 0.2);
            assert_eq!(dipole_field(&p, ts, &rho, u, r).unwrap(), Vector3::zeros());
        }
        assert!(ElectronParams::new(1.0, Vector3::z(), 0.0).is_err());
    }

    #[test]
    fn dipole_field_special_directions() {
        let (_, ts, rho) = setup(0.1, 1e-3);
        let p = ElectronParams::new(1.0, Vector3::new(0.0, 0.0, 2.0), 1.0).unwrap();
        let (h1, h2) = dipole_h1h2(&p, ts, &rho).unwrap();
        let r = 0.1004;
        let (v1, v2) = (h1.eval(r).unwrap(), h2.eval(r).unwrap());
        let perp = dipole_field(&p, ts, &rho, SphereDirection::from_angles(PI / 2.0, 0.4), r).unwrap();
        assert!((perp - p.mu * (v1 + v2)).norm() <= 1e-12 * perp.norm());
        let par = dipole_field(&p, ts, &rho, SphereDirection::from_angles(0.0, 0.0), r).unwrap();
        assert!((par - p.mu * (2.0 * v1)).norm() <= 1e-12 * par.norm());
    }

    #[test]
    fn total_charge_is_e() {
        let (p, _, rho) = setup(0.1, 1e-3);
        let a = 0.1;
        let ts = TwoScale::new(a, 1e-3).unwrap();
        let q = charge_density(&p, ts, &rho).unwrap();
        let fam = q.family(&rho);
        let t = TestFunction::plateau(3.0 * a, 6.0 * a);
        let grid = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let spec = QuadratureSpec::with_tolerances(1e-12, 1e-10);
        match pair_with_test(&fam, &t, &grid, PairingDomain::Radial, Some(a), &spec).unwrap() {
            PairingOutcome::Converged { value, samples, .. } => {
                assert!((value - 1.0).abs() < 1e-4, "{value}");
                // finite-eps drift is the O(eps^2) far-field correction
                let (_, last) = samples[samples.len() - 1];
                assert!((last - 1.0).abs() < 1e-4, "{last}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn density_pairs_to_test_value_at_cutoff() {
        let (p, _, rho) = setup(0.1, 1e-3);
        let a = 0.1;
        let ts = TwoScale::new(a, 1e-3).unwrap();
        let fam = charge_density(&p, ts, &rho).unwrap().family(&rho);
        let t = TestFunction::gaussian(0.3);
        let grid = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let spec = QuadratureSpec::with_tolerances(1e-12, 1e-10);
        match pair_with_test(&fam, &t, &grid, PairingDomain::Radial, Some(a), &spec).unwrap() {
            PairingOutcome::Converged { value, .. } => {
                // e T(a) + e a T'(a): the delta part of E survives at finite a
                // and only the first term remains as a -> 0.
                let dt = -2.0 * a / (0.3 * 0.3) * t.eval(a);
                let want = t.eval(a) + a * dt;
                assert!((value - want).abs() < 1e-6, "{value} {want}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profile_components_sum_to_eval() {
        let (p, ts, rho) = setup(0.05, 5e-4);
        let q = charge_density(&p, ts, &rho).unwrap();
        assert!(has_delta_terms(&q));
        for r in radii(ts.a) {
            let parts: f64 = q.components_at(r).unwrap().iter().sum();
            assert_eq!(parts, q.eval(r).unwrap());
        }
    }
}
