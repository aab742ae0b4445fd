//! Run configuration: JSON file plus command-line overrides.

use regfield::electron::Observable;
use regfield::embedding::TwoScale;
use regfield::fields::ElectronParams;
use regfield::observables::IdentityTag;
use regfield::quadrature::{QuadratureSpec, SphereGrid};
use regfield::regularizers::{KernelSpec, Regularizer};
use regfield::report::Format;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::CliError;

/// A kernel given either as CLI shorthand (`"gaussian:0.5"`) or as an object
/// (`{"name": "asymmetric-bump", "shift": 0.3}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelEntry {
    Short(String),
    Full(KernelSpec),
}

impl KernelEntry {
    pub fn spec(&self) -> Result<KernelSpec, CliError> {
        match self {
            KernelEntry::Short(s) => KernelSpec::parse(s).map_err(CliError::from),
            KernelEntry::Full(k) => Ok(k.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Bound on `rel_dev` for numeric-vs-analytic rows.
    pub rel_dev: f64,
    /// Bound on identity residuals.
    pub identity: f64,
    /// Bound on `|fitted - expected|` for eps-exponents.
    pub eps_exponent: f64,
    /// Bound on `|fitted - expected|` for a-exponents.
    pub a_exponent: f64,
    /// Bound on `rel_dev` of vector observables whose prediction is zero.
    pub vanishing: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            rel_dev: 1e-3,
            identity: 1e-5,
            eps_exponent: 0.01,
            a_exponent: 0.02,
            vanishing: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub sphere_order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            abs_tol: q.abs_tol,
            rel_tol: q.rel_tol,
            max_subdivisions: q.max_subdivisions,
            sphere_order: SphereGrid::DEFAULT_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kernels: Vec<KernelEntry>,
    pub a: Vec<f64>,
    /// Absolute eps values; when empty, `eps = a * eps_ratio` for each `a`.
    pub eps: Vec<f64>,
    pub eps_ratio: f64,
    pub electron: ElectronParams,
    pub quadrature: QuadratureConfig,
    /// Observable names for `electron`; empty selects all.
    pub observables: Vec<String>,
    /// Identity tags for `identities`; empty selects all.
    pub identities: Vec<IdentityTag>,
    /// Powers `n` of `M_n` rows in `moments`.
    pub m_powers: Vec<i32>,
    /// Powers `n` of `R_n` rows in `moments`.
    pub r_powers: Vec<i32>,
    pub thresholds: Thresholds,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub allow_out_of_regime: bool,
    pub deterministic: bool,
    pub sequential: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kernels: vec![KernelEntry::Short("gaussian".into())],
            a: vec![0.05, 0.1],
            eps: Vec::new(),
            eps_ratio: 0.01,
            electron: ElectronParams::default(),
            quadrature: QuadratureConfig::default(),
            observables: Vec::new(),
            identities: Vec::new(),
            m_powers: vec![1, 2],
            r_powers: vec![2, 3],
            thresholds: Thresholds::default(),
            out: None,
            format: Format::Csv,
            allow_out_of_regime: false,
            deterministic: true,
            sequential: false,
        }
    }
}

/// Command-line values that override config keys when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kernels: Vec<String>,
    pub a: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub observables: Vec<String>,
    pub allow_out_of_regime: bool,
    pub deterministic: bool,
    pub sequential: bool,
}

/// Parses `"0.05,0.1"` (whitespace tolerated).
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("'{t}' is not a number")))
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: Overrides) {
        if !o.kernels.is_empty() {
            self.kernels = o.kernels.into_iter().map(KernelEntry::Short).collect();
        }
        if let Some(a) = o.a {
            self.a = a;
        }
        if let Some(e) = o.eps {
            self.eps = e;
        }
        if o.out.is_some() {
            self.out = o.out;
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        if !o.observables.is_empty() {
            self.observables = o.observables;
        }
        self.allow_out_of_regime |= o.allow_out_of_regime;
        self.deterministic |= o.deterministic;
        self.sequential |= o.sequential;
    }

    pub fn quadrature_spec(&self) -> Result<QuadratureSpec, CliError> {
        let q = QuadratureSpec {
            abs_tol: self.quadrature.abs_tol,
            rel_tol: self.quadrature.rel_tol,
            max_subdivisions: self.quadrature.max_subdivisions,
            ..QuadratureSpec::default()
        };
        q.validate()?;
        Ok(q)
    }

    pub fn sphere_grid(&self) -> Result<SphereGrid, CliError> {
        if self.quadrature.sphere_order < 2 {
            return Err(CliError::Config("sphere_order must be >= 2".into()));
        }
        Ok(SphereGrid::product(self.quadrature.sphere_order))
    }

    pub fn build_kernels(&self) -> Result<Vec<Regularizer>, CliError> {
        if self.kernels.is_empty() {
            return Err(CliError::Config("no kernel selected".into()));
        }
        self.kernels
            .iter()
            .map(|k| k.spec()?.build().map_err(CliError::from))
            .collect()
    }

    pub fn electron_params(&self) -> Result<ElectronParams, CliError> {
        self.electron.validate()?;
        Ok(self.electron)
    }

    /// All `(a, eps)` pairs, in config order. Each pair must be in regime
    /// unless `allow_out_of_regime` is set.
    pub fn scales(&self) -> Result<Vec<TwoScale>, CliError> {
        if self.a.is_empty() {
            return Err(CliError::Config("no cutoff values 'a' given".into()));
        }
        let mut out = Vec::new();
        for &a in &self.a {
            let eps_list: Vec<f64> = if self.eps.is_empty() {
                vec![a * self.eps_ratio]
            } else {
                self.eps.clone()
            };
            for eps in eps_list {
                let ts = TwoScale::new(a, eps)?;
                if !ts.in_regime() && !self.allow_out_of_regime {
                    return Err(CliError::Config(format!(
                        "(a = {a}, eps = {eps}) is outside the regime eps <= a/10; \
                         pass --allow-out-of-regime to run it anyway"
                    )));
                }
                out.push(if self.allow_out_of_regime { ts.relaxed() } else { ts });
            }
        }
        Ok(out)
    }

    pub fn selected_observables(&self) -> Result<Vec<Observable>, CliError> {
        if self.observables.is_empty() {
            return Ok(Observable::ALL.to_vec());
        }
        let mut v = Vec::new();
        for s in &self.observables {
            for part in s.split(',').filter(|p| !p.trim().is_empty()) {
                let o = Observable::parse(part.trim())?;
                if !v.contains(&o) {
                    v.push(o);
                }
            }
        }
        Ok(v)
    }

    pub fn selected_identities(&self) -> Vec<IdentityTag> {
        if self.identities.is_empty() {
            IdentityTag::ALL.to_vec()
        } else {
            self.identities.clone()
        }
    }
}
