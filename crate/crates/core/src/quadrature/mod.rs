//! Numerical integration engines.
//!
//! Radial integrals on [0, inf) with a sharp peak of width `eps` at the
//! cutoff radius, spherical quadrature on the unit sphere, and least-squares
//! extraction of asymptotic coefficients from epsilon sweeps.

mod fit;
mod kronrod;
mod legendre;
mod radial;
mod sphere;
mod sum;

pub use fit::{fit_asymptotics, fit_power_law, AsymptoticFit, PowerLawFit};
pub use kronrod::{gauss_kronrod_21, integrate_segments, Segment, SegmentMap};
pub use legendre::GaussLegendre;
pub use radial::{integrate_radial, radial_segments, PEAK_WINDOW_FACTOR};
pub use sphere::SphereGrid;
pub use sum::{compensated_sum, NeumaierSum};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerances and peak hints for [`integrate_radial`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Radii around which the integrand is sharply peaked.
    pub peak_locations: Vec<f64>,
    /// Width of each peak, typically `eps` times the kernel half-width.
    pub peak_width: f64,
    /// Extra split points (e.g. compact-support edges mapped to `r`).
    #[serde(default)]
    pub breakpoints: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            peak_locations: Vec::new(),
            peak_width: 1.0,
            breakpoints: Vec::new(),
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Copy of `self` with the peak hints replaced.
    pub fn peaked_at(&self, peaks: &[f64], width: f64, breakpoints: &[f64]) -> Self {
        Self {
            peak_locations: peaks.to_vec(),
            peak_width: width,
            breakpoints: breakpoints.to_vec(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if !(self.peak_width > 0.0) {
            return Err(Error::Domain(format!(
                "peak width must be positive, got {}",
                self.peak_width
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Domain("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}
