use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Least-squares coefficients of `sum_q c_q eps^q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub powers: Vec<i32>,
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

impl AsymptoticFit {
    pub fn coefficient(&self, power: i32) -> Option<f64> {
        self.powers
            .iter()
            .position(|&p| p == power)
            .map(|i| self.coefficients[i])
    }

    pub fn eval(&self, eps: f64) -> f64 {
        self.powers
            .iter()
            .zip(&self.coefficients)
            .map(|(&q, c)| c * eps.powi(q))
            .sum()
    }
}

const MAX_CONDITION: f64 = 1e12;

/// Fits `value ~ sum_q c_q eps^q` over the given powers.
///
/// Needs strictly more samples than powers and an `eps` range covering at
/// least one decade. Columns are scaled by the geometric-mean `eps` before
/// the SVD solve, so the condition check measures the model, not the units.
pub fn fit_asymptotics(samples: &[(f64, f64)], model_powers: &[i32]) -> Result<AsymptoticFit> {
    if model_powers.is_empty() {
        return Err(Error::Conditioning("empty model".into()));
    }
    if samples.len() < model_powers.len() + 1 {
        return Err(Error::Conditioning(format!(
            "{} samples for {} coefficients; need at least {}",
            samples.len(),
            model_powers.len(),
            model_powers.len() + 1
        )));
    }
    if samples.iter().any(|(e, v)| !(*e > 0.0) || !v.is_finite()) {
        return Err(Error::Conditioning("eps must be positive and values finite".into()));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (e, _)| (lo.min(*e), hi.max(*e)));
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::Conditioning(format!(
            "eps span {lo:e}..{hi:e} is less than one decade"
        )));
    }
    let eps_ref = (lo * hi).sqrt();
    let m = samples.len();
    let k = model_powers.len();
    let design = DMatrix::from_fn(m, k, |i, j| (samples[i].0 / eps_ref).powi(model_powers[j]));
    let rhs = DVector::from_iterator(m, samples.iter().map(|s| s.1));

    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) || smax / smin > MAX_CONDITION {
        return Err(Error::Conditioning(format!(
            "design condition number {:e}",
            smax / smin
        )));
    }
    let scaled = svd
        .solve(&rhs, smax * 1e-15)
        .map_err(|e| Error::Conditioning(e.to_string()))?;
    let resid = &design * &scaled - &rhs;
    let residual = (resid.norm_squared() / m as f64).sqrt();
    let coefficients = model_powers
        .iter()
        .enumerate()
        .map(|(j, &q)| scaled[j] / eps_ref.powi(q))
        .collect();
    Ok(AsymptoticFit {
        powers: model_powers.to_vec(),
        coefficients,
        residual,
    })
}

/// `value ~ prefactor * x^exponent` by least squares in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
}

/// Needs at least three samples with positive, distinct abscissae and
/// values of one sign.
pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<PowerLawFit> {
    if samples.len() < 3 {
        return Err(Error::Conditioning(format!(
            "power-law fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    let sign = samples[0].1.signum();
    if samples
        .iter()
        .any(|(x, v)| !(*x > 0.0) || *v == 0.0 || v.signum() != sign || !v.is_finite())
    {
        return Err(Error::Conditioning(
            "power-law fit needs positive abscissae and non-zero values of one sign".into(),
        ));
    }
    let n = samples.len() as f64;
    let lx: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|s| (s.1 * sign).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-24 {
        return Err(Error::Conditioning("abscissae are not distinct".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let prefactor = sign * (my - exponent * mx).exp();
    Ok(PowerLawFit {
        exponent,
        prefactor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (0..5).map(|k| 1e-2 * 10f64.powf(-0.5 * k as f64)).collect()
    }

    #[test]
    fn exact_inverse_model() {
        let s: Vec<_> = grid().into_iter().map(|e| (e, 3.0 / e)).collect();
        let fit = fit_asymptotics(&s, &[-1, 0, 1]).unwrap();
        assert!((fit.coefficient(-1).unwrap() - 3.0).abs() < 1e-10);
        assert!(fit.coefficient(0).unwrap().abs() < 1e-8);
        assert!(fit.coefficient(1).unwrap().abs() < 1e-4);
    }

    #[test]
    fn synthetic_with_unmodelled_quadratic() {
        let s: Vec<_> = grid()
            .into_iter()
            .map(|e| (e, 2.0 / e + 5.0 + e * e))
            .collect();
        let fit = fit_asymptotics(&s, &[-1, 0, 1]).unwrap();
        assert!((fit.coefficient(-1).unwrap() - 2.0).abs() < 1e-6);
        assert!((fit.coefficient(0).unwrap() - 5.0).abs() < 1e-4);
    }

    #[test]
    fn single_sample_is_rejected() {
        let e = fit_asymptotics(&[(1e-3, 1.0)], &[-1, 0, 1]).unwrap_err();
        assert!(matches!(e, Error::Conditioning(_)));
    }

    #[test]
    fn narrow_span_is_rejected() {
        let s: Vec<_> = [1e-3, 1.2e-3, 1.4e-3, 1.6e-3, 1.8e-3]
            .into_iter()
            .map(|e| (e, 1.0 / e))
            .collect();
        assert!(matches!(
            fit_asymptotics(&s, &[-1, 0, 1]),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn power_law_recovers_exponent() {
        let s: Vec<_> = grid().into_iter().map(|e| (e, 0.7 * e.powf(-1.0))).collect();
        let p = fit_power_law(&s).unwrap();
        assert!((p.exponent + 1.0).abs() < 1e-12);
        assert!((p.prefactor - 0.7).abs() < 1e-10);
        let neg: Vec<_> = s.iter().map(|(e, v)| (*e, -v)).collect();
        assert!((fit_power_law(&neg).unwrap().prefactor + 0.7).abs() < 1e-10);
    }

    #[test]
    fn power_law_needs_three_points() {
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }
}
