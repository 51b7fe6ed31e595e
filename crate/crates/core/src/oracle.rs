//! Exact posterior for two Gaussian classes with a shared covariance.
//!
//! `log f(x|+)/f(x|−) = a·x + c₀` with `a = Σ⁻¹(μ⁺ − μ⁻)` and
//! `c₀ = −½(μ⁺ᵀΣ⁻¹μ⁺ − μ⁻ᵀΣ⁻¹μ⁻)`; the posterior is `σ(a·x + c₀ + ln(π⁺/π⁻))`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::WeightedTrainer;
use crate::dataset::GaussianSpec;
use crate::error::{Error, Result};
use crate::posterior::{PosteriorEstimator, Status};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianOracle {
    direction: Vec<f64>,
    log_ratio_offset: f64,
    prior_plus: f64,
}

impl GaussianOracle {
    /// Oracle with the spec's own prior.
    pub fn new(spec: &GaussianSpec) -> Result<Self> {
        Self::with_prior(spec, spec.prior_plus)
    }

    /// Oracle with an explicit positive prior (e.g. the observed proportion).
    pub fn with_prior(spec: &GaussianSpec, prior_plus: f64) -> Result<Self> {
        if !(prior_plus > 0.0 && prior_plus < 1.0) {
            return Err(Error::domain("prior_plus must lie in (0, 1)"));
        }
        spec.cholesky()?;
        let cov: DMatrix<f64> = spec.cov_matrix();
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::domain("cov is singular"))?;
        let mp = DVector::from_column_slice(&spec.mu_plus);
        let mm = DVector::from_column_slice(&spec.mu_minus);
        let a = chol.solve(&(&mp - &mm));
        let qp = mp.dot(&chol.solve(&mp));
        let qm = mm.dot(&chol.solve(&mm));
        Ok(Self {
            direction: a.iter().copied().collect(),
            log_ratio_offset: -0.5 * (qp - qm),
            prior_plus,
        })
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn prior_plus(&self) -> f64 {
        self.prior_plus
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.direction.len() {
            return Err(Error::Dimension {
                expected: self.direction.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `ln f(x|+) − ln f(x|−)`.
    pub fn log_density_ratio(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(crate::classifiers::dot(&self.direction, x) + self.log_ratio_offset)
    }

    /// `f(x|+) / f(x|−)`.
    pub fn density_ratio(&self, x: &[f64]) -> Result<f64> {
        self.log_density_ratio(x).map(f64::exp)
    }

    /// Posterior log-odds `ln P(+|x)/P(−|x)`.
    pub fn log_odds(&self, x: &[f64]) -> Result<f64> {
        let prior = (self.prior_plus / (1.0 - self.prior_plus)).ln();
        Ok(self.log_density_ratio(x)? + prior)
    }

    pub fn true_posterior(&self, x: &[f64]) -> Result<f64> {
        let z = self.log_odds(x)?;
        Ok(if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        })
    }
}

/// [`GaussianOracle::true_posterior`].
pub fn true_posterior(oracle: &GaussianOracle, x: &[f64]) -> Result<f64> {
    oracle.true_posterior(x)
}

/// [`GaussianOracle::density_ratio`].
pub fn density_ratio(oracle: &GaussianOracle, x: &[f64]) -> Result<f64> {
    oracle.density_ratio(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointComparison {
    pub x: Vec<f64>,
    pub estimate: f64,
    pub truth: f64,
    pub error: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub mae: f64,
    pub max_error: f64,
    pub n_points: usize,
    pub clamped: usize,
    pub degenerate: usize,
    pub points: Vec<PointComparison>,
}

/// Estimates the posterior at every point and compares it with the oracle.
/// Points are processed in parallel on the current rayon pool; the report
/// keeps input order.
pub fn compare_with_oracle<T: WeightedTrainer>(
    estimator: &PosteriorEstimator<T>,
    oracle: &GaussianOracle,
    points: &[Vec<f64>],
) -> Result<OracleReport> {
    if points.is_empty() {
        return Err(Error::domain("no points to compare"));
    }
    let rows: Vec<PointComparison> = points
        .par_iter()
        .map(|x| {
            let e = estimator.estimate(x)?;
            let truth = oracle.true_posterior(x)?;
            Ok(PointComparison {
                x: x.clone(),
                estimate: e.probability,
                truth,
                error: (e.probability - truth).abs(),
                status: e.status,
            })
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    Ok(OracleReport {
        mae: rows.iter().map(|r| r.error).sum::<f64>() / n as f64,
        max_error: rows.iter().map(|r| r.error).fold(0.0, f64::max),
        n_points: n,
        clamped: rows
            .iter()
            .filter(|r| matches!(r.status, Status::ClampedLow | Status::ClampedHigh))
            .count(),
        degenerate: rows.iter().filter(|r| r.status == Status::Degenerate).count(),
        points: rows,
    })
}
