use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// First two cumulants of one epoch: the mean and the covariance.
///
/// Higher cumulants are the coefficients of `log E exp(z . X)` beyond degree 2;
/// they are not estimated.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochCumulants {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl EpochCumulants {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if covariance.shape() != (dim, dim) {
            return Err(Error::invalid(format!(
                "covariance is {:?}, mean has length {dim}",
                covariance.shape()
            )));
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("cumulants contain non-finite values".into()));
        }
        let scale = covariance.amax().max(1.0);
        if (&covariance - covariance.transpose()).amax() > 1e-12 * scale {
            return Err(Error::invalid("covariance is not symmetric"));
        }
        Ok(EpochCumulants { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance.clone().symmetric_eigen().eigenvalues.min()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CovarianceDivisor {
    /// `m - 1`.
    #[default]
    Unbiased,
    /// `m`.
    SampleSize,
}

/// Mean and covariance of the rows of `samples` (one observation per row).
pub fn estimate_cumulants(
    samples: &DMatrix<f64>,
    divisor: CovarianceDivisor,
) -> Result<EpochCumulants> {
    let m = samples.nrows();
    if m < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples per epoch, got {m}"
        )));
    }
    let mean = samples.row_mean().transpose();
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let denom = match divisor {
        CovarianceDivisor::Unbiased => (m - 1) as f64,
        CovarianceDivisor::SampleSize => m as f64,
    };
    let cov = centered.transpose() * &centered / denom;
    let cov = (&cov + cov.transpose()) * 0.5;
    EpochCumulants::new(mean, cov)
}
