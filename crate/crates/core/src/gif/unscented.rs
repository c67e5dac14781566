//! Unscented-transform weights and the sigma-point measurement update.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gif::model::MeasurementModel;
use crate::linalg::{gaussian_log_likelihood, symmetrize, SpdFactor};

/// Scaled unscented-transform weights for an `n`-dimensional sigma set with
/// `α = 1`, `β = 2`, `κ = 3 - n`.
#[derive(Debug, Clone, Copy)]
pub struct UtWeights {
    /// `√(n + λ)`, the sigma-point spread along each factor column.
    pub spread: f64,
    pub mean0: f64,
    pub cov0: f64,
    pub other: f64,
}

impl UtWeights {
    pub fn new(n: usize) -> Self {
        const ALPHA: f64 = 1.0;
        const BETA: f64 = 2.0;
        let nf = n as f64;
        let kappa = 3.0 - nf;
        let lambda = ALPHA * ALPHA * (nf + kappa) - nf;
        let c = nf + lambda;
        Self {
            spread: c.sqrt(),
            mean0: lambda / c,
            cov0: lambda / c + (1.0 - ALPHA * ALPHA + BETA),
            other: 1.0 / (2.0 * c),
        }
    }

    /// Weighted mean and covariance of `center` plus the symmetric points.
    pub fn moments(&self, center: &DVector<f64>, points: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
        let mut mean = center * self.mean0;
        for p in points {
            mean += p * self.other;
        }
        let d0 = center - &mean;
        let mut cov = &d0 * d0.transpose() * self.cov0;
        for p in points {
            let d = p - &mean;
            cov += &d * d.transpose() * self.other;
        }
        (mean, symmetrize(&cov))
    }
}

/// Result of one Gaussian measurement update.
#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub log_likelihood: f64,
}

/// Sigma-point measurement update of `(mean, chol chol ᵀ)`.
///
/// Predicted-measurement residuals are taken relative to the center point's
/// measurement through [`MeasurementModel::residual`], so wrapped components
/// average correctly.
pub fn ut_measurement_update<M: MeasurementModel + ?Sized>(
    mean: &DVector<f64>,
    chol: &DMatrix<f64>,
    y: &DVector<f64>,
    model: &M,
    r: &DMatrix<f64>,
) -> Result<UpdateOutcome> {
    let n = mean.len();
    let w = UtWeights::new(n);
    let mut states = Vec::with_capacity(2 * n);
    for j in 0..n {
        let col = chol.column(j) * w.spread;
        states.push(mean + &col);
        states.push(mean - &col);
    }
    let y0 = model.measure(mean)?;
    let zero = DVector::zeros(y0.len());
    let offsets: Vec<DVector<f64>> =
        states.iter().map(|s| model.measure(s).map(|ys| model.residual(&ys, &y0))).collect::<Result<_>>()?;
    let (offset_mean, mut pyy) = w.moments(&zero, &offsets);
    pyy += r;
    let y_pred = &y0 + &offset_mean;

    // The center point has zero state deviation and drops out.
    let mut pxy = DMatrix::zeros(n, y0.len());
    for (s, o) in states.iter().zip(&offsets) {
        pxy += (s - mean) * (o - &offset_mean).transpose() * w.other;
    }
    let s_factor = SpdFactor::new(&pyy)?;
    let gain = &pxy * s_factor.inverse();
    let innovation = model.residual(y, &y_pred);
    let new_mean = mean + &gain * &innovation;
    let prior = chol * chol.transpose();
    let covariance = symmetrize(&(prior - &gain * &pyy * gain.transpose()));
    if new_mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite updated mean".into()));
    }
    Ok(UpdateOutcome { mean: new_mean, covariance, log_likelihood: gaussian_log_likelihood(&innovation, &s_factor) })
}
