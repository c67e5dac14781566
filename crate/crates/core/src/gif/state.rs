use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, cholesky_lower, symmetrize};

/// Mean and covariance of a Gaussian belief.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if covariance.shape() != (n, n) {
            return Err(Error::Domain(format!(
                "covariance shape {:?} does not match state dimension {n}",
                covariance.shape()
            )));
        }
        let scale = covariance.abs().max().max(1.0);
        if asymmetry(&covariance) > 1e-12 * scale {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        cholesky_lower(&covariance)?;
        Ok(Self { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Per-axis standard deviations.
    pub fn sigmas(&self) -> DVector<f64> {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedComponent {
    pub weight: f64,
    /// Mixing-parameter node this component came from, if any.
    pub node: Option<f64>,
    pub state: GaussianState,
}

/// A finite Gaussian mixture with normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGmm {
    components: Vec<WeightedComponent>,
}

impl WeightedGmm {
    pub fn new(components: Vec<WeightedComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("mixture has no components".into()));
        }
        if components.iter().any(|c| !(c.weight >= 0.0)) {
            return Err(Error::Domain("mixture weights must be non-negative".into()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self { components })
    }

    /// Builds a mixture from unnormalized log-weights, normalizing in the log
    /// domain (max subtracted before exponentiation).
    pub fn from_log_weights(log_weights: &[f64], nodes: &[Option<f64>], states: Vec<GaussianState>) -> Result<Self> {
        let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        let raw: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        let components = raw
            .into_iter()
            .zip(nodes)
            .zip(states)
            .map(|((w, &node), state)| WeightedComponent { weight: w / total, node, state })
            .collect();
        Ok(Self { components })
    }

    pub fn components(&self) -> &[WeightedComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }
}

/// Collapses a mixture to the Gaussian with the same first two moments.
pub fn moment_match(gmm: &WeightedGmm) -> GaussianState {
    let comps = gmm.components();
    if comps.len() == 1 {
        return comps[0].state.clone();
    }
    let n = comps[0].state.dim();
    let mut mean = DVector::zeros(n);
    for c in comps {
        mean += &c.state.mean * c.weight;
    }
    let mut cov = DMatrix::zeros(n, n);
    for c in comps {
        let d = &c.state.mean - &mean;
        cov += (&c.state.covariance + &d * d.transpose()) * c.weight;
    }
    GaussianState { mean, covariance: symmetrize(&cov) }
}

/// Extreme eigenvalues of one component's covariance paired with its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenWeight {
    pub node: Option<f64>,
    pub min_eig: f64,
    pub max_eig: f64,
    pub weight: f64,
}

/// Per-component `(min eigenvalue, max eigenvalue, weight)`, in component order.
pub fn eigen_weight_profile(gmm: &WeightedGmm) -> Vec<EigenWeight> {
    gmm.components()
        .iter()
        .map(|c| {
            let eig = symmetrize(&c.state.covariance).symmetric_eigenvalues();
            EigenWeight { node: c.node, min_eig: eig.min(), max_eig: eig.max(), weight: c.weight }
        })
        .collect()
}
