use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gif::{Dynamics, MeasurementModel};
use crate::linalg::asymmetry;

/// `x_k = F x_{k-1} + Γ v_{k-1}`, `y_k = H x_k + w_k` with `w ~ N(0, R)`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub f: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(f: DMatrix<f64>, gamma: DMatrix<f64>, h: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let n = f.nrows();
        if f.ncols() != n || gamma.nrows() != n || h.ncols() != n || r.shape() != (h.nrows(), h.nrows()) {
            return Err(Error::Domain("inconsistent linear model dimensions".into()));
        }
        if asymmetry(&r) > 1e-12 * r.abs().max().max(1.0) || r.clone().cholesky().is_none() {
            return Err(Error::Domain("measurement covariance must be symmetric positive definite".into()));
        }
        Ok(Self { f, gamma, h, r })
    }

    /// The 3-D toy system: `F = Γ = I`, `R = I`, and the given `H`.
    pub fn toy(h: DMatrix<f64>) -> Result<Self> {
        Self::new(DMatrix::identity(3, 3), DMatrix::identity(3, 3), h, DMatrix::identity(3, 3))
    }

    /// Full-rank measurement matrix of the toy problem.
    pub fn toy_full_rank_h() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0])
    }

    /// Rank-2 measurement matrix of the toy problem.
    pub fn toy_rank_deficient_h() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0])
    }
}

impl Dynamics for LinearModel {
    fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    fn noise_dim(&self) -> usize {
        self.gamma.ncols()
    }

    fn transition(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.f * x + &self.gamma * v)
    }

    fn jacobians(&self, _x: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((self.f.clone(), self.gamma.clone()))
    }
}

impl MeasurementModel for LinearModel {
    fn measurement_dim(&self) -> usize {
        self.h.nrows()
    }

    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.h * x)
    }

    fn jacobian(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.h.clone())
    }
}
