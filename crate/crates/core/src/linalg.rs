//! Small dense linear-algebra helpers shared by the filters.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute asymmetry `|M_ij - M_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Lower Cholesky factor of a symmetric positive semidefinite matrix.
///
/// The input is symmetrized first. Semidefinite or slightly indefinite
/// inputs (round-off after an update) receive a diagonal jitter scaled to the
/// mean diagonal, growing until the factorization succeeds. An exactly zero
/// matrix factors to zero.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("Cholesky of non-finite matrix".into()));
    }
    let sym = symmetrize(m);
    if let Some(ch) = sym.clone().cholesky() {
        return Ok(ch.l());
    }
    let n = sym.nrows();
    let scale = sym.diagonal().iter().map(|v| v.abs()).sum::<f64>() / n.max(1) as f64;
    if scale == 0.0 {
        if sym.iter().all(|&v| v == 0.0) {
            return Ok(DMatrix::zeros(n, n));
        }
        return Err(Error::Numerical("Cholesky of indefinite matrix".into()));
    }
    let mut jitter = 1e-14 * scale;
    while jitter <= 1e-6 * scale {
        let mut trial = sym.clone();
        for i in 0..n {
            trial[(i, i)] += jitter;
        }
        if let Some(ch) = trial.cholesky() {
            return Ok(ch.l());
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical("Cholesky failed: matrix is not positive semidefinite".into()))
}

/// `L Lᵀ`, exactly symmetric.
pub fn outer_square(l: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(l * l.transpose()))
}

/// Factorization of a symmetric positive-definite matrix for repeated
/// solves and the log-determinant.
pub struct SpdFactor {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SpdFactor {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        symmetrize(m)
            .cholesky()
            .map(|chol| Self { chol })
            .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))
    }

    pub fn ln_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}

/// Gaussian log-density of a residual `r` with covariance factored in `s`:
/// `-½ [ln |2π S| + rᵀ S⁻¹ r]`.
pub fn gaussian_log_likelihood(r: &DVector<f64>, s: &SpdFactor) -> f64 {
    let m = r.len() as f64;
    let maha = r.dot(&s.solve_vec(r));
    -0.5 * (m * (2.0 * std::f64::consts::PI).ln() + s.ln_det() + maha)
}
