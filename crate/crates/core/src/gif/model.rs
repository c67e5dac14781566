use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Discrete-time transition `x_k = f(x_{k-1}, v_{k-1})` with non-additive noise.
pub trait Dynamics {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;

    fn transition(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>>;

    /// State and noise Jacobians `(F, Γ)` at `(x, 0)`.
    ///
    /// Defaults to central differences of [`Dynamics::transition`].
    fn jacobians(&self, x: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let zero = DVector::zeros(self.noise_dim());
        let f = central_difference(|p| self.transition(p, &zero), x, state_step)?;
        let g = central_difference(|p| self.transition(x, p), &zero, noise_step)?;
        Ok((f, g))
    }
}

/// Measurement function `y = h(x) + w` with additive Gaussian noise.
pub trait MeasurementModel {
    fn measurement_dim(&self) -> usize;

    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// `∂h/∂x`; defaults to central differences.
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        central_difference(|p| self.measure(p), x, state_step)
    }

    /// `a - b` in measurement space. Models with angular components wrap here.
    fn residual(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        a - b
    }
}

fn state_step(v: f64) -> f64 {
    1e-6 * v.abs().max(1.0)
}

fn noise_step(_: f64) -> f64 {
    1e-6
}

/// Central-difference Jacobian of `f` at `x` with per-coordinate step `step(x_j)`.
pub fn central_difference<F>(f: F, x: &DVector<f64>, step: fn(f64) -> f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut cols = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let h = step(x[j]);
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += h;
        minus[j] -= h;
        let d = (f(&plus)? - f(&minus)?) / (2.0 * h);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite Jacobian column {j}")));
        }
        cols.push(d);
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Wraps a model and counts calls to [`Dynamics::transition`].
pub struct CountingDynamics<'a, D: ?Sized> {
    inner: &'a D,
    calls: Cell<usize>,
}

impl<'a, D: Dynamics + ?Sized> CountingDynamics<'a, D> {
    pub fn new(inner: &'a D) -> Self {
        Self { inner, calls: Cell::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }
}

impl<D: Dynamics + ?Sized> Dynamics for CountingDynamics<'_, D> {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    fn noise_dim(&self) -> usize {
        self.inner.noise_dim()
    }

    fn transition(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.calls.set(self.calls.get() + 1);
        self.inner.transition(x, v)
    }

    fn jacobians(&self, x: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.inner.jacobians(x)
    }
}
