//! Symmetric multivariate Laplace (ML) distribution.
//!
//! With mean `μ` and covariance `Σ` in `d` dimensions the density is
//!
//! ```text
//! p(x) = 2 / sqrt(|2πΣ|) · (q/2)^{v/2} · K_v(sqrt(2q)),   q = (x-μ)ᵀ Σ⁻¹ (x-μ),
//! ```
//!
//! with `v = (2 - d) / 2` and `K_v` the modified Bessel function of the
//! second kind. The same law is the Gaussian scale mixture
//! `∫₀^∞ e^{-z} N(x; μ, zΣ) dz`, which is how the filter consumes it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::asymmetry;
use crate::quadrature::GaussLaguerreRule;

#[derive(Debug, Clone)]
pub struct MlDistribution {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol: DMatrix<f64>,
    ln_det: f64,
    bessel_order: f64,
}

/// One component of the scale-mixture form: `N(x; μ, zΣ)` carrying mixing
/// log-density `-z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMixand {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub log_density: f64,
}

impl MlDistribution {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::Domain("ML distribution needs dimension >= 1".into()));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::Domain(format!(
                "covariance is {}x{}, expected {d}x{d}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let scale = covariance.abs().max().max(1.0);
        if asymmetry(&covariance) > 1e-12 * scale {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Domain("covariance is not positive definite".into()))?
            .l();
        let ln_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self { mean, covariance, chol, ln_det, bessel_order: (2.0 - d as f64) / 2.0 })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// `v = (2 - d) / 2`.
    pub fn bessel_order(&self) -> f64 {
        self.bessel_order
    }

    fn mahalanobis_sq(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!("point has dimension {}, distribution has {}", x.len(), self.dim())));
        }
        let diff = x - &self.mean;
        let w = self
            .chol
            .solve_lower_triangular(&diff)
            .ok_or_else(|| Error::Numerical("singular covariance factor".into()))?;
        Ok(w.norm_squared())
    }

    /// Natural log of the density at `x`.
    pub fn ln_pdf(&self, x: &DVector<f64>) -> Result<f64> {
        let q = self.mahalanobis_sq(x)?;
        let d = self.dim();
        let ln_norm = 2f64.ln() - 0.5 * (d as f64 * (2.0 * PI).ln() + self.ln_det);
        if q == 0.0 {
            if d == 1 {
                // (q/2)^{1/4} K_{1/2}(√(2q)) → √π / 2 as q → 0.
                return Ok(ln_norm + 0.5 * PI.ln() - 2f64.ln());
            }
            return Err(Error::Pole { dim: d });
        }
        let v = self.bessel_order;
        let arg = (2.0 * q).sqrt();
        let ln_k = bessel_k_scaled(v, arg).ln() - arg;
        Ok(ln_norm + 0.5 * v * (q / 2.0).ln() + ln_k)
    }

    /// Density at `x`. Fails with [`Error::Pole`] at `x = μ` when `d >= 2`.
    pub fn pdf(&self, x: &DVector<f64>) -> Result<f64> {
        self.ln_pdf(x).map(f64::exp)
    }

    /// Draws `√Z · X + μ` with `Z ~ Exp(1)` and `X ~ N(0, Σ)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = sample_unit_exponential(rng);
        let n = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample(StandardNormal)));
        &self.chol * n * z.sqrt() + &self.mean
    }

    /// The mixand of the scale-mixture form at mixing value `z > 0`.
    pub fn cgmm_mixand(&self, z: f64) -> Result<ScaleMixand> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::Domain(format!("mixing value must be positive, got {z}")));
        }
        Ok(ScaleMixand { mean: self.mean.clone(), covariance: &self.covariance * z, log_density: -z })
    }

    /// The scale-mixture integral evaluated with a Gauss-Laguerre rule:
    /// `Σ w_i N(x; μ, z_i Σ)`.
    pub fn mixture_pdf(&self, rule: &GaussLaguerreRule, x: &DVector<f64>) -> Result<f64> {
        let q = self.mahalanobis_sq(x)?;
        let d = self.dim() as f64;
        let base = -0.5 * (d * (2.0 * PI).ln() + self.ln_det);
        rule.integrate(|z| (base - 0.5 * d * z.ln() - 0.5 * q / z).exp())
    }
}

/// Inverse-CDF draw from the unit-rate exponential.
pub fn sample_unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}

/// `e^x K_ν(x)` for `x > 0`.
///
/// Half-integer orders use the closed form of `K_{1/2}` and the upward
/// recurrence `K_{ν+1} = K_{ν-1} + (2ν/x) K_ν`. Integer orders seed the same
/// recurrence with `K_0`, `K_1` from the integral `∫₀^∞ e^{-x cosh t} cosh(νt) dt`
/// by the trapezoid rule, which converges geometrically for this integrand.
/// Other orders use the integral directly. `K_{-ν} = K_ν`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let twice = 2.0 * nu;
    if (twice - twice.round()).abs() < 1e-12 {
        let twice = twice.round() as i64;
        let (mut k_prev, mut k_cur, mut order) = if twice % 2 == 1 {
            let k_half = (PI / (2.0 * x)).sqrt();
            (k_half, k_half * (1.0 + 1.0 / x), 0.5)
        } else {
            (bessel_k_scaled_integral(0.0, x), bessel_k_scaled_integral(1.0, x), 0.0)
        };
        if twice <= 1 {
            return k_prev;
        }
        // k_prev holds order `order`, k_cur order `order + 1`.
        while order + 1.0 < nu - 1e-9 {
            let next = k_prev + 2.0 * (order + 1.0) / x * k_cur;
            k_prev = k_cur;
            k_cur = next;
            order += 1.0;
        }
        return k_cur;
    }
    bessel_k_scaled_integral(nu, x)
}

fn bessel_k_scaled_integral(nu: f64, x: f64) -> f64 {
    const STEP: f64 = 0.05;
    let integrand = |t: f64| (-x * (t.cosh() - 1.0) + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());
    let mut sum = 0.5 * integrand(0.0);
    let mut t = STEP;
    while t < 60.0 {
        let term = integrand(t);
        sum += term;
        if t > 1.0 + nu && term < 1e-18 * sum {
            break;
        }
        t += STEP;
    }
    sum * STEP
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn iso(d: usize) -> MlDistribution {
        MlDistribution::new(DVector::zeros(d), DMatrix::identity(d, d)).unwrap()
    }

    #[test]
    fn bessel_closed_forms() {
        // K_{1/2}(x) = sqrt(π / 2x) e^{-x}; K_{3/2}(x) = K_{1/2}(x)(1 + 1/x).
        for &x in &[0.1, 1.0, 3.5, 20.0] {
            let k_half = (PI / (2.0 * x)).sqrt();
            assert_relative_eq!(bessel_k_scaled(0.5, x), k_half, max_relative = 1e-14);
            assert_relative_eq!(bessel_k_scaled(-0.5, x), k_half, max_relative = 1e-14);
            assert_relative_eq!(bessel_k_scaled(1.5, x), k_half * (1.0 + 1.0 / x), max_relative = 1e-14);
        }
    }

    #[test]
    fn bessel_integer_orders_reference_values() {
        // K_0(1) = 0.42102443824070834, K_1(1) = 0.6019072301972346,
        // K_2(1) = 1.6248388986351774, K_0(5) = 0.0036910983340425942.
        assert_relative_eq!(bessel_k_scaled(0.0, 1.0) * (-1f64).exp(), 0.42102443824070834, max_relative = 1e-12);
        assert_relative_eq!(bessel_k_scaled(1.0, 1.0) * (-1f64).exp(), 0.6019072301972346, max_relative = 1e-12);
        assert_relative_eq!(bessel_k_scaled(2.0, 1.0) * (-1f64).exp(), 1.6248388986351774, max_relative = 1e-12);
        assert_relative_eq!(bessel_k_scaled(0.0, 5.0) * (-5f64).exp(), 0.0036910983340425942, max_relative = 1e-12);
    }

    #[test]
    fn univariate_values() {
        let d = iso(1);
        let at = |x: f64| d.pdf(&DVector::from_element(1, x)).unwrap();
        assert_relative_eq!(at(0.0), 2f64.sqrt() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(at(1.0), 2f64.sqrt() / 2.0 * (-2f64.sqrt()).exp(), max_relative = 1e-13);
    }

    #[test]
    fn univariate_matches_laplace_with_variance() {
        let var = 2.7;
        let d = MlDistribution::new(DVector::from_element(1, 0.4), DMatrix::from_element(1, 1, var)).unwrap();
        for &x in &[-3.0, -0.2, 0.4, 1.1, 6.0] {
            let expected = 1.0 / (2.0 * var).sqrt() * (-(2.0 / var).sqrt() * (x - 0.4f64).abs()).exp();
            assert_relative_eq!(d.pdf(&DVector::from_element(1, x)).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn pole_and_dimension_errors() {
        assert!(matches!(iso(3).pdf(&DVector::zeros(3)), Err(Error::Pole { dim: 3 })));
        assert!(matches!(iso(2).pdf(&DVector::zeros(2)), Err(Error::Pole { dim: 2 })));
        assert!(matches!(iso(3).pdf(&DVector::zeros(2)), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_covariance() {
        let mut c = DMatrix::identity(2, 2);
        c[(0, 1)] = 0.5;
        assert!(MlDistribution::new(DVector::zeros(2), c).is_err());
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(MlDistribution::new(DVector::zeros(2), c).is_err());
    }

    #[test]
    fn bessel_order_cached() {
        assert_eq!(iso(1).bessel_order(), 0.5);
        assert_eq!(iso(2).bessel_order(), 0.0);
        assert_eq!(iso(3).bessel_order(), -0.5);
    }

    #[test]
    fn pdf_is_symmetric_about_mean() {
        let mut c = DMatrix::identity(3, 3);
        c[(0, 1)] = 0.3;
        c[(1, 0)] = 0.3;
        let mu = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let d = MlDistribution::new(mu.clone(), c).unwrap();
        let delta = DVector::from_vec(vec![0.7, 0.1, -1.3]);
        assert_eq!(d.pdf(&(&mu + &delta)).unwrap(), d.pdf(&(&mu - &delta)).unwrap());
    }

    #[test]
    fn mixand_scales_covariance() {
        let d = iso(3);
        let m1 = d.cgmm_mixand(1.0).unwrap();
        assert_eq!(m1.covariance, DMatrix::identity(3, 3));
        assert_eq!(m1.log_density, -1.0);
        let m2 = d.cgmm_mixand(2.0).unwrap();
        assert_eq!(m2.covariance, DMatrix::identity(3, 3) * 2.0);
        assert!(d.cgmm_mixand(0.0).is_err());
        assert!(d.cgmm_mixand(-1.0).is_err());
    }

    #[test]
    fn mixture_converges_to_closed_form_away_from_mean() {
        // Beyond about one Mahalanobis unit the 40-node rule is well resolved;
        // relative errors there were measured at or below 1.5e-2 (d = 3, m = 1)
        // and fall quickly with distance.
        let rule = GaussLaguerreRule::new(40).unwrap();
        for dim in 1..=3 {
            let d = iso(dim);
            for &(m, tol) in &[(2.0, 2e-3), (3.0, 5e-4), (4.0, 1e-4)] {
                let mut x = DVector::zeros(dim);
                x[0] = m;
                let exact = d.pdf(&x).unwrap();
                let quad = d.mixture_pdf(&rule, &x).unwrap();
                assert!(((quad - exact) / exact).abs() < tol, "d={dim} m={m}");
            }
        }
    }

    #[test]
    fn sample_moments() {
        let d = iso(3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut sum = DVector::<f64>::zeros(3);
        let mut sum2 = DVector::<f64>::zeros(3);
        let mut sum4 = DVector::<f64>::zeros(3);
        for _ in 0..n {
            let s = d.sample(&mut rng);
            sum += &s;
            sum2 += s.map(|v| v * v);
            sum4 += s.map(|v| v.powi(4));
        }
        let nf = n as f64;
        for i in 0..3 {
            let mean = sum[i] / nf;
            let var = sum2[i] / nf - mean * mean;
            let kurt = (sum4[i] / nf) / (var * var);
            assert!(mean.abs() < 0.01, "mean {mean}");
            assert!((var - 1.0).abs() < 0.05, "var {var}");
            assert!((kurt - 6.0).abs() < 0.6, "kurtosis {kurt}");
        }
    }
}
