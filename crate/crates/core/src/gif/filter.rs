//! The Gaussian integral filter step and its single-Gaussian baselines.
//!
//! One step runs:
//! 1. a bank time update on the time grid, each node `z` propagating the
//!    Gaussian prior with process noise `zQ`;
//! 2. a remap onto the measurement grid;
//! 3. a per-node measurement update accumulating log-likelihoods;
//! 4. a remap onto the quadrature nodes and Gauss-Laguerre weighting;
//! 5. moment matching back to a single Gaussian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gif::model::{Dynamics, MeasurementModel};
use crate::gif::state::{eigen_weight_profile, moment_match, EigenWeight, GaussianState, WeightedGmm};
use crate::gif::unscented::{ut_measurement_update, UtWeights};
use crate::interp::{check_nesting, remap_belief_along, Abscissa, CgmmBelief, GridPurpose, Mixand, NodeGrid};
use crate::linalg::{asymmetry, cholesky_lower, gaussian_log_likelihood, outer_square, symmetrize, SpdFactor};
use crate::quadrature::GaussLaguerreRule;

/// Which Gaussian filter runs at every node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankFlavor {
    Ekf,
    Ukf,
}

/// How the time-update nodes are placed when they differ from the
/// measurement nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimePlacement {
    /// Endpoints pinned to the measurement grid's extremes, interior nodes
    /// equally spaced in `√z`.
    SqrtUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GifConfig {
    pub n_t: usize,
    pub n_m: usize,
    pub n_q: usize,
    pub flavor: BankFlavor,
    pub placement: TimePlacement,
    /// Coordinate for the remapping curves.
    pub abscissa: Abscissa,
}

impl GifConfig {
    /// Same Gauss-Laguerre nodes for every stage.
    pub fn constant(n: usize, flavor: BankFlavor) -> Self {
        Self { n_t: n, n_m: n, n_q: n, flavor, placement: TimePlacement::SqrtUniform, abscissa: Abscissa::Z }
    }

    /// `n_t` time nodes interpolated onto `n_m` measurement nodes, which
    /// double as the quadrature nodes.
    pub fn interpolated(n_t: usize, n_m: usize, flavor: BankFlavor) -> Self {
        Self { n_t, n_m, n_q: n_m, flavor, placement: TimePlacement::SqrtUniform, abscissa: Abscissa::Z }
    }
}

/// Time-update nodes spanning exactly `[first, last]` of the measurement grid.
pub fn time_grid(measurement: &NodeGrid, n_t: usize, placement: TimePlacement) -> Result<NodeGrid> {
    if n_t == measurement.len() {
        return Ok(measurement.with_purpose(GridPurpose::TimeUpdate));
    }
    if n_t < 2 {
        return Err(Error::Config(format!(
            "{n_t} time node(s) cannot be interpolated onto {} measurement nodes",
            measurement.len()
        )));
    }
    let (lo, hi) = (measurement.first(), measurement.last());
    let nodes = match placement {
        TimePlacement::SqrtUniform => {
            let (a, b) = (lo.sqrt(), hi.sqrt());
            (0..n_t)
                .map(|j| match j {
                    0 => lo,
                    _ if j == n_t - 1 => hi,
                    _ => {
                        let s = a + (b - a) * j as f64 / (n_t - 1) as f64;
                        s * s
                    }
                })
                .collect()
        }
    };
    NodeGrid::new(nodes, GridPurpose::TimeUpdate)
}

/// Grids and quadrature rule for a configuration, built once.
#[derive(Debug, Clone)]
pub struct GifFilter {
    config: GifConfig,
    time: NodeGrid,
    measurement: NodeGrid,
    rule: GaussLaguerreRule,
    quadrature: NodeGrid,
}

impl GifFilter {
    pub fn new(config: GifConfig) -> Result<Self> {
        if config.n_t == 0 || config.n_m == 0 || config.n_q == 0 {
            return Err(Error::Config("node counts must be positive".into()));
        }
        if config.n_m < config.n_t {
            return Err(Error::Config(format!(
                "measurement nodes ({}) fewer than time nodes ({})",
                config.n_m, config.n_t
            )));
        }
        let measurement =
            NodeGrid::new(GaussLaguerreRule::new(config.n_m)?.nodes().to_vec(), GridPurpose::MeasurementUpdate)?;
        let rule = GaussLaguerreRule::new(config.n_q)?;
        let quadrature = NodeGrid::new(rule.nodes().to_vec(), GridPurpose::Quadrature)?;
        let time = time_grid(&measurement, config.n_t, config.placement)?;
        check_nesting(&[&time, &measurement, &quadrature])
            .map_err(|v| Error::Config(format!("node grids do not nest: {v}")))?;
        Ok(Self { config, time, measurement, rule, quadrature })
    }

    pub fn config(&self) -> &GifConfig {
        &self.config
    }

    pub fn time_grid(&self) -> &NodeGrid {
        &self.time
    }

    pub fn measurement_grid(&self) -> &NodeGrid {
        &self.measurement
    }

    pub fn quadrature_grid(&self) -> &NodeGrid {
        &self.quadrature
    }

    pub fn rule(&self) -> &GaussLaguerreRule {
        &self.rule
    }

    /// One full predict/update/reduce cycle.
    pub fn step<D, M>(
        &self,
        prior: &GaussianState,
        y: &DVector<f64>,
        dynamics: &D,
        model: &M,
        q: &DMatrix<f64>,
        r: &DMatrix<f64>,
    ) -> Result<(GaussianState, GifDiagnostics)>
    where
        D: Dynamics + ?Sized,
        M: MeasurementModel + ?Sized,
    {
        let predicted = time_update(prior, dynamics, q, &self.time, self.config.flavor)?;
        let predicted = remap_belief_along(&predicted, &self.measurement, self.config.abscissa)?;
        let updated = measurement_update(&predicted, y, model, r, self.config.flavor)?;
        let gmm = quadrature_reduce_along(&updated, &self.rule, self.config.abscissa)?;
        let posterior = moment_match(&gmm);
        check_covariance(&posterior.covariance)?;
        let profile = eigen_weight_profile(&gmm);
        Ok((posterior, GifDiagnostics { predicted, updated, gmm, profile }))
    }
}

/// Intermediate products of one step, for inspection and plotting.
#[derive(Debug, Clone)]
pub struct GifDiagnostics {
    /// Transitional prior on the measurement grid.
    pub predicted: CgmmBelief,
    /// Per-node posteriors with accumulated log-likelihoods.
    pub updated: CgmmBelief,
    /// Posterior mixture on the quadrature nodes.
    pub gmm: WeightedGmm,
    pub profile: Vec<EigenWeight>,
}

/// Convenience wrapper: builds the grids for `config` and runs one step.
#[allow(clippy::too_many_arguments)]
pub fn gif_step<D, M>(
    prior: &GaussianState,
    y: &DVector<f64>,
    dynamics: &D,
    model: &M,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    config: &GifConfig,
) -> Result<(GaussianState, GifDiagnostics)>
where
    D: Dynamics + ?Sized,
    M: MeasurementModel + ?Sized,
{
    GifFilter::new(config.clone())?.step(prior, y, dynamics, model, q, r)
}

fn check_covariance(p: &DMatrix<f64>) -> Result<()> {
    let scale = p.abs().max().max(f64::MIN_POSITIVE);
    if asymmetry(p) > 1e-12 * scale {
        return Err(Error::Numerical("covariance lost symmetry".into()));
    }
    cholesky_lower(p).map(|_| ())
}

fn check_finite(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Propagation(format!("non-finite {what}")))
    }
}

fn validate_noise(q: &DMatrix<f64>, noise_dim: usize) -> Result<()> {
    if q.shape() != (noise_dim, noise_dim) {
        return Err(Error::Domain(format!("process noise is {:?}, model expects {noise_dim}x{noise_dim}", q.shape())));
    }
    let scale = q.abs().max().max(1.0);
    if asymmetry(q) > 1e-12 * scale {
        return Err(Error::Domain("process noise covariance is not symmetric".into()));
    }
    Ok(())
}

/// Propagates a Gaussian prior through the bank, one mixand per node of
/// `grid` with process noise `z Q`. Log-weights start at zero.
///
/// The EKF flavor evaluates `f`, `F`, `Γ` once. The UKF flavor propagates
/// the `2n_x + 1` state sigma points once and only the `2n_v` noise sigma
/// points per node.
pub fn time_update<D: Dynamics + ?Sized>(
    prior: &GaussianState,
    dynamics: &D,
    q: &DMatrix<f64>,
    grid: &NodeGrid,
    flavor: BankFlavor,
) -> Result<CgmmBelief> {
    let nx = dynamics.state_dim();
    let nv = dynamics.noise_dim();
    if prior.dim() != nx {
        return Err(Error::Domain(format!("prior has dimension {}, model {nx}", prior.dim())));
    }
    validate_noise(q, nv)?;
    let prior_chol = cholesky_lower(&prior.covariance)?;
    let noise_chol = cholesky_lower(q)?;
    let zero_noise = DVector::zeros(nv);

    let mixands = match flavor {
        BankFlavor::Ekf => {
            let mean = dynamics.transition(&prior.mean, &zero_noise)?;
            check_finite(&mean, "propagated mean")?;
            let (f, g) = dynamics.jacobians(&prior.mean)?;
            let base = &f * &prior.covariance * f.transpose();
            let noise = &g * q * g.transpose();
            grid.nodes()
                .iter()
                .map(|&z| {
                    let cov = symmetrize(&(&base + &noise * z));
                    Ok(Mixand { z, mean: mean.clone(), chol: cholesky_lower(&cov)?, log_weight: 0.0 })
                })
                .collect::<Result<Vec<_>>>()?
        }
        BankFlavor::Ukf => {
            let w = UtWeights::new(nx + nv);
            let propagate = |x: &DVector<f64>, v: &DVector<f64>| -> Result<DVector<f64>> {
                let out = dynamics.transition(x, v)?;
                check_finite(&out, "sigma point")?;
                Ok(out)
            };
            let center = propagate(&prior.mean, &zero_noise)?;
            let mut shared = Vec::with_capacity(2 * nx);
            for j in 0..nx {
                let col = prior_chol.column(j) * w.spread;
                shared.push(propagate(&(&prior.mean + &col), &zero_noise)?);
                shared.push(propagate(&(&prior.mean - &col), &zero_noise)?);
            }
            let mut mixands = Vec::with_capacity(grid.len());
            for &z in grid.nodes() {
                let mut points = shared.clone();
                for j in 0..nv {
                    let col: DVector<f64> = noise_chol.column(j) * (w.spread * z.sqrt());
                    points.push(propagate(&prior.mean, &col)?);
                    points.push(propagate(&prior.mean, &(-&col))?);
                }
                let (mean, cov) = w.moments(&center, &points);
                mixands.push(Mixand { z, mean, chol: cholesky_lower(&cov)?, log_weight: 0.0 });
            }
            mixands
        }
    };
    CgmmBelief::new(grid.clone(), mixands)
}

/// Per-node measurement update. Each mixand's log-likelihood of `y` is added
/// to its log-weight.
///
/// EKF flavor: `h(x̄)` and `H` are evaluated once per distinct predicted
/// mean (once in total when the bank shares its mean) and the covariance is
/// updated in Joseph form. UKF flavor: sigma points are regenerated from each
/// mixand.
pub fn measurement_update<M: MeasurementModel + ?Sized>(
    belief: &CgmmBelief,
    y: &DVector<f64>,
    model: &M,
    r: &DMatrix<f64>,
    flavor: BankFlavor,
) -> Result<CgmmBelief> {
    let m = model.measurement_dim();
    if y.len() != m || r.shape() != (m, m) {
        return Err(Error::Domain(format!(
            "measurement of length {} / noise {:?} for a model of dimension {m}",
            y.len(),
            r.shape()
        )));
    }
    let mut out = Vec::with_capacity(belief.mixands().len());
    let mut shared: Option<(DVector<f64>, DVector<f64>, DMatrix<f64>)> = None;
    for mix in belief.mixands() {
        let outcome = match flavor {
            BankFlavor::Ekf => {
                let reuse = matches!(&shared, Some((x, _, _)) if *x == mix.mean);
                if !reuse {
                    let h = model.measure(&mix.mean)?;
                    let jac = model.jacobian(&mix.mean)?;
                    shared = Some((mix.mean.clone(), h, jac));
                }
                let (_, h, jac) = shared.as_ref().expect("populated above");
                ekf_update(&mix.mean, &mix.covariance(), y, h, jac, model, r)?
            }
            BankFlavor::Ukf => ut_measurement_update(&mix.mean, &mix.chol, y, model, r)?,
        };
        out.push(Mixand {
            z: mix.z,
            mean: outcome.mean,
            chol: cholesky_lower(&outcome.covariance)?,
            log_weight: mix.log_weight + outcome.log_likelihood,
        });
    }
    CgmmBelief::new(belief.grid().clone(), out)
}

fn ekf_update<M: MeasurementModel + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    y: &DVector<f64>,
    h: &DVector<f64>,
    jac: &DMatrix<f64>,
    model: &M,
    r: &DMatrix<f64>,
) -> Result<crate::gif::unscented::UpdateOutcome> {
    let innovation = model.residual(y, h);
    let s = jac * cov * jac.transpose() + r;
    let s_factor = SpdFactor::new(&s)?;
    let gain = cov * jac.transpose() * s_factor.inverse();
    let new_mean = mean + &gain * &innovation;
    let i_kh = DMatrix::identity(mean.len(), mean.len()) - &gain * jac;
    let joseph = &i_kh * cov * i_kh.transpose() + &gain * r * gain.transpose();
    Ok(crate::gif::unscented::UpdateOutcome {
        mean: new_mean,
        covariance: symmetrize(&joseph),
        log_likelihood: gaussian_log_likelihood(&innovation, &s_factor),
    })
}

/// Remaps the updated belief onto the rule's nodes and weights each
/// component by `w_i exp(s_l(z_i))`, normalized.
pub fn quadrature_reduce(belief: &CgmmBelief, rule: &GaussLaguerreRule) -> Result<WeightedGmm> {
    quadrature_reduce_along(belief, rule, Abscissa::Z)
}

/// As [`quadrature_reduce`], remapping along `abscissa`.
pub fn quadrature_reduce_along(
    belief: &CgmmBelief,
    rule: &GaussLaguerreRule,
    abscissa: Abscissa,
) -> Result<WeightedGmm> {
    let target = NodeGrid::new(rule.nodes().to_vec(), GridPurpose::Quadrature)?;
    let remapped = remap_belief_along(belief, &target, abscissa)?;
    if let Some(m) = remapped.mixands().iter().find(|m| !m.log_weight.is_finite()) {
        return Err(Error::Numerical(format!("non-finite log-weight at z = {}", m.z)));
    }
    let log_weights: Vec<f64> =
        remapped.mixands().iter().zip(rule.log_weights()).map(|(m, lw)| lw + m.log_weight).collect();
    let nodes: Vec<Option<f64>> = remapped.mixands().iter().map(|m| Some(m.z)).collect();
    let states = remapped
        .into_mixands()
        .into_iter()
        .map(|m| GaussianState { covariance: outer_square(&m.chol), mean: m.mean })
        .collect();
    WeightedGmm::from_log_weights(&log_weights, &nodes, states)
}

/// One step of a single augmented-state UKF with Gaussian process noise `Q`.
///
/// Propagates the full `2(n_x + n_v) + 1` sigma-point set of
/// `diag(P, Q)` without exploiting any sharing.
pub fn baseline_ukf_step<D, M>(
    prior: &GaussianState,
    y: &DVector<f64>,
    dynamics: &D,
    model: &M,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<GaussianState>
where
    D: Dynamics + ?Sized,
    M: MeasurementModel + ?Sized,
{
    let nx = dynamics.state_dim();
    let nv = dynamics.noise_dim();
    validate_noise(q, nv)?;
    let na = nx + nv;
    let mut aug_cov = DMatrix::zeros(na, na);
    aug_cov.view_mut((0, 0), (nx, nx)).copy_from(&prior.covariance);
    aug_cov.view_mut((nx, nx), (nv, nv)).copy_from(q);
    let aug_chol = cholesky_lower(&aug_cov)?;
    let mut aug_mean = DVector::zeros(na);
    aug_mean.rows_mut(0, nx).copy_from(&prior.mean);

    let w = UtWeights::new(na);
    let split = |a: &DVector<f64>| -> Result<DVector<f64>> {
        let out = dynamics.transition(&a.rows(0, nx).into_owned(), &a.rows(nx, nv).into_owned())?;
        check_finite(&out, "sigma point")?;
        Ok(out)
    };
    let center = split(&aug_mean)?;
    let mut points = Vec::with_capacity(2 * na);
    for j in 0..na {
        let col = aug_chol.column(j) * w.spread;
        points.push(split(&(&aug_mean + &col))?);
        points.push(split(&(&aug_mean - &col))?);
    }
    let (mean, cov) = w.moments(&center, &points);
    let outcome = ut_measurement_update(&mean, &cholesky_lower(&cov)?, y, model, r)?;
    check_covariance(&outcome.covariance)?;
    Ok(GaussianState { mean: outcome.mean, covariance: outcome.covariance })
}

/// One step of a single EKF with Gaussian process noise `Q`.
pub fn baseline_ekf_step<D, M>(
    prior: &GaussianState,
    y: &DVector<f64>,
    dynamics: &D,
    model: &M,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<GaussianState>
where
    D: Dynamics + ?Sized,
    M: MeasurementModel + ?Sized,
{
    validate_noise(q, dynamics.noise_dim())?;
    let zero = DVector::zeros(dynamics.noise_dim());
    let mean = dynamics.transition(&prior.mean, &zero)?;
    check_finite(&mean, "propagated mean")?;
    let (f, g) = dynamics.jacobians(&prior.mean)?;
    let cov = symmetrize(&(&f * &prior.covariance * f.transpose() + &g * q * g.transpose()));
    let h = model.measure(&mean)?;
    let jac = model.jacobian(&mean)?;
    let outcome = ekf_update(&mean, &cov, y, &h, &jac, model, r)?;
    check_covariance(&outcome.covariance)?;
    Ok(GaussianState { mean: outcome.mean, covariance: outcome.covariance })
}
