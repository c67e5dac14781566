//! Monte Carlo tracking of a thrusting spacecraft from geocentric radar.
//!
//! The truth for run `r` depends only on `(seed, r)`, so every filter
//! variant sees the same trajectories and measurements.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::gif::{baseline_ukf_step, CountingDynamics, EigenWeight, GaussianState, GifFilter};
use crate::harness::config::{FilterSpec, ScenarioConfig};
use crate::linalg::SpdFactor;
use crate::models::{propagate, radar_measure, OrbitDynamics, OrbitState, RadarModel, ThrustLaw};

/// Probability mass inside a per-axis 3σ band of a Gaussian.
pub const THREE_SIGMA_MASS: f64 = 0.9973;

/// Squared Mahalanobis distance enclosing [`THREE_SIGMA_MASS`] of a 6-D Gaussian.
pub fn mahalanobis_threshold() -> f64 {
    ChiSquared::new(6.0).expect("valid degrees of freedom").inverse_cdf(THREE_SIGMA_MASS)
}

/// Simulated trajectory and radar data for one run.
#[derive(Debug, Clone)]
pub struct TruthRun {
    pub initial: OrbitState,
    /// State at each measurement epoch `1..=epochs`.
    pub states: Vec<OrbitState>,
    pub measurements: Vec<DVector<f64>>,
}

/// Samples the initial state, propagates with along-track thrust, and draws
/// noisy measurements.
pub fn simulate_truth(cfg: &ScenarioConfig, run: usize) -> Result<TruthRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(run as u64);
    let prior = cfg.initial_state();
    let mut x0 = prior.mean.clone();
    for i in 0..6 {
        let e: f64 = rng.sample(StandardNormal);
        x0[i] += prior.covariance[(i, i)].sqrt() * e;
    }
    let initial = OrbitState::from_vector(&x0)?;
    let r_sigma = cfg.measurement_noise().diagonal().map(f64::sqrt);
    let thrust = ThrustLaw::AlongTrack(cfg.truth_thrust);
    let mut state = initial;
    let mut states = Vec::with_capacity(cfg.epochs);
    let mut measurements = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        state = propagate(&state, &thrust, cfg.cadence, &cfg.consts, cfg.max_step)?;
        let mut y = radar_measure(&state)?.to_vector();
        for i in 0..4 {
            let e: f64 = rng.sample(StandardNormal);
            y[i] += r_sigma[i] * e;
        }
        states.push(state);
        measurements.push(y);
    }
    Ok(TruthRun { initial, states, measurements })
}

/// Estimation error and filter bounds after one measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Estimate minus truth: position (m) then velocity (m/s).
    pub error: [f64; 6],
    /// Three times the filter's marginal standard deviations.
    pub sigma3: [f64; 6],
    pub mahalanobis_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run: usize,
    pub records: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub run: usize,
    /// Epoch at which the filter failed (1-based).
    pub epoch: usize,
    pub message: String,
}

/// Aggregate performance of one filter variant. Failed runs are excluded
/// from the error statistics.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub filter: FilterSpec,
    pub runs: usize,
    pub epochs: usize,
    pub failures: Vec<RunFailure>,
    /// `sqrt(mean ‖r̂ - r‖²)` over successful runs and all epochs, m.
    pub pos_rmse: f64,
    /// Same for velocity, m/s.
    pub vel_rmse: f64,
    /// Percentage of scalar state errors outside their 3σ bound.
    pub pct_outside_axis: f64,
    /// Percentage of epochs whose squared Mahalanobis distance exceeds
    /// [`mahalanobis_threshold`].
    pub pct_outside_mahalanobis: f64,
    /// Filter wall-clock summed over runs, s.
    pub wall_clock: f64,
    /// Calls to the filter's state propagator summed over runs.
    pub propagations: u64,
    pub traces: Vec<RunTrace>,
    /// Per-mixand eigenvalues and weights of the first update of run 0 (GIF only).
    pub first_profile: Vec<EigenWeight>,
}

impl RunMetrics {
    pub fn succeeded(&self) -> usize {
        self.runs - self.failures.len()
    }
}

struct RunOutcome {
    trace: RunTrace,
    failure: Option<RunFailure>,
    seconds: f64,
    propagations: u64,
    first_profile: Vec<EigenWeight>,
}

fn run_filter(cfg: &ScenarioConfig, gif: Option<&GifFilter>, truth: &TruthRun, run: usize) -> RunOutcome {
    let dynamics =
        OrbitDynamics { consts: cfg.consts, interval: cfg.cadence, max_step: cfg.max_step, frame: cfg.noise_frame };
    let counting = CountingDynamics::new(&dynamics);
    let q = cfg.process_noise();
    let r = cfg.measurement_noise();
    let mut belief = cfg.initial_state();
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut failure = None;
    let mut first_profile = Vec::new();
    let mut seconds = 0.0;

    for (k, (y, truth_state)) in truth.measurements.iter().zip(&truth.states).enumerate() {
        let started = Instant::now();
        let step = match gif {
            Some(filter) => filter.step(&belief, y, &counting, &RadarModel, &q, &r).map(|(post, diag)| {
                if k == 0 {
                    first_profile = diag.profile;
                }
                post
            }),
            None => baseline_ukf_step(&belief, y, &counting, &RadarModel, &q, &r),
        };
        seconds += started.elapsed().as_secs_f64();
        let record = step.and_then(|post| {
            let rec = epoch_record(k + 1, &post, truth_state)?;
            belief = post;
            Ok(rec)
        });
        match record {
            Ok(rec) => records.push(rec),
            Err(e) => {
                failure = Some(RunFailure { run, epoch: k + 1, message: e.to_string() });
                break;
            }
        }
    }
    RunOutcome {
        trace: RunTrace { run, records },
        failure,
        seconds,
        propagations: counting.calls() as u64,
        first_profile,
    }
}

fn epoch_record(epoch: usize, post: &GaussianState, truth: &OrbitState) -> Result<EpochRecord> {
    let err = &post.mean - truth.to_vector();
    let sig = post.sigmas();
    let factor = SpdFactor::new(&post.covariance)?;
    let m2 = err.dot(&factor.solve_vec(&err));
    if !m2.is_finite() {
        return Err(Error::Numerical("non-finite Mahalanobis distance".into()));
    }
    let mut error = [0.0; 6];
    let mut sigma3 = [0.0; 6];
    for i in 0..6 {
        error[i] = err[i];
        sigma3[i] = 3.0 * sig[i];
    }
    Ok(EpochRecord { epoch, error, sigma3, mahalanobis_sq: m2 })
}

/// Runs every Monte Carlo trial of `cfg` with the filter in `cfg.filter`.
///
/// Filter failures are recorded per run; only truth-simulation failures and
/// invalid filter configurations abort.
pub fn run_orbit_mc(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    run_orbit_variant(cfg, &cfg.filter)
}

/// As [`run_orbit_mc`], with the filter given explicitly.
pub fn run_orbit_variant(cfg: &ScenarioConfig, spec: &FilterSpec) -> Result<RunMetrics> {
    cfg.validate()?;
    let spec = spec.clone().normalized();
    let gif = spec.gif_config().map(GifFilter::new).transpose()?;
    let one = |run: usize| -> Result<RunOutcome> {
        let truth = simulate_truth(cfg, run)?;
        Ok(run_filter(cfg, gif.as_ref(), &truth, run))
    };
    let outcomes: Vec<RunOutcome> = if cfg.parallel {
        (0..cfg.runs).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..cfg.runs).map(one).collect::<Result<_>>()?
    };
    Ok(aggregate(cfg, spec, outcomes))
}

fn aggregate(cfg: &ScenarioConfig, filter: FilterSpec, outcomes: Vec<RunOutcome>) -> RunMetrics {
    let threshold = mahalanobis_threshold();
    let (mut pos2, mut vel2, mut count) = (0.0, 0.0, 0usize);
    let (mut axis_out, mut m_out) = (0usize, 0usize);
    let mut failures = Vec::new();
    let mut traces = Vec::with_capacity(outcomes.len());
    let mut wall_clock = 0.0;
    let mut propagations = 0;
    let mut first_profile = Vec::new();
    for o in outcomes {
        wall_clock += o.seconds;
        propagations += o.propagations;
        if o.trace.run == 0 {
            first_profile = o.first_profile;
        }
        match o.failure {
            Some(f) => failures.push(f),
            None => {
                for rec in &o.trace.records {
                    let e = &rec.error;
                    pos2 += e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
                    vel2 += e[3] * e[3] + e[4] * e[4] + e[5] * e[5];
                    axis_out += (0..6).filter(|&i| e[i].abs() > rec.sigma3[i]).count();
                    m_out += usize::from(rec.mahalanobis_sq > threshold);
                    count += 1;
                }
            }
        }
        traces.push(o.trace);
    }
    let n = count.max(1) as f64;
    let pct = |c: usize, per: f64| if count == 0 { f64::NAN } else { 100.0 * c as f64 / (n * per) };
    RunMetrics {
        filter,
        runs: cfg.runs,
        epochs: cfg.epochs,
        failures,
        pos_rmse: if count == 0 { f64::NAN } else { (pos2 / n).sqrt() },
        vel_rmse: if count == 0 { f64::NAN } else { (vel2 / n).sqrt() },
        pct_outside_axis: pct(axis_out, 6.0),
        pct_outside_mahalanobis: pct(m_out, 1.0),
        wall_clock,
        propagations,
        traces,
        first_profile,
    }
}

/// Variants of the interpolated-node sweep, `n_t` major within each `n_m`.
pub fn table1_variants() -> Vec<FilterSpec> {
    let mut v = Vec::new();
    for n_m in [10, 15, 25] {
        for n_t in [2, 3, 5] {
            v.push(FilterSpec::gif_interp(n_t, n_m));
        }
    }
    v
}

/// The interpolated-node sweep plus the baseline UKF, in that order.
pub fn run_table1(cfg: &ScenarioConfig) -> Result<Vec<RunMetrics>> {
    let mut specs = table1_variants();
    specs.push(FilterSpec::ukf());
    specs.iter().map(|s| run_orbit_variant(cfg, s)).collect()
}

/// Position (m) and velocity (m/s) separation after one measurement interval
/// between the thrusting and the ballistic nominal trajectories.
pub fn ballistic_gap_check(cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    let start = OrbitState::new(Vector3::from(cfg.initial_position), Vector3::from(cfg.initial_velocity));
    let ballistic = propagate(&start, &ThrustLaw::Constant(Vector3::zeros()), cfg.cadence, &cfg.consts, cfg.max_step)?;
    let thrusting =
        propagate(&start, &ThrustLaw::AlongTrack(cfg.truth_thrust), cfg.cadence, &cfg.consts, cfg.max_step)?;
    Ok(((thrusting.position - ballistic.position).norm(), (thrusting.velocity - ballistic.velocity).norm()))
}

/// Sample covariance of the truth initial states, for checking the sampler.
pub fn initial_spread(cfg: &ScenarioConfig, runs: usize) -> Result<DMatrix<f64>> {
    let mean = cfg.initial_state().mean;
    let mut acc = DMatrix::zeros(6, 6);
    for run in 0..runs {
        let d = simulate_truth(&ScenarioConfig { epochs: 1, ..cfg.clone() }, run)?.initial.to_vector() - &mean;
        acc += &d * d.transpose();
    }
    Ok(acc / runs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(runs: usize, epochs: usize) -> ScenarioConfig {
        ScenarioConfig { runs, epochs, parallel: false, ..ScenarioConfig::default() }
    }

    #[test]
    fn truth_is_reproducible_and_run_specific() {
        let cfg = small(2, 3);
        let a = simulate_truth(&cfg, 0).unwrap();
        let b = simulate_truth(&cfg, 0).unwrap();
        let c = simulate_truth(&cfg, 1).unwrap();
        assert_eq!(a.measurements, b.measurements);
        assert_ne!(a.initial, c.initial);
    }

    #[test]
    fn truth_initial_spread_matches_prior() {
        let cfg = small(1, 1);
        let cov = initial_spread(&cfg, 2000).unwrap();
        let p = cfg.initial_state().covariance;
        for i in 0..6 {
            assert!((cov[(i, i)] / p[(i, i)] - 1.0).abs() < 0.1, "axis {i}");
        }
    }

    #[test]
    fn threshold_value() {
        assert!((mahalanobis_threshold() - 20.062).abs() < 0.01);
    }

    #[test]
    fn ballistic_gap_vanishes_without_thrust() {
        let cfg = ScenarioConfig { truth_thrust: 0.0, ..ScenarioConfig::default() };
        assert_eq!(ballistic_gap_check(&cfg).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn ballistic_gap_grows_with_thrust() {
        let base = ballistic_gap_check(&ScenarioConfig::default()).unwrap();
        let doubled = ballistic_gap_check(&ScenarioConfig { truth_thrust: 6e-4, ..ScenarioConfig::default() }).unwrap();
        assert!(doubled.0 > base.0 && doubled.1 > base.1);
    }

    #[test]
    fn metrics_are_deterministic() {
        let cfg = small(2, 3);
        let a = run_orbit_variant(&cfg, &FilterSpec::gif(3)).unwrap();
        let b = run_orbit_variant(&ScenarioConfig { parallel: true, ..cfg.clone() }, &FilterSpec::gif(3)).unwrap();
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.pos_rmse.to_bits(), b.pos_rmse.to_bits());
        assert_eq!(a.propagations, b.propagations);
    }
}
