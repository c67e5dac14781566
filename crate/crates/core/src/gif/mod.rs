//! The Gaussian integral filter over multivariate Laplace process noise.

mod filter;
mod model;
mod state;
mod unscented;

pub use filter::{
    baseline_ekf_step, baseline_ukf_step, gif_step, measurement_update, quadrature_reduce, quadrature_reduce_along,
    time_grid, time_update, BankFlavor, GifConfig, GifDiagnostics, GifFilter, TimePlacement,
};
pub use model::{central_difference, CountingDynamics, Dynamics, MeasurementModel};
pub use state::{eigen_weight_profile, moment_match, EigenWeight, GaussianState, WeightedComponent, WeightedGmm};
pub use unscented::{ut_measurement_update, UpdateOutcome, UtWeights};
