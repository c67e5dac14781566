//! Scenarios, Monte Carlo execution, metrics, and file outputs.

pub mod config;
pub mod linear_toy;
pub mod orbit_mc;
pub mod output;

pub use config::{fmt_f64, FilterSpec, FilterVariant, ScenarioConfig, ScenarioKind};
pub use linear_toy::{
    fit_line, relative_spread, run_linear_toy, tail_fit, tail_max_eig, toy_profile, upper_half, EigenTable, LineFit,
    ToyCase, RETAINED_WEIGHT_FLOOR,
};
pub use orbit_mc::{
    ballistic_gap_check, mahalanobis_threshold, run_orbit_mc, run_orbit_variant, run_table1, simulate_truth,
    table1_variants, EpochRecord, RunFailure, RunMetrics, RunTrace, TruthRun,
};
pub use output::{eigweight_csv, emit_outputs, metrics_csv, timing_csv, trace_csv};
