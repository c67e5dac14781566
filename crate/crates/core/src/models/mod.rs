//! Dynamics and measurement models for the two scenarios.

pub mod linear;
pub mod orbit;

pub use linear::LinearModel;
pub use orbit::{
    accel, along_track_thrust, innovation_wrap, propagate, radar_measure, velocity_frame, wrap_angle, NoiseFrame,
    OrbitDynamics, OrbitState, PhysicalConstants, RadarModel, RadarObservation, ThrustLaw, DEFAULT_MAX_STEP,
};
