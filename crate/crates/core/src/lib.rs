//! Gaussian integral filtering with multivariate Laplace process noise.
//!
//! A Gaussian integral filter (GIF) runs a bank of Gaussian filters over a
//! continuous mixing parameter `z`, recovering the continuous mixture by
//! interpolation between a few nodes and collapsing it with Gauss-Laguerre
//! quadrature. Here the mixture is the scale mixture behind the symmetric
//! multivariate Laplace law, used as heavy-tailed process noise.
//!
//! Modules, bottom-up:
//! - [`quadrature`]: Gauss-Laguerre rules.
//! - [`mldist`]: multivariate Laplace pdf, sampler, and mixture form.
//! - [`interp`]: node grids, mixand curves, and belief remapping.
//! - [`gif`]: the filter bank, quadrature reduction, and UKF/EKF baselines.
//! - [`models`]: the linear toy system and the orbital tracking models.
//! - [`harness`]: scenarios, Monte Carlo execution, metrics, and CSV output.

// `!(x > 0.0)` guards deliberately reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gif;
pub mod harness;
pub mod interp;
pub mod linalg;
pub mod mldist;
pub mod models;
pub mod quadrature;

pub use error::{Error, Result};
