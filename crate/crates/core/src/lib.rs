//! Identification of poly-phase distribution-network admittance matrices
//! from synchronized voltage/current phasor measurements.
//!
//! The crate is organized bottom-up:
//!
//! * [`netmodel`] – networks of π-model components and their bus admittance matrices.
//! * [`phasors`] – measurement datasets, CSV ingestion and perturbation.
//! * [`symvec`] – lower-triangular parameterization of complex-symmetric matrices
//!   and the matrix-free regression design built on it.
//! * [`solvers`] – complex least squares, ridge, (adaptive) lasso, cross-validation.
//! * [`identify`] – end-to-end identification pipelines and error metrics.
//! * [`events`] – online change detection and sparse localization.
//! * [`simkit`] – synthetic feeders and scenarios that provide ground truth.
//! * [`cli`] – the `gridid` command-line surface.

pub mod cli;
pub mod error;
pub mod events;
pub mod identify;
pub mod linalg;
pub mod netmodel;
pub mod phasors;
pub mod simkit;
pub mod solvers;
pub mod symvec;

pub use error::{Error, Result};

/// Complex scalar used throughout (per-unit phasors and admittances).
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
