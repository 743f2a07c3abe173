//! Variable selection for normal location-dispersion regression by
//! maximizing a smooth information criterion.
//!
//! Both the mean and the log-variance get a linear predictor. The L0 count in
//! the BIC is replaced by a differentiable surrogate so that the criterion can
//! be maximized directly by Newton-Raphson, with the surrogate's smoothing
//! parameter driven towards zero through a warm-started continuation.
//!
//! Modules follow the pipeline: [`model`] (data and likelihood), [`penalty`],
//! [`solver`], [`inference`] and the simulation engine [`simlab`].

pub mod error;
pub mod inference;
pub mod model;
pub mod penalty;
pub mod simlab;
pub mod solver;

pub use error::{Result, SicError};
pub use inference::{FitResult, PredictionInterval, SigmaCategories};
pub use model::{Component, Dataset, ParamVector, ScalingInfo};
pub use penalty::Epsilon;
pub use solver::{FitMode, FitTrace, FreeSet, SolverConfig, TelescopeSchedule};
