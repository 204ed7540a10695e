//! Multivariate integer-valued autoregression of order one with a
//! non-diagonal thinning matrix and independent Poisson innovations, and the
//! prediction-based outbreak monitoring built on it.
//!
//! ```
//! use minar::model::{simulate, replicate_rng, MinarModel, SimulationConfig};
//! use minar::estimation::{fit, FitOptions, ParameterLayout, ThinningStructure};
//!
//! let model = MinarModel::study_model();
//! let data = simulate(&model, SimulationConfig::new(150), None, None, &mut replicate_rng(1, 0))?;
//! let layout = ParameterLayout::constant(3, ThinningStructure::Full);
//! let fitted = fit(&data, &layout, None, &FitOptions::default())?;
//! assert!(fitted.converged);
//! # Ok::<(), minar::Error>(())
//! ```

pub mod cli;
mod error;
pub mod estimation;
pub mod evaluation;
pub mod likelihood;
pub mod model;
pub mod surveillance;

pub use error::{Error, Result};
