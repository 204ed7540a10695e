//! Conditional maximum-likelihood estimation.

mod design;
mod fit;
mod layout;
pub mod optimizer;

pub use design::{build_design, SeasonalDesign, SEASONAL_PERIOD};
pub use fit::{evaluate_log_likelihood, fit, standard_errors, FitOptions, FitReport, FittedModel};
pub use layout::{InnovationLayout, ParamKind, ParameterLayout, ThinningStructure};
