//! Conditional probability mass functions and the conditional
//! log-likelihood of the independent-innovation model.
//!
//! Given `x_{t-1}`, the components of `X_t` are independent: each is a sum of
//! independent binomial thinnings plus its own Poisson innovation. The joint
//! conditional density is therefore the product of the component pmfs.

mod loglik;
mod oracle;
mod pmf;

pub use loglik::{log_likelihood, log_likelihood_with_gradient, NaturalGradient, ZERO_MASS_PENALTY};
pub use oracle::{brute_force_conditional_pmf, ENUMERATION_LIMIT};
pub use pmf::{
    component_conditional_pmf, component_conditional_pmf_with_tolerance, ConditionalPmf,
    DEFAULT_TAIL_TOLERANCE,
};

pub(crate) use loglik::check_data;

use crate::error::Result;
use crate::estimation::ParameterLayout;
use crate::model::MultiCountSeries;

/// Log-likelihood of `data` at the packed parameter vector `theta`
/// (reporting parameterization, see [`ParameterLayout`]).
pub fn conditional_log_likelihood(
    theta: &[f64],
    data: &MultiCountSeries,
    layout: &ParameterLayout,
) -> Result<f64> {
    log_likelihood(&layout.unpack(theta)?, data)
}
