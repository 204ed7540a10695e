use super::pmf::{binomial_pmf, convolve_truncated, poisson_pmf};
use crate::error::{Error, Result};
use crate::model::{regression_mean, InnovationModel, ModelParams, MultiCountSeries};

/// Log-likelihood contribution of one observation with zero conditional mass.
pub const ZERO_MASS_PENALTY: f64 = -1e10;

/// Gradient of the log-likelihood in the natural parameterization.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalGradient {
    /// `∂ℓ/∂α_ij`, row-major.
    pub alpha: Vec<f64>,
    /// Per series: `[∂ℓ/∂λ_i]` in constant mode, `[∂ℓ/∂β_i0, …, ∂ℓ/∂β_ip]`
    /// in regression mode.
    pub innovation: Vec<Vec<f64>>,
}

pub(crate) fn check_data(params: &ModelParams, data: &MultiCountSeries) -> Result<()> {
    if data.dim() != params.dim() {
        return Err(Error::Dimension {
            expected: params.dim(),
            found: data.dim(),
        });
    }
    if let InnovationModel::Regression { covariates, .. } = &params.innovations {
        let cov = data
            .covariates()
            .ok_or_else(|| Error::domain("regression model needs data with covariates"))?;
        if cov.names() != covariates.as_slice() {
            return Err(Error::domain(format!(
                "covariate columns {:?} do not match the model's {:?}",
                cov.names(),
                covariates
            )));
        }
    }
    Ok(())
}

/// One factor `f_i(x | x_prev)` of the conditional density together with
/// `∂f/∂λ` and, when requested, `∂f/∂α_ij` for every `j`.
struct ComponentTerm {
    mass: f64,
    d_lambda: f64,
}

fn component_term(
    row: &[f64],
    x_prev: &[u64],
    lambda: f64,
    x: u64,
    d_alpha: Option<&mut [f64]>,
) -> ComponentTerm {
    let len = x as usize + 1;
    let n = row.len();
    let binoms: Vec<Vec<f64>> = row
        .iter()
        .zip(x_prev)
        .map(|(&a, &c)| {
            if c == 0 || a == 0.0 {
                vec![1.0]
            } else {
                binomial_pmf(c, a)
            }
        })
        .collect();
    let pois = poisson_pmf(lambda, x as usize);

    // prefix[j] = b_0 * … * b_{j-1}, truncated to the support we need
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(vec![1.0]);
    for b in &binoms {
        let next = convolve_truncated(prefix.last().unwrap(), b, len);
        prefix.push(next);
    }
    let thinned = &prefix[n];

    let at = |c: &[f64], y: usize| -> f64 {
        // Σ_k c[k] P[y - k]
        c.iter()
            .take(y + 1)
            .enumerate()
            .map(|(k, ck)| ck * pois[y - k])
            .sum()
    };
    let mass = at(thinned, x as usize);
    let below = if x == 0 { 0.0 } else { at(thinned, x as usize - 1) };

    if let Some(d_alpha) = d_alpha {
        let mut suffix = vec![1.0];
        for j in (0..n).rev() {
            let count = x_prev[j];
            d_alpha[j] = if count == 0 {
                0.0
            } else {
                // ∂/∂p Bin(m; c, p) = c [Bin(m-1; c-1, p) - Bin(m; c-1, p)]
                let reduced = binomial_pmf(count - 1, row[j]);
                let others = convolve_truncated(&prefix[j], &suffix, len);
                let with_innov = convolve_truncated(&others, &pois, len);
                let mut d = 0.0;
                for m in 0..=(count as usize).min(x as usize) {
                    let lo = if m == 0 { 0.0 } else { reduced[m - 1] };
                    let hi = reduced.get(m).copied().unwrap_or(0.0);
                    d += (lo - hi) * with_innov[x as usize - m];
                }
                count as f64 * d
            };
            suffix = convolve_truncated(&binoms[j], &suffix, len);
        }
    }

    ComponentTerm {
        mass,
        d_lambda: below - mass,
    }
}

fn accumulate(
    params: &ModelParams,
    data: &MultiCountSeries,
    mut grad: Option<&mut NaturalGradient>,
) -> Result<f64> {
    check_data(params, data)?;
    if data.len() < 2 {
        return Err(Error::domain("conditional likelihood needs at least 2 time steps"));
    }
    let n = params.dim();
    let mut loglik = 0.0;
    let mut violations = 0u64;
    let mut d_alpha_row = vec![0.0; n];
    for t in 1..data.len() {
        let prev = data.row(t - 1);
        let cur = data.row(t);
        let z = data.covariate_row(t);
        for i in 0..n {
            let lambda = match &params.innovations {
                InnovationModel::Constant { lambda } => lambda[i],
                InnovationModel::Regression { beta, .. } => {
                    regression_mean(&beta[i], z.expect("checked covariates"))
                }
            };
            let want_grad = grad.is_some();
            let term = component_term(
                params.thinning.row(i),
                prev,
                lambda,
                cur[i],
                want_grad.then_some(d_alpha_row.as_mut_slice()),
            );
            if !(term.mass > 0.0 && term.mass.is_finite()) {
                violations += 1;
                continue;
            }
            loglik += term.mass.ln();
            if let Some(g) = grad.as_deref_mut() {
                let inv = 1.0 / term.mass;
                for (ga, da) in g.alpha[i * n..(i + 1) * n].iter_mut().zip(&d_alpha_row) {
                    *ga += da * inv;
                }
                let dl = term.d_lambda * inv;
                match &params.innovations {
                    InnovationModel::Constant { .. } => g.innovation[i][0] += dl,
                    InnovationModel::Regression { .. } => {
                        let scale = dl * lambda;
                        let gi = &mut g.innovation[i];
                        gi[0] += scale;
                        for (gk, zk) in gi[1..].iter_mut().zip(z.expect("checked covariates")) {
                            *gk += scale * zk;
                        }
                    }
                }
            }
        }
    }
    Ok(loglik + ZERO_MASS_PENALTY * violations as f64)
}

/// `Σ_{t=2}^{T} Σ_i log f_i(x_it | x_{t-1})`.
///
/// Observations with zero conditional mass contribute [`ZERO_MASS_PENALTY`]
/// each instead of `-∞`.
pub fn log_likelihood(params: &ModelParams, data: &MultiCountSeries) -> Result<f64> {
    accumulate(params, data, None)
}

/// Log-likelihood and its exact gradient in the natural parameterization.
pub fn log_likelihood_with_gradient(
    params: &ModelParams,
    data: &MultiCountSeries,
) -> Result<(f64, NaturalGradient)> {
    let n = params.dim();
    let width = match &params.innovations {
        InnovationModel::Constant { .. } => 1,
        InnovationModel::Regression { covariates, .. } => covariates.len() + 1,
    };
    let mut grad = NaturalGradient {
        alpha: vec![0.0; n * n],
        innovation: vec![vec![0.0; width]; n],
    };
    let value = accumulate(params, data, Some(&mut grad))?;
    Ok((value, grad))
}
