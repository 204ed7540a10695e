//! Enumeration reference for the conditional pmf.
//!
//! Walks every joint thinning outcome `(s_1, …, s_n)` with `s_j <= x_prev[j]`
//! and weights it by the product of textbook binomial probabilities. Shares
//! no numerical code with the convolution path, so it can be used to check it.

use super::pmf::ConditionalPmf;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Largest number of joint thinning outcomes the oracle will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

fn choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, r| acc * (n - r) as f64 / (r + 1) as f64)
}

fn binomial_prob(n: u64, k: u64, p: f64) -> f64 {
    choose(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

fn poisson_prob(lambda: f64, k: u64) -> f64 {
    (1..=k).fold((-lambda).exp(), |acc, r| acc * lambda / r as f64)
}

/// Same contract as [`super::component_conditional_pmf`], with support
/// `0..=max_support`, computed by explicit enumeration.
pub fn brute_force_conditional_pmf(
    params: &ModelParams,
    i: usize,
    x_prev: &[u64],
    covariates: Option<&[f64]>,
    max_support: u64,
) -> Result<ConditionalPmf> {
    let n = params.dim();
    if x_prev.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: x_prev.len(),
        });
    }
    if i >= n {
        return Err(Error::domain(format!("series index {i} out of range")));
    }
    let combinations = x_prev
        .iter()
        .try_fold(1u128, |acc, &x| acc.checked_mul(x as u128 + 1))
        .unwrap_or(u128::MAX);
    if combinations > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            combinations,
            limit: ENUMERATION_LIMIT,
        });
    }
    let lambda = params.innovations.mean(i, covariates)?;
    let row = params.thinning.row(i);

    let total_prev: u64 = x_prev.iter().sum();
    let mut thinned = vec![0.0; total_prev as usize + 1];
    let mut outcome = vec![0u64; n];
    loop {
        let weight: f64 = (0..n)
            .map(|j| binomial_prob(x_prev[j], outcome[j], row[j]))
            .product();
        thinned[outcome.iter().sum::<u64>() as usize] += weight;

        // odometer increment over the joint outcome
        let mut j = 0;
        while j < n && outcome[j] == x_prev[j] {
            outcome[j] = 0;
            j += 1;
        }
        if j == n {
            break;
        }
        outcome[j] += 1;
    }

    let masses: Vec<f64> = (0..=max_support)
        .map(|y| {
            thinned
                .iter()
                .enumerate()
                .take_while(|(s, _)| *s as u64 <= y)
                .map(|(s, w)| w * poisson_prob(lambda, y - s as u64))
                .sum()
        })
        .collect();
    Ok(ConditionalPmf::from_masses(masses))
}
