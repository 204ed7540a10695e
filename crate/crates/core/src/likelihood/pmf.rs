use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Default bound on the Poisson tail mass dropped when truncating support.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Masses below this are flushed to zero.
pub(crate) const UNDERFLOW: f64 = 1e-300;

const LN_FACT_TABLE: usize = 4096;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        t.push(0.0);
        let mut acc = 0.0;
        for k in 1..LN_FACT_TABLE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

pub(crate) fn ln_factorial(k: u64) -> f64 {
    if (k as usize) < LN_FACT_TABLE {
        return ln_factorial_table()[k as usize];
    }
    // Stirling series; error < 1e-16 relative at this size
    let x = k as f64 + 1.0;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
}

#[inline]
fn flush(x: f64) -> f64 {
    if x < UNDERFLOW {
        0.0
    } else {
        x
    }
}

/// Poisson(`lambda`) masses on `0..=upto`.
pub(crate) fn poisson_pmf(lambda: f64, upto: usize) -> Vec<f64> {
    let mut out = vec![0.0; upto + 1];
    if lambda <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ln_lambda = lambda.ln();
    for (k, p) in out.iter_mut().enumerate() {
        *p = flush((k as f64 * ln_lambda - lambda - ln_factorial(k as u64)).exp());
    }
    out
}

/// Poisson masses on `0..=K` for the smallest `K` with `CDF(K) >= 1 - tol`.
pub(crate) fn truncated_poisson_pmf(lambda: f64, tol: f64) -> Vec<f64> {
    if lambda <= 0.0 {
        return vec![1.0];
    }
    let ln_lambda = lambda.ln();
    let mut out = Vec::new();
    let mut cdf = 0.0;
    let mut k = 0u64;
    loop {
        let p = flush((k as f64 * ln_lambda - lambda - ln_factorial(k)).exp());
        out.push(p);
        cdf += p;
        // past the mode with vanishing mass the remaining tail is below rounding
        if cdf >= 1.0 - tol || (k as f64 > lambda && p == 0.0) {
            return out;
        }
        k += 1;
    }
}

/// Binomial(`n`, `p`) masses on `0..=n`.
pub(crate) fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let len = n as usize + 1;
    let mut out = vec![0.0; len];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[n as usize] = 1.0;
        return out;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let lnf = ln_factorial(n);
    for (k, m) in out.iter_mut().enumerate() {
        let k64 = k as u64;
        let ln_choose = lnf - ln_factorial(k64) - ln_factorial(n - k64);
        *m = flush((ln_choose + k as f64 * lp + (n - k64) as f64 * lq).exp());
    }
    out
}

/// Discrete convolution, keeping at most `max_len` leading terms.
pub(crate) fn convolve_truncated(a: &[f64], b: &[f64], max_len: usize) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = (a.len() + b.len() - 1).min(max_len);
    let mut out = vec![0.0; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    for o in &mut out {
        *o = flush(*o);
    }
    out
}

pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    convolve_truncated(a, b, usize::MAX)
}

/// Law of `Σ_j Binomial(x_prev[j], row[j])`.
pub(crate) fn thinning_sum_pmf(row: &[f64], x_prev: &[u64]) -> Vec<f64> {
    row.iter()
        .zip(x_prev)
        .filter(|(&a, &x)| a > 0.0 && x > 0)
        .fold(vec![1.0], |acc, (&a, &x)| convolve(&acc, &binomial_pmf(x, a)))
}

/// A probability mass function on `0..=support_bound()` plus the mass lost
/// by truncating the support.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPmf {
    masses: Vec<f64>,
    tail_mass: f64,
}

impl ConditionalPmf {
    pub fn new(masses: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::domain("pmf needs at least one support point"));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) || tail_mass < 0.0 {
            return Err(Error::domain("pmf masses must be finite and non-negative"));
        }
        Ok(Self { masses, tail_mass })
    }

    /// Builds from masses, setting the tail to whatever is missing from 1.
    pub(crate) fn from_masses(masses: Vec<f64>) -> Self {
        let total: f64 = masses.iter().sum();
        Self {
            masses,
            tail_mass: (1.0 - total).max(0.0),
        }
    }

    /// Point mass at zero.
    pub fn degenerate() -> Self {
        Self {
            masses: vec![1.0],
            tail_mass: 0.0,
        }
    }

    pub fn support_bound(&self) -> u64 {
        self.masses.len() as u64 - 1
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.masses.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn cdf(&self, k: u64) -> f64 {
        let end = (k as usize + 1).min(self.masses.len());
        self.masses[..end].iter().sum()
    }

    /// Sum of the masses plus the tail mass.
    pub fn total(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.tail_mass
    }

    pub fn mean(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(k, m)| k as f64 * m)
            .sum()
    }

    /// Smallest `q` with `CDF(q) >= level`. When the truncated support does
    /// not reach `level`, returns `support_bound() + 1`.
    pub fn quantile(&self, level: f64) -> u64 {
        let mut cdf = 0.0;
        for (k, m) in self.masses.iter().enumerate() {
            cdf += m;
            if cdf >= level {
                return k as u64;
            }
        }
        self.support_bound() + 1
    }
}

fn check_prev(params: &ModelParams, i: usize, x_prev: &[u64]) -> Result<()> {
    let n = params.dim();
    if x_prev.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: x_prev.len(),
        });
    }
    if i >= n {
        return Err(Error::domain(format!("series index {i} out of range for n = {n}")));
    }
    Ok(())
}

/// Exact law of `X_{i,t} | X_{t-1} = x_prev`: the convolution of
/// `Binomial(x_prev[j], α_ij)` over `j` with `Poisson(λ_it)`, the Poisson
/// truncated at the smallest point where its CDF reaches `1 - 1e-12`.
/// `covariates` is the covariate row for time `t` (regression mode only).
pub fn component_conditional_pmf(
    params: &ModelParams,
    i: usize,
    x_prev: &[u64],
    covariates: Option<&[f64]>,
) -> Result<ConditionalPmf> {
    component_conditional_pmf_with_tolerance(params, i, x_prev, covariates, DEFAULT_TAIL_TOLERANCE)
}

pub fn component_conditional_pmf_with_tolerance(
    params: &ModelParams,
    i: usize,
    x_prev: &[u64],
    covariates: Option<&[f64]>,
    tail_tolerance: f64,
) -> Result<ConditionalPmf> {
    check_prev(params, i, x_prev)?;
    if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
        return Err(Error::domain("tail tolerance must lie in (0, 1)"));
    }
    let lambda = params.innovations.mean(i, covariates)?;
    let thinned = thinning_sum_pmf(params.thinning.row(i), x_prev);
    let innovation = truncated_poisson_pmf(lambda, tail_tolerance);
    Ok(ConditionalPmf::from_masses(convolve(&thinned, &innovation)))
}
