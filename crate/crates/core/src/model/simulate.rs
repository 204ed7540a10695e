use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use super::{Covariates, MinarModel, MultiCountSeries};
use crate::error::{Error, Result};

/// Binomial thinning `α ∘ count`: the number of successes among `count`
/// independent Bernoulli(`alpha`) trials.
pub fn thin<R: Rng + ?Sized>(count: u64, alpha: f64, rng: &mut R) -> Result<u64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("thinning probability {alpha} outside [0, 1]")));
    }
    if count == 0 || alpha == 0.0 {
        return Ok(0);
    }
    if alpha == 1.0 {
        return Ok(count);
    }
    let binomial = Binomial::new(count, alpha).map_err(|e| Error::domain(e.to_string()))?;
    Ok(binomial.sample(rng))
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::domain(format!("Poisson({mean}): {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Independent random source for replicate `index` of an experiment seeded
/// with `base_seed`. Each replicate reads its own ChaCha stream.
pub fn replicate_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// An outbreak of expected size `kappa[i]` in series `i` at time `time`
/// (time index of the simulated output, which starts at 1).
#[derive(Debug, Clone, PartialEq)]
pub struct OutbreakSpec {
    pub time: i64,
    pub kappa: Vec<f64>,
}

impl OutbreakSpec {
    pub fn uniform(time: i64, kappa: f64, n: usize) -> Self {
        Self {
            time,
            kappa: vec![kappa; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub length: usize,
    pub burn_in: usize,
}

impl SimulationConfig {
    pub fn new(length: usize) -> Self {
        Self {
            length,
            burn_in: 100,
        }
    }

    pub fn burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }
}

/// Simulates `config.length` steps of `X_t = A ∘ X_{t-1} + ε_t`.
///
/// The initial state is drawn as independent Poissons at the stationary
/// mean and then run through `config.burn_in` discarded steps. An outbreak
/// adds an independent Poisson(`κ_i`) count to series `i` at its time.
/// In regression mode `covariates` must hold at least `length` rows; row
/// `k` drives output time `k + 1`, and burn-in runs with row 0.
pub fn simulate<R: Rng + ?Sized>(
    model: &MinarModel,
    config: SimulationConfig,
    outbreak: Option<&OutbreakSpec>,
    covariates: Option<&Covariates>,
    rng: &mut R,
) -> Result<MultiCountSeries> {
    let n = model.dim();
    let length = config.length;
    if let Some(o) = outbreak {
        if o.kappa.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: o.kappa.len(),
            });
        }
        if o.time < 1 || o.time > length as i64 {
            return Err(Error::domain(format!(
                "outbreak time {} outside simulated horizon 1..={length}",
                o.time
            )));
        }
        if o.kappa.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(Error::domain("outbreak sizes must be finite and >= 0"));
        }
    }
    let covariates = if model.innovations.is_regression() {
        let c = covariates
            .ok_or_else(|| Error::domain("regression model requires covariates to simulate"))?;
        if c.width() != model.innovations.covariate_count() {
            return Err(Error::Dimension {
                expected: model.innovations.covariate_count(),
                found: c.width(),
            });
        }
        if c.len() < length.max(1) {
            return Err(Error::Dimension {
                expected: length,
                found: c.len(),
            });
        }
        Some(c)
    } else {
        None
    };
    let cov_row = |k: usize| covariates.map(|c| c.row(k));

    let mu = model.stationary_mean(cov_row(0))?;
    let mut state = mu
        .iter()
        .map(|&m| poisson(m, rng))
        .collect::<Result<Vec<u64>>>()?;

    let burn_in_means = model.innovations.means(cov_row(0))?;
    let mut next = vec![0u64; n];
    for _ in 0..config.burn_in {
        step(model, &state, &burn_in_means, &mut next, rng)?;
        std::mem::swap(&mut state, &mut next);
    }

    let mut counts = Vec::with_capacity(length * n);
    for k in 0..length {
        let means = model.innovations.means(cov_row(k))?;
        step(model, &state, &means, &mut next, rng)?;
        if let Some(o) = outbreak {
            if o.time == k as i64 + 1 {
                for (x, &kappa) in next.iter_mut().zip(&o.kappa) {
                    *x += poisson(kappa, rng)?;
                }
            }
        }
        std::mem::swap(&mut state, &mut next);
        counts.extend_from_slice(&state);
    }

    let series = MultiCountSeries::new(n, counts, 1)?;
    match covariates {
        Some(c) => series.with_covariates(c.slice(0..length)),
        None => Ok(series),
    }
}

fn step<R: Rng + ?Sized>(
    model: &MinarModel,
    prev: &[u64],
    means: &[f64],
    out: &mut [u64],
    rng: &mut R,
) -> Result<()> {
    for (i, x) in out.iter_mut().enumerate() {
        let mut total = 0;
        for (&alpha, &count) in model.thinning.row(i).iter().zip(prev) {
            total += thin(count, alpha, rng)?;
        }
        *x = total + poisson(means[i], rng)?;
    }
    Ok(())
}
