//! Process objects for the multivariate INAR(1) model
//! `X_t = A ∘ X_{t-1} + ε_t` with independent Poisson innovations.
//!
//! [`ModelParams`] is a plain parameter container used by the likelihood
//! and the optimizer, where non-stationary values are allowed. [`MinarModel`]
//! wraps it and guarantees stationarity.

mod moments;
mod series;
mod simulate;

use std::ops::Deref;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use moments::{bivariate_moments, BivariateMoments};
pub use series::{Covariates, MultiCountSeries};
pub use simulate::{replicate_rng, simulate, thin, OutbreakSpec, SimulationConfig};

/// Spectral radius must stay below `1 - STATIONARITY_MARGIN`.
pub const STATIONARITY_MARGIN: f64 = 1e-9;

/// The `n × n` matrix of thinning probabilities `α_ij` (the epidemic component).
#[derive(Debug, Clone, PartialEq)]
pub struct ThinningMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl ThinningMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("thinning matrix must have dimension >= 1"));
        }
        if entries.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: entries.len(),
            });
        }
        for (k, &a) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::domain(format!(
                    "alpha[{}][{}] = {a} is not a probability",
                    k / n,
                    k % n
                )));
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                found: bad.len(),
            });
        }
        Self::new(n, rows.concat())
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut entries = vec![0.0; n * n];
        for (i, &a) in diag.iter().enumerate() {
            entries[i * n + i] = a;
        }
        Self::new(n, entries)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// Modulus of the dominant eigenvalue.
    ///
    /// Power iteration on `A + I`, which has the same Perron vector as `A` and
    /// a strictly dominant eigenvalue `ρ(A) + 1`. The returned value is the
    /// upper Collatz–Wielandt bound `max_i (Bv)_i / v_i`, which is
    /// non-increasing along the iteration and never underestimates `ρ(A)`.
    pub fn spectral_radius(&self) -> f64 {
        let n = self.n;
        let mut v = vec![1.0; n];
        let mut next = vec![0.0; n];
        let mut bound = f64::INFINITY;
        for _ in 0..100_000 {
            for i in 0..n {
                next[i] = v[i] + self.row(i).iter().zip(&v).map(|(a, x)| a * x).sum::<f64>();
            }
            let estimate = next
                .iter()
                .zip(&v)
                .map(|(b, x)| b / x)
                .fold(f64::NEG_INFINITY, f64::max);
            let scale = next.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for (x, b) in v.iter_mut().zip(&next) {
                // keep strictly positive so the ratio stays defined
                *x = (b / scale).max(1e-300);
            }
            let converged = bound - estimate <= 1e-15 * estimate;
            bound = bound.min(estimate);
            if converged {
                break;
            }
        }
        (bound - 1.0).max(0.0)
    }

    /// Matrix `B` with `B_ij = α_ij (1 - α_ij)`.
    pub fn thinning_variance(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            let a = self.get(i, j);
            a * (1.0 - a)
        })
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }
}

/// Mean structure of the independent Poisson innovations (the endemic component).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum InnovationModel {
    /// `E(ε_it) = λ_i`.
    Constant { lambda: Vec<f64> },
    /// `E(ε_it) = exp(β_i0 + Σ_k β_ik z_tk)`; `beta[i]` has one intercept plus
    /// one coefficient per named covariate.
    Regression {
        beta: Vec<Vec<f64>>,
        covariates: Vec<String>,
    },
}

impl InnovationModel {
    pub fn constant(lambda: Vec<f64>) -> Result<Self> {
        let model = InnovationModel::Constant { lambda };
        model.validate()?;
        Ok(model)
    }

    pub fn regression(beta: Vec<Vec<f64>>, covariates: Vec<String>) -> Result<Self> {
        let model = InnovationModel::Regression { beta, covariates };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InnovationModel::Constant { lambda } => {
                if lambda.is_empty() {
                    return Err(Error::domain("innovation model has no series"));
                }
                if let Some(l) = lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
                    return Err(Error::domain(format!("innovation mean {l} must be > 0")));
                }
            }
            InnovationModel::Regression { beta, covariates } => {
                if beta.is_empty() {
                    return Err(Error::domain("innovation model has no series"));
                }
                for b in beta {
                    if b.len() != covariates.len() + 1 {
                        return Err(Error::Dimension {
                            expected: covariates.len() + 1,
                            found: b.len(),
                        });
                    }
                    if b.iter().any(|x| !x.is_finite()) {
                        return Err(Error::domain("regression coefficients must be finite"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            InnovationModel::Constant { lambda } => lambda.len(),
            InnovationModel::Regression { beta, .. } => beta.len(),
        }
    }

    /// Number of covariates (0 in constant mode).
    pub fn covariate_count(&self) -> usize {
        match self {
            InnovationModel::Constant { .. } => 0,
            InnovationModel::Regression { covariates, .. } => covariates.len(),
        }
    }

    pub fn is_regression(&self) -> bool {
        matches!(self, InnovationModel::Regression { .. })
    }

    /// Innovation mean of series `i` given the covariate row for that time.
    pub fn mean(&self, i: usize, covariates: Option<&[f64]>) -> Result<f64> {
        match self {
            InnovationModel::Constant { lambda } => Ok(lambda[i]),
            InnovationModel::Regression { beta, covariates: names } => {
                let z = covariates.ok_or_else(|| {
                    Error::domain("regression innovations require a covariate row")
                })?;
                if z.len() != names.len() {
                    return Err(Error::Dimension {
                        expected: names.len(),
                        found: z.len(),
                    });
                }
                Ok(regression_mean(&beta[i], z))
            }
        }
    }

    pub fn means(&self, covariates: Option<&[f64]>) -> Result<Vec<f64>> {
        (0..self.dim()).map(|i| self.mean(i, covariates)).collect()
    }
}

#[inline]
pub(crate) fn regression_mean(beta: &[f64], z: &[f64]) -> f64 {
    let eta = beta[0] + beta[1..].iter().zip(z).map(|(b, x)| b * x).sum::<f64>();
    eta.exp()
}

/// Thinning matrix plus innovation model, without a stationarity requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub thinning: ThinningMatrix,
    pub innovations: InnovationModel,
}

impl ModelParams {
    pub fn new(thinning: ThinningMatrix, innovations: InnovationModel) -> Result<Self> {
        innovations.validate()?;
        if thinning.dim() != innovations.dim() {
            return Err(Error::Dimension {
                expected: thinning.dim(),
                found: innovations.dim(),
            });
        }
        Ok(Self {
            thinning,
            innovations,
        })
    }

    pub fn dim(&self) -> usize {
        self.thinning.dim()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.thinning.spectral_radius()
    }

    pub fn is_stationary(&self) -> bool {
        self.spectral_radius() < 1.0 - STATIONARITY_MARGIN
    }
}

/// A stationary MINAR(1) model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct MinarModel {
    params: ModelParams,
}

impl MinarModel {
    pub fn new(thinning: ThinningMatrix, innovations: InnovationModel) -> Result<Self> {
        Self::from_params(ModelParams::new(thinning, innovations)?)
    }

    pub fn from_params(params: ModelParams) -> Result<Self> {
        let radius = params.spectral_radius();
        if radius >= 1.0 - STATIONARITY_MARGIN {
            return Err(Error::NonStationary { radius });
        }
        Ok(Self { params })
    }

    /// The trivariate model used throughout the simulation study:
    /// `A = [[0.3,0.1,0.2],[0.2,0.4,0.2],[0.3,0.2,0.2]]`, `λ = (1,1,1)`.
    pub fn study_model() -> Self {
        let a = ThinningMatrix::new(3, vec![0.3, 0.1, 0.2, 0.2, 0.4, 0.2, 0.3, 0.2, 0.2])
            .expect("valid matrix");
        Self::new(a, InnovationModel::Constant { lambda: vec![1.0; 3] }).expect("stationary")
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn into_params(self) -> ModelParams {
        self.params
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        file.into_model()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

impl Deref for MinarModel {
    type Target = ModelParams;

    fn deref(&self) -> &ModelParams {
        &self.params
    }
}

/// JSON layout of a model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: MatrixRepr,
    pub innovations: InnovationModel,
}

/// Accepts either nested rows or a flat row-major list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRepr {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl ModelFile {
    pub fn into_params(self) -> Result<ModelParams> {
        let a = match self.a {
            MatrixRepr::Rows(rows) => ThinningMatrix::from_rows(&rows)?,
            MatrixRepr::Flat(flat) => ThinningMatrix::new(self.n, flat)?,
        };
        if a.dim() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: a.dim(),
            });
        }
        ModelParams::new(a, self.innovations)
    }

    pub fn into_model(self) -> Result<MinarModel> {
        MinarModel::from_params(self.into_params()?)
    }
}

impl From<&ModelParams> for ModelFile {
    fn from(p: &ModelParams) -> Self {
        ModelFile {
            n: p.dim(),
            a: MatrixRepr::Rows(p.thinning.rows()),
            innovations: p.innovations.clone(),
        }
    }
}

impl From<MinarModel> for ModelFile {
    fn from(m: MinarModel) -> Self {
        ModelFile::from(m.params())
    }
}

impl TryFrom<ModelFile> for MinarModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        file.into_model()
    }
}

impl From<&MinarModel> for ModelFile {
    fn from(m: &MinarModel) -> Self {
        ModelFile::from(m.params())
    }
}
