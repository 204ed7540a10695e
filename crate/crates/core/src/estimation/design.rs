use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Covariates, MultiCountSeries};

/// Seasonal period of the three-day syndromic recording scheme.
pub const SEASONAL_PERIOD: f64 = 122.0;

/// Covariate matrix for `E(ε_it) = exp{β_i0 + β_i1 weekday + β_i2 cos(2πt/P) + β_i3 sin(2πt/P)}`.
///
/// Columns are `weekday` (when flags are given), `cos`, `sin`.
pub fn build_design(times: &[f64], weekday: Option<&[f64]>, period: f64) -> Result<Covariates> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::domain(format!("seasonal period must be > 0, got {period}")));
    }
    if let Some(w) = weekday {
        if w.len() != times.len() {
            return Err(Error::Dimension {
                expected: times.len(),
                found: w.len(),
            });
        }
    }
    let angle = |t: f64| 2.0 * PI * t / period;
    let mut names = Vec::new();
    let mut columns = Vec::new();
    if let Some(w) = weekday {
        names.push("weekday".to_string());
        columns.push(w.to_vec());
    }
    names.push("cos".to_string());
    columns.push(times.iter().map(|&t| angle(t).cos()).collect());
    names.push("sin".to_string());
    columns.push(times.iter().map(|&t| angle(t).sin()).collect());
    Covariates::from_columns(names, &columns)
}

/// Recipe for the seasonal design of a series: an optional weekday
/// indicator read from a covariate column, plus harmonics of period
/// `period` evaluated at the series' time indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalDesign {
    pub period: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weekday_column: Option<String>,
}

impl SeasonalDesign {
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.weekday_column.is_some() {
            names.push("weekday".to_string());
        }
        names.extend(["cos".to_string(), "sin".to_string()]);
        names
    }

    /// Replaces the covariates of `data` by the design columns.
    pub fn apply(&self, data: MultiCountSeries) -> Result<MultiCountSeries> {
        let times: Vec<f64> = (0..data.len()).map(|t| data.time(t) as f64).collect();
        let weekday = match &self.weekday_column {
            Some(name) => {
                let cov = data
                    .covariates()
                    .ok_or_else(|| Error::format(format!("missing covariate column '{name}'")))?
                    .select(std::slice::from_ref(name))?;
                Some((0..cov.len()).map(|t| cov.row(t)[0]).collect::<Vec<f64>>())
            }
            None => None,
        };
        let design = build_design(&times, weekday.as_deref(), self.period)?;
        data.without_covariates().with_covariates(design)
    }
}
