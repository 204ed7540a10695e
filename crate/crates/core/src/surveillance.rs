//! Prediction-based monitoring.
//!
//! For each operational step the fitted model gives the one-step-ahead
//! marginal predictive pmf of every series, conditioned on the previous
//! observed counts. A series flags when its observation exceeds the
//! `(1 - α)`-quantile of that pmf, and an overall alarm fires when at least
//! `ceil(fraction · n)` series flag together.
//!
//! The fitted model stays frozen during monitoring, and conditioning always
//! uses the observed counts, including counts that raised an alarm.

use std::io::Write;

use crate::error::{Error, Result};
use crate::estimation::FittedModel;
use crate::likelihood::{check_data, component_conditional_pmf, ConditionalPmf};
use crate::model::{ModelParams, MultiCountSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurveillanceConfig {
    /// Per-series significance level.
    pub alpha: f64,
    /// Minimum fraction of series that must flag for an overall alarm.
    pub rule_fraction: f64,
}

impl Default for SurveillanceConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            rule_fraction: 0.6,
        }
    }
}

impl SurveillanceConfig {
    pub fn new(alpha: f64, rule_fraction: f64) -> Result<Self> {
        let config = Self {
            alpha,
            rule_fraction,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("significance level {} not in (0, 1)", self.alpha)));
        }
        if !(self.rule_fraction > 0.0 && self.rule_fraction <= 1.0) {
            return Err(Error::domain(format!(
                "rule fraction {} not in (0, 1]",
                self.rule_fraction
            )));
        }
        Ok(())
    }

    /// Number of simultaneous flags needed for an overall alarm.
    pub fn required_flags(&self, n: usize) -> usize {
        // slack absorbs products such as (2/3)·3 = 2.0000000000000004
        ((self.rule_fraction * n as f64 - 1e-9).ceil() as usize).max(1)
    }

    pub fn is_alarm(&self, flags: &[bool]) -> bool {
        flags.iter().filter(|f| **f).count() >= self.required_flags(flags.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveillanceStep {
    pub time: i64,
    pub observed: Vec<u64>,
    pub upper_bounds: Vec<u64>,
    pub flags: Vec<bool>,
    pub alarm: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveillanceReport {
    pub config: SurveillanceConfig,
    pub steps: Vec<SurveillanceStep>,
}

impl SurveillanceReport {
    pub fn alarm_times(&self) -> Vec<i64> {
        self.steps.iter().filter(|s| s.alarm).map(|s| s.time).collect()
    }

    pub fn alarm_count(&self) -> usize {
        self.steps.iter().filter(|s| s.alarm).count()
    }

    /// CSV with columns `t, x1..xn, ub1..ubn, flag1..flagn, alarm`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.steps.first().map_or(0, |s| s.observed.len());
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("ub{i}")));
        header.extend((1..=n).map(|i| format!("flag{i}")));
        header.push("alarm".into());
        w.write_record(&header)?;
        let bit = |b: bool| if b { "1" } else { "0" }.to_string();
        for s in &self.steps {
            let mut rec = vec![s.time.to_string()];
            rec.extend(s.observed.iter().map(u64::to_string));
            rec.extend(s.upper_bounds.iter().map(u64::to_string));
            rec.extend(s.flags.iter().map(|&f| bit(f)));
            rec.push(bit(s.alarm));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Plug-in predictive law `P̂(X_{i,t+1} = · | x_t, θ̂)`. `covariates` is the
/// covariate row of time `t + 1`.
pub fn marginal_predictive_pmf(
    fit: &FittedModel,
    x_t: &[u64],
    i: usize,
    covariates: Option<&[f64]>,
) -> Result<ConditionalPmf> {
    component_conditional_pmf(&fit.params, i, x_t, covariates)
}

/// Smallest `q` with `CDF(q) >= 1 - α`; the prediction interval is `[0, q]`.
pub fn upper_bound(pmf: &ConditionalPmf, alpha: f64) -> u64 {
    pmf.quantile(1.0 - alpha)
}

/// Monitors `data`, whose first row is the conditioning state and whose
/// remaining rows are the operational steps.
pub fn monitor(
    fit: &FittedModel,
    data: &MultiCountSeries,
    config: &SurveillanceConfig,
) -> Result<SurveillanceReport> {
    let mut reports = monitor_params(&fit.params, data, std::slice::from_ref(config))?;
    Ok(reports.remove(0))
}

/// Monitors the same data under several configurations, computing each
/// predictive pmf once.
pub fn monitor_params(
    params: &ModelParams,
    data: &MultiCountSeries,
    configs: &[SurveillanceConfig],
) -> Result<Vec<SurveillanceReport>> {
    for c in configs {
        c.validate()?;
    }
    check_data(params, data)?;
    if data.len() < 2 {
        return Err(Error::domain(
            "monitoring needs a conditioning row followed by at least one operational row",
        ));
    }
    let n = params.dim();
    let mut reports: Vec<SurveillanceReport> = configs
        .iter()
        .map(|&config| SurveillanceReport {
            config,
            steps: Vec::with_capacity(data.len() - 1),
        })
        .collect();
    for t in 1..data.len() {
        let prev = data.row(t - 1);
        let observed = data.row(t);
        let z = data.covariate_row(t);
        let pmfs = (0..n)
            .map(|i| component_conditional_pmf(params, i, prev, z))
            .collect::<Result<Vec<_>>>()?;
        for report in &mut reports {
            let upper_bounds: Vec<u64> =
                pmfs.iter().map(|p| upper_bound(p, report.config.alpha)).collect();
            let flags: Vec<bool> =
                observed.iter().zip(&upper_bounds).map(|(x, ub)| x > ub).collect();
            let alarm = report.config.is_alarm(&flags);
            report.steps.push(SurveillanceStep {
                time: data.time(t),
                observed: observed.to_vec(),
                upper_bounds,
                flags,
                alarm,
            });
        }
    }
    Ok(reports)
}
