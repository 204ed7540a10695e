use std::borrow::Borrow;

use serde::{Deserialize, Serialize};

use super::{Approach, Cell, RunRecord};
use crate::error::{Error, Result};

fn rec<R: Borrow<RunRecord>>(r: &R) -> &RunRecord {
    r.borrow()
}

fn non_empty<R>(records: &[R]) -> Result<()> {
    if records.is_empty() {
        Err(Error::domain("no successful replicates"))
    } else {
        Ok(())
    }
}

/// Fraction of replicates with an overall alarm at the outbreak step.
pub fn detection_rate<R: Borrow<RunRecord>>(records: &[R], outbreak_index: usize) -> Result<f64> {
    non_empty(records)?;
    let hits = records
        .iter()
        .filter(|&r| rec(r).alarms.get(outbreak_index).copied().unwrap_or(false))
        .count();
    Ok(hits as f64 / records.len() as f64)
}

/// Overall alarms away from the outbreak step, per replicate and per
/// non-outbreak monitoring step.
pub fn false_alarm_rate<R: Borrow<RunRecord>>(records: &[R], outbreak_index: usize) -> Result<f64> {
    non_empty(records)?;
    let steps = rec(&records[0]).alarms.len();
    if steps < 2 {
        return Err(Error::domain("false alarm rate needs at least 2 monitoring steps"));
    }
    let false_alarms: usize = records
        .iter()
        .map(|r| {
            let r = rec(r);
            r.alarms
                .iter()
                .enumerate()
                .filter(|&(k, &a)| a && k != outbreak_index)
                .count()
        })
        .sum();
    Ok(false_alarms as f64 / (records.len() * (steps - 1)) as f64)
}

/// Treatment of replicates in which a series never flags falsely.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArlConvention {
    /// The replicate contributes the full monitoring length.
    #[default]
    Censored,
    /// The replicate is left out of that series' average. A series that
    /// never flags falsely in any replicate gets the monitoring length.
    FlaggedOnly,
}

/// Per-series average run length and the overall value `min_i ARL_i`.
///
/// The run length of series `i` in one replicate is the number of monitoring
/// steps before its first flag away from the outbreak step.
pub fn average_run_length<R: Borrow<RunRecord>>(
    records: &[R],
    outbreak_index: usize,
    convention: ArlConvention,
) -> Result<(Vec<f64>, f64)> {
    non_empty(records)?;
    let n = rec(&records[0]).flags.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::domain("run records hold no series"));
    }
    let steps = rec(&records[0]).flags.len();
    let mut totals = vec![0usize; n];
    let mut counted = vec![0usize; n];
    for r in records {
        let flags = &rec(r).flags;
        for i in 0..n {
            let first = flags
                .iter()
                .enumerate()
                .position(|(k, f)| f[i] && k != outbreak_index);
            match (first, convention) {
                (Some(k), _) => {
                    totals[i] += k;
                    counted[i] += 1;
                }
                (None, ArlConvention::Censored) => {
                    totals[i] += flags.len();
                    counted[i] += 1;
                }
                (None, ArlConvention::FlaggedOnly) => {}
            }
        }
    }
    let arl: Vec<f64> = totals
        .iter()
        .zip(&counted)
        .map(|(&t, &c)| if c == 0 { steps as f64 } else { t as f64 / c as f64 })
        .collect();
    let overall = arl.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((arl, overall))
}

/// Metrics of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub kappa: f64,
    pub alpha: f64,
    pub approach: Approach,
    /// Replicates entering the metrics.
    pub replicates: usize,
    /// Replicates excluded because the fit failed.
    pub failed: usize,
    pub detection_rate: f64,
    pub false_alarm_rate: f64,
    pub arl: Vec<f64>,
    pub overall_arl: f64,
}

impl MetricsSummary {
    pub fn from_records<R: Borrow<RunRecord>>(
        cell: Cell,
        records: &[R],
        outbreak_index: usize,
        failed: usize,
        convention: ArlConvention,
    ) -> Result<Self> {
        let (arl, overall_arl) = average_run_length(records, outbreak_index, convention)?;
        Ok(Self {
            kappa: cell.kappa,
            alpha: cell.alpha,
            approach: cell.approach,
            replicates: records.len(),
            failed,
            detection_rate: detection_rate(records, outbreak_index)?,
            false_alarm_rate: false_alarm_rate(records, outbreak_index)?,
            arl,
            overall_arl,
        })
    }
}
