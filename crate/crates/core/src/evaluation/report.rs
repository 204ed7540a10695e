use std::io::Write;

use super::{ExperimentResults, MetricsSummary};
use crate::error::Result;

/// Conventions behind the reported metrics, written next to every table.
pub const CONVENTIONS: &str = "\
monitoring steps: times setup_length+1..=total_length, the first conditioned on time setup_length
detection rate: share of replicates with an overall alarm at the outbreak time
false alarm rate: overall alarms at other monitoring times / (replicates x (monitoring steps - 1))
run length of series i: monitoring steps before its first flag away from the outbreak time
arl_convention censored: a replicate without such a flag contributes the full monitoring length
arl_convention flagged_only: such a replicate is left out of that series' average
overall ARL: minimum over series of ARL_i
failed fits: excluded from every denominator and counted per cell
rates in the DR/FAR table are multiplied by 100
";

fn lookup(results: &ExperimentResults, k: usize, a: usize, p: usize) -> Option<&MetricsSummary> {
    let spec = &results.spec;
    let idx = (k * spec.alphas.len() + a) * spec.approaches.len() + p;
    results.summaries.get(idx).and_then(Option::as_ref)
}

fn number(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(v) => format!("{v:.decimals$}"),
        None => "NA".into(),
    }
}

fn write_grid<W, H, F>(results: &ExperimentResults, writer: W, header: H, row: F) -> Result<()>
where
    W: Write,
    H: Fn(&str) -> Vec<String>,
    F: Fn(Option<&MetricsSummary>) -> Vec<String>,
{
    let spec = &results.spec;
    let mut w = csv::Writer::from_writer(writer);
    let mut head = vec!["kappa".to_string(), "alpha".to_string()];
    for approach in &spec.approaches {
        head.extend(header(approach.label()));
    }
    w.write_record(&head)?;
    for (k, kappa) in spec.kappas.iter().enumerate() {
        for (a, alpha) in spec.alphas.iter().enumerate() {
            let mut rec = vec![kappa.to_string(), alpha.to_string()];
            for p in 0..spec.approaches.len() {
                rec.extend(row(lookup(results, k, a, p)));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Detection and false alarm rates (×100) with the replicate counts behind
/// them, one row per `(κ, α)`.
pub fn write_rate_table<W: Write>(results: &ExperimentResults, writer: W) -> Result<()> {
    write_grid(
        results,
        writer,
        |label| {
            ["dr", "far", "replicates", "failed"]
                .iter()
                .map(|c| format!("{label}_{c}"))
                .collect()
        },
        |s| {
            vec![
                number(s.map(|s| 100.0 * s.detection_rate), 3),
                number(s.map(|s| 100.0 * s.false_alarm_rate), 3),
                s.map_or("0".into(), |s| s.replicates.to_string()),
                s.map_or("NA".into(), |s| s.failed.to_string()),
            ]
        },
    )
}

/// Per-series and overall average run lengths under the spec's
/// [`ArlConvention`](super::ArlConvention), one row per `(κ, α)`.
pub fn write_arl_table<W: Write>(results: &ExperimentResults, writer: W) -> Result<()> {
    let n = results.spec.model.n;
    write_grid(
        results,
        writer,
        |label| {
            (1..=n)
                .map(|i| format!("{label}_arl{i}"))
                .chain(std::iter::once(format!("{label}_arl")))
                .collect()
        },
        |s| {
            (0..n)
                .map(|i| number(s.map(|s| s.arl[i]), 2))
                .chain(std::iter::once(number(s.map(|s| s.overall_arl), 2)))
                .collect()
        },
    )
}

/// One row per replicate, cell and monitoring step. Replicates whose fit
/// failed have no rows for that approach.
pub fn write_alarm_log<W: Write>(results: &ExperimentResults, writer: W) -> Result<()> {
    let spec = &results.spec;
    let n = spec.model.n;
    let mut w = csv::Writer::from_writer(writer);
    let mut head: Vec<String> = ["replicate", "kappa", "approach", "alpha", "t", "alarm"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    head.extend((1..=n).map(|i| format!("flag{i}")));
    w.write_record(&head)?;
    let bit = |b: bool| if b { "1" } else { "0" }.to_string();
    for outcome in &results.replicates {
        for (cell, run) in results.cells.iter().zip(&outcome.runs) {
            let Some(run) = run else { continue };
            for (k, (flags, &alarm)) in run.flags.iter().zip(&run.alarms).enumerate() {
                let mut rec = vec![
                    outcome.index.to_string(),
                    cell.kappa.to_string(),
                    cell.approach.label().to_string(),
                    cell.alpha.to_string(),
                    (spec.setup_length + 1 + k).to_string(),
                    bit(alarm),
                ];
                rec.extend(flags.iter().map(|&f| bit(f)));
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
