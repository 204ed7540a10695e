//! Monte-Carlo evaluation of the monitoring procedure.
//!
//! Each replicate simulates a series of `total_length` steps with an
//! outbreak injected at `outbreak_time`, fits the model to the first
//! `setup_length` steps and monitors the rest. Monitoring step `k` (0-based)
//! is time `setup_length + 1 + k`, conditioned on time `setup_length + k`.
//!
//! The outbreak is injected after the set-up phase, so for a fixed replicate
//! seed the set-up data do not depend on `κ`. Every approach is therefore
//! fitted once per replicate and the fit is reused for every `κ` and `α`.

mod metrics;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{fit, FitOptions, FittedModel, ParameterLayout, ThinningStructure};
use crate::model::{
    replicate_rng, simulate, MinarModel, ModelFile, MultiCountSeries, OutbreakSpec,
    SimulationConfig,
};
use crate::surveillance::{monitor_params, SurveillanceConfig};

pub use metrics::{
    average_run_length, detection_rate, false_alarm_rate, ArlConvention, MetricsSummary,
};
pub use report::{write_alarm_log, write_arl_table, write_rate_table, CONVENTIONS};

/// How the set-up phase is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    /// One model with a full thinning matrix. Named after the three-series
    /// study but valid for any dimension.
    #[serde(alias = "multivariate", alias = "full")]
    Trivariate,
    /// Separate univariate INAR(1) models, i.e. a diagonal thinning matrix.
    Independent,
}

impl Approach {
    pub fn label(self) -> &'static str {
        match self {
            Approach::Trivariate => "trivariate",
            Approach::Independent => "independent",
        }
    }

    pub fn layout(self, n: usize) -> ParameterLayout {
        let structure = match self {
            Approach::Trivariate => ThinningStructure::Full,
            Approach::Independent => ThinningStructure::Diagonal,
        };
        ParameterLayout::constant(n, structure)
    }
}

/// Design of a simulation study. Every field defaults to the reference
/// study, so `{}` is a valid document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub model: ModelFile,
    pub total_length: usize,
    pub setup_length: usize,
    /// 1-based time of the outbreak within the simulated series.
    pub outbreak_time: usize,
    pub kappas: Vec<f64>,
    pub replicates: usize,
    pub alphas: Vec<f64>,
    pub approaches: Vec<Approach>,
    pub rule_fraction: f64,
    pub base_seed: u64,
    pub burn_in: usize,
    pub arl_convention: ArlConvention,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            model: ModelFile::from(&MinarModel::study_model()),
            total_length: 200,
            setup_length: 150,
            outbreak_time: 170,
            kappas: vec![5.0, 8.0, 10.0],
            replicates: 1000,
            alphas: vec![0.10, 0.05, 0.01],
            approaches: vec![Approach::Trivariate, Approach::Independent],
            rule_fraction: 0.6,
            base_seed: 20_160_101,
            burn_in: 100,
            arl_convention: ArlConvention::Censored,
        }
    }
}

/// One `(κ, α, approach)` combination of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub kappa: f64,
    pub alpha: f64,
    pub approach: Approach,
}

impl ExperimentSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Checks the whole spec and returns the generating model, or every
    /// problem found.
    pub fn validate(&self) -> Result<MinarModel> {
        let mut problems = Vec::new();
        let model = match self.model.clone().into_model() {
            Ok(m) => Some(m),
            Err(e) => {
                problems.push(format!("model: {e}"));
                None
            }
        };
        if let Some(m) = &model {
            if m.innovations.is_regression() {
                problems.push("model: regression innovations are not supported here".into());
            }
        }
        if self.setup_length < 2 {
            problems.push(format!("setup_length {} must be at least 2", self.setup_length));
        }
        if self.setup_length >= self.total_length {
            problems.push(format!(
                "setup_length {} must be below total_length {}",
                self.setup_length, self.total_length
            ));
        }
        if self.outbreak_time <= self.setup_length || self.outbreak_time > self.total_length {
            problems.push(format!(
                "outbreak_time {} must lie in the monitoring phase {}..={}",
                self.outbreak_time,
                self.setup_length + 1,
                self.total_length
            ));
        }
        if self.total_length - self.setup_length.min(self.total_length) < 2 {
            problems.push("monitoring phase needs at least 2 steps".into());
        }
        if self.kappas.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            problems.push(format!("kappas {:?} must be finite and >= 0", self.kappas));
        }
        if self.replicates == 0 {
            problems.push("replicates must be positive".into());
        }
        for &alpha in &self.alphas {
            if let Err(e) = SurveillanceConfig::new(alpha, 0.5) {
                problems.push(format!("alphas: {e}"));
            }
        }
        if let Err(e) = SurveillanceConfig::new(0.5, self.rule_fraction) {
            problems.push(format!("rule_fraction: {e}"));
        }
        for (k, a) in self.approaches.iter().enumerate() {
            if self.approaches[..k].contains(a) {
                problems.push(format!("approach {} listed twice", a.label()));
            }
        }
        match (problems.is_empty(), model) {
            (true, Some(m)) => Ok(m),
            _ => Err(Error::InvalidSpec(problems)),
        }
    }

    pub fn monitoring_length(&self) -> usize {
        self.total_length - self.setup_length
    }

    /// Position of the outbreak within the monitoring steps.
    pub fn outbreak_index(&self) -> usize {
        self.outbreak_time - self.setup_length - 1
    }

    /// Grid cells ordered by `κ`, then `α`, then approach.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &kappa in &self.kappas {
            for &alpha in &self.alphas {
                for &approach in &self.approaches {
                    cells.push(Cell {
                        kappa,
                        alpha,
                        approach,
                    });
                }
            }
        }
        cells
    }
}

/// Flags (`flags[k][i]`, step `k`, series `i`) and overall alarms of one
/// monitored replicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub flags: Vec<Vec<bool>>,
    pub alarms: Vec<bool>,
}

/// Outcome of one replicate, aligned with [`ExperimentSpec::cells`]. `None`
/// marks a cell whose fit failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub runs: Vec<Option<RunRecord>>,
}

fn fit_setup(data: &MultiCountSeries, approach: Approach) -> Option<FittedModel> {
    let options = FitOptions {
        standard_errors: false,
        ..FitOptions::default()
    };
    fit(data, &approach.layout(data.dim()), None, &options)
        .ok()
        .filter(|f| f.converged && f.log_likelihood.is_finite())
}

/// Simulates, fits and monitors replicate `index` of a validated spec.
pub fn run_replicate(spec: &ExperimentSpec, model: &MinarModel, index: usize) -> Result<ReplicateOutcome> {
    let n = model.dim();
    let config = SimulationConfig::new(spec.total_length).burn_in(spec.burn_in);
    let series = spec
        .kappas
        .iter()
        .map(|&kappa| {
            let outbreak = OutbreakSpec::uniform(spec.outbreak_time as i64, kappa, n);
            let mut rng = replicate_rng(spec.base_seed, index as u64);
            simulate(model, config, Some(&outbreak), None, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let setup = match series.first() {
        Some(s) => s.slice(0..spec.setup_length),
        None => return Ok(ReplicateOutcome { index, runs: Vec::new() }),
    };
    let fits: Vec<Option<FittedModel>> =
        spec.approaches.iter().map(|&a| fit_setup(&setup, a)).collect();
    let configs = spec
        .alphas
        .iter()
        .map(|&a| SurveillanceConfig::new(a, spec.rule_fraction))
        .collect::<Result<Vec<_>>>()?;

    let mut runs = Vec::with_capacity(spec.kappas.len() * configs.len() * fits.len());
    for s in &series {
        debug_assert_eq!(s.slice(0..spec.setup_length), setup);
        let window = s.slice(spec.setup_length - 1..spec.total_length);
        let per_approach = fits
            .iter()
            .map(|f| match f {
                Some(f) => monitor_params(&f.params, &window, &configs).map(Some),
                None => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        for a in 0..configs.len() {
            for reports in &per_approach {
                runs.push(reports.as_ref().map(|r| {
                    let steps = &r[a].steps;
                    RunRecord {
                        flags: steps.iter().map(|s| s.flags.clone()).collect(),
                        alarms: steps.iter().map(|s| s.alarm).collect(),
                    }
                }));
            }
        }
    }
    Ok(ReplicateOutcome { index, runs })
}

/// Full result of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub spec: ExperimentSpec,
    pub cells: Vec<Cell>,
    pub replicates: Vec<ReplicateOutcome>,
    /// One summary per cell; `None` when every replicate of the cell failed.
    pub summaries: Vec<Option<MetricsSummary>>,
}

/// Runs every replicate in parallel. Results do not depend on the number of
/// threads.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    let model = spec.validate()?;
    let replicates = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_replicate(spec, &model, r))
        .collect::<Result<Vec<_>>>()?;
    let cells = spec.cells();
    let summaries = cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let records: Vec<&RunRecord> =
                replicates.iter().filter_map(|r| r.runs[c].as_ref()).collect();
            let failed = replicates.len() - records.len();
            MetricsSummary::from_records(
                *cell,
                &records,
                spec.outbreak_index(),
                failed,
                spec.arl_convention,
            )
            .ok()
        })
        .collect();
    Ok(ExperimentResults {
        spec: spec.clone(),
        cells,
        replicates,
        summaries,
    })
}

/// Monte-Carlo estimate of `P(max_{t ≠ t*} X_{it} > μ_i + κ)` for each `κ`
/// (outer index) and series (inner index), from outbreak-free series of
/// `length` steps.
pub fn exceedance_probabilities(
    model: &MinarModel,
    kappas: &[f64],
    replicates: usize,
    length: usize,
    outbreak_time: usize,
    base_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if replicates == 0 {
        return Err(Error::domain("replicates must be positive"));
    }
    if outbreak_time == 0 || outbreak_time > length {
        return Err(Error::domain(format!(
            "outbreak time {outbreak_time} outside 1..={length}"
        )));
    }
    let mu = model.stationary_mean(None)?;
    let n = model.dim();
    let maxima = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(base_seed, r as u64);
            let s = simulate(model, SimulationConfig::new(length), None, None, &mut rng)?;
            let mut max = vec![0u64; n];
            for (t, row) in s.rows().enumerate() {
                if t + 1 == outbreak_time {
                    continue;
                }
                for (m, &x) in max.iter_mut().zip(row) {
                    *m = (*m).max(x);
                }
            }
            Ok(max)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(kappas
        .iter()
        .map(|&kappa| {
            (0..n)
                .map(|i| {
                    let hits = maxima.iter().filter(|m| m[i] as f64 > mu[i] + kappa).count();
                    hits as f64 / replicates as f64
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            replicates: 4,
            kappas: vec![0.0, 10.0],
            alphas: vec![0.1, 0.01],
            base_seed: 3,
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn empty_document_is_the_study_design() {
        let spec = ExperimentSpec::from_json_str("{}").unwrap();
        assert_eq!(spec, ExperimentSpec::default());
        let model = spec.validate().unwrap();
        assert_eq!(&model, &MinarModel::study_model());
        assert_eq!(spec.monitoring_length(), 50);
        assert_eq!(spec.outbreak_index(), 19);
        assert_eq!(spec.cells().len(), 18);
    }

    #[test]
    fn validation_enumerates_every_problem() {
        let spec = ExperimentSpec {
            setup_length: 250,
            replicates: 0,
            alphas: vec![0.05, 1.5],
            rule_fraction: 0.0,
            ..ExperimentSpec::default()
        };
        let Err(Error::InvalidSpec(problems)) = spec.validate() else {
            panic!("expected invalid spec");
        };
        assert!(problems.len() >= 5, "{problems:?}");
    }

    #[test]
    fn non_stationary_model_is_reported() {
        let json = r#"{"model": {"n": 1, "A": [[1.0]], "innovations": {"mode": "constant", "lambda": [1.0]}}}"#;
        let spec = ExperimentSpec::from_json_str(json).unwrap();
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentSpec::from_json_str(r#"{"replicate": 3}"#).is_err());
    }

    #[test]
    fn replicate_is_deterministic() {
        let spec = small_spec();
        let model = spec.validate().unwrap();
        let a = run_replicate(&spec, &model, 2).unwrap();
        let b = run_replicate(&spec, &model, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), spec.cells().len());
        for run in a.runs.iter().flatten() {
            assert_eq!(run.alarms.len(), 50);
            assert!(run.flags.iter().all(|f| f.len() == 3));
        }
    }

    #[test]
    fn independent_layout_has_no_cross_terms() {
        let layout = Approach::Independent.layout(3);
        assert_eq!(layout.alpha_slots(), vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(layout.len(), 6);
    }

    #[test]
    fn experiment_matches_sequential_replicates() {
        let spec = small_spec();
        let model = spec.validate().unwrap();
        let results = run_experiment(&spec).unwrap();
        for (r, outcome) in results.replicates.iter().enumerate() {
            assert_eq!(outcome, &run_replicate(&spec, &model, r).unwrap());
        }
        assert_eq!(results.summaries.len(), results.cells.len());
    }

    #[test]
    fn exceedance_vanishes_for_huge_kappa() {
        let m = MinarModel::study_model();
        let p = exceedance_probabilities(&m, &[0.0, 1000.0], 50, 200, 170, 1).unwrap();
        assert!(p[0].iter().all(|&v| v == 1.0));
        assert!(p[1].iter().all(|&v| v == 0.0));
    }
}
