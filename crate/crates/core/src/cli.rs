//! Command-line front end: `simulate`, `fit`, `monitor` and `evaluate`.
//!
//! Series are CSV (`t,x1..xn[,covariates]`), models, fits and experiment
//! specs are JSON. Output files are written to a temporary file in the
//! target directory and renamed into place only on success.
//!
//! Exit codes: 0 success, 1 usage, 2 data or format error, 3 numerical
//! failure (including a fit that did not converge).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    fit, FitOptions, FitReport, FittedModel, ParameterLayout, SeasonalDesign, ThinningStructure,
    SEASONAL_PERIOD,
};
use crate::evaluation::{
    run_experiment, write_alarm_log, write_arl_table, write_rate_table, ExperimentSpec, CONVENTIONS,
};
use crate::model::{
    replicate_rng, simulate, Covariates, MinarModel, MultiCountSeries, OutbreakSpec,
    SimulationConfig,
};
use crate::surveillance::{monitor, SurveillanceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Multivariate INAR(1) simulation, estimation and outbreak surveillance.
#[derive(Debug, Parser)]
#[command(name = "minar", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a series from a model file.
    Simulate(SimulateArgs),
    /// Fit a model to a series by conditional maximum likelihood.
    Fit(FitArgs),
    /// Monitor operational data with a fitted model.
    Monitor(MonitorArgs),
    /// Run a Monte-Carlo evaluation study.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Output series CSV.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Number of time steps.
    #[arg(long, default_value_t = 200)]
    pub length: usize,
    /// Discarded warm-up steps.
    #[arg(long, default_value_t = 100)]
    pub burn_in: usize,
    /// Random seed.
    #[arg(long, env = "MINAR_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Time (1-based) of an injected outbreak.
    #[arg(long, requires = "outbreak_kappa")]
    pub outbreak_t: Option<i64>,
    /// Expected outbreak size: one value for every series, or one per series.
    #[arg(long, value_delimiter = ',', requires = "outbreak_t")]
    pub outbreak_kappa: Option<Vec<f64>>,
    /// Covariate CSV (`t` followed by named columns) for regression models.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutChoice {
    Full,
    Diagonal,
    None,
}

impl From<LayoutChoice> for ThinningStructure {
    fn from(c: LayoutChoice) -> Self {
        match c {
            LayoutChoice::Full => ThinningStructure::Full,
            LayoutChoice::Diagonal => ThinningStructure::Diagonal,
            LayoutChoice::None => ThinningStructure::None,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input series CSV.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output fit JSON.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Free thinning parameters.
    #[arg(long, value_enum, default_value_t = LayoutChoice::Full)]
    pub layout: LayoutChoice,
    /// Seasonal period of the harmonic regressors; enables regression mode.
    #[arg(long)]
    pub period: Option<f64>,
    /// Input column holding a 0/1 weekday indicator; enables regression mode.
    #[arg(long)]
    pub weekday_column: Option<String>,
    /// Input columns used directly as regressors.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["period", "weekday_column"])]
    pub covariates: Option<Vec<String>>,
    #[arg(long, default_value_t = 2000)]
    pub max_iterations: usize,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    /// Fit JSON written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// Operational series CSV; its first row is the conditioning state.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output surveillance CSV.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Per-series significance level.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Fraction of series that must flag together to raise an alarm.
    #[arg(long, default_value_t = 0.6)]
    pub rule: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Experiment spec JSON; the reference study design when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory for the tables and the alarm log.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Override the number of replicates.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Override the base seed.
    #[arg(long, env = "MINAR_SEED")]
    pub seed: Option<u64>,
}

/// Fit JSON: the fit report plus the design used to build its regressors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDocument {
    #[serde(flatten)]
    pub report: FitReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<SeasonalDesign>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Monitor(a) => cmd_monitor(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numeric(_) | Error::EnumerationLimit { .. } => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn read_series(path: &Path) -> Result<MultiCountSeries> {
    MultiCountSeries::read_csv(BufReader::new(File::open(path)?))
}

fn read_covariates(path: &Path) -> Result<Covariates> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(File::open(path)?));
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("t") {
        return Err(Error::format("first covariate CSV column must be 't'"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut values = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        for field in record.iter().skip(1) {
            values.push(field.parse::<f64>().map_err(|_| {
                Error::format(format!("row {}: bad covariate value '{field}'", line + 2))
            })?);
        }
    }
    Covariates::new(names, values)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let model = MinarModel::load(&a.model)?;
    let n = model.dim();
    let outbreak = match (a.outbreak_t, &a.outbreak_kappa) {
        (Some(time), Some(k)) if k.len() == 1 => Some(OutbreakSpec::uniform(time, k[0], n)),
        (Some(time), Some(k)) => Some(OutbreakSpec {
            time,
            kappa: k.clone(),
        }),
        _ => None,
    };
    let covariates = match (&a.covariates, &model.innovations) {
        (Some(path), crate::model::InnovationModel::Regression { covariates, .. }) => {
            Some(read_covariates(path)?.select(covariates)?)
        }
        _ => None,
    };
    let config = SimulationConfig::new(a.length).burn_in(a.burn_in);
    let mut rng = replicate_rng(a.seed, 0);
    let series = simulate(&model, config, outbreak.as_ref(), covariates.as_ref(), &mut rng)?;
    write_atomic(&a.output, |w| series.write_csv(w))?;
    Ok(EXIT_OK)
}

fn prepare_fit_data(
    data: MultiCountSeries,
    a: &FitArgs,
) -> Result<(MultiCountSeries, ParameterLayout, Option<SeasonalDesign>)> {
    let n = data.dim();
    let structure = a.layout.into();
    if a.period.is_some() || a.weekday_column.is_some() {
        let design = SeasonalDesign {
            period: a.period.unwrap_or(SEASONAL_PERIOD),
            weekday_column: a.weekday_column.clone(),
        };
        let data = design.apply(data)?;
        let layout = ParameterLayout::regression(n, structure, design.column_names());
        Ok((data, layout, Some(design)))
    } else if let Some(names) = &a.covariates {
        let cov = data
            .covariates()
            .ok_or_else(|| Error::format("input has no covariate columns"))?
            .select(names)?;
        let data = data.without_covariates().with_covariates(cov)?;
        Ok((data, ParameterLayout::regression(n, structure, names.clone()), None))
    } else {
        Ok((data.without_covariates(), ParameterLayout::constant(n, structure), None))
    }
}

fn print_fit_table(f: &FittedModel) {
    let names = f.layout.names();
    println!("{:<12} {:>12} {:>12}", "parameter", "estimate", "(s.e.)");
    for (k, name) in names.iter().enumerate() {
        let se = match &f.standard_errors {
            Some(se) => format!("({:.4})", se[k]),
            None => "(NA)".into(),
        };
        println!("{name:<12} {:>12.4} {se:>12}", f.theta[k]);
    }
    println!("log-likelihood   {:.4}", f.log_likelihood);
    println!("iterations       {}", f.iterations);
    println!("spectral radius  {:.4}", f.spectral_radius);
    println!("converged        {}", f.converged);
}

fn cmd_fit(a: &FitArgs) -> Result<i32> {
    let (data, layout, design) = prepare_fit_data(read_series(&a.input)?, a)?;
    let options = FitOptions {
        max_iterations: a.max_iterations,
        ..FitOptions::default()
    };
    let fitted = fit(&data, &layout, None, &options)?;
    let doc = FitDocument {
        report: fitted.report(),
        design,
    };
    write_atomic(&a.output, |w| Ok(serde_json::to_writer_pretty(w, &doc)?))?;
    print_fit_table(&fitted);
    if !fitted.is_stationary() {
        eprintln!("warning: estimated thinning matrix is not stationary");
    }
    if !fitted.converged {
        eprintln!("error: optimizer did not converge; report written with converged = false");
        return Ok(EXIT_NUMERIC);
    }
    Ok(EXIT_OK)
}

fn cmd_monitor(a: &MonitorArgs) -> Result<i32> {
    let config = SurveillanceConfig::new(a.alpha, a.rule)?;
    let doc: FitDocument = serde_json::from_reader(BufReader::new(File::open(&a.fit)?))?;
    let fitted = FittedModel::from_report(doc.report)?;
    let data = read_series(&a.input)?;
    let data = match (&doc.design, &fitted.params.innovations) {
        (Some(design), _) => design.apply(data)?,
        (None, crate::model::InnovationModel::Regression { covariates, .. }) => {
            let cov = data
                .covariates()
                .ok_or_else(|| Error::format("input has no covariate columns"))?
                .select(covariates)?;
            data.without_covariates().with_covariates(cov)?
        }
        (None, _) => data.without_covariates(),
    };
    let report = monitor(&fitted, &data, &config)?;
    write_atomic(&a.output, |w| report.write_csv(w))?;
    let alarms: Vec<_> = report.steps.iter().filter(|s| s.alarm).collect();
    if alarms.is_empty() {
        println!("no alarms");
    }
    for s in alarms {
        let flagged: Vec<String> = s
            .flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f)
            .map(|(i, _)| (i + 1).to_string())
            .collect();
        println!("alarm at t={} (series {})", s.time, flagged.join(","));
    }
    Ok(EXIT_OK)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<i32> {
    let mut spec = match &a.spec {
        Some(path) => ExperimentSpec::from_json_str(&std::fs::read_to_string(path)?)?,
        None => ExperimentSpec::default(),
    };
    if let Some(r) = a.replicates {
        spec.replicates = r;
    }
    if let Some(s) = a.seed {
        spec.base_seed = s;
    }
    spec.validate()?;
    let results = run_experiment(&spec)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let out = |name: &str| a.out_dir.join(name);
    write_atomic(&out("rates.csv"), |w| write_rate_table(&results, w))?;
    write_atomic(&out("arl.csv"), |w| write_arl_table(&results, w))?;
    write_atomic(&out("alarm_log.csv"), |w| write_alarm_log(&results, w))?;
    write_atomic(&out("conventions.txt"), |w| Ok(w.write_all(CONVENTIONS.as_bytes())?))?;
    let summary = serde_json::json!({
        "spec": spec,
        "cells": results.summaries,
    });
    write_atomic(&out("summary.json"), |w| Ok(serde_json::to_writer_pretty(w, &summary)?))?;
    let mut stdout = io::stdout().lock();
    write_rate_table(&results, &mut stdout)?;
    Ok(EXIT_OK)
}
