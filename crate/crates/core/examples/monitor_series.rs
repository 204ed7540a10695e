//! Fit on a set-up phase, then monitor the rest with prediction bounds.

use minar::estimation::{fit, FitOptions, ParameterLayout, ThinningStructure};
use minar::model::{replicate_rng, simulate, MinarModel, OutbreakSpec, SimulationConfig};
use minar::surveillance::{monitor, SurveillanceConfig};

fn main() -> minar::Result<()> {
    let model = MinarModel::study_model();
    let outbreak = OutbreakSpec::uniform(170, 8.0, 3);
    let series = simulate(&model, SimulationConfig::new(200), Some(&outbreak), None, &mut replicate_rng(3, 0))?;

    let setup = series.slice(0..150);
    let layout = ParameterLayout::constant(3, ThinningStructure::Full);
    let fitted = fit(&setup, &layout, None, &FitOptions::default())?;

    // row 0 is the conditioning state t = 150
    let operational = series.slice(149..200);
    for alpha in [0.10, 0.05, 0.01] {
        let report = monitor(&fitted, &operational, &SurveillanceConfig::new(alpha, 0.6)?)?;
        println!("alpha = {alpha}: alarms at {:?}", report.alarm_times());
    }

    let report = monitor(&fitted, &operational, &SurveillanceConfig::default())?;
    let step = &report.steps[19];
    println!(
        "t = {}: observed {:?}, upper bounds {:?}, flags {:?}",
        step.time, step.observed, step.upper_bounds, step.flags
    );
    Ok(())
}
