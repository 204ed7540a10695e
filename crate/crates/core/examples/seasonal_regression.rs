//! Innovation means with a weekday effect and period-122 harmonics.

use minar::estimation::{
    build_design, fit, FitOptions, ParameterLayout, ThinningStructure, SEASONAL_PERIOD,
};
use minar::model::{replicate_rng, simulate, InnovationModel, MinarModel, SimulationConfig};

fn main() -> minar::Result<()> {
    let len = 600;
    let times: Vec<f64> = (1..=len).map(|t| t as f64).collect();
    let weekday: Vec<f64> = (1..=len)
        .map(|t| if (3 * t) % 7 < 5 { 1.0 } else { 0.0 })
        .collect();
    let design = build_design(&times, Some(&weekday), SEASONAL_PERIOD)?;

    let beta = vec![
        vec![0.2, 0.5, 0.3, -0.2],
        vec![-0.3, 0.4, 0.0, 0.4],
        vec![0.0, 0.6, -0.3, 0.1],
    ];
    let thinning = MinarModel::study_model().thinning.clone();
    let model = MinarModel::new(
        thinning,
        InnovationModel::regression(beta, design.names().to_vec())?,
    )?;
    let data = simulate(&model, SimulationConfig::new(len), None, Some(&design), &mut replicate_rng(9, 0))?;

    let layout = ParameterLayout::regression(3, ThinningStructure::Full, design.names().to_vec());
    let fitted = fit(&data, &layout, None, &FitOptions::default())?;
    let truth = layout.pack(&model)?;
    let se = fitted.standard_errors.clone().unwrap_or_default();
    println!("{:<10} {:>9} {:>9} {:>9}", "parameter", "truth", "estimate", "s.e.");
    for (k, name) in layout.names().iter().enumerate() {
        println!(
            "{name:<10} {:>9.4} {:>9.4} {:>9.4}",
            truth[k],
            fitted.theta[k],
            se.get(k).copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
