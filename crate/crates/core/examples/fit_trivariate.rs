//! Conditional maximum likelihood for the full and the diagonal layouts.

use minar::estimation::{fit, FitOptions, ParameterLayout, ThinningStructure};
use minar::model::{replicate_rng, simulate, MinarModel, SimulationConfig};

fn main() -> minar::Result<()> {
    let truth = MinarModel::study_model();
    let data = simulate(&truth, SimulationConfig::new(500), None, None, &mut replicate_rng(7, 0))?;

    let full = ParameterLayout::constant(3, ThinningStructure::Full);
    let truth_names = full.names();
    let truth_theta = full.pack(&truth)?;

    for structure in [ThinningStructure::Full, ThinningStructure::Diagonal] {
        let layout = ParameterLayout::constant(3, structure);
        let fitted = fit(&data, &layout, None, &FitOptions::default())?;
        println!(
            "{structure:?}: loglik {:.3}, {} iterations, converged {}",
            fitted.log_likelihood, fitted.iterations, fitted.converged
        );
        let se = fitted.standard_errors.clone().unwrap_or_default();
        for (k, name) in layout.names().iter().enumerate() {
            let se = se.get(k).map_or("NA".to_string(), |s| format!("{s:.4}"));
            let p = truth_names.iter().position(|n| n == name).expect("subset of full layout");
            println!("  {name:<10} {:>8.4} ({se})  true {}", fitted.theta[k], truth_theta[p]);
        }
    }
    Ok(())
}
