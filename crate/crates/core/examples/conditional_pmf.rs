//! One-step conditional law of a component, checked against enumeration.

use minar::likelihood::{brute_force_conditional_pmf, component_conditional_pmf};
use minar::model::MinarModel;

fn main() -> minar::Result<()> {
    let model = MinarModel::study_model();
    let x_prev = [4, 2, 6];

    for i in 0..model.dim() {
        let pmf = component_conditional_pmf(&model, i, &x_prev, None)?;
        let oracle = brute_force_conditional_pmf(&model, i, &x_prev, None, 30)?;
        let gap = (0..=30)
            .map(|k| (pmf.pmf(k) - oracle.pmf(k)).abs())
            .fold(0.0, f64::max);
        println!(
            "X_{} | x_prev={x_prev:?}: mean {:.4}, 95% quantile {}, 99% quantile {}, max gap to enumeration {gap:.1e}",
            i + 1,
            pmf.mean(),
            pmf.quantile(0.95),
            pmf.quantile(0.99),
        );
        let head: Vec<String> = (0..8).map(|k| format!("{:.4}", pmf.pmf(k))).collect();
        println!("  P(0..8) = [{}]", head.join(", "));
    }
    Ok(())
}
