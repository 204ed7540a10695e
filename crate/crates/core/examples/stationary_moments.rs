//! Stationary mean and autocovariances, plus the bivariate closed forms.

use minar::model::{bivariate_moments, InnovationModel, MinarModel, ThinningMatrix};

fn main() -> minar::Result<()> {
    let model = MinarModel::study_model();
    println!("spectral radius of A: {:.4}", model.spectral_radius());

    let mu = model.stationary_mean(None)?;
    println!("stationary mean: {mu:.4?}");
    for kappa in [5.0, 8.0, 10.0] {
        let shifted: Vec<String> = mu.iter().map(|m| format!("{:.1}", m + kappa)).collect();
        println!("  expected count at an outbreak of size {kappa}: ({})", shifted.join(", "));
    }
    for h in 0..3 {
        println!("gamma({h}) =\n{:.4}", model.autocovariance(h, None)?);
    }

    let a = ThinningMatrix::from_rows(&[vec![0.4, 0.1], vec![0.2, 0.3]])?;
    let pair = MinarModel::new(a.clone(), InnovationModel::constant(vec![1.0, 2.0])?)?;
    let closed = bivariate_moments(&a, [1.0, 2.0])?;
    let g = pair.autocovariance(0, None)?;
    println!("bivariate closed form: {closed:.6?}");
    println!(
        "general solver:        mu = {:.6?}, gamma11 = {:.6}, gamma22 = {:.6}, gamma12 = {:.6}",
        pair.stationary_mean(None)?,
        g[(0, 0)],
        g[(1, 1)],
        g[(0, 1)]
    );
    Ok(())
}
