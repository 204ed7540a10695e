//! How often an in-control series already exceeds the outbreak-time mean.

use minar::evaluation::exceedance_probabilities;
use minar::model::MinarModel;

fn main() -> minar::Result<()> {
    let model = MinarModel::study_model();
    let kappas = [5.0, 8.0, 10.0];
    let p = exceedance_probabilities(&model, &kappas, 2000, 200, 170, 1)?;
    println!("kappa   series 1  series 2  series 3");
    for (kappa, row) in kappas.iter().zip(&p) {
        println!("{kappa:>5}   {:>8.3}  {:>8.3}  {:>8.3}", row[0], row[1], row[2]);
    }
    Ok(())
}
