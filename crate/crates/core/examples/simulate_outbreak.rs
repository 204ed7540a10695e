//! Simulates the study model with an outbreak and writes the series as CSV.
//!
//! `cargo run --example simulate_outbreak > series.csv`

use std::io;

use minar::model::{replicate_rng, simulate, MinarModel, OutbreakSpec, SimulationConfig};

fn main() -> minar::Result<()> {
    let model = MinarModel::study_model();
    let outbreak = OutbreakSpec::uniform(170, 10.0, model.dim());
    let mut rng = replicate_rng(42, 0);
    let series = simulate(&model, SimulationConfig::new(200), Some(&outbreak), None, &mut rng)?;

    eprintln!("t = 170: {:?}", series.row(169));
    for i in 0..series.dim() {
        eprintln!("series {} mean {:.2}", i + 1, series.column_mean(i));
    }
    series.write_csv(io::stdout().lock())
}
