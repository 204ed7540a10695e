//! Reduced-size run of the outbreak-detection study.
//!
//! `cargo run --release --example simulation_study -- [replicates]`

use std::io;
use std::time::Instant;

use minar::evaluation::{run_experiment, write_arl_table, write_rate_table, ExperimentSpec};

fn main() -> minar::Result<()> {
    let replicates = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("replicates must be an integer"))
        .unwrap_or(50);
    let spec = ExperimentSpec {
        replicates,
        ..ExperimentSpec::default()
    };
    let start = Instant::now();
    let results = run_experiment(&spec)?;
    eprintln!("{replicates} replicates in {:.1?}", start.elapsed());

    println!("detection and false alarm rates (x100)");
    write_rate_table(&results, io::stdout().lock())?;
    println!("\naverage run lengths");
    write_arl_table(&results, io::stdout().lock())?;
    Ok(())
}
