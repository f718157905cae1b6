//! A small bias-rate grid written to disk as CSV and aligned text.
//!
//! cargo run --release --example grid -- /tmp/lcmos-grid

use std::path::PathBuf;

use lcmos::experiment::{render_summary, run_grid, write_experiment_outputs, ExperimentConfig};

fn main() -> lcmos::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("lcmos-grid"));
    let cfg = ExperimentConfig::parse(
        "trials = 3\n\
         epochs = 20\n\
         dataset.samples = 600\n\
         predictor.arch = mlp:32\n\
         optimizer.lr = 0.01\n\
         sim.eta = 1, 0.6, 0.2\n",
    )?;
    let report = run_grid(&cfg)?;
    write_experiment_outputs(&report, &out)?;
    print!("{}", render_summary(&report));
    println!("written to {}", out.display());
    Ok(())
}
