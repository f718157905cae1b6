//! Screening, robust-loss and GDBC training on the same LC-MOS splits, with
//! training on LA-MOS as the reference row.
//!
//! cargo run --release --example baselines

use lcmos::experiment::{render_baselines, run_baseline_comparison, ExperimentConfig};

fn main() -> lcmos::Result<()> {
    let cfg = ExperimentConfig::parse(
        "trials = 3\n\
         epochs = 20\n\
         dataset.samples = 600\n\
         predictor.arch = mlp:32\n\
         optimizer.lr = 0.01\n\
         sim.eta = 1\n\
         sim.m = 2\n",
    )?;
    let report = run_baseline_comparison(&cfg)?;
    print!("{}", render_baselines(&report));
    Ok(())
}
