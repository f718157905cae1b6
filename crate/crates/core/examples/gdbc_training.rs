//! One paired trial: the same split, labels and initialization trained with
//! and without the gated bias calibration.
//!
//! cargo run --release --example gdbc_training

use lcmos::experiment::{run_experiment, ExperimentConfig};

fn main() -> lcmos::Result<()> {
    let cfg = ExperimentConfig::parse(
        "trials = 3\n\
         dataset.samples = 1000\n\
         predictor.arch = mlp:64,64\n\
         optimizer.lr = 0.01\n\
         sim.eta = 1\n\
         sim.m = 1\n",
    )?;
    let report = run_experiment(&cfg)?;
    let cell = &report.cells[0];
    for t in &cell.trials {
        println!(
            "trial {}: SRCC off {:.4} on {:.4}, label MSE raw {:.5} calibrated {:.5}",
            t.trial, t.off.test.srcc, t.on.test.srcc, t.raw_lc_mse, t.calibrated_mse
        );
    }
    println!("median delta SRCC: {:+.3}%", cell.delta_percent.srcc);
    let last = cell.trials[0].on.curve.last().expect("epochs > 0");
    println!("gates opened in the last epoch of trial 0: {}", last.gates_opened);
    Ok(())
}
