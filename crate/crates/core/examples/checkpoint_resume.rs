//! Stops GDBC training halfway, saves a checkpoint, and resumes it to the
//! same parameters as an uninterrupted run.
//!
//! cargo run --example checkpoint_resume

use lcmos::gdbc::{Checkpoint, GdbcConfig, Objective, TrainSet, Trainer};
use lcmos::label_sim::synthetic::{generate, SyntheticSpec};
use lcmos::predictor::{OptimizerSpec, Predictor};

fn trainer(n: usize, dim: usize) -> lcmos::Result<Trainer> {
    let p = Predictor::init("mlp:16".parse()?, dim, 3)?;
    Trainer::new(p, OptimizerSpec::adam(0.01, 20 * n.div_ceil(16) as u64), GdbcConfig::default(), Objective::SquaredError, n, 16, 4)
}

fn main() -> lcmos::Result<()> {
    let data = generate(&SyntheticSpec { samples: 300, ..SyntheticSpec::default() })?;
    let labels: Vec<f64> = data.truth.clone();
    let set = TrainSet::new(&data.features, &labels)?;
    let (n, dim) = (labels.len(), data.features[0].len());

    let mut straight = trainer(n, dim)?;
    for _ in 0..20 {
        straight.run_epoch(&set)?;
    }

    let path = std::env::temp_dir().join("lcmos-checkpoint.json");
    let mut first = trainer(n, dim)?;
    for _ in 0..10 {
        first.run_epoch(&set)?;
    }
    first.checkpoint().save(&path)?;
    let mut resumed = Trainer::from_checkpoint(Checkpoint::load(&path)?)?;
    for _ in 0..10 {
        resumed.run_epoch(&set)?;
    }
    let same = resumed.predictor().params() == straight.predictor().params();
    println!("checkpoint at {}; resumed run identical: {same}", path.display());
    Ok(())
}
