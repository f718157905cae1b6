//! Draws LC-MOS labels from one synthetic population under all three
//! sampling settings and shows how the bias shrinks with more annotators.
//!
//! cargo run --release --example label_simulation

use lcmos::label_sim::synthetic::{generate, SyntheticSpec};
use lcmos::label_sim::{simulate_labels, SimConfig, SourceKind};

fn main() -> lcmos::Result<()> {
    let spec = SyntheticSpec { samples: 500, ..SyntheticSpec::default() };
    let data = generate(&spec)?;
    println!("{:>6} {:>3} {:>10} {:>10} {:>7}", "source", "M", "mean z", "E[z^2]", "noisy");
    for kind in [SourceKind::RawScores, SourceKind::MosPlusStd, SourceKind::EmpiricalDistribution] {
        let pools = data.pools(kind);
        for m in [1, 2, 4, 8] {
            let cfg = SimConfig::new(m, 0.6, 7, spec.range)?;
            let out = simulate_labels(&pools, &cfg)?;
            let n = out.labels.len() as f64;
            let mean = out.labels.iter().map(|l| l.z).sum::<f64>() / n;
            let sq = out.labels.iter().map(|l| l.z * l.z).sum::<f64>() / n;
            println!("{:>6} {:>3} {:>10.5} {:>10.5} {:>7}", kind.name(), m, mean, sq, out.noisy_count);
        }
    }
    Ok(())
}
