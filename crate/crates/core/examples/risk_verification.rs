//! Monte-Carlo check of the noisy-risk expansion on random probes and the
//! constant-predictor witness where the clean optimum loses.
//!
//! cargo run --release --example risk_verification

use lcmos::riskcheck::{random_probe, render_text, risk_difference_sign_demo, verify_risk_expansion, PopulationEntry};

fn main() -> lcmos::Result<()> {
    let reports = (0..5)
        .map(|k| verify_risk_expansion(&random_probe(k, 16, 4)?, 200_000, k))
        .collect::<lcmos::Result<Vec<_>>>()?;
    let witness_pop: Vec<PopulationEntry> = (0..4)
        .map(|_| PopulationEntry { x: vec![0.0], y_star: 0.5, mu_z: 0.3, sigma_z: 0.1 })
        .collect();
    let demo = risk_difference_sign_demo(&witness_pop, 1.0)?;
    print!("{}", render_text(&reports, &demo));
    Ok(())
}
