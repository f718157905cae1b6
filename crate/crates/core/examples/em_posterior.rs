//! The E-step posterior of the subjective bias and the smoothed M-step
//! update, side by side, for a few model/label pairs.
//!
//! cargo run --example em_posterior

use lcmos::gdbc::{posterior_mean, posterior_variance, BiasState, EmParams, GdbcConfig};

fn main() -> lcmos::Result<()> {
    let params = EmParams { sigma_y_sq: 0.04, sigma_z_sq: 0.01, mu_z_prior: 0.05 };
    println!("alpha = s_y^2 / (s_y^2 + s_z^2) = {:.3}", params.alpha());
    println!("posterior variance = {:.5}", posterior_variance(&params)?);
    let cfg = GdbcConfig { alpha: params.alpha(), epsilon: 0.0, ..GdbcConfig::default() };
    for (f, y) in [(0.40, 0.55), (0.70, 0.60), (0.50, 0.50)] {
        let mut state = BiasState::with_history(params.mu_z_prior, [1.0]);
        state.gated_update(&cfg, y - f);
        println!(
            "f = {f:.2} y = {y:.2}: posterior mean {:.5}, gated update {:.5}",
            posterior_mean(&params, f, y)?,
            state.mu_z
        );
    }
    Ok(())
}
