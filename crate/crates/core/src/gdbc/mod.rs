//! Gated dual-bias calibration.
//!
//! Each training sample carries a latent subjective bias `z_i` with running
//! estimate `mu_z`. The observation model is `y_eta ~ N(f(x) + z, s_y^2)` with
//! prior `z ~ N(mu_z, s_z^2)`; the E-step posterior of `z` is Gaussian and the
//! M-step moves `mu_z` to the posterior mean,
//!
//! ```text
//! mu_z <- alpha * mu_z + (1 - alpha) * (y_eta - f(x)),   alpha = s_y^2 / (s_y^2 + s_z^2)
//! ```
//!
//! The update only fires when the l1 norm of the last `t_h + 1` fitting errors
//! exceeds the gate threshold. The model is then trained on `y_eta - mu_z`.

mod trainer;

pub use trainer::{Checkpoint, EpochStats, Objective, TrainSet, Trainer};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Variances of the conjugate-Gaussian bias model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmParams {
    /// Variance of `y_eta` given `z`.
    pub sigma_y_sq: f64,
    /// Prior variance of `z`.
    pub sigma_z_sq: f64,
    pub mu_z_prior: f64,
}

impl EmParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma_y_sq", self.sigma_y_sq), ("sigma_z_sq", self.sigma_z_sq)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("{v} must be a positive variance")));
            }
        }
        if !self.mu_z_prior.is_finite() {
            return Err(Error::param("mu_z_prior", "must be finite"));
        }
        Ok(())
    }

    /// The smoothing weight implied by the two variances.
    pub fn alpha(&self) -> f64 {
        self.sigma_y_sq / (self.sigma_y_sq + self.sigma_z_sq)
    }
}

/// Posterior mean of `z` given `y_eta` and the current model output.
pub fn posterior_mean(params: &EmParams, f_x: f64, y_eta: f64) -> Result<f64> {
    params.validate()?;
    let EmParams {
        sigma_y_sq,
        sigma_z_sq,
        mu_z_prior,
    } = *params;
    Ok((sigma_y_sq * mu_z_prior - sigma_z_sq * (f_x - y_eta)) / (sigma_y_sq + sigma_z_sq))
}

pub fn posterior_variance(params: &EmParams) -> Result<f64> {
    params.validate()?;
    Ok(params.sigma_y_sq * params.sigma_z_sq / (params.sigma_y_sq + params.sigma_z_sq))
}

/// One sample's term of the expected complete-data log-likelihood, as a
/// function of the candidate bias mean.
pub fn q_objective(
    params: &EmParams,
    mu_z_candidate: f64,
    f_x: f64,
    y_eta: f64,
    post_mean: f64,
    post_var: f64,
) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let prior_term = (post_var + (mu_z_candidate - post_mean).powi(2)) / params.sigma_z_sq;
    let obs_term = (post_var + (y_eta - f_x - post_mean).powi(2)) / params.sigma_y_sq;
    -0.5 * (prior_term
        + obs_term
        + (two_pi * params.sigma_z_sq).ln()
        + (two_pi * params.sigma_y_sq).ln())
}

/// The fitting error fed to the bias update.
///
/// Signed as `y_eta - f(x)`, the orientation under which the smoothed update
/// coincides with the posterior mean above (and so maximizes `q_objective`).
pub fn fitting_error(f_x: f64, y_eta: f64) -> f64 {
    y_eta - f_x
}

/// How the l1 norm of the error history is compared against `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum GateRule {
    /// `||C||_1 > t_h * epsilon`
    #[default]
    Scaled,
    /// `||C||_1 > epsilon`
    Plain,
}

impl std::str::FromStr for GateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "scaled" => Ok(GateRule::Scaled),
            "plain" => Ok(GateRule::Plain),
            other => Err(Error::param("gate", format!("unknown gate rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdbcConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub t_h: usize,
    pub enabled: bool,
    pub gate: GateRule,
}

impl Default for GdbcConfig {
    fn default() -> Self {
        GdbcConfig {
            alpha: 0.9,
            epsilon: 0.01,
            t_h: 1,
            enabled: true,
            gate: GateRule::Scaled,
        }
    }
}

impl GdbcConfig {
    pub fn disabled() -> Self {
        GdbcConfig {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", format!("{} not in [0, 1]", self.alpha)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("{} must be > 0", self.epsilon)));
        }
        if self.t_h == 0 {
            return Err(Error::param("t_h", "history window must be >= 1"));
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        match self.gate {
            GateRule::Scaled => self.t_h as f64 * self.epsilon,
            GateRule::Plain => self.epsilon,
        }
    }
}

/// Running bias estimate of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasState {
    pub mu_z: f64,
    history: VecDeque<f64>,
    pub updates_applied: u64,
}

impl BiasState {
    /// `mu_z = 0`, history primed with `t_h` zeros.
    pub fn new(t_h: usize) -> Self {
        let mut history = VecDeque::with_capacity(t_h + 1);
        history.extend(std::iter::repeat_n(0.0, t_h));
        BiasState {
            mu_z: 0.0,
            history,
            updates_applied: 0,
        }
    }

    pub fn with_history(mu_z: f64, history: impl IntoIterator<Item = f64>) -> Self {
        BiasState {
            mu_z,
            history: history.into_iter().collect(),
            updates_applied: 0,
        }
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.history.iter().copied()
    }

    /// Records `error` and applies the smoothed update if the gate opens.
    /// Returns whether it opened.
    pub fn gated_update(&mut self, cfg: &GdbcConfig, error: f64) -> bool {
        self.history.push_back(error);
        while self.history.len() > cfg.t_h + 1 {
            self.history.pop_front();
        }
        let norm: f64 = self.history.iter().map(|c| c.abs()).sum();
        let open = norm > cfg.threshold();
        if open {
            self.mu_z = cfg.alpha * self.mu_z + (1.0 - cfg.alpha) * error;
            self.updates_applied += 1;
        }
        open
    }
}

/// Training target `y_eta - mu_z`, deliberately not clamped to `[0, 1]`.
pub fn calibrated_target(state: &BiasState, y_eta: f64) -> f64 {
    y_eta - state.mu_z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(sy: f64, sz: f64, mu: f64) -> EmParams {
        EmParams {
            sigma_y_sq: sy,
            sigma_z_sq: sz,
            mu_z_prior: mu,
        }
    }

    #[test]
    fn posterior_mean_substitution() {
        // f - y = -0.1
        let m = posterior_mean(&params(1.0, 1.0, 0.2), 0.4, 0.5).unwrap();
        assert!((m - 0.15).abs() < 1e-15);
        let m = posterior_mean(&params(1.0, 1e-12, 0.2), 0.4, 0.5).unwrap();
        assert!((m - 0.2).abs() < 1e-11);
    }

    #[test]
    fn posterior_variance_examples() {
        assert_eq!(posterior_variance(&params(2.0, 2.0, 0.0)).unwrap(), 1.0);
        assert!(posterior_variance(&params(2.0, 1e-15, 0.0)).unwrap() < 1e-14);
        assert!(posterior_variance(&params(0.0, 1.0, 0.0)).is_err());
        assert!(posterior_mean(&params(1.0, -1.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn q_is_concave_around_posterior_mean() {
        let p = params(0.5, 0.5, 0.1);
        let (f, y) = (0.3, 0.45);
        let m = posterior_mean(&p, f, y).unwrap();
        let v = posterior_variance(&p).unwrap();
        let at = q_objective(&p, m, f, y, m, v);
        assert!(at >= q_objective(&p, m + 0.1, f, y, m, v));
        assert!(at >= q_objective(&p, m - 0.1, f, y, m, v));
    }

    #[test]
    fn update_direct_substitution() {
        let cfg = GdbcConfig::default();
        let mut s = BiasState::new(cfg.t_h);
        assert!(s.gated_update(&cfg, 0.5));
        assert!((s.mu_z - 0.05).abs() < 1e-15);
        assert_eq!(s.updates_applied, 1);
    }

    #[test]
    fn alpha_one_freezes_bias() {
        let cfg = GdbcConfig {
            alpha: 1.0,
            ..GdbcConfig::default()
        };
        let mut s = BiasState::new(cfg.t_h);
        for c in [0.5, -0.3, 0.9] {
            assert!(s.gated_update(&cfg, c));
            assert_eq!(s.mu_z, 0.0);
        }
    }

    #[test]
    fn closed_gate_keeps_state() {
        let cfg = GdbcConfig {
            t_h: 1,
            epsilon: 0.01,
            ..GdbcConfig::default()
        };
        let mut s = BiasState::with_history(0.02, [0.004]);
        assert!(!s.gated_update(&cfg, 0.004));
        assert_eq!(s.mu_z, 0.02);
        assert_eq!(s.updates_applied, 0);
        assert_eq!(s.history().collect::<Vec<_>>(), vec![0.004, 0.004]);
    }

    #[test]
    fn plain_gate_rule_uses_epsilon_alone() {
        let cfg = GdbcConfig {
            t_h: 3,
            epsilon: 0.01,
            gate: GateRule::Plain,
            ..GdbcConfig::default()
        };
        // ||C|| = 0.02: above epsilon, below t_h * epsilon
        let mut s = BiasState::new(3);
        assert!(s.gated_update(&cfg, 0.02));
        let scaled = GdbcConfig {
            gate: GateRule::Scaled,
            ..cfg
        };
        let mut s = BiasState::new(3);
        assert!(!s.gated_update(&scaled, 0.02));
    }

    #[test]
    fn history_is_bounded() {
        let cfg = GdbcConfig {
            t_h: 3,
            ..GdbcConfig::default()
        };
        let mut s = BiasState::new(cfg.t_h);
        assert_eq!(s.history().len(), 3);
        for i in 0..10 {
            s.gated_update(&cfg, i as f64);
            assert!(s.history().len() <= cfg.t_h + 1);
        }
        assert_eq!(s.history().collect::<Vec<_>>(), vec![6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn constant_error_converges_geometrically() {
        let cfg = GdbcConfig::default();
        let mut s = BiasState::new(cfg.t_h);
        let c = 0.3;
        for k in 1..=60 {
            s.gated_update(&cfg, c);
            let expected = c * (1.0 - cfg.alpha.powi(k));
            assert!((s.mu_z - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn calibrated_target_examples() {
        assert_eq!(calibrated_target(&BiasState::new(1), 0.7), 0.7);
        let s = BiasState::with_history(0.05, [0.0]);
        assert!((calibrated_target(&s, 0.7) - 0.65).abs() < 1e-15);
        let s = BiasState::with_history(-0.5, [0.0]);
        assert_eq!(calibrated_target(&s, 0.9), 1.4);
    }

    #[test]
    fn config_validation() {
        assert!(GdbcConfig::default().validate().is_ok());
        for bad in [
            GdbcConfig { alpha: 1.2, ..GdbcConfig::default() },
            GdbcConfig { epsilon: 0.0, ..GdbcConfig::default() },
            GdbcConfig { t_h: 0, ..GdbcConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
