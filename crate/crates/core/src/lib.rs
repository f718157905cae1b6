//! Regression from low-cost opinion scores.
//!
//! `lcmos` is a small laboratory for learning quality regressors when only a
//! handful of opinion scores (low-cost MOS) are available per sample. It
//! bundles:
//!
//! - [`label_sim`]: LA-MOS / LC-MOS simulation under the raw-score, Gaussian
//!   and empirical-histogram settings, plus bias-rate mixing.
//! - [`gdbc`]: the gated dual-bias calibration trainer (per-sample latent bias
//!   estimates updated by an EM step behind a fitting-error gate) and the
//!   conjugate-Gaussian posterior it is derived from.
//! - [`predictor`]: desk-scale differentiable regressors (linear, tanh MLP,
//!   binned distribution head) with SGD/Adam and cosine annealing.
//! - [`baselines`]: subject screening (rejection, MLE, bias removal) and
//!   robust classification losses (GCE, SCE).
//! - [`metrics`]: SRCC / PLCC / KRCC / MSE and relative improvement.
//! - [`riskcheck`]: Monte-Carlo checks of the noisy-risk expansion and the
//!   misleading-optimum witness.
//! - [`experiment`]: configuration, seeded trials, grids, baseline comparison
//!   and report rendering.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod gdbc;
pub mod label_sim;
pub mod metrics;
pub mod predictor;
pub mod riskcheck;
pub mod seed;

pub use error::{Error, Result};
