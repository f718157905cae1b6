//! Mini-batch trainer with optional per-sample bias calibration.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{calibrated_target, fitting_error, BiasState, GdbcConfig};
use crate::baselines::{gce_loss, sce_loss, target_bin};
use crate::predictor::{Optimizer, OptimizerSpec, Predictor};
use crate::seed::{self, Rng};
use crate::{Error, Result};

/// Per-sample training loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// `(f(x) - target)^2` on the scalar readout.
    SquaredError,
    /// Generalized cross entropy on the binned head against the target's bin.
    Gce { q: f64 },
    /// Symmetric cross entropy on the binned head against the target's bin.
    Sce { w_ce: f64, w_rce: f64, clip: f64 },
}

impl Objective {
    fn needs_bins(&self) -> bool {
        !matches!(self, Objective::SquaredError)
    }
}

/// Features with the labels the trainer sees.
#[derive(Debug, Clone, Copy)]
pub struct TrainSet<'a> {
    pub features: &'a [Vec<f64>],
    pub labels: &'a [f64],
}

impl<'a> TrainSet<'a> {
    pub fn new(features: &'a [Vec<f64>], labels: &'a [f64]) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        Ok(TrainSet { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean of the batch losses against the (calibrated) targets.
    pub loss: f64,
    pub gates_opened: usize,
}

#[derive(Debug, Clone)]
pub struct Trainer {
    predictor: Predictor,
    optimizer: Optimizer,
    states: Vec<BiasState>,
    cfg: GdbcConfig,
    objective: Objective,
    batch_size: usize,
    shuffle_seed: u64,
    rng: Rng,
    epochs_done: usize,
}

/// Everything needed to resume a trainer bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub predictor: Predictor,
    pub optimizer: Optimizer,
    pub states: Vec<BiasState>,
    pub cfg: GdbcConfig,
    pub objective: Objective,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub rng_word_pos: u128,
    pub epochs_done: usize,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

impl Trainer {
    pub fn new(
        predictor: Predictor,
        optimizer: OptimizerSpec,
        cfg: GdbcConfig,
        objective: Objective,
        samples: usize,
        batch_size: usize,
        shuffle_seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if batch_size == 0 {
            return Err(Error::param("batch_size", "must be >= 1"));
        }
        if objective.needs_bins() && predictor.bin_centers().is_none() {
            return Err(Error::param("objective", "GCE/SCE need a binned head"));
        }
        let optimizer = Optimizer::new(optimizer, predictor.param_count())?;
        Ok(Trainer {
            predictor,
            optimizer,
            states: (0..samples).map(|_| BiasState::new(cfg.t_h)).collect(),
            cfg,
            objective,
            batch_size,
            shuffle_seed,
            rng: seed::rng(shuffle_seed),
            epochs_done: 0,
        })
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }

    pub fn into_predictor(self) -> Predictor {
        self.predictor
    }

    pub fn states(&self) -> &[BiasState] {
        &self.states
    }

    pub fn config(&self) -> &GdbcConfig {
        &self.cfg
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    /// `y_eta - mu_z` per training sample.
    pub fn calibrated_labels(&self, labels: &[f64]) -> Vec<f64> {
        labels
            .iter()
            .zip(&self.states)
            .map(|(y, s)| calibrated_target(s, *y))
            .collect()
    }

    fn check_data(&self, data: &TrainSet<'_>) -> Result<()> {
        if data.len() != self.states.len() {
            return Err(Error::DimensionMismatch {
                expected: self.states.len(),
                got: data.len(),
            });
        }
        Ok(())
    }

    /// One optimizer step on `batch`; returns the mean loss and the number of
    /// gates that opened.
    pub fn train_step(&mut self, data: &TrainSet<'_>, batch: &[usize]) -> Result<(f64, usize)> {
        self.check_data(data)?;
        if batch.is_empty() {
            return Err(Error::param("batch", "empty batch"));
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.predictor.param_count()];
        let mut loss = 0.0;
        let mut opened = 0;
        for &i in batch {
            let tape = self.predictor.record(&data.features[i])?;
            let f = tape.value();
            let y = data.labels[i];
            let target = if self.cfg.enabled {
                let state = &mut self.states[i];
                opened += usize::from(state.gated_update(&self.cfg, fitting_error(f, y)));
                calibrated_target(state, y)
            } else {
                y
            };
            match self.objective {
                Objective::SquaredError => {
                    let d = f - target;
                    loss += d * d;
                    self.predictor.backward_tape(&tape, 2.0 * d * scale, &mut grad);
                }
                Objective::Gce { q } => {
                    let probs = tape.probs().expect("binned head");
                    let lg = gce_loss(probs, target_bin(target, probs.len()), q)?;
                    loss += lg.loss;
                    let up: Vec<f64> = lg.grad.iter().map(|g| g * scale).collect();
                    self.predictor.backward_tape_distribution(&tape, &up, &mut grad)?;
                }
                Objective::Sce { w_ce, w_rce, clip } => {
                    let probs = tape.probs().expect("binned head");
                    let lg = sce_loss(probs, target_bin(target, probs.len()), w_ce, w_rce, clip)?;
                    loss += lg.loss;
                    let up: Vec<f64> = lg.grad.iter().map(|g| g * scale).collect();
                    self.predictor.backward_tape_distribution(&tape, &up, &mut grad)?;
                }
            }
        }
        loss *= scale;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                context: format!(
                    "batch loss at epoch {} step {}",
                    self.epochs_done,
                    self.optimizer.steps_taken()
                ),
            });
        }
        self.optimizer.step(self.predictor.params_mut(), &grad)?;
        Ok((loss, opened))
    }

    /// Shuffles, then visits every sample once in mini-batches.
    pub fn run_epoch(&mut self, data: &TrainSet<'_>) -> Result<EpochStats> {
        self.check_data(data)?;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut self.rng);
        let mut total = 0.0;
        let mut batches = 0;
        let mut gates = 0;
        for batch in order.chunks(self.batch_size) {
            let (loss, opened) = self.train_step(data, batch)?;
            total += loss;
            gates += opened;
            batches += 1;
        }
        self.epochs_done += 1;
        Ok(EpochStats {
            epoch: self.epochs_done,
            loss: total / batches.max(1) as f64,
            gates_opened: gates,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            predictor: self.predictor.clone(),
            optimizer: self.optimizer.clone(),
            states: self.states.clone(),
            cfg: self.cfg,
            objective: self.objective,
            batch_size: self.batch_size,
            shuffle_seed: self.shuffle_seed,
            rng_word_pos: self.rng.get_word_pos(),
            epochs_done: self.epochs_done,
        }
    }

    pub fn from_checkpoint(c: Checkpoint) -> Result<Self> {
        c.cfg.validate()?;
        let mut rng = seed::rng(c.shuffle_seed);
        rng.set_word_pos(c.rng_word_pos);
        Ok(Trainer {
            predictor: c.predictor,
            optimizer: c.optimizer,
            states: c.states,
            cfg: c.cfg,
            objective: c.objective,
            batch_size: c.batch_size,
            shuffle_seed: c.shuffle_seed,
            rng,
            epochs_done: c.epochs_done,
        })
    }
}
