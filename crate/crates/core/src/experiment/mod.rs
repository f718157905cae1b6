//! Seeded experiment runner: paired GDBC on/off trials, grids and baseline
//! comparisons, with CSV / aligned-text reports.

mod config;
mod report;

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    parse_override, parse_pairs, BaselineSettings, Cell, DatasetSpec, ExperimentConfig, Method,
};
pub use report::{
    render_baselines, render_summary, write_baseline_outputs, write_curves_csv, write_dataset,
    write_experiment_outputs, write_summary_csv, write_trials_csv,
};

use crate::baselines::{
    screen_bias_removal, screen_mle, screen_subject_rejection, SubjectMatrix,
};
use crate::gdbc::{GdbcConfig, Objective, TrainSet, Trainer};
use crate::label_sim::synthetic::{generate, SyntheticDataset};
use crate::label_sim::{
    draw_raw_subset, load_ratings_csv, simulate_labels, AnnotationPool, LabelSet, PoolSource,
    ScoreRange, SimConfig, SourceKind,
};
use crate::metrics::{delta_percent, median, MetricSet, ScorePairs};
use crate::predictor::{Architecture, OptimizerKind, OptimizerSpec, Predictor};
use crate::seed::{self, stream};
use crate::{Error, Result};

/// Features plus annotation pools on a common score range.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub pools: Vec<AnnotationPool>,
    pub range: ScoreRange,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.pools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn from_synthetic(data: &SyntheticDataset, kind: SourceKind) -> Dataset {
        Dataset {
            features: data.features.clone(),
            pools: data.pools(kind),
            range: data.spec.range,
        }
    }

    pub fn load(spec: &DatasetSpec, kind: SourceKind) -> Result<Dataset> {
        match spec {
            DatasetSpec::Synthetic(s) => Ok(Self::from_synthetic(&generate(s)?, kind)),
            DatasetSpec::Csv { ratings, features, range } => {
                let table = load_ratings_csv(ratings)?;
                let range = range.or(table.range).ok_or_else(|| {
                    Error::Config(vec!["dataset: score range missing (set dataset.range_min/max or #range)".into()])
                })?;
                range.validate()?;
                let feats = load_features_csv(features)?;
                let mut rows = Vec::with_capacity(table.pools.len());
                for pool in &table.pools {
                    let x = feats.get(&pool.sample_id).ok_or_else(|| Error::InvalidPool {
                        id: pool.sample_id.clone(),
                        reason: "no feature row".into(),
                    })?;
                    rows.push(x.clone());
                }
                let d = Dataset { features: rows, pools: table.pools, range };
                d.validate()?;
                Ok(d)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pools.len() < 4 {
            return Err(Error::DegenerateInput("dataset needs at least 4 samples".into()));
        }
        if self.features.len() != self.pools.len() {
            return Err(Error::DimensionMismatch { expected: self.pools.len(), got: self.features.len() });
        }
        let d = self.input_dim();
        if d == 0 || self.features.iter().any(|x| x.len() != d) {
            return Err(Error::DegenerateInput("feature rows must share a nonzero width".into()));
        }
        for p in &self.pools {
            p.validate()?;
        }
        Ok(())
    }

    /// Normalized LA-MOS per sample.
    pub fn la_mos(&self) -> Result<Vec<f64>> {
        self.pools
            .iter()
            .map(|p| Ok(self.range.normalize(p.raw_mos()?)))
            .collect()
    }
}

/// `sample_id,x0,x1,...` with a header row.
pub fn load_features_csv(path: impl AsRef<Path>) -> Result<HashMap<String, Vec<f64>>> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record.get(0).unwrap_or("").to_string();
        let x = record
            .iter()
            .skip(1)
            .map(|c| {
                c.parse::<f64>().map_err(|e| Error::Parse {
                    path: origin.clone(),
                    line,
                    reason: format!("bad feature `{c}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.insert(id, x);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub train_loss: f64,
    /// MSE of training predictions against the labels used for training.
    pub mse_lc: f64,
    /// MSE of training predictions against LA-MOS.
    pub mse_la: f64,
    pub gates_opened: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub test: MetricSet,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub noisy_count: usize,
    pub off: RunResult,
    pub on: RunResult,
    /// MSE of calibrated training labels against LA-MOS.
    pub calibrated_mse: f64,
    /// MSE of the raw training labels against LA-MOS.
    pub raw_lc_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub srcc: f64,
    pub plcc: f64,
    pub krcc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: Cell,
    pub trials: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
    pub median_off: MetricSet,
    pub median_on: MetricSet,
    pub delta_percent: Delta,
    pub median_calibrated_mse: f64,
    pub median_raw_lc_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSelection {
    pub candidates: Vec<f64>,
    /// Validation SRCC against the training labels, per candidate; empty
    /// when there was nothing to choose.
    pub scores: Vec<f64>,
    pub chosen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: Vec<(String, String)>,
    pub seed: u64,
    pub lr: LrSelection,
    pub cells: Vec<CellReport>,
}

/// Labels of one trial on the full sample set, normalized to [0, 1].
#[derive(Debug, Clone)]
pub struct TrialData {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub labels: Vec<LabelSet>,
    pub noisy_count: usize,
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    seed::derive(seed::derive(base, stream::TRIAL), trial as u64)
}

/// Random split with `round(n * fraction)` training samples (at least 2 each side).
pub fn split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng_for(seed, stream::SPLIT));
    let k = ((n as f64 * fraction).round() as usize).clamp(2.min(n), n.saturating_sub(2));
    let test = idx.split_off(k);
    (idx, test)
}

/// Split, LC-MOS sampling and bias-rate mixing for one trial.
pub fn simulate_trial(data: &Dataset, cfg: &ExperimentConfig, cell: &Cell, tseed: u64) -> Result<TrialData> {
    let (train, test) = split(data.len(), cfg.train_fraction, tseed);
    let sim = SimConfig::new(cell.m, cell.eta, seed::derive(tseed, stream::LABELS), data.range)?;
    let mix = simulate_labels(&data.pools, &sim)?;
    let labels = mix.labels;
    Ok(TrialData { train, test, labels, noisy_count: mix.noisy_count })
}

fn optimizer_spec(kind: OptimizerKind, lr: f64, total: u64) -> OptimizerSpec {
    match kind {
        OptimizerKind::Adam => OptimizerSpec::adam(lr, total),
        OptimizerKind::Sgd => OptimizerSpec::sgd(lr, total),
    }
}

/// Everything a single training run needs.
#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub arch: &'a Architecture,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub gdbc: GdbcConfig,
    pub objective: Objective,
    pub seed: u64,
}

/// Trains on `features[train]` with `labels`, then scores `test` against `reference`.
/// Initialization and shuffling depend only on `spec.seed`.
pub fn train_and_evaluate(
    spec: &RunSpec<'_>,
    features: &[Vec<f64>],
    train: &[usize],
    labels: &[f64],
    la_train: &[f64],
    test: &[usize],
    reference: &[f64],
) -> Result<(RunResult, Trainer)> {
    let xs: Vec<Vec<f64>> = train.iter().map(|&i| features[i].clone()).collect();
    let data = TrainSet::new(&xs, labels)?;
    let dim = features[0].len();
    let predictor = Predictor::init(spec.arch.clone(), dim, seed::derive(spec.seed, stream::INIT))?;
    let steps = (spec.epochs * train.len().div_ceil(spec.batch_size)) as u64;
    let mut trainer = Trainer::new(
        predictor,
        optimizer_spec(spec.optimizer, spec.lr, steps),
        spec.gdbc,
        spec.objective,
        train.len(),
        spec.batch_size,
        seed::derive(spec.seed, stream::SHUFFLE),
    )?;
    let mut curve = Vec::with_capacity(spec.epochs);
    for _ in 0..spec.epochs {
        let stats = trainer.run_epoch(&data)?;
        let preds = trainer.predictor().predict_many(&xs)?;
        curve.push(CurvePoint {
            epoch: stats.epoch,
            train_loss: stats.loss,
            mse_lc: crate::metrics::mse(ScorePairs::new(&preds, labels)?),
            mse_la: crate::metrics::mse(ScorePairs::new(&preds, la_train)?),
            gates_opened: stats.gates_opened,
        });
    }
    let tx: Vec<Vec<f64>> = test.iter().map(|&i| features[i].clone()).collect();
    let preds = trainer.predictor().predict_many(&tx)?;
    if preds.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite { context: "test predictions".into() });
    }
    let truth: Vec<f64> = test.iter().map(|&i| reference[i]).collect();
    Ok((RunResult { test: MetricSet::evaluate(&preds, &truth)?, curve }, trainer))
}

/// Paired GDBC off / on runs of one trial.
pub fn run_trial(data: &Dataset, cfg: &ExperimentConfig, cell: &Cell, lr: f64, trial: usize) -> Result<TrialResult> {
    let tseed = trial_seed(cfg.seed, trial);
    let td = simulate_trial(data, cfg, cell, tseed)?;
    let y_eta: Vec<f64> = td.train.iter().map(|&i| td.labels[i].y_eta).collect();
    let la_train: Vec<f64> = td.train.iter().map(|&i| td.labels[i].y_star).collect();
    let reference: Vec<f64> = td.labels.iter().map(|l| l.y_star).collect();
    let mut spec = RunSpec {
        arch: &cfg.arch,
        optimizer: cfg.optimizer,
        lr,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        gdbc: GdbcConfig::disabled(),
        objective: Objective::SquaredError,
        seed: tseed,
    };
    let (off, _) = train_and_evaluate(&spec, &data.features, &td.train, &y_eta, &la_train, &td.test, &reference)?;
    spec.gdbc = cfg.gdbc_config(cell);
    let (on, trainer) = train_and_evaluate(&spec, &data.features, &td.train, &y_eta, &la_train, &td.test, &reference)?;
    let calibrated = trainer.calibrated_labels(&y_eta);
    Ok(TrialResult {
        trial,
        seed: tseed,
        noisy_count: td.noisy_count,
        off,
        on,
        calibrated_mse: crate::metrics::mse(ScorePairs::new(&calibrated, &la_train)?),
        raw_lc_mse: crate::metrics::mse(ScorePairs::new(&y_eta, &la_train)?),
    })
}

fn median_metrics(runs: &[&MetricSet]) -> MetricSet {
    let pick = |f: fn(&MetricSet) -> f64| median(&runs.iter().map(|m| f(m)).collect::<Vec<_>>());
    MetricSet {
        srcc: pick(|m| m.srcc),
        plcc: pick(|m| m.plcc),
        krcc: pick(|m| m.krcc),
        mse: pick(|m| m.mse),
    }
}

fn delta_or_nan(a: f64, b: f64) -> f64 {
    delta_percent(a, b).unwrap_or(f64::NAN)
}

/// All trials of one grid cell; failing trials are recorded, not fatal.
pub fn run_cell(data: &Dataset, cfg: &ExperimentConfig, cell: &Cell, lr: f64) -> CellReport {
    let results: Vec<Result<TrialResult>> =
        (0..cfg.trials).into_par_iter().map(|t| run_trial(data, cfg, cell, lr, t)).collect();
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => trials.push(r),
            Err(e) => failures.push(TrialFailure { trial: t, reason: e.to_string() }),
        }
    }
    let off: Vec<&MetricSet> = trials.iter().map(|t| &t.off.test).collect();
    let on: Vec<&MetricSet> = trials.iter().map(|t| &t.on.test).collect();
    let median_off = median_metrics(&off);
    let median_on = median_metrics(&on);
    CellReport {
        cell: *cell,
        delta_percent: Delta {
            srcc: delta_or_nan(median_on.srcc, median_off.srcc),
            plcc: delta_or_nan(median_on.plcc, median_off.plcc),
            krcc: delta_or_nan(median_on.krcc, median_off.krcc),
        },
        median_off,
        median_on,
        median_calibrated_mse: median(&trials.iter().map(|t| t.calibrated_mse).collect::<Vec<_>>()),
        median_raw_lc_mse: median(&trials.iter().map(|t| t.raw_lc_mse).collect::<Vec<_>>()),
        trials,
        failures,
    }
}

/// Picks the learning rate on a validation split carved from the first
/// trial's training set, scored against the (noisy) training labels with
/// GDBC off. A single candidate is returned as is.
pub fn select_lr(data: &Dataset, cfg: &ExperimentConfig) -> Result<LrSelection> {
    if cfg.lr.len() == 1 {
        return Ok(LrSelection { candidates: cfg.lr.clone(), scores: Vec::new(), chosen: cfg.lr[0] });
    }
    let cell = cfg.cells()[0];
    let tseed = trial_seed(cfg.seed, 0);
    let td = simulate_trial(data, cfg, &cell, tseed)?;
    let vseed = seed::derive(tseed, stream::SPLIT);
    let (fit_pos, val_pos) = split(td.train.len(), cfg.train_fraction, vseed);
    let fit: Vec<usize> = fit_pos.iter().map(|&p| td.train[p]).collect();
    let val: Vec<usize> = val_pos.iter().map(|&p| td.train[p]).collect();
    let y_fit: Vec<f64> = fit.iter().map(|&i| td.labels[i].y_eta).collect();
    let y_ref: Vec<f64> = td.labels.iter().map(|l| l.y_eta).collect();
    let scores = cfg
        .lr
        .par_iter()
        .map(|&lr| {
            let spec = RunSpec {
                arch: &cfg.arch,
                optimizer: cfg.optimizer,
                lr,
                epochs: cfg.epochs,
                batch_size: cfg.batch_size,
                gdbc: GdbcConfig::disabled(),
                objective: Objective::SquaredError,
                seed: vseed,
            };
            train_and_evaluate(&spec, &data.features, &fit, &y_fit, &y_fit, &val, &y_ref)
                .map(|(r, _)| r.test.srcc)
                .unwrap_or(f64::NEG_INFINITY)
        })
        .collect::<Vec<_>>();
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |b, (i, s)| if *s > scores[b] { i } else { b });
    Ok(LrSelection { candidates: cfg.lr.clone(), scores, chosen: cfg.lr[best] })
}

/// Every cell of the configured grid.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data = Dataset::load(&cfg.dataset, cfg.source)?;
    run_grid_on(&data, cfg)
}

pub fn run_grid_on(data: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    data.validate()?;
    let lr = select_lr(data, cfg)?;
    let cells = cfg
        .cells()
        .par_iter()
        .map(|c| run_cell(data, cfg, c, lr.chosen))
        .collect();
    Ok(ExperimentReport { config: cfg.to_pairs(), seed: cfg.seed, lr, cells })
}

/// A single-cell experiment; multi-valued grid axes are rejected.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.cells().len() != 1 {
        return Err(Error::Config(vec![format!(
            "train expects a single grid cell, got {}; use grid",
            cfg.cells().len()
        )]));
    }
    run_grid(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub median: MetricSet,
    pub per_trial: Vec<MetricSet>,
    pub failures: Vec<TrialFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub config: Vec<(String, String)>,
    pub cell: Cell,
    pub lr: LrSelection,
    pub rows: Vec<MethodRow>,
    /// Training on LA-MOS directly.
    pub reference: MethodRow,
}

impl BaselineReport {
    pub fn row(&self, method: Method) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method.name())
    }
}

/// Subject x sample matrix of the LC annotations drawn for the noisy training samples.
fn lc_subject_matrix(data: &Dataset, td: &TrialData, sim: &SimConfig) -> Result<(SubjectMatrix, Vec<usize>)> {
    let mut noisy: Vec<usize> = td.train.iter().copied().filter(|&i| td.labels[i].is_noisy).collect();
    noisy.sort_unstable();
    let n_subjects = data
        .pools
        .iter()
        .map(|p| match &p.source {
            PoolSource::RawScores(r) => r.len(),
            _ => 0,
        })
        .max()
        .unwrap_or(0);
    let mut scores = vec![vec![None; noisy.len()]; n_subjects];
    for (col, &i) in noisy.iter().enumerate() {
        let PoolSource::RawScores(ratings) = &data.pools[i].source else {
            return Err(Error::WrongPoolKind {
                id: data.pools[i].sample_id.clone(),
                expected: "raw",
                actual: data.pools[i].source_kind().name(),
            });
        };
        for s in draw_raw_subset(&data.pools[i], &sim.for_sample(i))? {
            scores[s][col] = Some(data.range.normalize(ratings[s]));
        }
    }
    // drop subjects that never appear
    let keep: Vec<bool> = scores.iter().map(|r| r.iter().any(Option::is_some)).collect();
    let subject_ids = (0..n_subjects).map(|s| format!("a{s}")).collect();
    let sample_ids = noisy.iter().map(|&i| data.pools[i].sample_id.clone()).collect();
    let m = SubjectMatrix { scores, subject_ids, sample_ids };
    Ok((m.select_subjects(&keep), noisy))
}

fn screened_labels(
    method: Method,
    data: &Dataset,
    td: &TrialData,
    sim: &SimConfig,
    settings: &BaselineSettings,
) -> Result<Vec<f64>> {
    let mut labels: Vec<f64> = td.labels.iter().map(|l| l.y_eta).collect();
    let (matrix, noisy) = lc_subject_matrix(data, td, sim)?;
    if noisy.is_empty() {
        return Ok(labels);
    }
    let mos = match method {
        Method::SubjectRejection => screen_subject_rejection(&matrix)?.mos,
        Method::Mle => screen_mle(&matrix, settings.mle_max_iters, settings.mle_tol)?.psi,
        Method::BiasRemoval => screen_bias_removal(&matrix)?.mos,
        _ => unreachable!("not a screening method"),
    };
    for (col, &i) in noisy.iter().enumerate() {
        labels[i] = mos[col];
    }
    Ok(labels)
}

fn run_method(
    method: Option<Method>,
    data: &Dataset,
    cfg: &ExperimentConfig,
    cell: &Cell,
    lr: f64,
    trial: usize,
) -> Result<MetricSet> {
    let tseed = trial_seed(cfg.seed, trial);
    let td = simulate_trial(data, cfg, cell, tseed)?;
    let sim = SimConfig::new(cell.m, cell.eta, seed::derive(tseed, stream::LABELS), data.range)?;
    let reference: Vec<f64> = td.labels.iter().map(|l| l.y_star).collect();
    let b = &cfg.baselines;
    let binned = Architecture::Binned { bins: b.bins };
    let mut spec = RunSpec {
        arch: &cfg.arch,
        optimizer: cfg.optimizer,
        lr,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        gdbc: GdbcConfig::disabled(),
        objective: Objective::SquaredError,
        seed: tseed,
    };
    let all_labels: Vec<f64> = match method {
        None => reference.clone(),
        Some(m) if m.is_screening() => screened_labels(m, data, &td, &sim, b)?,
        Some(_) => td.labels.iter().map(|l| l.y_eta).collect(),
    };
    match method {
        Some(Method::Gdbc) => spec.gdbc = cfg.gdbc_config(cell),
        Some(Method::Gce) => {
            spec.arch = &binned;
            spec.objective = Objective::Gce { q: b.gce_q };
        }
        Some(Method::Sce) => {
            spec.arch = &binned;
            spec.objective = Objective::Sce { w_ce: b.sce_w_ce, w_rce: b.sce_w_rce, clip: b.sce_clip };
        }
        _ => {}
    }
    let labels: Vec<f64> = td.train.iter().map(|&i| all_labels[i]).collect();
    let la_train: Vec<f64> = td.train.iter().map(|&i| reference[i]).collect();
    let (r, _) = train_and_evaluate(&spec, &data.features, &td.train, &labels, &la_train, &td.test, &reference)?;
    Ok(r.test)
}

fn method_row(name: &str, results: Vec<Result<MetricSet>>) -> MethodRow {
    let mut per_trial = Vec::new();
    let mut failures = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => per_trial.push(m),
            Err(e) => failures.push(TrialFailure { trial: t, reason: e.to_string() }),
        }
    }
    MethodRow {
        method: name.to_string(),
        median: median_metrics(&per_trial.iter().collect::<Vec<_>>()),
        per_trial,
        failures,
    }
}

/// Configured methods plus an LA-MOS reference row on shared splits and seeds.
/// Uses the first value of every grid axis.
pub fn run_baseline_comparison(cfg: &ExperimentConfig) -> Result<BaselineReport> {
    cfg.validate()?;
    let data = Dataset::load(&cfg.dataset, SourceKind::RawScores)?;
    run_baseline_comparison_on(&data, cfg)
}

pub fn run_baseline_comparison_on(data: &Dataset, cfg: &ExperimentConfig) -> Result<BaselineReport> {
    cfg.validate()?;
    data.validate()?;
    if cfg.baselines.methods.iter().any(|m| m.is_screening()) {
        if let Some(p) = data.pools.iter().find(|p| p.source_kind() != SourceKind::RawScores) {
            return Err(Error::Config(vec![format!(
                "screening baselines need raw per-subject scores; sample `{}` is {}",
                p.sample_id,
                p.source_kind().name()
            )]));
        }
        let subjects = data
            .pools
            .iter()
            .map(|p| match &p.source {
                PoolSource::RawScores(r) => r.len(),
                _ => 0,
            })
            .max()
            .unwrap_or(0);
        if subjects < 2 {
            return Err(Error::Config(vec!["screening baselines need at least 2 subjects".into()]));
        }
    }
    let cell = cfg.cells()[0];
    let lr = select_lr(data, cfg)?;
    let rows = cfg
        .baselines
        .methods
        .par_iter()
        .map(|&m| {
            let results = (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_method(Some(m), data, cfg, &cell, lr.chosen, t))
                .collect();
            method_row(m.name(), results)
        })
        .collect();
    let reference = method_row(
        "la_mos",
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_method(None, data, cfg, &cell, lr.chosen, t))
            .collect(),
    );
    Ok(BaselineReport { config: cfg.to_pairs(), cell, lr, rows, reference })
}

/// Wall time of `f` in seconds alongside its result.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
