//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! trials = 10
//! sim.eta = 1.0, 0.8, 0.6   # comma lists are grid axes
//! gdbc.alpha = 0.9
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gdbc::{GateRule, GdbcConfig};
use crate::label_sim::synthetic::SyntheticSpec;
use crate::label_sim::{ScoreRange, SourceKind};
use crate::predictor::{Architecture, OptimizerKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DatasetSpec {
    Synthetic(SyntheticSpec),
    /// Ratings CSV plus a features CSV (`sample_id,x0,x1,...`).
    Csv {
        ratings: PathBuf,
        features: PathBuf,
        range: Option<ScoreRange>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Plain,
    SubjectRejection,
    Mle,
    BiasRemoval,
    Gce,
    Sce,
    Gdbc,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Plain,
        Method::SubjectRejection,
        Method::Mle,
        Method::BiasRemoval,
        Method::Gce,
        Method::Sce,
        Method::Gdbc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::SubjectRejection => "sr",
            Method::Mle => "mle",
            Method::BiasRemoval => "sbr",
            Method::Gce => "gce",
            Method::Sce => "sce",
            Method::Gdbc => "gdbc",
        }
    }

    pub fn is_screening(self) -> bool {
        matches!(self, Method::SubjectRejection | Method::Mle | Method::BiasRemoval)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::param("baselines.methods", format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSettings {
    pub methods: Vec<Method>,
    pub bins: usize,
    pub gce_q: f64,
    pub sce_w_ce: f64,
    pub sce_w_rce: f64,
    /// Value substituted for `log 0` in the reverse term.
    pub sce_clip: f64,
    pub mle_max_iters: usize,
    pub mle_tol: f64,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        BaselineSettings {
            methods: Method::ALL.to_vec(),
            bins: 10,
            gce_q: 0.7,
            sce_w_ce: 0.1,
            sce_w_rce: 1.0,
            sce_clip: -4.0,
            mle_max_iters: 200,
            mle_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub train_fraction: f64,
    pub out: PathBuf,
    pub dataset: DatasetSpec,
    pub source: SourceKind,
    pub eta: Vec<f64>,
    pub m: Vec<usize>,
    pub alpha: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub t_h: usize,
    pub gate: GateRule,
    pub arch: Architecture,
    pub optimizer: OptimizerKind,
    /// More than one value triggers a validation search.
    pub lr: Vec<f64>,
    pub baselines: BaselineSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let g = GdbcConfig::default();
        ExperimentConfig {
            seed: 2024,
            trials: 10,
            epochs: 50,
            batch_size: 16,
            train_fraction: 0.8,
            out: PathBuf::from("runs"),
            dataset: DatasetSpec::Synthetic(SyntheticSpec::default()),
            source: SourceKind::RawScores,
            eta: vec![1.0],
            m: vec![1],
            alpha: vec![g.alpha],
            epsilon: vec![g.epsilon],
            t_h: g.t_h,
            gate: g.gate,
            arch: Architecture::Linear,
            optimizer: OptimizerKind::Adam,
            lr: vec![1e-2],
            baselines: BaselineSettings::default(),
        }
    }
}

/// One point of the (eta, M, alpha, epsilon) grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub eta: f64,
    pub m: usize,
    pub alpha: f64,
    pub epsilon: f64,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eta={} m={} alpha={} eps={}", self.eta, self.m, self.alpha, self.epsilon)
    }
}

fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

fn one<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", v.trim()))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Parses `key = value` lines; later keys override earlier ones.
pub fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => out.push((k.trim().to_string(), v.trim().to_string())),
            _ => errors.push(format!("{origin}:{}: expected `key = value`", n + 1)),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(Error::Config(errors))
    }
}

/// Parses a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::Config(vec![format!("override `{s}` is not key=value")])),
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_pairs(&parse_pairs(&text, &path.display().to_string())?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text, "<config>")?)
    }

    /// Defaults with `pairs` applied in order; every problem is reported at once.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let errors = cfg.apply(pairs);
        let mut errors = errors;
        if let Err(Error::Config(more)) = cfg.validate() {
            errors.extend(more);
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Applies overrides, returning the problems found; call `validate` afterwards.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> Vec<String> {
        let mut errors = Vec::new();
        let mut csv_ratings: Option<PathBuf> = None;
        let mut csv_features: Option<PathBuf> = None;
        let mut range_min: Option<f64> = None;
        let mut range_max: Option<f64> = None;
        let mut kind: Option<String> = None;
        let mut synth = match &self.dataset {
            DatasetSpec::Synthetic(s) => s.clone(),
            DatasetSpec::Csv { .. } => SyntheticSpec::default(),
        };
        if let DatasetSpec::Csv { ratings, features, range } = &self.dataset {
            csv_ratings = Some(ratings.clone());
            csv_features = Some(features.clone());
            range_min = range.map(|r| r.min);
            range_max = range.map(|r| r.max);
            kind = Some("csv".into());
        }
        for (key, value) in pairs {
            let v = value.as_str();
            let res: std::result::Result<(), String> = (|| {
                match key.as_str() {
                    "seed" => self.seed = one(v)?,
                    "trials" => self.trials = one(v)?,
                    "epochs" => self.epochs = one(v)?,
                    "batch_size" => self.batch_size = one(v)?,
                    "train_fraction" => self.train_fraction = one(v)?,
                    "out" => self.out = PathBuf::from(v),
                    "dataset.kind" => kind = Some(v.to_string()),
                    "dataset.ratings" => csv_ratings = Some(PathBuf::from(v)),
                    "dataset.features_csv" => csv_features = Some(PathBuf::from(v)),
                    "dataset.range_min" => range_min = Some(one(v)?),
                    "dataset.range_max" => range_max = Some(one(v)?),
                    "dataset.samples" => synth.samples = one(v)?,
                    "dataset.features" => synth.features = one(v)?,
                    "dataset.annotators" => synth.annotators = one(v)?,
                    "dataset.rating_step" => synth.rating_step = one(v)?,
                    "dataset.annotator_bias_std" => synth.annotator_bias_std = one(v)?,
                    "dataset.rating_noise_std" => synth.rating_noise_std = one(v)?,
                    "dataset.signal_scale" => synth.signal_scale = one(v)?,
                    "dataset.curvature" => synth.curvature = one(v)?,
                    "dataset.offset" => synth.offset = one(v)?,
                    "dataset.seed" => synth.seed = one(v)?,
                    "sim.source" => self.source = one(v)?,
                    "sim.eta" => self.eta = list(v)?,
                    "sim.m" => self.m = list(v)?,
                    "gdbc.alpha" => self.alpha = list(v)?,
                    "gdbc.epsilon" => self.epsilon = list(v)?,
                    "gdbc.t_h" => self.t_h = one(v)?,
                    "gdbc.gate" => self.gate = one(v)?,
                    "predictor.arch" => self.arch = one(v)?,
                    "optimizer.kind" => self.optimizer = one(v)?,
                    "optimizer.lr" => self.lr = list(v)?,
                    "baselines.methods" => self.baselines.methods = list(v)?,
                    "baselines.bins" => self.baselines.bins = one(v)?,
                    "baselines.gce_q" => self.baselines.gce_q = one(v)?,
                    "baselines.sce_w_ce" => self.baselines.sce_w_ce = one(v)?,
                    "baselines.sce_w_rce" => self.baselines.sce_w_rce = one(v)?,
                    "baselines.sce_clip" => self.baselines.sce_clip = one(v)?,
                    "baselines.mle_max_iters" => self.baselines.mle_max_iters = one(v)?,
                    "baselines.mle_tol" => self.baselines.mle_tol = one(v)?,
                    _ => return Err("unknown key".to_string()),
                }
                Ok(())
            })();
            if let Err(e) = res {
                errors.push(format!("{key}: {e}"));
            }
        }
        if let (Some(min), Some(max)) = (range_min, range_max) {
            synth.range = ScoreRange { min, max };
        }
        self.dataset = match kind.as_deref() {
            None | Some("synthetic") => DatasetSpec::Synthetic(synth),
            Some("csv") => match (csv_ratings, csv_features) {
                (Some(ratings), Some(features)) => DatasetSpec::Csv {
                    ratings,
                    features,
                    range: range_min.zip(range_max).map(|(min, max)| ScoreRange { min, max }),
                },
                _ => {
                    errors.push("dataset.kind = csv needs dataset.ratings and dataset.features_csv".into());
                    DatasetSpec::Synthetic(synth)
                }
            },
            Some(other) => {
                errors.push(format!("dataset.kind: unknown kind `{other}`"));
                DatasetSpec::Synthetic(synth)
            }
        };
        errors
    }

    pub fn validate(&self) -> Result<()> {
        let mut e = Vec::new();
        if self.trials == 0 {
            e.push("trials: must be >= 1".to_string());
        }
        if self.epochs == 0 {
            e.push("epochs: must be >= 1".to_string());
        }
        if self.batch_size == 0 {
            e.push("batch_size: must be >= 1".to_string());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            e.push(format!("train_fraction: {} not in (0, 1)", self.train_fraction));
        }
        if self.eta.is_empty() || self.eta.iter().any(|x| !(0.0..=1.0).contains(x)) {
            e.push("sim.eta: need values in [0, 1]".to_string());
        }
        if self.m.is_empty() || self.m.contains(&0) {
            e.push("sim.m: need values >= 1".to_string());
        }
        if self.alpha.is_empty() || self.alpha.iter().any(|x| !(0.0..=1.0).contains(x)) {
            e.push("gdbc.alpha: need values in [0, 1]".to_string());
        }
        if self.epsilon.is_empty() || self.epsilon.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            e.push("gdbc.epsilon: need values > 0".to_string());
        }
        if self.t_h == 0 {
            e.push("gdbc.t_h: must be >= 1".to_string());
        }
        if self.lr.is_empty() || self.lr.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            e.push("optimizer.lr: need values > 0".to_string());
        }
        if self.baselines.methods.is_empty() {
            e.push("baselines.methods: empty".to_string());
        }
        if self.baselines.bins < 2 {
            e.push("baselines.bins: must be >= 2".to_string());
        }
        if !(self.baselines.sce_clip < 0.0) {
            e.push("baselines.sce_clip: must be < 0 (log of zero probability)".to_string());
        }
        if !(self.baselines.gce_q > 0.0 && self.baselines.gce_q <= 1.0) {
            e.push("baselines.gce_q: must be in (0, 1]".to_string());
        }
        if let DatasetSpec::Synthetic(s) = &self.dataset {
            if let Err(err) = s.validate() {
                e.push(format!("dataset: {err}"));
            }
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(e))
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &eta in &self.eta {
            for &m in &self.m {
                for &alpha in &self.alpha {
                    for &epsilon in &self.epsilon {
                        out.push(Cell { eta, m, alpha, epsilon });
                    }
                }
            }
        }
        out
    }

    pub fn gdbc_config(&self, cell: &Cell) -> GdbcConfig {
        GdbcConfig {
            alpha: cell.alpha,
            epsilon: cell.epsilon,
            t_h: self.t_h,
            enabled: true,
            gate: self.gate,
        }
    }

    /// Resolved configuration as `key = value` pairs, re-parseable by `parse`.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut p: BTreeMap<&str, String> = BTreeMap::new();
        p.insert("seed", self.seed.to_string());
        p.insert("trials", self.trials.to_string());
        p.insert("epochs", self.epochs.to_string());
        p.insert("batch_size", self.batch_size.to_string());
        p.insert("train_fraction", self.train_fraction.to_string());
        p.insert("out", self.out.display().to_string());
        match &self.dataset {
            DatasetSpec::Synthetic(s) => {
                p.insert("dataset.kind", "synthetic".into());
                p.insert("dataset.samples", s.samples.to_string());
                p.insert("dataset.features", s.features.to_string());
                p.insert("dataset.annotators", s.annotators.to_string());
                p.insert("dataset.range_min", s.range.min.to_string());
                p.insert("dataset.range_max", s.range.max.to_string());
                p.insert("dataset.rating_step", s.rating_step.to_string());
                p.insert("dataset.annotator_bias_std", s.annotator_bias_std.to_string());
                p.insert("dataset.rating_noise_std", s.rating_noise_std.to_string());
                p.insert("dataset.signal_scale", s.signal_scale.to_string());
                p.insert("dataset.curvature", s.curvature.to_string());
                p.insert("dataset.offset", s.offset.to_string());
                p.insert("dataset.seed", s.seed.to_string());
            }
            DatasetSpec::Csv { ratings, features, range } => {
                p.insert("dataset.kind", "csv".into());
                p.insert("dataset.ratings", ratings.display().to_string());
                p.insert("dataset.features_csv", features.display().to_string());
                if let Some(r) = range {
                    p.insert("dataset.range_min", r.min.to_string());
                    p.insert("dataset.range_max", r.max.to_string());
                }
            }
        }
        p.insert("sim.source", self.source.name().to_string());
        p.insert("sim.eta", join(&self.eta));
        p.insert("sim.m", join(&self.m));
        p.insert("gdbc.alpha", join(&self.alpha));
        p.insert("gdbc.epsilon", join(&self.epsilon));
        p.insert("gdbc.t_h", self.t_h.to_string());
        p.insert(
            "gdbc.gate",
            match self.gate {
                GateRule::Scaled => "scaled".into(),
                GateRule::Plain => "plain".into(),
            },
        );
        p.insert("predictor.arch", self.arch.to_string());
        p.insert("optimizer.kind", self.optimizer.to_string());
        p.insert("optimizer.lr", join(&self.lr));
        let b = &self.baselines;
        p.insert("baselines.methods", join(&b.methods));
        p.insert("baselines.bins", b.bins.to_string());
        p.insert("baselines.gce_q", b.gce_q.to_string());
        p.insert("baselines.sce_w_ce", b.sce_w_ce.to_string());
        p.insert("baselines.sce_w_rce", b.sce_w_rce.to_string());
        p.insert("baselines.sce_clip", b.sce_clip.to_string());
        p.insert("baselines.mle_max_iters", b.mle_max_iters.to_string());
        p.insert("baselines.mle_tol", b.mle_tol.to_string());
        p.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
