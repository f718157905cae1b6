//! Label simulation: LA-MOS, LC-MOS and bias-rate mixing.
//!
//! All values handed to training live in the normalized label space `[0, 1]`;
//! the affine map comes from a configured [`ScoreRange`], never from data.

mod csv_io;
pub mod synthetic;

pub use csv_io::{load_ratings_csv, read_ratings, write_ratings, write_ratings_csv, RatingTable};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::seed::{self, stream, Rng};
use crate::{Error, Result};

/// Raw opinion-score range and its affine map onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRange {
    pub min: f64,
    pub max: f64,
}

impl ScoreRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let range = ScoreRange { min, max };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::DegenerateRange {
                min: self.min,
                max: self.max,
            });
        }
        Ok(())
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        (raw - self.min) / (self.max - self.min)
    }

    pub fn denormalize(&self, unit: f64) -> f64 {
        self.min + unit * (self.max - self.min)
    }

    pub fn contains(&self, raw: f64) -> bool {
        raw >= self.min && raw <= self.max
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Where a sample's opinion scores come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PoolSource {
    /// Every individual score, in subject order.
    RawScores(Vec<f64>),
    /// Only the MOS and the standard deviation across subjects.
    MosPlusStd { mos: f64, std: f64 },
    /// Score values with their counts.
    EmpiricalDistribution(Vec<(f64, u64)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SourceKind {
    RawScores,
    MosPlusStd,
    EmpiricalDistribution,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::RawScores => "raw",
            SourceKind::MosPlusStd => "gauss",
            SourceKind::EmpiricalDistribution => "hist",
        }
    }
}

impl std::str::FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "raw" | "raw_scores" => Ok(SourceKind::RawScores),
            "gauss" | "mos_plus_std" => Ok(SourceKind::MosPlusStd),
            "hist" | "empirical_distribution" => Ok(SourceKind::EmpiricalDistribution),
            other => Err(Error::param("kind", format!("unknown pool kind `{other}`"))),
        }
    }
}

/// Opinion scores for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationPool {
    pub sample_id: String,
    pub source: PoolSource,
}

impl AnnotationPool {
    pub fn raw(id: impl Into<String>, ratings: Vec<f64>) -> Self {
        AnnotationPool {
            sample_id: id.into(),
            source: PoolSource::RawScores(ratings),
        }
    }

    pub fn gaussian(id: impl Into<String>, mos: f64, std: f64) -> Self {
        AnnotationPool {
            sample_id: id.into(),
            source: PoolSource::MosPlusStd { mos, std },
        }
    }

    pub fn histogram(id: impl Into<String>, bins: Vec<(f64, u64)>) -> Self {
        AnnotationPool {
            sample_id: id.into(),
            source: PoolSource::EmpiricalDistribution(bins),
        }
    }

    pub fn source_kind(&self) -> SourceKind {
        match self.source {
            PoolSource::RawScores(_) => SourceKind::RawScores,
            PoolSource::MosPlusStd { .. } => SourceKind::MosPlusStd,
            PoolSource::EmpiricalDistribution(_) => SourceKind::EmpiricalDistribution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidPool {
            id: self.sample_id.clone(),
            reason: reason.to_string(),
        };
        match &self.source {
            PoolSource::RawScores(r) => {
                if r.is_empty() {
                    return Err(bad("no ratings"));
                }
                if r.iter().any(|v| !v.is_finite()) {
                    return Err(bad("non-finite rating"));
                }
            }
            PoolSource::MosPlusStd { mos, std } => {
                if !mos.is_finite() || !std.is_finite() {
                    return Err(bad("non-finite mos/std"));
                }
                if *std < 0.0 {
                    return Err(bad("negative standard deviation"));
                }
            }
            PoolSource::EmpiricalDistribution(h) => {
                if h.iter().all(|&(_, c)| c == 0) {
                    return Err(bad("histogram has no mass"));
                }
                if h.iter().any(|(v, _)| !v.is_finite()) {
                    return Err(bad("non-finite histogram value"));
                }
            }
        }
        Ok(())
    }

    /// LA-MOS in raw units: the mean over every available annotation.
    pub fn raw_mos(&self) -> Result<f64> {
        self.validate()?;
        Ok(match &self.source {
            PoolSource::RawScores(r) => mean(r),
            PoolSource::MosPlusStd { mos, .. } => *mos,
            PoolSource::EmpiricalDistribution(h) => {
                let total: u64 = h.iter().map(|&(_, c)| c).sum();
                h.iter().map(|&(v, c)| v * c as f64).sum::<f64>() / total as f64
            }
        })
    }
}

/// Simulation settings for one sampling pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Annotation number M.
    pub m: usize,
    /// Bias rate: probability a sample trains on LC-MOS instead of LA-MOS.
    pub eta: f64,
    pub seed: u64,
    pub range: ScoreRange,
}

impl SimConfig {
    pub fn new(m: usize, eta: f64, seed: u64, range: ScoreRange) -> Result<Self> {
        let cfg = SimConfig {
            m,
            eta,
            seed,
            range,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::param("m", "annotation number must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::param("eta", format!("{} not in [0, 1]", self.eta)));
        }
        self.range.validate()
    }

    /// Config for sample `index` of a dataset: same settings, independent stream.
    pub fn for_sample(&self, index: usize) -> SimConfig {
        SimConfig {
            seed: seed::derive(seed::derive(self.seed, stream::LABELS), index as u64),
            ..*self
        }
    }
}

/// Normalized labels of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    /// LA-MOS.
    pub y_star: f64,
    /// LC-MOS from M annotations.
    pub y_lc: f64,
    /// Label used for training after bias-rate mixing.
    pub y_eta: f64,
    /// Subjective bias `y_lc - y_star`.
    pub z: f64,
    pub is_noisy: bool,
}

impl LabelSet {
    /// A fresh label set; training uses the LC-MOS until [`mix_bias_rate`] runs.
    pub fn new(y_star: f64, y_lc: f64) -> Self {
        LabelSet {
            y_star,
            y_lc,
            y_eta: y_lc,
            z: y_lc - y_star,
            is_noisy: true,
        }
    }

    fn with_branch(self, noisy: bool) -> Self {
        LabelSet {
            y_eta: if noisy { self.y_lc } else { self.y_star },
            is_noisy: noisy,
            ..self
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn wrong_kind(pool: &AnnotationPool, expected: SourceKind) -> Error {
    Error::WrongPoolKind {
        id: pool.sample_id.clone(),
        expected: expected.name(),
        actual: pool.source_kind().name(),
    }
}

fn check_in_range(pool: &AnnotationPool, range: &ScoreRange, v: f64) -> Result<()> {
    if range.contains(v) {
        Ok(())
    } else {
        Err(Error::InvalidPool {
            id: pool.sample_id.clone(),
            reason: format!("score {v} outside range [{}, {}]", range.min, range.max),
        })
    }
}

/// Draws M distinct rating indices; returns them in draw order.
pub fn draw_raw_subset(pool: &AnnotationPool, cfg: &SimConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let PoolSource::RawScores(ratings) = &pool.source else {
        return Err(wrong_kind(pool, SourceKind::RawScores));
    };
    pool.validate()?;
    if ratings.len() < cfg.m {
        return Err(Error::InsufficientAnnotations {
            needed: cfg.m,
            available: ratings.len(),
        });
    }
    let mut rng = seed::rng(cfg.seed);
    Ok(rand::seq::index::sample(&mut rng, ratings.len(), cfg.m).into_vec())
}

/// LC-MOS from M scores drawn without replacement; LA-MOS from all scores.
pub fn sample_lc_mos_raw(pool: &AnnotationPool, cfg: &SimConfig) -> Result<LabelSet> {
    let picked = draw_raw_subset(pool, cfg)?;
    let PoolSource::RawScores(ratings) = &pool.source else {
        unreachable!("checked by draw_raw_subset");
    };
    for &r in ratings {
        check_in_range(pool, &cfg.range, r)?;
    }
    let lc = picked.iter().map(|&i| ratings[i]).sum::<f64>() / cfg.m as f64;
    Ok(LabelSet::new(
        cfg.range.normalize(mean(ratings)),
        cfg.range.normalize(lc),
    ))
}

const MAX_REJECTIONS: usize = 10_000;

/// LC-MOS from M draws of `Normal(mos, std^2)` truncated to the score range.
pub fn sample_lc_mos_gaussian(pool: &AnnotationPool, cfg: &SimConfig) -> Result<LabelSet> {
    cfg.validate()?;
    let PoolSource::MosPlusStd { mos, std } = pool.source else {
        return Err(wrong_kind(pool, SourceKind::MosPlusStd));
    };
    pool.validate()?;
    check_in_range(pool, &cfg.range, mos)?;
    let normal = Normal::new(mos, std).map_err(|e| Error::InvalidPool {
        id: pool.sample_id.clone(),
        reason: e.to_string(),
    })?;
    let mut rng = seed::rng(cfg.seed);
    let mut sum = 0.0;
    for _ in 0..cfg.m {
        sum += truncated_draw(&normal, &cfg.range, &mut rng);
    }
    Ok(LabelSet::new(
        cfg.range.normalize(mos),
        cfg.range.normalize(sum / cfg.m as f64),
    ))
}

fn truncated_draw(normal: &Normal<f64>, range: &ScoreRange, rng: &mut Rng) -> f64 {
    for _ in 0..MAX_REJECTIONS {
        let v = normal.sample(rng);
        if range.contains(v) {
            return v;
        }
    }
    // Mass inside the range is negligible; fall back to the nearest bound.
    normal.sample(rng).clamp(range.min, range.max)
}

/// LC-MOS from M draws of the histogram's categorical distribution.
pub fn sample_lc_mos_empirical(pool: &AnnotationPool, cfg: &SimConfig) -> Result<LabelSet> {
    cfg.validate()?;
    let PoolSource::EmpiricalDistribution(hist) = &pool.source else {
        return Err(wrong_kind(pool, SourceKind::EmpiricalDistribution));
    };
    pool.validate()?;
    for &(v, _) in hist {
        check_in_range(pool, &cfg.range, v)?;
    }
    let index = WeightedIndex::new(hist.iter().map(|&(_, c)| c)).map_err(|e| {
        Error::InvalidPool {
            id: pool.sample_id.clone(),
            reason: e.to_string(),
        }
    })?;
    let mut rng = seed::rng(cfg.seed);
    let sum: f64 = (0..cfg.m).map(|_| hist[index.sample(&mut rng)].0).sum();
    Ok(LabelSet::new(
        cfg.range.normalize(pool.raw_mos()?),
        cfg.range.normalize(sum / cfg.m as f64),
    ))
}

/// Dispatches on the pool's source kind.
pub fn sample_lc_mos(pool: &AnnotationPool, cfg: &SimConfig) -> Result<LabelSet> {
    match pool.source_kind() {
        SourceKind::RawScores => sample_lc_mos_raw(pool, cfg),
        SourceKind::MosPlusStd => sample_lc_mos_gaussian(pool, cfg),
        SourceKind::EmpiricalDistribution => sample_lc_mos_empirical(pool, cfg),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixOutcome {
    pub labels: Vec<LabelSet>,
    pub noisy_count: usize,
}

/// Per-sample Bernoulli(eta) choice between LC-MOS and LA-MOS.
pub fn mix_bias_rate(labels: &[LabelSet], cfg: &SimConfig) -> Result<MixOutcome> {
    if !(0.0..=1.0).contains(&cfg.eta) {
        return Err(Error::param("eta", format!("{} not in [0, 1]", cfg.eta)));
    }
    let mut rng = seed::rng_for(cfg.seed, stream::MIX);
    let mut noisy_count = 0;
    let labels = labels
        .iter()
        .map(|l| {
            let noisy = rng.random_bool(cfg.eta);
            noisy_count += usize::from(noisy);
            l.with_branch(noisy)
        })
        .collect();
    Ok(MixOutcome {
        labels,
        noisy_count,
    })
}

/// Samples every pool on its own stream, then mixes at the configured bias rate.
pub fn simulate_labels(pools: &[AnnotationPool], cfg: &SimConfig) -> Result<MixOutcome> {
    cfg.validate()?;
    let raw = pools
        .iter()
        .enumerate()
        .map(|(i, p)| sample_lc_mos(p, &cfg.for_sample(i)))
        .collect::<Result<Vec<_>>>()?;
    mix_bias_rate(&raw, cfg)
}
