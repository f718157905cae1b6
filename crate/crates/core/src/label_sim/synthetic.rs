//! Synthetic rating populations for desk-scale experiments.
//!
//! Ground-truth quality is `sigmoid(w . x + b + k * ((u . x)^2 - 1) / sqrt 2)`
//! for standard-normal features `x`, a fixed direction `w` and a unit
//! direction `u` orthogonal to it; `k = 0` (the default) is the plain
//! logistic index model. A panel of virtual annotators rates every sample on
//! the raw scale: truth plus a per-annotator constant bias plus
//! per-rating noise, rounded to the scale step and clamped to the range.

use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{AnnotationPool, ScoreRange, SourceKind};
use crate::seed::{self, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub samples: usize,
    pub features: usize,
    pub annotators: usize,
    pub range: ScoreRange,
    /// Rating quantization step on the raw scale; 0 keeps ratings continuous.
    pub rating_step: f64,
    pub annotator_bias_std: f64,
    pub rating_noise_std: f64,
    /// Norm of `w`.
    pub signal_scale: f64,
    /// Weight `k` of the quadratic term.
    pub curvature: f64,
    pub offset: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            samples: 2000,
            features: 8,
            annotators: 30,
            range: ScoreRange { min: 1.0, max: 10.0 },
            rating_step: 1.0,
            annotator_bias_std: 0.6,
            rating_noise_std: 1.6,
            signal_scale: 1.5,
            curvature: 0.0,
            offset: 0.0,
            seed: 2024,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        self.range.validate()?;
        if self.samples < 2 {
            return Err(Error::param("samples", "need at least 2 samples"));
        }
        if self.features == 0 {
            return Err(Error::param("features", "need at least 1 feature"));
        }
        if self.annotators == 0 {
            return Err(Error::param("annotators", "need at least 1 annotator"));
        }
        for (name, v) in [
            ("rating_step", self.rating_step),
            ("annotator_bias_std", self.annotator_bias_std),
            ("rating_noise_std", self.rating_noise_std),
            ("curvature", self.curvature.abs()),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("{v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub spec: SyntheticSpec,
    pub features: Vec<Vec<f64>>,
    /// Noise-free quality in `[0, 1]` (before any annotator enters).
    pub truth: Vec<f64>,
    pub weights: Vec<f64>,
    /// Unit direction of the quadratic term.
    pub curve_direction: Vec<f64>,
    pub annotator_bias: Vec<f64>,
    /// `ratings[i][s]`: annotator `s` on sample `i`, raw scale.
    pub ratings: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = seed::rng_for(spec.seed, stream::DATASET);
    let mut weights: Vec<f64> = (0..spec.features)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    for w in &mut weights {
        *w *= spec.signal_scale / norm;
    }
    let mut curve: Vec<f64> = (0..spec.features)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    if spec.features > 1 {
        let proj = dot(&curve, &weights) / dot(&weights, &weights);
        for (c, w) in curve.iter_mut().zip(&weights) {
            *c -= proj * w;
        }
    }
    let cn = dot(&curve, &curve).sqrt();
    for c in &mut curve {
        *c /= cn;
    }
    let bias_dist = Normal::new(0.0, spec.annotator_bias_std).expect("validated std");
    let annotator_bias: Vec<f64> = (0..spec.annotators)
        .map(|_| bias_dist.sample(&mut rng))
        .collect();
    let noise = Normal::new(0.0, spec.rating_noise_std).expect("validated std");

    let mut features = Vec::with_capacity(spec.samples);
    let mut truth = Vec::with_capacity(spec.samples);
    let mut ratings = Vec::with_capacity(spec.samples);
    for _ in 0..spec.samples {
        let x: Vec<f64> = (0..spec.features)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let bend = (dot(&x, &curve).powi(2) - 1.0) / std::f64::consts::SQRT_2;
        let q = sigmoid(dot(&x, &weights) + spec.offset + spec.curvature * bend);
        let center = spec.range.denormalize(q);
        let row = annotator_bias
            .iter()
            .map(|b| {
                let mut r = center + b + noise.sample(&mut rng);
                if spec.rating_step > 0.0 {
                    r = spec.range.min
                        + ((r - spec.range.min) / spec.rating_step).round() * spec.rating_step;
                }
                r.clamp(spec.range.min, spec.range.max)
            })
            .collect();
        features.push(x);
        truth.push(q);
        ratings.push(row);
    }
    Ok(SyntheticDataset {
        spec: spec.clone(),
        features,
        truth,
        weights,
        curve_direction: curve,
        annotator_bias,
        ratings,
    })
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn sample_id(i: usize) -> String {
        format!("s{i:05}")
    }

    /// Pools of the requested kind derived from the full rating panel.
    pub fn pools(&self, kind: SourceKind) -> Vec<AnnotationPool> {
        self.ratings
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let id = Self::sample_id(i);
                match kind {
                    SourceKind::RawScores => AnnotationPool::raw(id, row.clone()),
                    SourceKind::MosPlusStd => {
                        let n = row.len() as f64;
                        let mos = row.iter().sum::<f64>() / n;
                        let var = if row.len() > 1 {
                            row.iter().map(|r| (r - mos).powi(2)).sum::<f64>() / (n - 1.0)
                        } else {
                            0.0
                        };
                        AnnotationPool::gaussian(id, mos, var.sqrt())
                    }
                    SourceKind::EmpiricalDistribution => {
                        let mut bins: Vec<(f64, u64)> = Vec::new();
                        let mut sorted = row.clone();
                        sorted.sort_by(f64::total_cmp);
                        for v in sorted {
                            match bins.last_mut() {
                                Some((last, c)) if *last == v => *c += 1,
                                _ => bins.push((v, 1)),
                            }
                        }
                        AnnotationPool::histogram(id, bins)
                    }
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let spec = SyntheticSpec {
            samples: 50,
            ..SyntheticSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ratings.len(), 50);
        assert!(a
            .ratings
            .iter()
            .flatten()
            .all(|&r| spec.range.contains(r) && r.fract() == 0.0));
        let norm = a.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!((norm - spec.signal_scale).abs() < 1e-12);
    }

    #[test]
    fn derived_pools_share_the_mos() {
        let spec = SyntheticSpec {
            samples: 5,
            ..SyntheticSpec::default()
        };
        let d = generate(&spec).unwrap();
        for kind in [
            SourceKind::RawScores,
            SourceKind::MosPlusStd,
            SourceKind::EmpiricalDistribution,
        ] {
            let pools = d.pools(kind);
            for (p, row) in pools.iter().zip(&d.ratings) {
                let mos = row.iter().sum::<f64>() / row.len() as f64;
                assert!((p.raw_mos().unwrap() - mos).abs() < 1e-12);
            }
        }
    }
}
