//! One-shot label screening of a subject x sample opinion-score matrix.
//!
//! Simplified forms of the usual recommendation procedures:
//! - subject rejection: BT.500-style per-sample outlier counting with a
//!   kurtosis-selected `2 sigma` / `sqrt(20) sigma` band;
//! - MLE: `score = psi_j + b_s + v_s * noise`, fitted by alternating
//!   closed-form updates with `sum_s b_s = 0`;
//! - bias removal: one pass of per-subject mean offset subtraction.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `scores[s][j]`: subject `s` on sample `j`; `None` when not rated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectMatrix {
    pub scores: Vec<Vec<Option<f64>>>,
    pub subject_ids: Vec<String>,
    pub sample_ids: Vec<String>,
}

impl SubjectMatrix {
    pub fn new(
        scores: Vec<Vec<Option<f64>>>,
        subject_ids: Vec<String>,
        sample_ids: Vec<String>,
    ) -> Result<Self> {
        let m = SubjectMatrix {
            scores,
            subject_ids,
            sample_ids,
        };
        m.validate()?;
        Ok(m)
    }

    /// Matrix with generated ids.
    pub fn from_scores(scores: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let n_samples = scores.first().map_or(0, Vec::len);
        let subject_ids = (0..scores.len()).map(|s| format!("subj{s}")).collect();
        let sample_ids = (0..n_samples).map(|j| format!("s{j}")).collect();
        Self::new(scores, subject_ids, sample_ids)
    }

    pub fn from_dense(scores: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_scores(
            scores
                .into_iter()
                .map(|row| row.into_iter().map(Some).collect())
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.subject_ids.len() != self.scores.len() {
            return Err(Error::DimensionMismatch {
                expected: self.scores.len(),
                got: self.subject_ids.len(),
            });
        }
        for row in &self.scores {
            if row.len() != self.sample_ids.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.sample_ids.len(),
                    got: row.len(),
                });
            }
            if row.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "subject matrix".into(),
                });
            }
        }
        for j in 0..self.n_samples() {
            if self.column(j).next().is_none() {
                return Err(Error::DegenerateInput(format!(
                    "sample `{}` has no ratings",
                    self.sample_ids[j]
                )));
            }
        }
        Ok(())
    }

    pub fn n_subjects(&self) -> usize {
        self.scores.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    /// `(subject, score)` pairs observed for sample `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.scores
            .iter()
            .enumerate()
            .filter_map(move |(s, row)| row[j].map(|v| (s, v)))
    }

    /// Per-sample mean over all observed scores.
    pub fn raw_mos(&self) -> Vec<f64> {
        (0..self.n_samples())
            .map(|j| {
                let (sum, n) = self.column(j).fold((0.0, 0usize), |(a, n), (_, v)| (a + v, n + 1));
                sum / n as f64
            })
            .collect()
    }

    /// Per-sample mean over the subjects in `keep`; falls back to every
    /// rating for samples none of them scored.
    pub fn mos_over(&self, keep: &[bool]) -> Vec<f64> {
        let raw = self.raw_mos();
        (0..self.n_samples())
            .map(|j| {
                let (sum, n) = self
                    .column(j)
                    .filter(|&(s, _)| keep[s])
                    .fold((0.0, 0usize), |(a, n), (_, v)| (a + v, n + 1));
                if n == 0 {
                    raw[j]
                } else {
                    sum / n as f64
                }
            })
            .collect()
    }

    /// The matrix restricted to the subjects in `keep`.
    pub fn select_subjects(&self, keep: &[bool]) -> SubjectMatrix {
        let mut scores = Vec::new();
        let mut ids = Vec::new();
        for (s, row) in self.scores.iter().enumerate() {
            if keep[s] {
                scores.push(row.clone());
                ids.push(self.subject_ids[s].clone());
            }
        }
        SubjectMatrix {
            scores,
            subject_ids: ids,
            sample_ids: self.sample_ids.clone(),
        }
    }

    fn require_subjects(&self, n: usize) -> Result<()> {
        if self.n_subjects() < n {
            return Err(Error::DegenerateInput(format!(
                "screening needs at least {n} subjects, got {}",
                self.n_subjects()
            )));
        }
        Ok(())
    }

    /// CSV: header `subject,<sample ids...>`, one row per subject, blank = missing.
    pub fn read_csv(reader: impl Read, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        let sample_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut scores = Vec::new();
        let mut subject_ids = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let row = record
                .iter()
                .skip(1)
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>().map(Some).map_err(|e| Error::Parse {
                            path: origin.to_string(),
                            line,
                            reason: format!("bad score `{cell}`: {e}"),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            subject_ids.push(record.get(0).unwrap_or("").to_string());
            scores.push(row);
        }
        Self::new(scores, subject_ids, sample_ids)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, &path.display().to_string())
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["subject".to_string()];
        header.extend(self.sample_ids.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.subject_ids.iter().zip(&self.scores) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.map_or(String::new(), |v| v.to_string())));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionOutcome {
    pub mos: Vec<f64>,
    pub rejected: Vec<usize>,
    /// Set when a round would have rejected every remaining subject (or left
    /// fewer than two); that round is then discarded.
    pub all_rejected: bool,
    pub cleaned: SubjectMatrix,
}

/// Outlier counts `(P, Q, N)` per subject for one screening round.
fn outlier_counts(m: &SubjectMatrix, active: &[bool]) -> Vec<(usize, usize, usize)> {
    let mut counts = vec![(0, 0, 0); m.n_subjects()];
    for j in 0..m.n_samples() {
        let col: Vec<(usize, f64)> = m.column(j).filter(|&(s, _)| active[s]).collect();
        for &(s, _) in &col {
            counts[s].2 += 1;
        }
        if col.len() < 2 {
            continue;
        }
        let n = col.len() as f64;
        let mean = col.iter().map(|&(_, v)| v).sum::<f64>() / n;
        let m2 = col.iter().map(|&(_, v)| (v - mean).powi(2)).sum::<f64>() / n;
        let m4 = col.iter().map(|&(_, v)| (v - mean).powi(4)).sum::<f64>() / n;
        if m2 == 0.0 {
            continue;
        }
        let std = (m2 * n / (n - 1.0)).sqrt();
        let kurtosis = m4 / (m2 * m2);
        let width = if (2.0..=4.0).contains(&kurtosis) {
            2.0 * std
        } else {
            20f64.sqrt() * std
        };
        for &(s, v) in &col {
            if v > mean + width {
                counts[s].0 += 1;
            } else if v < mean - width {
                counts[s].1 += 1;
            }
        }
    }
    counts
}

/// Outlier ratio above which a subject is rejected.
pub const REJECTION_RATIO: f64 = 0.05;

/// Subject rejection, repeated until a round rejects nobody.
pub fn screen_subject_rejection(m: &SubjectMatrix) -> Result<RejectionOutcome> {
    m.validate()?;
    m.require_subjects(2)?;
    let mut active = vec![true; m.n_subjects()];
    let mut all_rejected = false;
    loop {
        let counts = outlier_counts(m, &active);
        let flagged: Vec<usize> = (0..m.n_subjects())
            .filter(|&s| {
                let (p, q, n) = counts[s];
                active[s] && n > 0 && (p + q) as f64 / n as f64 > REJECTION_RATIO
            })
            .collect();
        if flagged.is_empty() {
            break;
        }
        let remaining = active.iter().filter(|&&a| a).count() - flagged.len();
        if remaining < 2 {
            all_rejected = true;
            break;
        }
        for s in flagged {
            active[s] = false;
        }
    }
    let rejected = (0..m.n_subjects()).filter(|&s| !active[s]).collect();
    Ok(RejectionOutcome {
        mos: m.mos_over(&active),
        rejected,
        all_rejected,
        cleaned: m.select_subjects(&active),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleOutcome {
    /// Per-sample true-score estimates.
    pub psi: Vec<f64>,
    /// Per-subject bias, summing to zero.
    pub bias: Vec<f64>,
    /// Per-subject inconsistency (standard deviation).
    pub inconsistency: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl MleOutcome {
    /// The input matrix with each subject's bias subtracted.
    pub fn debiased(&self, m: &SubjectMatrix) -> SubjectMatrix {
        let scores = m
            .scores
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().map(|v| v.map(|v| v - b)).collect())
            .collect();
        SubjectMatrix {
            scores,
            subject_ids: m.subject_ids.clone(),
            sample_ids: m.sample_ids.clone(),
        }
    }
}

const VARIANCE_FLOOR: f64 = 1e-12;

/// Alternating closed-form maximum-likelihood fit of the subject model.
pub fn screen_mle(m: &SubjectMatrix, max_iters: usize, tol: f64) -> Result<MleOutcome> {
    m.validate()?;
    m.require_subjects(2)?;
    if m.n_samples() < 2 {
        return Err(Error::DegenerateInput("MLE screening needs at least 2 samples".into()));
    }
    let (ns, nj) = (m.n_subjects(), m.n_samples());
    let mut psi = m.raw_mos();
    let mut bias = vec![0.0; ns];
    let mut var = vec![1.0f64; ns];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut change: f64 = 0.0;

        let mut new_bias = vec![0.0; ns];
        for s in 0..ns {
            let (sum, n) = (0..nj)
                .filter_map(|j| m.scores[s][j].map(|v| v - psi[j]))
                .fold((0.0, 0usize), |(a, n), d| (a + d, n + 1));
            new_bias[s] = if n == 0 { 0.0 } else { sum / n as f64 };
        }
        let center = new_bias.iter().sum::<f64>() / ns as f64;
        for s in 0..ns {
            new_bias[s] -= center;
            change = change.max((new_bias[s] - bias[s]).abs());
        }
        bias = new_bias;

        for s in 0..ns {
            let (sum, n) = (0..nj)
                .filter_map(|j| m.scores[s][j].map(|v| (v - psi[j] - bias[s]).powi(2)))
                .fold((0.0, 0usize), |(a, n), d| (a + d, n + 1));
            let v = if n == 0 { 1.0 } else { (sum / n as f64).max(VARIANCE_FLOOR) };
            change = change.max((v.sqrt() - var[s].sqrt()).abs());
            var[s] = v;
        }

        for j in 0..nj {
            let (num, den) = m
                .column(j)
                .fold((0.0, 0.0), |(a, w), (s, v)| (a + (v - bias[s]) / var[s], w + 1.0 / var[s]));
            let p = num / den;
            change = change.max((p - psi[j]).abs());
            psi[j] = p;
        }

        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(MleOutcome {
        psi,
        bias,
        inconsistency: var.iter().map(|v| v.sqrt()).collect(),
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRemovalOutcome {
    pub mos: Vec<f64>,
    pub bias: Vec<f64>,
    pub cleaned: SubjectMatrix,
}

/// Per-subject bias relative to the per-sample raw means.
pub fn subject_biases(m: &SubjectMatrix) -> Vec<f64> {
    let raw = m.raw_mos();
    m.scores
        .iter()
        .map(|row| {
            let (sum, n) = row
                .iter()
                .zip(&raw)
                .filter_map(|(v, r)| v.map(|v| v - r))
                .fold((0.0, 0usize), |(a, n), d| (a + d, n + 1));
            if n == 0 {
                0.0
            } else {
                sum / n as f64
            }
        })
        .collect()
}

/// One pass of subject bias removal.
pub fn screen_bias_removal(m: &SubjectMatrix) -> Result<BiasRemovalOutcome> {
    m.validate()?;
    m.require_subjects(2)?;
    let bias = subject_biases(m);
    let cleaned = SubjectMatrix {
        scores: m
            .scores
            .iter()
            .zip(&bias)
            .map(|(row, b)| row.iter().map(|v| v.map(|v| v - b)).collect())
            .collect(),
        subject_ids: m.subject_ids.clone(),
        sample_ids: m.sample_ids.clone(),
    };
    Ok(BiasRemovalOutcome {
        mos: cleaned.raw_mos(),
        bias,
        cleaned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_subjects_are_kept() {
        let row = vec![3.0, 7.0, 5.0, 1.0];
        let m = SubjectMatrix::from_dense(vec![row.clone(), row.clone()]).unwrap();
        let out = screen_subject_rejection(&m).unwrap();
        assert!(out.rejected.is_empty());
        assert_eq!(out.mos, row);
    }

    #[test]
    fn constant_max_rater_is_rejected() {
        // per sample: mean 5.5, std 1.958, kurtosis 3.90 -> 2 sigma band,
        // upper bound 9.416 < 10, lower bound 1.584 < 3: only the last subject
        // is outside, on all 6 samples (ratio 1 > 0.05).
        let others = [3.0, 4.0, 5.0, 6.0, 7.0, 4.0, 5.0, 6.0, 5.0];
        let mut scores: Vec<Vec<f64>> = others.iter().map(|&v| vec![v; 6]).collect();
        scores.push(vec![10.0; 6]);
        let m = SubjectMatrix::from_dense(scores).unwrap();
        let counts = outlier_counts(&m, &[true; 10]);
        assert_eq!(counts[9], (6, 0, 6));
        assert!(counts[..9].iter().all(|&(p, q, _)| p + q == 0));
        let out = screen_subject_rejection(&m).unwrap();
        assert_eq!(out.rejected, vec![9]);
        assert!(!out.all_rejected);
        assert_eq!(out.mos, vec![5.0; 6]);
    }

    #[test]
    fn screened_mos_is_survivor_mean() {
        let m = SubjectMatrix::from_scores(vec![
            vec![Some(1.0), Some(2.0), None],
            vec![Some(3.0), None, Some(4.0)],
            vec![None, Some(6.0), Some(8.0)],
        ])
        .unwrap();
        let out = screen_subject_rejection(&m).unwrap();
        let keep: Vec<bool> = (0..3).map(|s| !out.rejected.contains(&s)).collect();
        assert_eq!(out.mos, m.mos_over(&keep));
    }

    #[test]
    fn screening_requires_two_subjects() {
        let m = SubjectMatrix::from_dense(vec![vec![1.0, 2.0]]).unwrap();
        assert!(screen_subject_rejection(&m).is_err());
        assert!(screen_mle(&m, 10, 1e-9).is_err());
        assert!(screen_bias_removal(&m).is_err());
    }

    #[test]
    fn empty_column_rejected() {
        assert!(SubjectMatrix::from_scores(vec![vec![Some(1.0), None], vec![Some(2.0), None]])
            .is_err());
    }

    #[test]
    fn mle_recovers_noise_free_bias() {
        let truth = [2.0, 5.5, 7.0, 3.25, 9.0];
        let bias = [0.5, -0.5, 0.0, 0.0];
        let scores = bias
            .iter()
            .map(|b| truth.iter().map(|t| t + b).collect())
            .collect();
        let m = SubjectMatrix::from_dense(scores).unwrap();
        let out = screen_mle(&m, 500, 1e-12).unwrap();
        assert!(out.converged);
        for (got, want) in out.bias.iter().zip(bias) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
        for (got, want) in out.psi.iter().zip(truth) {
            assert!((got - want).abs() < 1e-6);
        }
    }

    #[test]
    fn mle_symmetric_solution() {
        let row = vec![2.0, 4.0, 9.0];
        let m = SubjectMatrix::from_dense(vec![row.clone(); 3]).unwrap();
        let out = screen_mle(&m, 100, 1e-12).unwrap();
        assert!(out.bias.iter().all(|b| b.abs() < 1e-12));
        assert!(out.inconsistency.windows(2).all(|w| w[0] == w[1]));
        for (p, r) in out.psi.iter().zip(&row) {
            assert!((p - r).abs() < 1e-12);
        }
    }

    #[test]
    fn bias_removal_fixed_point() {
        let row = vec![2.0, 4.0, 9.0];
        let m = SubjectMatrix::from_dense(vec![row.clone(), row.clone()]).unwrap();
        let out = screen_bias_removal(&m).unwrap();
        assert_eq!(out.mos, m.raw_mos());
    }

    #[test]
    fn csv_round_trip_with_missing() {
        let m = SubjectMatrix::from_scores(vec![
            vec![Some(1.0), None, Some(3.5)],
            vec![None, Some(2.0), Some(4.0)],
        ])
        .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("subject,s0,s1,s2\nsubj0,1,,3.5\n"), "{text}");
        assert_eq!(SubjectMatrix::read_csv(text.as_bytes(), "<mem>").unwrap(), m);
    }
}
