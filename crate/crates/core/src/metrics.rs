//! Agreement statistics between predictions and reference scores.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Paired predicted/reference scores of equal nonzero length.
#[derive(Debug, Clone, Copy)]
pub struct ScorePairs<'a> {
    predicted: &'a [f64],
    reference: &'a [f64],
}

impl<'a> ScorePairs<'a> {
    pub fn new(predicted: &'a [f64], reference: &'a [f64]) -> Result<Self> {
        if predicted.len() != reference.len() {
            return Err(Error::DimensionMismatch {
                expected: reference.len(),
                got: predicted.len(),
            });
        }
        if predicted.is_empty() {
            return Err(Error::DegenerateInput("empty score vectors".into()));
        }
        if predicted.iter().chain(reference).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "score pairs".into(),
            });
        }
        Ok(ScorePairs {
            predicted,
            reference,
        })
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    pub fn predicted(&self) -> &'a [f64] {
        self.predicted
    }

    pub fn reference(&self) -> &'a [f64] {
        self.reference
    }

    fn require_pairs(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::DegenerateInput(
                "correlation needs at least 2 pairs".into(),
            ));
        }
        Ok(())
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateInput("zero variance".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson linear correlation, no logistic remapping.
pub fn plcc(p: ScorePairs<'_>) -> Result<f64> {
    p.require_pairs()?;
    pearson(p.predicted, p.reference)
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling.
pub fn srcc(p: ScorePairs<'_>) -> Result<f64> {
    p.require_pairs()?;
    pearson(&average_ranks(p.predicted), &average_ranks(p.reference))
        .map_err(|_| Error::DegenerateInput("all values tied on one side".into()))
}

fn tie_pairs(sorted: impl Iterator<Item = (f64, f64)>, key: impl Fn((f64, f64), (f64, f64)) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<(f64, f64)> = None;
    for item in sorted {
        match prev {
            Some(q) if key(q, item) => run += 1,
            _ => {
                total += run * (run + 1) / 2;
                run = 0;
            }
        }
        prev = Some(item);
    }
    total + run * (run + 1) / 2
}

/// Sorts by the second coordinate with a stable merge sort and returns the
/// number of inversions.
fn merge_count(v: &mut [(f64, f64)], buf: &mut Vec<(f64, f64)>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].1 < v[i].1 {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall tau-b in O(n log n).
pub fn krcc(p: ScorePairs<'_>) -> Result<f64> {
    p.require_pairs()?;
    let n = p.len() as u64;
    let mut pairs: Vec<(f64, f64)> = p
        .predicted
        .iter()
        .copied()
        .zip(p.reference.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n0 = n * (n - 1) / 2;
    let ties_x = tie_pairs(pairs.iter().copied(), |a, b| a.0 == b.0);
    let ties_xy = tie_pairs(pairs.iter().copied(), |a, b| a == b);
    let mut buf = Vec::with_capacity(pairs.len());
    let swaps = merge_count(&mut pairs, &mut buf);
    let ties_y = tie_pairs(pairs.iter().copied(), |a, b| a.1 == b.1);
    if ties_x == n0 || ties_y == n0 {
        return Err(Error::DegenerateInput("all values tied on one side".into()));
    }
    let numerator = n0 as f64 - ties_x as f64 - ties_y as f64 + ties_xy as f64 - 2.0 * swaps as f64;
    let denom = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    Ok((numerator / denom).clamp(-1.0, 1.0))
}

pub fn mse(p: ScorePairs<'_>) -> f64 {
    p.predicted
        .iter()
        .zip(p.reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / p.len() as f64
}

/// Relative improvement in percent of `with_gdbc` over `without_gdbc`.
pub fn delta_percent(with_gdbc: f64, without_gdbc: f64) -> Result<f64> {
    if without_gdbc == 0.0 {
        return Err(Error::DegenerateInput("zero baseline metric".into()));
    }
    Ok((with_gdbc - without_gdbc) / without_gdbc * 100.0)
}

/// The three correlations plus MSE, as reported in every table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub srcc: f64,
    pub plcc: f64,
    pub krcc: f64,
    pub mse: f64,
}

impl MetricSet {
    /// Correlations that are undefined (constant predictions) are reported as 0.
    pub fn evaluate(predicted: &[f64], reference: &[f64]) -> Result<MetricSet> {
        let p = ScorePairs::new(predicted, reference)?;
        Ok(MetricSet {
            srcc: srcc(p).unwrap_or(0.0),
            plcc: plcc(p).unwrap_or(0.0),
            krcc: krcc(p).unwrap_or(0.0),
            mse: mse(p),
        })
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
