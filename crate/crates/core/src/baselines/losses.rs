//! Noise-robust classification losses on a binned score head.

use crate::{Error, Result};

/// Loss value and its gradient with respect to the probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

const SIMPLEX_TOL: f64 = 1e-6;
/// Floor for `p_target` inside `log`, keeping CE finite.
const PROB_FLOOR: f64 = 1e-12;

fn check_simplex(probs: &[f64], target: usize) -> Result<()> {
    if target >= probs.len() {
        return Err(Error::param(
            "target_bin",
            format!("{target} out of {} bins", probs.len()),
        ));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0)
        || (probs.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL
    {
        return Err(Error::param("probs", "not a probability simplex"));
    }
    Ok(())
}

/// Nearest of `bins` centers `(k + 0.5) / bins` for a label in `[0, 1]`.
pub fn target_bin(label: f64, bins: usize) -> usize {
    let k = (label * bins as f64).floor();
    if k.is_nan() || k < 0.0 {
        0
    } else {
        (k as usize).min(bins - 1)
    }
}

/// Generalized cross entropy `(1 - p_t^q) / q`.
pub fn gce_loss(probs: &[f64], target: usize, q: f64) -> Result<LossGrad> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::param("q", format!("{q} not in (0, 1]")));
    }
    check_simplex(probs, target)?;
    let pt = probs[target];
    let mut grad = vec![0.0; probs.len()];
    grad[target] = -pt.max(PROB_FLOOR).powf(q - 1.0);
    Ok(LossGrad {
        loss: (1.0 - pt.powf(q)) / q,
        grad,
    })
}

/// Symmetric cross entropy `w_ce * CE + w_rce * RCE`, with `log 0 := clip`.
///
/// With a one-hot target, `RCE = -clip * sum_{k != t} p_k`.
pub fn sce_loss(probs: &[f64], target: usize, w_ce: f64, w_rce: f64, clip: f64) -> Result<LossGrad> {
    if !(w_ce >= 0.0 && w_rce >= 0.0) {
        return Err(Error::param("weights", "SCE weights must be >= 0"));
    }
    if !(clip < 0.0) {
        return Err(Error::param("clip", format!("{clip} must be < 0")));
    }
    check_simplex(probs, target)?;
    let pt = probs[target].max(PROB_FLOOR);
    let ce = -pt.ln();
    let rce = -clip * probs
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != target)
        .map(|(_, p)| p)
        .sum::<f64>();
    let grad = (0..probs.len())
        .map(|k| {
            if k == target {
                -w_ce / pt
            } else {
                -w_rce * clip
            }
        })
        .collect();
    Ok(LossGrad {
        loss: w_ce * ce + w_rce * rce,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: [f64; 4] = [0.1, 0.6, 0.2, 0.1];

    #[test]
    fn gce_endpoints() {
        let l = gce_loss(&P, 1, 1.0).unwrap();
        assert!((l.loss - 0.4).abs() < 1e-15);
        let one_hot = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(gce_loss(&one_hot, 1, 0.7).unwrap().loss, 0.0);
        assert!(gce_loss(&P, 1, 0.0).is_err());
        assert!(gce_loss(&P, 1, 1.5).is_err());
    }

    #[test]
    fn sce_endpoints() {
        let one_hot = [0.0, 0.0, 1.0];
        assert_eq!(sce_loss(&one_hot, 2, 0.1, 1.0, -4.0).unwrap().loss, 0.0);
        let ce = sce_loss(&P, 1, 1.0, 0.0, -4.0).unwrap();
        assert!((ce.loss + 0.6f64.ln()).abs() < 1e-15);
        assert!(sce_loss(&[0.5, 0.6], 0, 1.0, 1.0, -4.0).is_err());
        assert!(sce_loss(&P, 0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn bins_cover_unit_interval() {
        assert_eq!(target_bin(0.0, 10), 0);
        assert_eq!(target_bin(0.04, 10), 0);
        assert_eq!(target_bin(0.55, 10), 5);
        assert_eq!(target_bin(1.0, 10), 9);
        assert_eq!(target_bin(-0.3, 10), 0);
        assert_eq!(target_bin(1.7, 10), 9);
    }
}
