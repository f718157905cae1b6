//! Subject screening on a small rating matrix with one harsh and one
//! lenient rater.
//!
//! cargo run --example screening

use lcmos::baselines::{screen_bias_removal, screen_mle, screen_subject_rejection, SubjectMatrix};

fn main() -> lcmos::Result<()> {
    let truth = [2.0, 3.5, 5.0, 6.5, 8.0, 4.0];
    let offsets = [0.0, 0.3, -0.2, 0.1, -2.0, 2.5];
    let scores: Vec<Vec<f64>> = offsets
        .iter()
        .enumerate()
        .map(|(s, b)| {
            truth
                .iter()
                .enumerate()
                .map(|(j, t)| (t + b + 0.3 * (((s * 7 + j * 3) % 5) as f64 - 2.0)).clamp(1.0, 10.0))
                .collect()
        })
        .collect();
    let m = SubjectMatrix::from_dense(scores)?;
    println!("raw MOS   {:?}", round(&m.raw_mos()));

    let sr = screen_subject_rejection(&m)?;
    println!("SR        {:?} rejected {:?}", round(&sr.mos), sr.rejected);
    let mle = screen_mle(&m, 200, 1e-8)?;
    println!("MLE psi   {:?} bias {:?}", round(&mle.psi), round(&mle.bias));
    let sbr = screen_bias_removal(&m)?;
    println!("SBR       {:?} bias {:?}", round(&sbr.mos), round(&sbr.bias));
    Ok(())
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}
