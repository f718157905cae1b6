//! Correlation metrics on a tied, quantized prediction vector, plus the
//! relative-improvement arithmetic used in reports.
//!
//! cargo run --example metrics

use lcmos::metrics::{delta_percent, krcc, mse, plcc, srcc, ScorePairs};

fn main() -> lcmos::Result<()> {
    let truth = [0.12, 0.35, 0.35, 0.50, 0.61, 0.77, 0.90];
    let pred = [0.2, 0.3, 0.4, 0.4, 0.6, 0.9, 0.8];
    let p = ScorePairs::new(&pred, &truth)?;
    println!("SRCC {:.4}", srcc(p)?);
    println!("PLCC {:.4}", plcc(p)?);
    println!("KRCC {:.4}", krcc(p)?);
    println!("MSE  {:.5}", mse(p));
    println!("delta 0.7905 -> 0.8294: {:+.4}%", delta_percent(0.8294, 0.7905)?);
    Ok(())
}
