//! CSV, JSON and aligned-text outputs.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{BaselineReport, Dataset, ExperimentReport, MethodRow, TrialData};
use crate::label_sim::{write_ratings_csv, RatingTable};
use crate::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

/// One row per cell, mirroring the with/without layout of the result tables.
pub fn render_summary(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5} {:>3} {:>5} {:>7} | {:>7} {:>7} {:>8} | {:>7} {:>7} | {:>7} {:>7} | {:>8} {:>8} | {:>4}",
        "eta", "M", "alpha", "eps", "SRCC-", "SRCC+", "d%", "PLCC-", "PLCC+", "KRCC-", "KRCC+", "MSE_cal", "MSE_lc", "fail"
    );
    for c in &report.cells {
        let _ = writeln!(
            s,
            "{:>5} {:>3} {:>5} {:>7} | {:>7.4} {:>7.4} {:>+8.3} | {:>7.4} {:>7.4} | {:>7.4} {:>7.4} | {:>8.5} {:>8.5} | {:>4}",
            c.cell.eta,
            c.cell.m,
            c.cell.alpha,
            c.cell.epsilon,
            c.median_off.srcc,
            c.median_on.srcc,
            c.delta_percent.srcc,
            c.median_off.plcc,
            c.median_on.plcc,
            c.median_off.krcc,
            c.median_on.krcc,
            c.median_calibrated_mse,
            c.median_raw_lc_mse,
            c.failures.len()
        );
    }
    let _ = writeln!(
        s,
        "lr candidates [{}], chosen {}",
        report.lr.candidates.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
        report.lr.chosen
    );
    s
}

pub fn write_summary_csv(report: &ExperimentReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "eta", "m", "alpha", "epsilon", "trials", "failures", "srcc_off", "srcc_on", "delta_srcc",
        "plcc_off", "plcc_on", "delta_plcc", "krcc_off", "krcc_on", "delta_krcc", "mse_off", "mse_on",
        "calibrated_label_mse", "raw_label_mse", "lr",
    ])?;
    for c in &report.cells {
        w.write_record([
            c.cell.eta.to_string(),
            c.cell.m.to_string(),
            c.cell.alpha.to_string(),
            c.cell.epsilon.to_string(),
            c.trials.len().to_string(),
            c.failures.len().to_string(),
            f4(c.median_off.srcc),
            f4(c.median_on.srcc),
            f4(c.delta_percent.srcc),
            f4(c.median_off.plcc),
            f4(c.median_on.plcc),
            f4(c.delta_percent.plcc),
            f4(c.median_off.krcc),
            f4(c.median_on.krcc),
            f4(c.delta_percent.krcc),
            format!("{:.6}", c.median_off.mse),
            format!("{:.6}", c.median_on.mse),
            format!("{:.6}", c.median_calibrated_mse),
            format!("{:.6}", c.median_raw_lc_mse),
            report.lr.chosen.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Per-trial metrics of both paired runs.
pub fn write_trials_csv(report: &ExperimentReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cell", "trial", "seed", "gdbc", "srcc", "plcc", "krcc", "mse", "noisy_count", "calibrated_label_mse",
        "raw_label_mse",
    ])?;
    for (ci, c) in report.cells.iter().enumerate() {
        for t in &c.trials {
            for (flag, run) in [("off", &t.off), ("on", &t.on)] {
                w.write_record([
                    ci.to_string(),
                    t.trial.to_string(),
                    t.seed.to_string(),
                    flag.to_string(),
                    run.test.srcc.to_string(),
                    run.test.plcc.to_string(),
                    run.test.krcc.to_string(),
                    run.test.mse.to_string(),
                    t.noisy_count.to_string(),
                    t.calibrated_mse.to_string(),
                    t.raw_lc_mse.to_string(),
                ])?;
            }
        }
        for f in &c.failures {
            w.write_record([
                ci.to_string(),
                f.trial.to_string(),
                String::new(),
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                f.reason.clone(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Per-epoch training loss and training-set MSE against LC and LA labels.
pub fn write_curves_csv(report: &ExperimentReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "trial", "gdbc", "epoch", "train_loss", "mse_lc", "mse_la", "gates_opened"])?;
    for (ci, c) in report.cells.iter().enumerate() {
        for t in &c.trials {
            for (flag, run) in [("off", &t.off), ("on", &t.on)] {
                for p in &run.curve {
                    w.write_record([
                        ci.to_string(),
                        t.trial.to_string(),
                        flag.to_string(),
                        p.epoch.to_string(),
                        p.train_loss.to_string(),
                        p.mse_lc.to_string(),
                        p.mse_la.to_string(),
                        p.gates_opened.to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// `report.json`, `summary.csv`, `summary.txt`, `trials.csv`, `curves.csv`.
pub fn write_experiment_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("report.json"), report)?;
    write_summary_csv(report, create(&dir.join("summary.csv"))?)?;
    write_text(&dir.join("summary.txt"), &render_summary(report))?;
    write_trials_csv(report, create(&dir.join("trials.csv"))?)?;
    write_curves_csv(report, create(&dir.join("curves.csv"))?)?;
    Ok(())
}

fn baseline_rows(report: &BaselineReport) -> impl Iterator<Item = &MethodRow> {
    report.rows.iter().chain(std::iter::once(&report.reference))
}

/// Method x (SRCC, PLCC, KRCC) table.
pub fn render_baselines(report: &BaselineReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "eta={} M={}  lr={}",
        report.cell.eta, report.cell.m, report.lr.chosen
    );
    let _ = writeln!(s, "{:<8} {:>7} {:>7} {:>7} {:>9} {:>4}", "method", "SRCC", "PLCC", "KRCC", "MSE", "fail");
    for r in baseline_rows(report) {
        let _ = writeln!(
            s,
            "{:<8} {:>7.4} {:>7.4} {:>7.4} {:>9.6} {:>4}",
            r.method,
            r.median.srcc,
            r.median.plcc,
            r.median.krcc,
            r.median.mse,
            r.failures.len()
        );
    }
    s
}

/// `baselines.json`, `baselines.csv`, `baselines.txt`.
pub fn write_baseline_outputs(report: &BaselineReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("baselines.json"), report)?;
    let mut w = csv::Writer::from_writer(create(&dir.join("baselines.csv"))?);
    w.write_record(["method", "trials", "failures", "srcc", "plcc", "krcc", "mse"])?;
    for r in baseline_rows(report) {
        w.write_record([
            r.method.clone(),
            r.per_trial.len().to_string(),
            r.failures.len().to_string(),
            f4(r.median.srcc),
            f4(r.median.plcc),
            f4(r.median.krcc),
            format!("{:.6}", r.median.mse),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    write_text(&dir.join("baselines.txt"), &render_baselines(report))
}

/// `ratings.csv`, `features.csv` and `labels.csv` for one simulated trial.
pub fn write_dataset(data: &Dataset, trial: &TrialData, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let table = RatingTable { range: Some(data.range), pools: data.pools.clone() };
    write_ratings_csv(dir.join("ratings.csv"), &table)?;

    let mut w = csv::Writer::from_writer(create(&dir.join("features.csv"))?);
    let mut header = vec!["sample_id".to_string()];
    header.extend((0..data.input_dim()).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (pool, x) in data.pools.iter().zip(&data.features) {
        let mut rec = vec![pool.sample_id.clone()];
        rec.extend(x.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;

    let mut is_train = vec![false; data.len()];
    for &i in &trial.train {
        is_train[i] = true;
    }
    let mut w = csv::Writer::from_writer(create(&dir.join("labels.csv"))?);
    w.write_record(["sample_id", "split", "y_star", "y_lc", "y_eta", "z", "is_noisy"])?;
    for (i, (pool, l)) in data.pools.iter().zip(&trial.labels).enumerate() {
        w.write_record([
            pool.sample_id.clone(),
            if is_train[i] { "train" } else { "test" }.to_string(),
            l.y_star.to_string(),
            l.y_lc.to_string(),
            l.y_eta.to_string(),
            l.z.to_string(),
            l.is_noisy.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}
