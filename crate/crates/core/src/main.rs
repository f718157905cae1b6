use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lcmos::experiment::{
    self, parse_override, render_baselines, render_summary, write_baseline_outputs, write_dataset,
    write_experiment_outputs, BaselineReport, Dataset, ExperimentConfig, ExperimentReport,
};
use lcmos::riskcheck;
use lcmos::{Error, Result};

#[derive(Parser)]
#[command(name = "lcmos", version, about = "Learning from low-cost MOS labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (key = value lines)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Config override, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write ratings, features and one trial's labels as CSV
    Simulate(Common),
    /// Paired GDBC on/off trials for a single cell
    Train(Common),
    /// Every cell of the configured grid
    Grid(Common),
    /// Screening, robust-loss and GDBC training on shared splits
    CompareBaselines(Common),
    /// Monte-Carlo check of the noisy-risk expansion
    VerifyRisk {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        probes: usize,
        #[arg(long, default_value_t = 1_000_000)]
        n_mc: usize,
    },
    /// Re-render tables from stored report.json / baselines.json
    Report(Common),
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut pairs = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            experiment::parse_pairs(&text, &path.display().to_string())?
        }
        None => Vec::new(),
    };
    if let Some(s) = c.seed {
        pairs.push(("seed".into(), s.to_string()));
    }
    if let Some(t) = c.trials {
        pairs.push(("trials".into(), t.to_string()));
    }
    if let Some(o) = &c.out {
        pairs.push(("out".into(), o.display().to_string()));
    }
    for s in &c.set {
        pairs.push(parse_override(s)?);
    }
    ExperimentConfig::from_pairs(&pairs)
}

fn write_timing(dir: &Path, seconds: f64) -> Result<()> {
    let path = dir.join("timing.txt");
    std::fs::write(&path, format!("wall_time_seconds = {seconds:.3}\n")).map_err(|e| Error::io(&path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = load_config(&c)?;
            let data = Dataset::load(&cfg.dataset, cfg.source)?;
            let cell = cfg.cells()[0];
            let trial = experiment::simulate_trial(&data, &cfg, &cell, experiment::trial_seed(cfg.seed, 0))?;
            write_dataset(&data, &trial, &cfg.out)?;
            println!(
                "wrote {} samples ({} noisy) to {}",
                data.len(),
                trial.noisy_count,
                cfg.out.display()
            );
        }
        Command::Train(c) => {
            let cfg = load_config(&c)?;
            let (report, secs) = experiment::timed(|| experiment::run_experiment(&cfg));
            let report = report?;
            write_experiment_outputs(&report, &cfg.out)?;
            write_timing(&cfg.out, secs)?;
            print!("{}", render_summary(&report));
        }
        Command::Grid(c) => {
            let cfg = load_config(&c)?;
            let (report, secs) = experiment::timed(|| experiment::run_grid(&cfg));
            let report = report?;
            write_experiment_outputs(&report, &cfg.out)?;
            write_timing(&cfg.out, secs)?;
            print!("{}", render_summary(&report));
        }
        Command::CompareBaselines(c) => {
            let cfg = load_config(&c)?;
            let (report, secs) = experiment::timed(|| experiment::run_baseline_comparison(&cfg));
            let report = report?;
            write_baseline_outputs(&report, &cfg.out)?;
            write_timing(&cfg.out, secs)?;
            print!("{}", render_baselines(&report));
        }
        Command::VerifyRisk { common, probes, n_mc } => {
            let seed = common.seed.unwrap_or(2024);
            let out = common.out.unwrap_or_else(|| PathBuf::from("runs"));
            let mut reports = Vec::with_capacity(probes);
            for p in 0..probes {
                let probe = riskcheck::random_probe(lcmos::seed::derive(seed, p as u64), 16, 4)?;
                reports.push(riskcheck::verify_risk_expansion(&probe, n_mc, seed)?);
            }
            let witness_pop = [riskcheck::PopulationEntry { x: vec![0.0], y_star: 0.5, mu_z: 0.3, sigma_z: 0.1 }];
            let demo = riskcheck::risk_difference_sign_demo(&witness_pop, 1.0)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let csv_path = out.join("risk.csv");
            let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
            riskcheck::write_csv(&reports, file)?;
            let text = riskcheck::render_text(&reports, &demo);
            let txt_path = out.join("risk.txt");
            std::fs::write(&txt_path, &text).map_err(|e| Error::io(&txt_path, e))?;
            print!("{text}");
        }
        Command::Report(c) => {
            let dir = c.out.unwrap_or_else(|| PathBuf::from("runs"));
            let mut found = false;
            let path = dir.join("report.json");
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let report: ExperimentReport = serde_json::from_str(&text)?;
                write_experiment_outputs(&report, &dir)?;
                print!("{}", render_summary(&report));
                found = true;
            }
            let path = dir.join("baselines.json");
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let report: BaselineReport = serde_json::from_str(&text)?;
                write_baseline_outputs(&report, &dir)?;
                print!("{}", render_baselines(&report));
                found = true;
            }
            if !found {
                return Err(Error::DegenerateInput(format!(
                    "no report.json or baselines.json in {}",
                    dir.display()
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
