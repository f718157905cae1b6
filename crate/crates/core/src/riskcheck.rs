//! Monte-Carlo checks of the squared-error risk under biased labels.
//!
//! A label is `y* + z` with probability `eta` and `y*` otherwise, with
//! `z ~ Normal(mu_z, sigma_z^2)` per population entry. The expected noisy risk
//! expands to `R + eta * E[mu_z^2 + sigma_z^2 - 2 mu_z (f - y*)]`; the
//! alternative reading `R - eta * E[2 mu_z (f - y*) + mu_z^2 + sigma_z^2]` is
//! evaluated alongside it and the report records which one the simulation
//! supports.

use std::fmt::Write as _;
use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::predictor::{Architecture, Predictor};
use crate::seed::{self, stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationEntry {
    pub x: Vec<f64>,
    pub y_star: f64,
    pub mu_z: f64,
    pub sigma_z: f64,
}

#[derive(Debug, Clone)]
pub struct RiskProbe {
    pub population: Vec<PopulationEntry>,
    pub theta_a: Predictor,
    pub theta_b: Predictor,
    pub eta: f64,
}

impl RiskProbe {
    pub fn validate(&self) -> Result<()> {
        if self.population.is_empty() {
            return Err(Error::DegenerateInput("risk probe population is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::param("eta", format!("{} outside [0, 1]", self.eta)));
        }
        for e in &self.population {
            if !(e.sigma_z >= 0.0) || !e.mu_z.is_finite() || !e.y_star.is_finite() {
                return Err(Error::param("population", "bad entry (needs finite y*, mu_z, sigma_z >= 0)"));
            }
            for theta in [&self.theta_a, &self.theta_b] {
                if e.x.len() != theta.input_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: theta.input_dim(),
                        got: e.x.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelMode {
    Clean,
    /// One label draw per entry.
    Noisy { eta: f64, seed: u64 },
}

fn predictions(theta: &Predictor, population: &[PopulationEntry]) -> Result<Vec<f64>> {
    population.iter().map(|e| theta.predict(&e.x)).collect()
}

/// Mean squared error of `theta` over the population under the given labels.
pub fn empirical_risk(theta: &Predictor, population: &[PopulationEntry], mode: LabelMode) -> Result<f64> {
    if population.is_empty() {
        return Err(Error::DegenerateInput("population is empty".into()));
    }
    let preds = predictions(theta, population)?;
    let mut rng = match mode {
        LabelMode::Clean => None,
        LabelMode::Noisy { seed, .. } => Some(seed::rng_for(seed, stream::RISK)),
    };
    let mut total = 0.0;
    for (f, e) in preds.iter().zip(population) {
        let label = match (&mut rng, mode) {
            (Some(rng), LabelMode::Noisy { eta, .. }) => {
                if rng.random_bool(eta) {
                    e.y_star + gaussian(e.mu_z, e.sigma_z)?.sample(rng)
                } else {
                    e.y_star
                }
            }
            _ => e.y_star,
        };
        total += (f - label).powi(2);
    }
    Ok(total / population.len() as f64)
}

fn gaussian(mu: f64, sigma: f64) -> Result<Normal<f64>> {
    Normal::new(mu, sigma).map_err(|e| Error::param("sigma_z", e.to_string()))
}

/// Clean risk `R(theta)`.
pub fn clean_risk(theta: &Predictor, population: &[PopulationEntry]) -> Result<f64> {
    empirical_risk(theta, population, LabelMode::Clean)
}

/// `E[mu_z^2 + sigma_z^2 - 2 mu_z (f - y*)]` and `E[2 mu_z (f - y*) + mu_z^2 + sigma_z^2]`.
fn bias_terms(preds: &[f64], population: &[PopulationEntry]) -> (f64, f64) {
    let n = population.len() as f64;
    let (mut derived, mut printed) = (0.0, 0.0);
    for (f, e) in preds.iter().zip(population) {
        let sq = e.mu_z * e.mu_z + e.sigma_z * e.sigma_z;
        let cross = 2.0 * e.mu_z * (f - e.y_star);
        derived += sq - cross;
        printed += cross + sq;
    }
    (derived / n, printed / n)
}

/// Closed-form expected noisy risk.
pub fn expected_noisy_risk(theta: &Predictor, population: &[PopulationEntry], eta: f64) -> Result<f64> {
    let preds = predictions(theta, population)?;
    let r = clean_risk(theta, population)?;
    Ok(r + eta * bias_terms(&preds, population).0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub n_mc: usize,
    pub eta: f64,
    pub clean_risk: f64,
    pub mc_noisy_risk: f64,
    pub standard_error: f64,
    /// `R + eta * E[mu^2 + sigma^2 - 2 mu (f - y*)]`
    pub derived_form: f64,
    /// `R - eta * E[2 mu (f - y*) + mu^2 + sigma^2]`
    pub printed_form: f64,
    pub derived_gap: f64,
    pub printed_gap: f64,
    pub derived_closes: bool,
    pub printed_closes: bool,
}

impl ExpansionReport {
    /// Gap of the derived form in standard errors (0 when the estimate is exact).
    pub fn derived_z(&self) -> f64 {
        if self.standard_error == 0.0 {
            if self.derived_gap == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.derived_gap.abs() / self.standard_error
        }
    }
}

const CLOSE_SE: f64 = 3.0;
const EXACT_TOL: f64 = 1e-12;

/// Per-entry Monte-Carlo noisy loss: `(mean, variance of the mean)`.
fn mc_entry(f: f64, e: &PopulationEntry, eta: f64, draws: usize, seed: u64) -> Result<(f64, f64)> {
    let normal = gaussian(e.mu_z, e.sigma_z)?;
    let mut rng = seed::rng(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..draws {
        let label = if eta > 0.0 && rng.random_bool(eta) {
            e.y_star + normal.sample(&mut rng)
        } else {
            e.y_star
        };
        let loss = (f - label).powi(2);
        sum += loss;
        sum_sq += loss * loss;
    }
    let k = draws as f64;
    let mean = sum / k;
    let var = if draws > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok((mean, var / k))
}

/// Monte-Carlo estimate of the noisy risk of `theta` with its standard error.
/// `n_mc` draws are split evenly over the entries; each entry is a shard with
/// its own derived seed.
pub fn mc_noisy_risk(
    theta: &Predictor,
    population: &[PopulationEntry],
    eta: f64,
    n_mc: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if population.is_empty() {
        return Err(Error::DegenerateInput("population is empty".into()));
    }
    let preds = predictions(theta, population)?;
    let draws = n_mc.div_ceil(population.len()).max(1);
    let base = seed::derive(seed, stream::RISK);
    let shards = preds
        .par_iter()
        .zip(population.par_iter())
        .enumerate()
        .map(|(i, (&f, e))| mc_entry(f, e, eta, draws, seed::derive(base, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let n = population.len() as f64;
    let mean = shards.iter().map(|s| s.0).sum::<f64>() / n;
    let se = shards.iter().map(|s| s.1).sum::<f64>().sqrt() / n;
    Ok((mean, se))
}

/// Checks both readings of the risk expansion for `probe.theta_a`.
pub fn verify_risk_expansion(probe: &RiskProbe, n_mc: usize, seed: u64) -> Result<ExpansionReport> {
    probe.validate()?;
    if n_mc == 0 {
        return Err(Error::param("n_mc", "must be positive"));
    }
    let theta = &probe.theta_a;
    let preds = predictions(theta, &probe.population)?;
    let r = clean_risk(theta, &probe.population)?;
    let (derived_bias, printed_bias) = bias_terms(&preds, &probe.population);
    let derived_form = r + probe.eta * derived_bias;
    let printed_form = r - probe.eta * printed_bias;
    let (mc, se) = mc_noisy_risk(theta, &probe.population, probe.eta, n_mc, seed)?;
    let closes = |gap: f64| gap.abs() <= CLOSE_SE * se + EXACT_TOL;
    let derived_gap = mc - derived_form;
    let printed_gap = mc - printed_form;
    Ok(ExpansionReport {
        n_mc,
        eta: probe.eta,
        clean_risk: r,
        mc_noisy_risk: mc,
        standard_error: se,
        derived_form,
        printed_form,
        derived_gap,
        printed_gap,
        derived_closes: closes(derived_gap),
        printed_closes: closes(printed_gap),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskDifference {
    /// `eta * E[2 mu_z (f_b - f_a)] + R(a) - R(b)`
    pub symbolic: f64,
    /// Difference of two Monte-Carlo noisy risks.
    pub monte_carlo: f64,
    pub standard_error: f64,
}

/// `D = R^eta(theta_a) - R^eta(theta_b)`, symbolically and by simulation.
/// Both Monte-Carlo risks share a seed so the label draws are common.
pub fn risk_difference(probe: &RiskProbe, n_mc: usize, seed: u64) -> Result<RiskDifference> {
    probe.validate()?;
    let pop = &probe.population;
    let fa = predictions(&probe.theta_a, pop)?;
    let fb = predictions(&probe.theta_b, pop)?;
    let n = pop.len() as f64;
    let bias: f64 = fa
        .iter()
        .zip(&fb)
        .zip(pop)
        .map(|((a, b), e)| 2.0 * e.mu_z * (b - a))
        .sum::<f64>()
        / n;
    let symbolic = clean_risk(&probe.theta_a, pop)? - clean_risk(&probe.theta_b, pop)? + probe.eta * bias;

    let draws = n_mc.div_ceil(pop.len()).max(1);
    let base = seed::derive(seed, stream::RISK);
    let shards = pop
        .par_iter()
        .enumerate()
        .map(|(i, e)| -> Result<(f64, f64)> {
            let normal = gaussian(e.mu_z, e.sigma_z)?;
            let mut rng = seed::rng(seed::derive(base, i as u64));
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..draws {
                let label = if probe.eta > 0.0 && rng.random_bool(probe.eta) {
                    e.y_star + normal.sample(&mut rng)
                } else {
                    e.y_star
                };
                let d = (fa[i] - label).powi(2) - (fb[i] - label).powi(2);
                sum += d;
                sum_sq += d * d;
            }
            let k = draws as f64;
            let mean = sum / k;
            let var = if draws > 1 { ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0) } else { 0.0 };
            Ok((mean, var / k))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RiskDifference {
        symbolic,
        monte_carlo: shards.iter().map(|s| s.0).sum::<f64>() / n,
        standard_error: shards.iter().map(|s| s.1).sum::<f64>().sqrt() / n,
    })
}

/// A predictor that ignores its input and outputs `c`.
pub fn constant_predictor(input_dim: usize, c: f64) -> Result<Predictor> {
    let mut params = vec![0.0; input_dim + 1];
    params[input_dim] = c;
    Predictor::from_params(Architecture::Linear, input_dim, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Clean-risk minimizer within the family.
    pub clean_optimum: f64,
    /// Noisy-risk minimizer within the family.
    pub noisy_optimum: f64,
    pub clean_risk_at_clean_optimum: f64,
    pub noisy_risk_at_clean_optimum: f64,
    pub noisy_risk_at_noisy_optimum: f64,
    /// `R^eta(clean optimum) - R^eta(noisy optimum)`
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SignDemo {
    Witness(Witness),
    NoWitness { d: f64 },
}

impl SignDemo {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            SignDemo::Witness(w) => Some(w),
            SignDemo::NoWitness { .. } => None,
        }
    }
}

/// Vertex of the parabola through three points of `g`.
fn parabola_vertex(g: impl Fn(f64) -> Result<f64>, center: f64, h: f64) -> Result<f64> {
    let (gl, g0, gr) = (g(center - h)?, g(center)?, g(center + h)?);
    let curvature = gl - 2.0 * g0 + gr;
    if curvature <= 0.0 {
        return Err(Error::DegenerateInput("risk is not strictly convex along the family".into()));
    }
    Ok(center - h * (gr - gl) / (2.0 * curvature))
}

/// Searches the constant-predictor family for a pair where the clean optimum
/// loses under the noisy risk. Both risks are quadratic in the constant, so
/// each minimizer is the vertex of a three-point parabola fit.
pub fn risk_difference_sign_demo(population: &[PopulationEntry], eta: f64) -> Result<SignDemo> {
    if population.is_empty() {
        return Err(Error::DegenerateInput("population is empty".into()));
    }
    let dim = population[0].x.len();
    let clean = |c: f64| clean_risk(&constant_predictor(dim, c)?, population);
    let noisy = |c: f64| expected_noisy_risk(&constant_predictor(dim, c)?, population, eta);
    let center = population.iter().map(|e| e.y_star).sum::<f64>() / population.len() as f64;
    let clean_optimum = parabola_vertex(clean, center, 1.0)?;
    let noisy_optimum = parabola_vertex(noisy, center, 1.0)?;
    let noisy_at_clean = noisy(clean_optimum)?;
    let noisy_at_noisy = noisy(noisy_optimum)?;
    let d = noisy_at_clean - noisy_at_noisy;
    if d <= EXACT_TOL {
        return Ok(SignDemo::NoWitness { d });
    }
    Ok(SignDemo::Witness(Witness {
        clean_optimum,
        noisy_optimum,
        clean_risk_at_clean_optimum: clean(clean_optimum)?,
        noisy_risk_at_clean_optimum: noisy_at_clean,
        noisy_risk_at_noisy_optimum: noisy_at_noisy,
        d,
    }))
}

/// Random probe: linear `theta_a`/`theta_b`, `x ~ U(-1, 1)^dim`, `y* ~ U(0, 1)`,
/// `mu_z ~ U(-0.3, 0.3)`, `sigma_z ~ U(0, 0.2)`, `eta ~ U(0, 1)`.
pub fn random_probe(seed: u64, entries: usize, dim: usize) -> Result<RiskProbe> {
    let mut rng = seed::rng_for(seed, stream::RISK);
    let population = (0..entries)
        .map(|_| PopulationEntry {
            x: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            y_star: rng.random_range(0.0..1.0),
            mu_z: rng.random_range(-0.3..0.3),
            sigma_z: rng.random_range(0.0..0.2),
        })
        .collect();
    let theta_a = Predictor::init(Architecture::Linear, dim, seed::derive(seed, 1))?;
    let theta_b = Predictor::init(Architecture::Linear, dim, seed::derive(seed, 2))?;
    Ok(RiskProbe {
        population,
        theta_a,
        theta_b,
        eta: rng.random_range(0.0..1.0),
    })
}

/// Plain-text verification report.
pub fn render_text(expansions: &[ExpansionReport], demo: &SignDemo) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5} {:>6} {:>10} {:>12} {:>10} {:>12} {:>12} {:>8} {:>8}",
        "probe", "eta", "R", "R_eta(MC)", "SE", "derived", "printed", "der_ok", "prt_ok"
    );
    for (i, r) in expansions.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:>5} {:>6.3} {:>10.6} {:>12.6} {:>10.2e} {:>12.6} {:>12.6} {:>8} {:>8}",
            i, r.eta, r.clean_risk, r.mc_noisy_risk, r.standard_error, r.derived_form, r.printed_form,
            r.derived_closes, r.printed_closes
        );
    }
    let derived = expansions.iter().filter(|r| r.derived_closes).count();
    let printed = expansions.iter().filter(|r| r.printed_closes).count();
    let _ = writeln!(
        s,
        "expansion closes within {CLOSE_SE} SE: derived {derived}/{n}, printed {printed}/{n}",
        n = expansions.len()
    );
    match demo {
        SignDemo::Witness(w) => {
            let _ = writeln!(
                s,
                "witness: clean optimum {:.9}, noisy optimum {:.9}, D = {:.9}",
                w.clean_optimum, w.noisy_optimum, w.d
            );
        }
        SignDemo::NoWitness { d } => {
            let _ = writeln!(s, "no witness found (D = {d:.3e})");
        }
    }
    s
}

pub fn write_csv(expansions: &[ExpansionReport], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "probe", "n_mc", "eta", "clean_risk", "mc_noisy_risk", "standard_error", "derived_form",
        "printed_form", "derived_gap", "printed_gap", "derived_closes", "printed_closes",
    ])?;
    for (i, r) in expansions.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.n_mc.to_string(),
            r.eta.to_string(),
            r.clean_risk.to_string(),
            r.mc_noisy_risk.to_string(),
            r.standard_error.to_string(),
            r.derived_form.to_string(),
            r.printed_form.to_string(),
            r.derived_gap.to_string(),
            r.printed_gap.to_string(),
            r.derived_closes.to_string(),
            r.printed_closes.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(y: f64, mu: f64, sigma: f64) -> PopulationEntry {
        PopulationEntry { x: vec![0.0], y_star: y, mu_z: mu, sigma_z: sigma }
    }

    #[test]
    fn perfect_predictor_has_zero_clean_risk() {
        let pop = vec![entry(0.25, 0.1, 0.1), entry(0.25, -0.2, 0.0)];
        let theta = constant_predictor(1, 0.25).unwrap();
        assert_eq!(empirical_risk(&theta, &pop, LabelMode::Clean).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_bias_matches_clean_risk() {
        let pop = vec![entry(0.2, 0.0, 0.0), entry(0.7, 0.0, 0.0)];
        let probe = RiskProbe {
            population: pop,
            theta_a: constant_predictor(1, 0.4).unwrap(),
            theta_b: constant_predictor(1, 0.4).unwrap(),
            eta: 1.0,
        };
        let r = verify_risk_expansion(&probe, 1000, 3).unwrap();
        assert!((r.mc_noisy_risk - r.clean_risk).abs() < 1e-12);
        assert_eq!(r.derived_form, r.clean_risk);
        assert_eq!(r.printed_form, r.clean_risk);
        assert!(r.derived_closes && r.printed_closes);
    }

    #[test]
    fn clean_limit() {
        let mut probe = random_probe(9, 10, 3).unwrap();
        probe.eta = 0.0;
        let r = verify_risk_expansion(&probe, 5000, 1).unwrap();
        assert!((r.mc_noisy_risk - r.clean_risk).abs() < 1e-12);
        assert_eq!(r.derived_form, r.clean_risk);
    }

    #[test]
    fn constant_witness() {
        let demo = risk_difference_sign_demo(&[entry(0.5, 0.3, 0.1)], 1.0).unwrap();
        let w = demo.witness().expect("witness");
        assert!((w.clean_optimum - 0.5).abs() < 1e-9);
        assert!((w.noisy_optimum - 0.8).abs() < 1e-9);
        assert!((w.d - 0.09).abs() < 1e-9);
    }

    #[test]
    fn unbiased_noise_has_no_witness() {
        let demo = risk_difference_sign_demo(&[entry(0.5, 0.0, 0.3), entry(0.1, 0.0, 0.2)], 1.0).unwrap();
        assert!(demo.witness().is_none());
    }

    #[test]
    fn empty_population_rejected() {
        let theta = constant_predictor(1, 0.0).unwrap();
        assert!(empirical_risk(&theta, &[], LabelMode::Clean).is_err());
    }
}
