use lcmos::predictor::{Architecture, Predictor};
use lcmos::riskcheck::{
    constant_predictor, empirical_risk, expected_noisy_risk, random_probe, risk_difference,
    risk_difference_sign_demo, verify_risk_expansion, LabelMode, PopulationEntry, RiskProbe, SignDemo,
};
use lcmos::seed;
use rand::Rng;

fn flat_population(n: usize, y: f64, mu: f64, sigma: f64) -> Vec<PopulationEntry> {
    (0..n)
        .map(|i| PopulationEntry { x: vec![i as f64 / n as f64], y_star: y, mu_z: mu, sigma_z: sigma })
        .collect()
}

#[test]
fn derived_expansion_closes_on_random_probes() {
    for k in 0..20 {
        let probe = random_probe(seed::derive(2024, k), 16, 4).unwrap();
        let r = verify_risk_expansion(&probe, 1_000_000, k).unwrap();
        assert!(r.derived_closes, "probe {k}: gap {} se {}", r.derived_gap, r.standard_error);
    }
}

#[test]
fn printed_expansion_misses_on_fixed_probe() {
    let dim = 2;
    let mut rng = seed::rng(8);
    let population: Vec<PopulationEntry> = (0..32)
        .map(|_| PopulationEntry {
            x: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            y_star: rng.random_range(0.0..1.0),
            mu_z: 0.1,
            sigma_z: 0.05,
        })
        .collect();
    let theta = Predictor::init(Architecture::Linear, dim, 3).unwrap();
    let probe = RiskProbe { population, theta_a: theta.clone(), theta_b: theta, eta: 1.0 };
    let r = verify_risk_expansion(&probe, 1_000_000, 5).unwrap();
    assert!(r.derived_closes);
    assert!(!r.printed_closes, "printed gap {} se {}", r.printed_gap, r.standard_error);
}

#[test]
fn degenerate_noise_and_clean_limit_are_exact() {
    let theta = Predictor::init(Architecture::Linear, 1, 4).unwrap();
    let population = flat_population(10, 0.4, 0.0, 0.0);
    let probe = RiskProbe { population: population.clone(), theta_a: theta.clone(), theta_b: theta.clone(), eta: 0.7 };
    let r = verify_risk_expansion(&probe, 1000, 1).unwrap();
    assert!((r.mc_noisy_risk - r.clean_risk).abs() < 1e-12);
    assert_eq!(r.derived_form, r.clean_risk);
    assert_eq!(r.printed_form, r.clean_risk);

    let noisy = flat_population(10, 0.4, 0.2, 0.1);
    let probe = RiskProbe { population: noisy, theta_a: theta.clone(), theta_b: theta, eta: 0.0 };
    let r = verify_risk_expansion(&probe, 1000, 1).unwrap();
    assert!((r.mc_noisy_risk - r.clean_risk).abs() < 1e-12);
    assert_eq!(r.derived_form, r.clean_risk);
}

#[test]
fn empirical_risk_by_direct_summation() {
    let mut rng = seed::rng(21);
    let population: Vec<PopulationEntry> = (0..1000)
        .map(|_| PopulationEntry {
            x: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            y_star: rng.random_range(0.0..1.0),
            mu_z: 0.0,
            sigma_z: 0.1,
        })
        .collect();
    let theta = Predictor::init(Architecture::Linear, 2, 9).unwrap();
    let w = theta.params();
    let mut total = 0.0;
    for e in &population {
        // linear layout: weights then bias
        let f = w[0] * e.x[0] + w[1] * e.x[1] + w[2];
        total += (f - e.y_star) * (f - e.y_star);
    }
    let got = empirical_risk(&theta, &population, LabelMode::Clean).unwrap();
    assert!((got - total / 1000.0).abs() < 1e-12);

    let c = constant_predictor(1, 0.3).unwrap();
    let flat = flat_population(5, 0.3, 0.0, 0.0);
    assert_eq!(empirical_risk(&c, &flat, LabelMode::Clean).unwrap(), 0.0);
}

#[test]
fn symbolic_difference_matches_simulation() {
    for k in 0..5 {
        let probe = random_probe(seed::derive(99, k), 12, 3).unwrap();
        let d = risk_difference(&probe, 400_000, k).unwrap();
        assert!(
            (d.symbolic - d.monte_carlo).abs() <= 3.0 * d.standard_error + 1e-12,
            "probe {k}: {} vs {} (se {})",
            d.symbolic,
            d.monte_carlo,
            d.standard_error
        );
    }
}

#[test]
fn constant_witness_matches_closed_form() {
    let population = flat_population(8, 0.5, 0.3, 0.1);
    let demo = risk_difference_sign_demo(&population, 1.0).unwrap();
    let w = demo.witness().expect("witness");
    assert!((w.clean_optimum - 0.5).abs() < 1e-9);
    assert!((w.noisy_optimum - 0.8).abs() < 1e-9);
    assert!((w.d - 0.09).abs() < 1e-9);
}

#[test]
fn witness_difference_grows_with_eta() {
    let population = flat_population(8, 0.5, 0.3, 0.1);
    let mut last = 0.0;
    for eta in [0.1, 0.3, 0.5, 0.7, 1.0] {
        let d = risk_difference_sign_demo(&population, eta).unwrap().witness().unwrap().d;
        assert!(d > last);
        last = d;
    }
}

#[test]
fn zero_bias_gives_no_witness() {
    let mut rng = seed::rng(4);
    let population: Vec<PopulationEntry> = (0..20)
        .map(|_| PopulationEntry { x: vec![0.0], y_star: rng.random_range(0.0..1.0), mu_z: 0.0, sigma_z: 0.2 })
        .collect();
    match risk_difference_sign_demo(&population, 1.0).unwrap() {
        SignDemo::NoWitness { d } => assert!(d <= 1e-12),
        SignDemo::Witness(w) => panic!("unexpected witness {w:?}"),
    }
    let c = constant_predictor(1, 0.2).unwrap();
    let clean = expected_noisy_risk(&c, &population, 0.0).unwrap();
    assert!((clean - expected_noisy_risk(&c, &population, 1.0).unwrap() + 0.04).abs() < 1e-12);
}
