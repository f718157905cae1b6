use lcmos::label_sim::{
    mix_bias_rate, sample_lc_mos_empirical, sample_lc_mos_gaussian, sample_lc_mos_raw, simulate_labels,
    AnnotationPool, LabelSet, ScoreRange, SimConfig,
};
use lcmos::seed;
use rand::Rng;
use rand_distr::{Distribution, Normal};

const SEEDS: u64 = 10_000;

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// 30 ratings from N(6, 1), rounded and clipped to the 1..10 scale.
fn discretized_pool() -> AnnotationPool {
    let mut rng = seed::rng(404);
    let normal = Normal::new(6.0f64, 1.0).unwrap();
    let ratings = (0..30).map(|_| normal.sample(&mut rng).round().clamp(1.0, 10.0)).collect();
    AnnotationPool::raw("p", ratings)
}

fn raw_zs(pool: &AnnotationPool, m: usize, range: ScoreRange) -> Vec<f64> {
    (0..SEEDS)
        .map(|s| sample_lc_mos_raw(pool, &SimConfig::new(m, 1.0, s, range).unwrap()).unwrap().z)
        .collect()
}

#[test]
fn raw_subsample_variance_has_finite_population_correction() {
    let pool = discretized_pool();
    let range = ScoreRange::new(1.0, 10.0).unwrap();
    let ratings: Vec<f64> = match &pool.source {
        lcmos::label_sim::PoolSource::RawScores(r) => r.clone(),
        _ => unreachable!(),
    };
    let (_, sample_var) = mean_var(&ratings);
    let n = ratings.len() as f64;
    for m in [1usize, 4, 8] {
        let zs = raw_zs(&pool, m, range);
        let (_, got) = mean_var(&zs);
        // without-replacement mean of m: s^2 / m * (N - m) / N, in unit scale
        let want = sample_var / m as f64 * (n - m as f64) / n / range.width().powi(2);
        assert!((got / want - 1.0).abs() < 0.05, "M={m}: {got} vs {want}");
    }
}

#[test]
fn squared_bias_shrinks_with_annotation_number() {
    let pool = discretized_pool();
    let range = ScoreRange::new(1.0, 10.0).unwrap();
    let second: Vec<f64> = [1usize, 2, 4, 8]
        .iter()
        .map(|&m| raw_zs(&pool, m, range).iter().map(|z| z * z).sum::<f64>() / SEEDS as f64)
        .collect();
    for w in second.windows(2) {
        assert!(w[1] <= w[0], "{second:?}");
    }
}

#[test]
fn gaussian_lc_std_follows_root_m() {
    let pool = AnnotationPool::gaussian("g", 5.0, 1.0);
    let range = ScoreRange::new(0.0, 10.0).unwrap();
    let zs: Vec<f64> = (0..SEEDS)
        .map(|s| sample_lc_mos_gaussian(&pool, &SimConfig::new(8, 1.0, s, range).unwrap()).unwrap().z)
        .collect();
    let (_, var) = mean_var(&zs);
    let want = 0.1 / 8f64.sqrt();
    assert!((var.sqrt() / want - 1.0).abs() < 0.05, "{} vs {want}", var.sqrt());
}

#[test]
fn gaussian_truncation_near_top_of_scale() {
    let pool = AnnotationPool::gaussian("g", 9.8, 2.0);
    let range = ScoreRange::new(0.0, 10.0).unwrap();
    for s in 0..2000 {
        let l = sample_lc_mos_gaussian(&pool, &SimConfig::new(1, 1.0, s, range).unwrap()).unwrap();
        assert!(l.y_lc <= 1.0 && l.y_lc >= 0.0);
    }
}

#[test]
fn histogram_lc_is_unbiased() {
    let pool = AnnotationPool::histogram("h", vec![(1.0, 3), (2.0, 9), (3.0, 14), (4.0, 20), (5.0, 6)]);
    let range = ScoreRange::new(1.0, 5.0).unwrap();
    let labels: Vec<LabelSet> = (0..SEEDS)
        .map(|s| sample_lc_mos_empirical(&pool, &SimConfig::new(2, 1.0, s, range).unwrap()).unwrap())
        .collect();
    let y_star = labels[0].y_star;
    let lc: Vec<f64> = labels.iter().map(|l| l.y_lc).collect();
    let (mean, var) = mean_var(&lc);
    let se = (var / SEEDS as f64).sqrt();
    assert!((mean - y_star).abs() <= 3.0 * se, "{mean} vs {y_star} (se {se})");
}

#[test]
fn histogram_two_categories_equal_frequency() {
    let pool = AnnotationPool::histogram("h", vec![(1.0, 1), (9.0, 1)]);
    let range = ScoreRange::new(0.0, 10.0).unwrap();
    let mut low = 0u64;
    for s in 0..SEEDS {
        let l = sample_lc_mos_empirical(&pool, &SimConfig::new(1, 1.0, s, range).unwrap()).unwrap();
        assert!(l.y_lc == 0.1 || l.y_lc == 0.9);
        low += u64::from(l.y_lc == 0.1);
    }
    // Binomial(10000, 0.5): sd = 50
    assert!((low as f64 - 5000.0).abs() < 4.0 * 50.0, "{low}");
}

/// Central interval of Binomial(n, p) holding at least `level` of the mass,
/// from the pmf summed in log space.
fn binomial_interval(n: u64, p: f64, level: f64) -> (u64, u64) {
    let mut log_fact = vec![0.0f64; n as usize + 1];
    for k in 1..=n as usize {
        log_fact[k] = log_fact[k - 1] + (k as f64).ln();
    }
    let pmf = |k: u64| {
        (log_fact[n as usize] - log_fact[k as usize] - log_fact[(n - k) as usize]
            + k as f64 * p.ln()
            + (n - k) as f64 * (1.0 - p).ln())
        .exp()
    };
    let tail = (1.0 - level) / 2.0;
    let (mut lo, mut acc) = (0u64, 0.0);
    while acc + pmf(lo) <= tail {
        acc += pmf(lo);
        lo += 1;
    }
    let (mut hi, mut acc) = (n, 0.0);
    while acc + pmf(hi) <= tail {
        acc += pmf(hi);
        hi -= 1;
    }
    (lo, hi)
}

#[test]
fn noisy_count_within_binomial_interval() {
    let (lo, hi) = binomial_interval(10_000, 0.6, 0.999);
    assert!(lo > 5800 && hi < 6200);
    let labels: Vec<LabelSet> = (0..10_000).map(|i| LabelSet::new(0.5, (i % 7) as f64 / 7.0)).collect();
    let range = ScoreRange::new(0.0, 1.0).unwrap();
    for s in 0..20 {
        let out = mix_bias_rate(&labels, &SimConfig::new(1, 0.6, s, range).unwrap()).unwrap();
        assert!((lo..=hi).contains(&(out.noisy_count as u64)), "seed {s}: {}", out.noisy_count);
        let counted = out.labels.iter().filter(|l| l.is_noisy).count();
        assert_eq!(counted, out.noisy_count);
    }
}

#[test]
fn mixing_limits_and_branch_values() {
    let mut rng = seed::rng(9);
    let labels: Vec<LabelSet> = (0..500)
        .map(|_| LabelSet::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect();
    let range = ScoreRange::new(0.0, 1.0).unwrap();
    for eta in [0.0, 0.3, 1.0] {
        let out = mix_bias_rate(&labels, &SimConfig::new(1, eta, 3, range).unwrap()).unwrap();
        for (before, after) in labels.iter().zip(&out.labels) {
            assert_eq!(before.y_lc, after.y_lc);
            assert_eq!(before.y_star, after.y_star);
            assert_eq!(after.z, after.y_lc - after.y_star);
            let want = if after.is_noisy { after.y_lc } else { after.y_star };
            assert_eq!(after.y_eta, want);
        }
        if eta == 0.0 {
            assert_eq!(out.noisy_count, 0);
        }
        if eta == 1.0 {
            assert_eq!(out.noisy_count, labels.len());
        }
    }
}

#[test]
fn simulation_is_deterministic() {
    let pools: Vec<AnnotationPool> = (0..50)
        .map(|i| AnnotationPool::raw(format!("s{i}"), (0..10).map(|k| ((i * 7 + k * 3) % 10) as f64).collect()))
        .collect();
    let cfg = SimConfig::new(3, 0.5, 77, ScoreRange::new(0.0, 10.0).unwrap()).unwrap();
    let a = simulate_labels(&pools, &cfg).unwrap();
    let b = simulate_labels(&pools, &cfg).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.noisy_count, b.noisy_count);
}
