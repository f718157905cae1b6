mod common;

use common::{kendall_pairs, pearson_definition, permutations, spearman_definition};
use lcmos::metrics::{delta_percent, krcc, mse, plcc, srcc, ScorePairs};
use lcmos::seed;
use rand::Rng;

fn pairs<'a>(a: &'a [f64], b: &'a [f64]) -> ScorePairs<'a> {
    ScorePairs::new(a, b).unwrap()
}

#[test]
fn kendall_all_permutations_of_four() {
    let reference = [0.0, 1.0, 2.0, 3.0];
    let perms = permutations(4);
    assert_eq!(perms.len(), 24);
    for perm in perms {
        let pred: Vec<f64> = perm.iter().map(|&i| i as f64).collect();
        let got = krcc(pairs(&pred, &reference)).unwrap();
        let want = kendall_pairs(&pred, &reference);
        assert!((got - want).abs() < 1e-12, "{perm:?}: {got} vs {want}");
    }
}

#[test]
fn correlations_match_definitions_with_ties() {
    let mut rng = seed::rng(5);
    for n in [5usize, 17, 64, 301] {
        for _ in 0..20 {
            // coarse values force ties in both vectors
            let a: Vec<f64> = (0..n).map(|_| (rng.random_range(0.0..1.0f64) * 7.0).round()).collect();
            let b: Vec<f64> = a.iter().map(|v| (v + rng.random_range(-3.0..3.0f64)).round()).collect();
            let p = pairs(&a, &b);
            assert!((plcc(p).unwrap() - pearson_definition(&a, &b)).abs() < 1e-12);
            assert!((srcc(p).unwrap() - spearman_definition(&a, &b)).abs() < 1e-12);
            assert!((krcc(p).unwrap() - kendall_pairs(&a, &b)).abs() < 1e-12);
        }
    }
}

#[test]
fn mse_by_summation() {
    let mut rng = seed::rng(6);
    let a: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..1.0)).collect();
    let b: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut total = 0.0;
    for i in 0..a.len() {
        total += (a[i] - b[i]) * (a[i] - b[i]);
    }
    assert!((mse(pairs(&a, &b)) - total / 1000.0).abs() < 1e-15);
}

#[test]
fn delta_percent_reproduces_table_arithmetic() {
    let d = delta_percent(0.8294, 0.7905).unwrap();
    assert_eq!(format!("{d:.4}"), "4.9209");
    assert!((d - (0.8294 - 0.7905) / 0.7905 * 100.0).abs() < 1e-12);
}

#[test]
fn constant_input_is_degenerate() {
    let a = [1.0, 1.0, 1.0];
    let b = [1.0, 2.0, 3.0];
    assert!(plcc(pairs(&a, &b)).is_err());
    assert!(srcc(pairs(&a, &b)).is_err());
    assert!(krcc(pairs(&a, &b)).is_err());
}
