mod common;

use common::{numeric_gradient, relative_error};
use lcmos::baselines::{gce_loss, sce_loss};
use lcmos::predictor::{Architecture, Output, Predictor};
use lcmos::seed;
use rand::Rng;

const DRAWS: u64 = 50;
const H: f64 = 1e-6;

fn archs() -> Vec<Architecture> {
    ["linear", "mlp:8", "mlp:6,4", "binned:5"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn probs(p: &Predictor, x: &[f64]) -> Vec<f64> {
    match p.forward(x).unwrap() {
        Output::Distribution(d) => d,
        Output::Scalar(_) => panic!("scalar head"),
    }
}

fn draw(arch: &Architecture, k: u64) -> (Predictor, Vec<f64>) {
    let dim = 5;
    let mut p = Predictor::init(arch.clone(), dim, seed::derive(77, k)).unwrap();
    let mut rng = seed::rng(seed::derive(78, k));
    // push weights off the tiny-init regime so tanh is exercised
    for w in p.params_mut() {
        *w *= rng.random_range(0.5..3.0);
    }
    let x = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    (p, x)
}

#[test]
fn scalar_readout_gradients() {
    for arch in archs() {
        for k in 0..DRAWS {
            let (p, x) = draw(&arch, k);
            let up = 0.7;
            let analytic = p.backward(&x, up).unwrap();
            let numeric = numeric_gradient(p.params(), H, |w| {
                let q = Predictor::from_params(arch.clone(), x.len(), w.to_vec()).unwrap();
                up * q.predict(&x).unwrap()
            });
            let err = relative_error(&analytic, &numeric);
            assert!(err < 1e-5, "{arch} draw {k}: rel err {err}");
        }
    }
}

#[test]
fn distribution_gradients() {
    let arch: Architecture = "binned:6".parse().unwrap();
    for k in 0..DRAWS {
        let (p, x) = draw(&arch, k);
        let mut rng = seed::rng(k);
        let up: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let analytic = p.backward_distribution(&x, &up).unwrap();
        let numeric = numeric_gradient(p.params(), H, |w| {
            let q = Predictor::from_params(arch.clone(), x.len(), w.to_vec()).unwrap();
            probs(&q, &x).iter().zip(&up).map(|(a, b)| a * b).sum()
        });
        assert!(relative_error(&analytic, &numeric) < 1e-5);
    }
}

/// Loss gradients pushed through the softmax head against finite differences
/// of the composed loss.
#[test]
fn robust_loss_gradients_through_head() {
    let arch: Architecture = "binned:5".parse().unwrap();
    type Loss = Box<dyn Fn(&[f64], usize) -> lcmos::baselines::LossGrad>;
    let losses: Vec<(&str, Loss)> = vec![
        ("gce", Box::new(|p, t| gce_loss(p, t, 0.7).unwrap())),
        ("sce", Box::new(|p, t| sce_loss(p, t, 0.1, 1.0, -4.0).unwrap())),
    ];
    for (name, loss) in &losses {
        for k in 0..DRAWS {
            let (p, x) = draw(&arch, k);
            let target = (k % 5) as usize;
            let lg = loss(&probs(&p, &x), target);
            let analytic = p.backward_distribution(&x, &lg.grad).unwrap();
            let numeric = numeric_gradient(p.params(), H, |w| {
                let q = Predictor::from_params(arch.clone(), x.len(), w.to_vec()).unwrap();
                loss(&probs(&q, &x), target).loss
            });
            let err = relative_error(&analytic, &numeric);
            assert!(err < 1e-5, "{name} draw {k}: {err}");
        }
    }
}

#[test]
fn loss_values_by_hand() {
    let p = [0.1, 0.6, 0.3];
    let g = gce_loss(&p, 1, 0.5).unwrap();
    assert!((g.loss - (1.0 - 0.6f64.sqrt()) / 0.5).abs() < 1e-15);
    let s = sce_loss(&p, 1, 0.1, 1.0, -4.0).unwrap();
    let want = 0.1 * -(0.6f64.ln()) + 4.0 * 0.4;
    assert!((s.loss - want).abs() < 1e-12);
}
