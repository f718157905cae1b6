#![allow(dead_code)]

use lcmos::gdbc::EmParams;

/// Posterior mean and variance of `z` by Simpson quadrature of
/// `N(y; f + z, s_y^2) * N(z; mu, s_z^2)` on a wide uniform grid.
pub fn posterior_by_quadrature(p: &EmParams, f: f64, y: f64) -> (f64, f64) {
    let obs = y - f;
    let spread = p.sigma_y_sq.sqrt().max(p.sigma_z_sq.sqrt());
    let lo = p.mu_z_prior.min(obs) - 14.0 * spread;
    let hi = p.mu_z_prior.max(obs) + 14.0 * spread;
    let n = 40_000usize;
    let h = (hi - lo) / n as f64;
    let log_density = |z: f64| {
        -0.5 * (y - f - z).powi(2) / p.sigma_y_sq - 0.5 * (z - p.mu_z_prior).powi(2) / p.sigma_z_sq
    };
    let peak = (0..=n)
        .map(|k| log_density(lo + k as f64 * h))
        .fold(f64::NEG_INFINITY, f64::max);
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for k in 0..=n {
        let z = lo + k as f64 * h;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let d = w * (log_density(z) - peak).exp();
        m0 += d;
        m1 += d * z;
        m2 += d * z * z;
    }
    let mean = m1 / m0;
    (mean, m2 / m0 - mean * mean)
}

pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Central finite-difference gradient of `f` at `params`.
pub fn numeric_gradient(params: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a|| + ||b||, tiny)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (na + nb).max(1e-12)
}

pub fn pearson_definition(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Rank = 1 + #smaller + (#equal - 1) / 2, by counting.
pub fn ranks_by_counting(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let below = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman_definition(a: &[f64], b: &[f64]) -> f64 {
    pearson_definition(&ranks_by_counting(a), &ranks_by_counting(b))
}

/// Kendall tau-b over all pairs.
pub fn kendall_pairs(a: &[f64], b: &[f64]) -> f64 {
    let (mut conc, mut disc, mut ta, mut tb) = (0i64, 0i64, 0i64, 0i64);
    let n = a.len();
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 && db == 0.0 {
                ta += 1;
                tb += 1;
            } else if da == 0.0 {
                ta += 1;
            } else if db == 0.0 {
                tb += 1;
            } else if da * db > 0.0 {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    (conc - disc) as f64 / ((pairs - ta as f64) * (pairs - tb as f64)).sqrt()
}

/// Every permutation of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            if k % 2 == 0 {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

/// Textbook Adam with cosine-annealed step size, written out longhand.
pub struct ReferenceAdam {
    lr: f64,
    total: u64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl ReferenceAdam {
    pub fn new(lr: f64, total: u64, n: usize) -> Self {
        ReferenceAdam { lr, total, t: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let frac = self.t.min(self.total) as f64 / self.total as f64;
        let lr = self.lr * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos());
        self.t += 1;
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grads[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grads[i] * grads[i];
            let mh = self.m[i] / (1.0 - b1.powi(self.t as i32));
            let vh = self.v[i] / (1.0 - b2.powi(self.t as i32));
            params[i] -= lr * mh / (vh.sqrt() + eps);
        }
    }
}
