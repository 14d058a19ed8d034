//! Independent reference implementations shared by the integration tests.
//! Everything here uses plain `Vec` arithmetic and an explicit matrix inverse
//! so that it shares no numerical code path with the library.

#![allow(dead_code)]

use ctxbo::{Bounds, Dataset, KernelParams};
use rand::Rng;

pub type Matrix = Vec<Vec<f64>>;

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Matrix) -> Matrix {
    let n = a.len();
    let mut m: Matrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `ln |det a|` by LU elimination with partial pivoting.
pub fn log_abs_det(a: &Matrix) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut total = 0.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        total += p.abs().ln();
        for r in col + 1..n {
            let f = m[r][col] / p;
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    total
}

pub fn kernel(a: &[f64], b: &[f64], p: &KernelParams) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = (a[i] - b[i]) / p.lengthscales[i];
        s += d * d;
    }
    p.signal_variance * (-0.5 * s).exp()
}

/// Population mean and standard deviation, with the scale forced to 1 for
/// fewer than two points or zero spread.
pub fn standardize(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = if y.len() < 2 || var <= 0.0 { 1.0 } else { var.sqrt() };
    (mean, scale)
}

fn noisy_gram(x: &[Vec<f64>], p: &KernelParams, jitter: f64) -> Matrix {
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    kernel(&x[i], &x[j], p)
                        + if i == j { p.noise_variance + jitter } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

fn mat_vec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Posterior mean and variance in problem units from the textbook formulas
/// `k*' A^-1 y` and `k** - k*' A^-1 k*`, with `A = K + (noise + jitter) I`
/// and the prior variance at a query including the noise term.
pub fn predict(
    x: &[Vec<f64>],
    y: &[f64],
    p: &KernelParams,
    jitter: f64,
    queries: &[Vec<f64>],
) -> Vec<(f64, f64)> {
    let (mean, scale) = standardize(y);
    let z: Vec<f64> = y.iter().map(|v| (v - mean) / scale).collect();
    let a_inv = inverse(&noisy_gram(x, p, jitter));
    let w = mat_vec(&a_inv, &z);
    queries
        .iter()
        .map(|q| {
            let ks: Vec<f64> = x.iter().map(|xi| kernel(q, xi, p)).collect();
            let m = dot(&ks, &w);
            let v = p.signal_variance + p.noise_variance - dot(&ks, &mat_vec(&a_inv, &ks));
            (mean + scale * m, scale * scale * v.max(0.0))
        })
        .collect()
}

/// `-1/2 z' A^-1 z - 1/2 ln|A| - n/2 ln 2 pi` over standardized targets.
pub fn lml(x: &[Vec<f64>], y: &[f64], p: &KernelParams, jitter: f64) -> f64 {
    let (mean, scale) = standardize(y);
    let z: Vec<f64> = y.iter().map(|v| (v - mean) / scale).collect();
    let a = noisy_gram(x, p, jitter);
    let a_inv = inverse(&a);
    let n = x.len() as f64;
    -0.5 * dot(&z, &mat_vec(&a_inv, &z))
        - 0.5 * log_abs_det(&a)
        - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

pub struct Fixture {
    pub bounds: Bounds,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub params: KernelParams,
    pub queries: Vec<Vec<f64>>,
}

impl Fixture {
    pub fn dataset(&self) -> Dataset {
        Dataset::from_observations(self.x.clone(), self.y.clone(), self.bounds.clone()).unwrap()
    }
}

/// Random well-conditioned regression problem with `n <= 20`, `d <= 6`.
pub fn random_fixture<R: Rng>(rng: &mut R) -> Fixture {
    let d = rng.random_range(1..=6);
    let n = rng.random_range(1..=20);
    let pairs: Vec<(f64, f64)> = (0..d)
        .map(|_| {
            let lo = rng.random_range(-5.0..5.0);
            (lo, lo + rng.random_range(0.5..10.0))
        })
        .collect();
    let bounds = Bounds::new(pairs.clone()).unwrap();
    let point = |rng: &mut R| -> Vec<f64> {
        pairs.iter().map(|(l, u)| rng.random_range(*l..=*u)).collect()
    };
    let x: Vec<Vec<f64>> = (0..n).map(|_| point(rng)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|p| p.iter().map(|v| v.sin()).sum::<f64>() * 3.0 + rng.random_range(-0.5..0.5))
        .collect();
    let params = KernelParams::new(
        pairs
            .iter()
            .map(|(l, u)| (u - l) * rng.random_range(0.1..1.0))
            .collect(),
        rng.random_range(0.3..3.0),
        rng.random_range(1e-3..1e-1),
    )
    .unwrap();
    let queries = (0..5).map(|_| point(rng)).collect();
    Fixture {
        bounds,
        x,
        y,
        params,
        queries,
    }
}

/// `|a - b|` relative to `max(|b|, unit)`.
pub fn rel_err(a: f64, b: f64, unit: f64) -> f64 {
    (a - b).abs() / b.abs().max(unit)
}

/// Taylor series `Phi(z) = 1/2 + phi-weighted odd series`, accurate to near
/// machine precision for `|z| <= 6`.
pub fn normal_cdf_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) {
        term *= z * z / (2.0 * k + 1.0);
        sum += term;
        k += 1.0;
        if k > 500.0 {
            break;
        }
    }
    0.5 + sum * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
