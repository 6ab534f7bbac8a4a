#![allow(dead_code)]

use std::f64::consts::PI;

use ampred_core::model::{ModelSpec, NoiseSpectrum};

pub const DELTA: f64 = 0.797_884_560_802_865_4;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on [0, pi].
#[derive(Debug)]
pub struct Quadrature {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Quadrature {
    pub fn new(panels: usize, order: usize) -> Self {
        let (t, v) = gauss_legendre(order);
        let h = PI / panels as f64;
        let mut x = Vec::with_capacity(panels * order);
        let mut w = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = p as f64 * h;
            for (ti, vi) in t.iter().zip(&v) {
                x.push(a + 0.5 * h * (ti + 1.0));
                w.push(0.5 * h * vi);
            }
        }
        Self { x, w }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.w).map(|(x, w)| w * f(*x)).sum()
    }
}

/// `sum_k c_k sqrt(2/pi) sin(kx)` evaluated directly.
pub fn synth(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().enumerate().map(|(k, c)| c * DELTA * ((k + 1) as f64 * x).sin()).sum()
}

/// `e_j`-coefficients of `f` by quadrature.
pub fn project(q: &Quadrature, n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let vals: Vec<f64> = q.x.iter().map(|x| f(*x)).collect();
    (1..=n)
        .map(|j| q.x.iter().zip(&q.w).zip(&vals).map(|((x, w), v)| w * v * DELTA * (j as f64 * x).sin()).sum())
        .collect()
}

pub fn gl_model(n: usize, eps: f64) -> ModelSpec {
    ModelSpec::ginzburg_landau(n, 1.0, &NoiseSpectrum::PowerLaw { exponent: 4.0 }, eps, 0.02).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Deterministic pseudo-random coefficients with a decaying profile.
pub fn random_coeffs(seed: u64, n: usize, decay: f64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (1..=n)
        .map(|k| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (s >> 11) as f64 / (1u64 << 53) as f64;
            (2.0 * u - 1.0) * (k as f64).powf(-decay)
        })
        .collect()
}
