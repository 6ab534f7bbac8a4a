//! Composite Gauss–Legendre quadrature on `[0, pi]`, used as the oracle column of
//! the coefficient table.

use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]` by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
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

pub fn integrate_0_pi(f: impl Fn(f64) -> f64, panels: usize, order: usize) -> f64 {
    let (t, w) = gauss_legendre(order);
    let h = PI / panels as f64;
    (0..panels)
        .map(|p| {
            let a = p as f64 * h;
            t.iter().zip(&w).map(|(t, w)| 0.5 * h * w * f(a + 0.5 * h * (t + 1.0))).sum::<f64>()
        })
        .sum()
}

/// `sigma_k = (2/pi) / k * int_0^pi sin^2(y) sin(k y) dy`.
pub fn sigma_quadrature(k: usize) -> f64 {
    let kf = k as f64;
    // enough panels to resolve sin(k y) for k up to a few hundred
    let panels = 16 + 2 * k;
    2.0 / PI / kf * integrate_0_pi(|y| y.sin().powi(2) * (kf * y).sin(), panels, 16)
}
