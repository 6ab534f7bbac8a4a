//! Production coefficients and grid products checked against quadrature and an
//! independent FFT, never against the closed forms they implement.

mod common;

use std::f64::consts::PI;

use ampred_core::model::{sigma_k, ModelSpec, NoiseConvention, NoiseSpectrum};
use ampred_core::transform::SineGrid;
use ampred_core::SpectralField;
use common::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

fn fine() -> Quadrature {
    Quadrature::new(128, 24)
}

/// `sigma_k = (2/pi) / k * int_0^pi sin^2(y) sin(ky) dy`.
fn sigma_oracle(q: &Quadrature, k: usize) -> f64 {
    2.0 / PI / k as f64 * q.integrate(|y| y.sin().powi(2) * (k as f64 * y).sin())
}

#[test]
fn gauss_legendre_integrates_polynomials_exactly() {
    let (x, w) = gauss_legendre(12);
    for p in 0..24 {
        let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
        let want = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
        assert!((got - want).abs() < 1e-14, "x^{p}: {got} vs {want}");
    }
}

#[test]
fn sigma_closed_form_matches_quadrature_for_all_retained_modes() {
    let q = fine();
    let mut worst: f64 = 0.0;
    for k in 1..=64 {
        let closed = sigma_k(k).unwrap();
        worst = worst.max((closed - sigma_oracle(&q, k)).abs());
        if k % 2 == 0 {
            assert_eq!(closed, 0.0, "sigma_{k}");
        }
    }
    assert!(worst < 1e-10, "max |closed - quadrature| = {worst:e}");
    assert!((sigma_oracle(&q, 1) - 8.0 / (3.0 * PI)).abs() < 1e-13);
}

#[test]
fn kernel_loadings_match_direct_projection() {
    let q = fine();
    let model = gl_model(64, 0.05);
    let loadings = model.kernel_loadings().unwrap();
    for (i, c) in loadings.iter().enumerate() {
        let k = (i + 1) as f64;
        // <sin * f_k, e_1> e_1 = (.) sqrt(2/pi) sin
        let inner = q.integrate(|x| x.sin() * DELTA * (k * x).sin() / k * DELTA * x.sin());
        let want = inner * DELTA;
        assert!((c - want).abs() < 1e-12, "c_{}: {c} vs {want}", i + 1);
    }
}

#[test]
fn both_noise_conventions_and_the_validated_one() {
    let q = fine();
    let model = gl_model(64, 0.05);
    let coeffs = model.noise_strength().unwrap();
    let alphas = NoiseSpectrum::PowerLaw { exponent: 4.0 }.values(64).unwrap();
    let literal: f64 = (1..=64).map(|k| alphas[k - 1] * sigma_oracle(&q, k).powi(2)).sum();
    // Sigma from projecting G(sin) Q^{1/2} f_k onto the kernel, one direction at a time.
    let projected: f64 = (1..=64)
        .map(|k| {
            let kf = k as f64;
            let c = DELTA * q.integrate(|x| x.sin() * DELTA * (kf * x).sin() / kf * DELTA * x.sin());
            alphas[k - 1] * c * c
        })
        .sum();
    assert!((coeffs.noise_strength(NoiseConvention::Literal) - literal).abs() < 1e-12);
    assert!((coeffs.noise_strength(NoiseConvention::Projected) - projected).abs() < 1e-12);
    assert!((coeffs.sigma_projected - 0.42382).abs() < 5e-6, "{}", coeffs.sigma_projected);
}

#[test]
fn single_mode_noise_strength() {
    let q = fine();
    let model = ModelSpec::ginzburg_landau(16, 1.0, &NoiseSpectrum::Custom(vec![1.0]), 0.1, 0.02).unwrap();
    let coeffs = model.noise_strength().unwrap();
    let s1 = sigma_oracle(&q, 1);
    assert!((coeffs.sigma_literal - s1 * s1).abs() < 1e-13);
    assert!((coeffs.sigma_projected - 2.0 / PI * s1 * s1).abs() < 1e-13);

    let only_two = ModelSpec::ginzburg_landau(16, 1.0, &NoiseSpectrum::Custom(vec![0.0, 1.0]), 0.1, 0.02).unwrap();
    let c = only_two.noise_strength().unwrap();
    assert_eq!(c.sigma_literal, 0.0);
    assert!(c.sigma_projected.abs() < 1e-30);
}

#[test]
fn cubic_matches_quadrature_of_the_pointwise_product() {
    let q = fine();
    for n in [4, 9, 17, 32] {
        let model = gl_model(n, 0.1);
        let u = random_coeffs(n as u64, n, 1.0);
        let v = random_coeffs(100 + n as u64, n, 1.5);
        let w = random_coeffs(200 + n as u64, n, 0.5);
        let got = model
            .eval_cubic(
                &SpectralField::new(u.clone(), 1.0).unwrap(),
                &SpectralField::new(v.clone(), 1.0).unwrap(),
                &SpectralField::new(w.clone(), 1.0).unwrap(),
            )
            .unwrap();
        let want = project(&q, n, |x| -synth(&u, x) * synth(&v, x) * synth(&w, x));
        let err = max_abs_diff(got.coeffs(), &want);
        assert!(err < 1e-10, "N = {n}: {err:e}");
    }
}

#[test]
fn sine_cubed_from_quadrature() {
    let q = fine();
    let model = gl_model(8, 0.1);
    let mut s = vec![0.0; 8];
    s[0] = 1.0 / DELTA;
    let f = SpectralField::new(s, 1.0).unwrap();
    let got = model.eval_cubic(&f, &f, &f).unwrap();
    // coefficients in the sin(kx) basis
    let want: Vec<f64> = (1..=8).map(|k| -2.0 / PI * q.integrate(|y| y.sin().powi(3) * (k as f64 * y).sin())).collect();
    let got_sine: Vec<f64> = got.coeffs().iter().map(|c| c * DELTA).collect();
    assert!(max_abs_diff(&got_sine, &want) < 1e-12);
    assert!((want[0] + 0.75).abs() < 1e-13 && (want[2] - 0.25).abs() < 1e-13);
}

#[test]
fn diffusion_matches_quadrature() {
    let q = fine();
    let n = 24;
    let model = gl_model(n, 0.1);
    let alphas = NoiseSpectrum::PowerLaw { exponent: 4.0 }.values(n).unwrap();
    let u = random_coeffs(5, n, 1.0);
    let field = SpectralField::new(u.clone(), 1.0).unwrap();
    for k in [1, 2, 7, 24] {
        let got = model.apply_diffusion(&field, k).unwrap();
        let kf = k as f64;
        let want = project(&q, n, |x| synth(&u, x) * alphas[k - 1].sqrt() * DELTA * (kf * x).sin() / kf);
        assert!(max_abs_diff(got.coeffs(), &want) < 1e-12, "direction {k}");
    }
    // u = sin, k = 1
    let mut s = vec![0.0; n];
    s[0] = 1.0 / DELTA;
    let got = model.apply_diffusion(&SpectralField::new(s, 1.0).unwrap(), 1).unwrap();
    let want = project(&q, n, |x| alphas[0].sqrt() * x.sin() * DELTA * x.sin());
    assert!(max_abs_diff(got.coeffs(), &want) < 1e-12);
}

/// DST-I through an odd extension and a complex FFT of length 2P.
fn dst_oracle(coeffs: &[f64], p: usize) -> Vec<f64> {
    let mut buf = vec![Complex::new(0.0, 0.0); 2 * p];
    for (k, c) in coeffs.iter().enumerate() {
        buf[k + 1] = Complex::new(c * DELTA, 0.0);
        buf[2 * p - k - 1] = Complex::new(-c * DELTA, 0.0);
    }
    FftPlanner::new().plan_fft_inverse(2 * p).process(&mut buf);
    // sum_k c_k sin(k j pi / P) = Im(ifft) / 2
    (1..p).map(|j| buf[j].im / 2.0).collect()
}

#[test]
fn synthesis_matches_an_external_fft() {
    for n in [1, 5, 32, 64] {
        let coeffs = random_coeffs(n as u64, n, 0.0);
        for grid in [SineGrid::new(n), SineGrid::with_builtin_fft(n)] {
            let p = grid.grid_len() + 1;
            let mut out = vec![0.0; grid.grid_len()];
            let mut scratch = grid.scratch();
            grid.to_grid(&coeffs, &mut out, &mut scratch).unwrap();
            let want = dst_oracle(&coeffs, p);
            assert!(max_abs_diff(&out, &want) < 1e-12, "N = {n}");
            let nodes = grid.nodes();
            assert!((nodes[0] - PI / p as f64).abs() < 1e-15);
        }
    }
}

#[test]
fn backends_agree_on_products() {
    let n = 64;
    let a = random_coeffs(1, n, 1.0);
    let b = random_coeffs(2, n, 1.0);
    let c = random_coeffs(3, n, 1.0);
    let fast = SineGrid::new(n);
    let slow = SineGrid::with_builtin_fft(n);
    for factors in [vec![&a[..]], vec![&a[..], &b[..]], vec![&a[..], &b[..], &c[..]]] {
        let x = fast.product(&factors).unwrap();
        let y = slow.product(&factors).unwrap();
        assert!(max_abs_diff(&x, &y) < 1e-13);
    }
}
