//! The stochastic Ginzburg–Landau / Allen–Cahn instance on `[0, pi]`,
//!
//! `du = [(d_xx + 1) u + eps^2 nu u - u^3] dt + eps u dW`,
//!
//! with Dirichlet boundary conditions, `W` a cylindrical Wiener process on
//! `H^1` expanded in `f_k = e_k / k`, covariance `Q f_k = alpha_k f_k`, and
//! diffusion `G(u) v = u * Q^{1/2} v`. The reduced amplitude `b = gamma sin`
//! obeys `d gamma = [nu gamma - 3/4 gamma^3] dT + gamma Sigma^{1/2} d beta`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // f64 math comes from libm without std
use num_traits::Float;

use crate::error::{check_len, Error, Result};
use crate::spectral::{SpectralField, SpectrumSpec};
use crate::transform::{GridScratch, SineGrid, DIRICHLET_NORM};

/// Family of covariance eigenvalues `alpha_k` of `Q` in the `f_k` basis.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpectrum {
    /// `alpha_k proportional to k^{-exponent}`, normalized to unit trace over the truncation.
    PowerLaw { exponent: f64 },
    /// Explicit `alpha_1, alpha_2, ...`; missing entries are zero.
    Custom(Vec<f64>),
    Zero,
}

impl NoiseSpectrum {
    pub fn values(&self, n_modes: usize) -> Result<Vec<f64>> {
        let values = match self {
            Self::PowerLaw { exponent } => {
                if !(exponent.is_finite() && *exponent > 1.0) {
                    return Err(Error::InvalidSpectrum(format!(
                        "power-law exponent {exponent} must exceed 1 for a finite trace"
                    )));
                }
                let raw: Vec<f64> = (1..=n_modes).map(|k| (k as f64).powf(-exponent)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|a| a / total).collect()
            }
            Self::Custom(values) => {
                if values.len() > n_modes {
                    return Err(Error::Shape { expected: n_modes, got: values.len() });
                }
                let mut out = values.clone();
                out.resize(n_modes, 0.0);
                out
            }
            Self::Zero => vec![0.0; n_modes],
        };
        if let Some(k) = values.iter().position(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidSpectrum(format!("alpha_{} = {} is not a valid variance", k + 1, values[k])));
        }
        Ok(values)
    }
}

/// Which factor relates `P_c[sin f_k]` to `sigma_k sin` when forming `Sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseConvention {
    /// `P_c[sin f_k] = sqrt(2/pi) sigma_k sin`, as obtained by direct projection
    /// with `f_k = sqrt(2/pi) sin(kx) / k`. Used by every downstream consumer.
    Projected,
    /// `P_c[sin f_k] = sigma_k sin`, i.e. `Sigma = sum alpha_k sigma_k^2` without the `2/pi`.
    Literal,
}

/// Concrete problem instance.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    spectrum: SpectrumSpec,
    nu: f64,
    noise: Vec<f64>,
    epsilon: f64,
    kappa: f64,
    alpha_index: f64,
    cubic: bool,
    diffusion: bool,
    grid: SineGrid,
    /// Sine-basis amplitude of `sqrt(alpha_k) f_k`, i.e. `sqrt(alpha_k) sqrt(2/pi) / k`.
    noise_profile: Vec<f64>,
}

impl ModelSpec {
    pub fn new(spectrum: SpectrumSpec, nu: f64, noise: Vec<f64>, epsilon: f64, kappa: f64) -> Result<Self> {
        check_len(spectrum.n_modes(), noise.len())?;
        if !nu.is_finite() {
            return Err(Error::Config(format!("nu = {nu} must be finite")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        if !(kappa > 0.0 && kappa < 1.0 / 19.0) {
            return Err(Error::Config(format!("kappa = {kappa} must lie in (0, 1/19)")));
        }
        if let Some(k) = noise.iter().position(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidSpectrum(format!("alpha_{} = {} is not a valid variance", k + 1, noise[k])));
        }
        let grid = SineGrid::new(spectrum.n_modes());
        let mut model = Self {
            spectrum,
            nu,
            noise,
            epsilon,
            kappa,
            alpha_index: 1.0,
            cubic: true,
            diffusion: true,
            grid,
            noise_profile: Vec::new(),
        };
        model.refresh_noise_profile();
        Ok(model)
    }

    /// GL instance with `lambda_k = k^2 - 1`.
    pub fn ginzburg_landau(n_modes: usize, nu: f64, noise: &NoiseSpectrum, epsilon: f64, kappa: f64) -> Result<Self> {
        let spectrum = SpectrumSpec::ginzburg_landau(n_modes)?;
        let noise = noise.values(n_modes)?;
        Self::new(spectrum, nu, noise, epsilon, kappa)
    }

    fn refresh_noise_profile(&mut self) {
        let on = if self.diffusion { 1.0 } else { 0.0 };
        self.noise_profile = self
            .noise
            .iter()
            .enumerate()
            .map(|(i, a)| on * a.sqrt() * DIRICHLET_NORM / (i + 1) as f64)
            .collect();
    }

    pub fn with_alpha_index(mut self, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Config("alpha index must be finite".into()));
        }
        self.alpha_index = alpha;
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon = {epsilon} must lie in (0, 1)")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// `F = 0` when disabled.
    pub fn with_cubic(mut self, on: bool) -> Self {
        self.cubic = on;
        self
    }

    /// `G = 0` when disabled.
    pub fn with_diffusion(mut self, on: bool) -> Self {
        self.diffusion = on;
        self.refresh_noise_profile();
        self
    }

    pub fn spectrum(&self) -> &SpectrumSpec {
        &self.spectrum
    }

    pub fn n_modes(&self) -> usize {
        self.spectrum.n_modes()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn alpha_index(&self) -> f64 {
        self.alpha_index
    }

    pub fn cubic_enabled(&self) -> bool {
        self.cubic
    }

    pub fn diffusion_enabled(&self) -> bool {
        self.diffusion
    }

    /// `alpha_k`, `k = 1..=N`, as configured (regardless of the diffusion switch).
    pub fn noise_spectrum(&self) -> &[f64] {
        &self.noise
    }

    pub fn domain_length(&self) -> f64 {
        PI
    }

    /// Number of interior quadrature nodes of the dealiasing grid.
    pub fn quadrature_points(&self) -> usize {
        self.grid.grid_len()
    }

    pub fn grid(&self) -> &SineGrid {
        &self.grid
    }

    pub fn trace(&self) -> f64 {
        self.noise.iter().sum()
    }

    fn check_field(&self, f: &SpectralField) -> Result<()> {
        check_len(self.n_modes(), f.len())?;
        f.validate()
    }

    /// `F(u, v, w) = -u v w`, projected onto the retained modes.
    pub fn eval_cubic(&self, u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
        for f in [u, v, w] {
            self.check_field(f)?;
        }
        let mut out = self.grid.product(&[u.coeffs(), v.coeffs(), w.coeffs()])?;
        out.iter_mut().for_each(|c| *c = -*c);
        SpectralField::new(out, u.alpha_index())
    }

    /// `P_c F(a)` for `a` in the kernel; for `a = gamma sin` this is `-3/4 gamma^3 sin`.
    pub fn eval_cubic_kernel(&self, a: &SpectralField) -> Result<SpectralField> {
        self.check_field(a)?;
        let n = self.spectrum.kernel_dim();
        if a.coeffs()[n..].iter().any(|c| *c != 0.0) {
            return Err(Error::Domain("argument has stable components".into()));
        }
        if n == 1 {
            let gamma = DIRICHLET_NORM * a.coeffs()[0];
            let mut out = SpectralField::zeros(self.n_modes(), a.alpha_index());
            out.coeffs_mut()[0] = kernel_cubic(gamma) / DIRICHLET_NORM;
            return Ok(out);
        }
        self.eval_cubic(a, a, a)?.project_kernel(&self.spectrum)
    }

    /// `sqrt(alpha_k) (u * f_k)`: the diffusion operator applied to direction `f_k`.
    pub fn apply_diffusion(&self, u: &SpectralField, k: usize) -> Result<SpectralField> {
        self.check_field(u)?;
        if k == 0 || k > self.n_modes() {
            return Err(Error::Index { index: k, max: self.n_modes() });
        }
        let mut direction = vec![0.0; self.n_modes()];
        direction[k - 1] = self.noise_profile[k - 1] / DIRICHLET_NORM;
        let out = self.grid.product(&[u.coeffs(), &direction])?;
        SpectralField::new(out, u.alpha_index())
    }

    /// `sum_k sqrt(alpha_k) (u * f_k) dB_k` into `out`, using one grid product.
    ///
    /// `grid_u`, `grid_eta` are caller-provided buffers of length `quadrature_points()`.
    pub fn diffusion_increment(
        &self,
        u: &[f64],
        increments: &[f64],
        out: &mut [f64],
        buffers: &mut ProductBuffers,
    ) -> Result<()> {
        check_len(self.n_modes(), u.len())?;
        check_len(self.n_modes(), increments.len())?;
        self.noise_coefficients(increments, &mut buffers.eta_coeffs);
        let ProductBuffers { grid_a, grid_b, eta_coeffs, scratch } = buffers;
        self.grid.to_grid_pair(u, eta_coeffs, grid_a, grid_b, scratch)?;
        grid_a.iter_mut().zip(grid_b.iter()).for_each(|(a, b)| *a *= b);
        self.grid.from_grid_even(grid_a, out, scratch)
    }

    /// `e`-coefficients of `eta = sum_k sqrt(alpha_k) f_k dB_k`.
    pub(crate) fn noise_coefficients(&self, increments: &[f64], out: &mut [f64]) {
        // sqrt(alpha_k) f_k = (noise_profile_k / sqrt(2/pi)) e_k
        for ((o, p), db) in out.iter_mut().zip(&self.noise_profile).zip(increments) {
            *o = p / DIRICHLET_NORM * db;
        }
    }

    /// Reduced coefficients, with `Sigma` computed in both conventions.
    pub fn noise_strength(&self) -> Result<ReducedCoefficients> {
        let n = self.n_modes();
        let alphas: Vec<f64> = if self.diffusion { self.noise.clone() } else { vec![0.0; n] };
        let sigma = (1..=n).map(sigma_k).collect::<Result<Vec<_>>>()?;
        let loading = self.kernel_loadings()?;
        let literal = alphas.iter().zip(&sigma).map(|(a, s)| a * s * s).sum();
        let projected: f64 = alphas.iter().zip(&loading).map(|(a, c)| a * c * c).sum();
        let weights = alphas.iter().zip(&loading).map(|(a, c)| a.sqrt() * c).collect();
        let literal_weights = alphas.iter().zip(&sigma).map(|(a, s)| a.sqrt() * s).collect();
        Ok(ReducedCoefficients {
            sigma,
            kernel_loading: loading,
            noise_weights: weights,
            literal_noise_weights: literal_weights,
            sigma_projected: projected,
            sigma_literal: literal,
            cubic_coeff: if self.cubic { -0.75 } else { 0.0 },
            drift_coeff: self.nu,
        })
    }

    /// `c_k` with `P_c[sin f_k] = c_k sin`, by direct projection of the grid product.
    pub fn kernel_loadings(&self) -> Result<Vec<f64>> {
        let n = self.n_modes();
        let mut sine = vec![0.0; n];
        sine[0] = 1.0 / DIRICHLET_NORM;
        let mut out = Vec::with_capacity(n);
        let mut direction = vec![0.0; n];
        for k in 1..=n {
            direction.iter_mut().for_each(|d| *d = 0.0);
            direction[k - 1] = 1.0 / k as f64;
            let prod = self.grid.product(&[&sine, &direction])?;
            // e_1-coefficient x means x e_1 = x sqrt(2/pi) sin
            out.push(prod[0] * DIRICHLET_NORM);
        }
        Ok(out)
    }

    /// Rows `(k, lambda_k, alpha_k, sigma_k, c_k)` for export.
    pub fn coefficient_table(&self) -> Result<Vec<CoefficientRow>> {
        let loading = self.kernel_loadings()?;
        (1..=self.n_modes())
            .map(|k| {
                Ok(CoefficientRow {
                    k,
                    lambda: self.spectrum.eigenvalues()[k - 1],
                    alpha: self.noise[k - 1],
                    sigma: sigma_k(k)?,
                    loading: loading[k - 1],
                })
            })
            .collect()
    }

    /// Checks the sign conditions of the cubic on the kernel and searches
    /// constants for the coercivity-type inequality
    /// `<F_c(u,v,w) - F_c(v), u> <= -C0 |u|^4 + C1 |w|^4 + C2 |w|^2 |v|^2`.
    ///
    /// Samples are projected onto the kernel before use.
    pub fn check_assumption3(&self, samples: &[(SpectralField, SpectralField, SpectralField)]) -> Result<Assumption3Report> {
        let spec = &self.spectrum;
        let mut report = Assumption3Report {
            samples: samples.len(),
            max_energy: f64::NEG_INFINITY,
            max_cross: f64::NEG_INFINITY,
            energy_violations: 0,
            cross_violations: 0,
            coercivity: CoercivityReport::default(),
        };
        let mut rows = Vec::with_capacity(samples.len());
        for (u, v, w) in samples {
            let u = u.project_kernel(spec)?;
            let v = v.project_kernel(spec)?;
            let w = w.project_kernel(spec)?;
            let nu2 = u.inner(&u)?;
            let nv2 = v.inner(&v)?;
            let nw2 = w.inner(&w)?;
            let energy = self.eval_cubic(&u, &u, &u)?.project_kernel(spec)?.inner(&u)?;
            let cross = self.eval_cubic(&u, &u, &w)?.project_kernel(spec)?.inner(&w)?;
            let tol = 1e-13 * (nu2 * nu2 + nu2 * nw2);
            report.max_energy = report.max_energy.max(energy);
            report.max_cross = report.max_cross.max(cross);
            if energy > tol {
                report.energy_violations += 1;
            }
            if cross > tol {
                report.cross_violations += 1;
            }
            let lhs = self.eval_cubic(&u, &v, &w)?.sub(&self.eval_cubic(&v, &v, &v)?)?.project_kernel(spec)?.inner(&u)?;
            rows.push((lhs, nu2 * nu2, nw2 * nw2, nw2 * nv2));
        }
        report.coercivity = search_coercivity_constants(&rows);
        Ok(report)
    }
}

/// `-3/4 gamma^3`: the kernel cubic in amplitude coordinates `b = gamma sin`.
pub fn kernel_cubic(gamma: f64) -> f64 {
    -0.75 * gamma * gamma * gamma
}

/// `sigma_k = (4/pi) (cos(k pi) - 1) / (k^2 (k^2 - 4))` for `k != 2`, `sigma_2 = 0`.
pub fn sigma_k(k: usize) -> Result<f64> {
    match k {
        0 => Err(Error::Domain("sigma_k is defined for k >= 1".into())),
        2 => Ok(0.0),
        _ => {
            let cos_term = if k % 2 == 0 { 0.0 } else { -2.0 };
            let kf = k as f64;
            Ok(4.0 / PI * cos_term / (kf * kf * (kf * kf - 4.0)))
        }
    }
}

/// Buffers for [`ModelSpec::diffusion_increment`] and the cubic evaluation in the solver.
#[derive(Debug, Clone)]
pub struct ProductBuffers {
    pub(crate) grid_a: Vec<f64>,
    pub(crate) grid_b: Vec<f64>,
    pub(crate) eta_coeffs: Vec<f64>,
    pub(crate) scratch: GridScratch,
}

impl ProductBuffers {
    pub fn new(model: &ModelSpec) -> Self {
        let g = model.grid();
        Self {
            grid_a: vec![0.0; g.grid_len()],
            grid_b: vec![0.0; g.grid_len()],
            eta_coeffs: vec![0.0; model.n_modes()],
            scratch: g.scratch(),
        }
    }
}

/// Coefficients of the reduced amplitude SDE.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCoefficients {
    /// Closed-form `sigma_k`, `k = 1..=N`.
    pub sigma: Vec<f64>,
    /// `c_k` with `P_c[sin f_k] = c_k sin`, from direct projection.
    pub kernel_loading: Vec<f64>,
    /// `sqrt(alpha_k) c_k`.
    pub noise_weights: Vec<f64>,
    /// `sqrt(alpha_k) sigma_k`.
    pub literal_noise_weights: Vec<f64>,
    /// `sum alpha_k c_k^2`; the value used downstream.
    pub sigma_projected: f64,
    /// `sum alpha_k sigma_k^2`.
    pub sigma_literal: f64,
    pub cubic_coeff: f64,
    pub drift_coeff: f64,
}

impl ReducedCoefficients {
    pub fn noise_strength(&self, convention: NoiseConvention) -> f64 {
        match convention {
            NoiseConvention::Projected => self.sigma_projected,
            NoiseConvention::Literal => self.sigma_literal,
        }
    }

    pub fn weights(&self, convention: NoiseConvention) -> &[f64] {
        match convention {
            NoiseConvention::Projected => &self.noise_weights,
            NoiseConvention::Literal => &self.literal_noise_weights,
        }
    }

    /// Scalar coefficients for experiments that bypass a model instance.
    pub fn scalar(drift_coeff: f64, cubic_coeff: f64, sigma: f64) -> Self {
        Self {
            sigma: Vec::new(),
            kernel_loading: Vec::new(),
            noise_weights: vec![sigma.sqrt()],
            literal_noise_weights: vec![sigma.sqrt()],
            sigma_projected: sigma,
            sigma_literal: sigma,
            cubic_coeff,
            drift_coeff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientRow {
    pub k: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assumption3Report {
    pub samples: usize,
    /// `max <F_c(u), u>`; must be `<= 0`.
    pub max_energy: f64,
    /// `max <F_c(u, u, w), w>`; must be `<= 0`.
    pub max_cross: f64,
    pub energy_violations: usize,
    pub cross_violations: usize,
    pub coercivity: CoercivityReport,
}

impl Assumption3Report {
    pub fn sign_conditions_hold(&self) -> bool {
        self.energy_violations == 0 && self.cross_violations == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoercivityReport {
    pub feasible: bool,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// First sample that no admissible constants can satisfy.
    pub witness: Option<usize>,
}

/// Rows are `(lhs, |u|^4, |w|^4, |w|^2 |v|^2)`. Scans `C0` and `C2` on log
/// grids, takes the smallest `C1` that works, and keeps the largest feasible
/// `C0` (ties broken by the smallest `C1 + C2`).
fn search_coercivity_constants(rows: &[(f64, f64, f64, f64)]) -> CoercivityReport {
    let c0_grid: Vec<f64> = (0..=12).map(|i| 10f64.powf(1.0 - 0.5 * i as f64)).collect();
    let mut c2_grid: Vec<f64> = vec![0.0];
    c2_grid.extend((0..=16).map(|i| 10f64.powf(-4.0 + 0.5 * i as f64)));
    let mut witness = None;
    for &c0 in &c0_grid {
        let mut best: Option<(f64, f64)> = None;
        for &c2 in &c2_grid {
            let mut c1: f64 = 0.0;
            let mut ok = true;
            for (i, &(lhs, u4, w4, wv)) in rows.iter().enumerate() {
                let need = lhs + c0 * u4 - c2 * wv;
                if need <= 0.0 {
                    continue;
                }
                if w4 > 0.0 {
                    c1 = c1.max(need / w4);
                } else {
                    ok = false;
                    witness.get_or_insert(i);
                    break;
                }
            }
            if ok && best.map_or(true, |(b1, b2)| c1 + c2 < b1 + b2) {
                best = Some((c1, c2));
            }
        }
        if let Some((c1, c2)) = best {
            return CoercivityReport { feasible: true, c0, c1, c2, witness: None };
        }
    }
    CoercivityReport { feasible: false, c0: 0.0, c1: 0.0, c2: 0.0, witness }
}
