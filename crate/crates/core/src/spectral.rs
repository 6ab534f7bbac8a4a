//! Eigenbasis representation of the scale `H^alpha` for a diagonal,
//! self-adjoint, non-positive operator `A` with `A e_k = -lambda_k e_k`.
//!
//! Mode `k` (1-based, as in the eigenbasis) is stored at index `k - 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math comes from libm without std
use num_traits::Float;

use crate::error::{check_len, Error, Result};

/// Truncated spectrum of `-A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    eigenvalues: Vec<f64>,
    kernel_dim: usize,
    growth_exponent: f64,
    growth_constant: f64,
    growth_threshold: usize,
    rho: f64,
}

impl SpectrumSpec {
    /// Builds a spectrum from `0 = lambda_1 <= lambda_2 <= ...`.
    ///
    /// `growth_threshold` is the first mode from which `lambda_k >= C k^m` is
    /// required; the largest admissible `C` on the truncated range is recorded.
    /// The gap shift `rho` defaults to `lambda_{n+1}`.
    pub fn new(eigenvalues: Vec<f64>, growth_exponent: f64, growth_threshold: usize) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidSpectrum("no modes".into()));
        }
        if !(growth_exponent > 0.0 && growth_exponent.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("growth exponent m = {growth_exponent} must be > 0")));
        }
        if eigenvalues.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidSpectrum("eigenvalues must be finite and non-negative".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpectrum("eigenvalues must be non-decreasing".into()));
        }
        if eigenvalues[0] != 0.0 {
            return Err(Error::InvalidSpectrum("lambda_1 must be 0 (non-trivial kernel)".into()));
        }
        let kernel_dim = eigenvalues.iter().take_while(|l| **l == 0.0).count();
        if kernel_dim == eigenvalues.len() {
            return Err(Error::InvalidSpectrum("truncation has no stable modes".into()));
        }
        let threshold = growth_threshold.max(kernel_dim + 1);
        if threshold > eigenvalues.len() {
            return Err(Error::InvalidSpectrum(format!(
                "growth threshold {threshold} beyond truncation {}",
                eigenvalues.len()
            )));
        }
        let growth_constant = (threshold..=eigenvalues.len())
            .map(|k| eigenvalues[k - 1] / (k as f64).powf(growth_exponent))
            .fold(f64::INFINITY, f64::min);
        if !(growth_constant > 0.0) {
            return Err(Error::InvalidSpectrum("growth condition lambda_k >= C k^m fails".into()));
        }
        let rho = eigenvalues[kernel_dim];
        Ok(Self {
            eigenvalues,
            kernel_dim,
            growth_exponent,
            growth_constant,
            growth_threshold: threshold,
            rho,
        })
    }

    /// Dirichlet Laplacian plus one on `[0, pi]`: `lambda_k = k^2 - 1`, `m = 2`.
    pub fn ginzburg_landau(n_modes: usize) -> Result<Self> {
        let eigenvalues = (1..=n_modes).map(|k| (k * k) as f64 - 1.0).collect();
        Self::new(eigenvalues, 2.0, 2)
    }

    /// Replaces the decay rate, which must lie in `(lambda_n, lambda_{n+1}]`.
    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        let lo = self.eigenvalues[self.kernel_dim - 1];
        let hi = self.eigenvalues[self.kernel_dim];
        if !(rho > lo && rho <= hi) {
            return Err(Error::InvalidSpectrum(format!("rho = {rho} outside ({lo}, {hi}]")));
        }
        self.rho = rho;
        Ok(self)
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `lambda_k` for 1-based `k`.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.n_modes() {
            return Err(Error::Index { index: k, max: self.n_modes() });
        }
        Ok(self.eigenvalues[k - 1])
    }

    pub fn growth_exponent(&self) -> f64 {
        self.growth_exponent
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    pub fn growth_threshold(&self) -> usize {
        self.growth_threshold
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Per-mode weights `(lambda_k + 1)^alpha` of the squared `alpha`-norm.
    pub fn norm_weights(&self, alpha: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| (l + 1.0).powf(alpha)).collect()
    }

    /// Per-mode factors `exp(-lambda_k t)`.
    pub fn semigroup_factors(&self, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("semigroup time t = {t} must be >= 0")));
        }
        Ok(self.eigenvalues.iter().map(|l| (-l * t).exp()).collect())
    }
}

/// A truncated element of `H^alpha`: real coefficients in the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
    alpha: f64,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>, alpha: f64) -> Result<Self> {
        let field = Self { coeffs, alpha };
        field.validate()?;
        Ok(field)
    }

    pub fn zeros(n_modes: usize, alpha: f64) -> Self {
        Self { coeffs: vec![0.0; n_modes], alpha }
    }

    /// The basis vector `e_k` (1-based).
    pub fn basis(n_modes: usize, k: usize, alpha: f64) -> Result<Self> {
        if k == 0 || k > n_modes {
            return Err(Error::Index { index: k, max: n_modes });
        }
        let mut field = Self::zeros(n_modes, alpha);
        field.coeffs[k - 1] = 1.0;
        Ok(field)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn alpha_index(&self) -> f64 {
        self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidField(format!("coefficient of mode {} is not finite", i + 1)));
        }
        Ok(())
    }

    fn check_spectrum(&self, spec: &SpectrumSpec) -> Result<()> {
        check_len(spec.n_modes(), self.len())
    }

    /// `( sum_k gamma_k^2 (lambda_k + 1)^alpha )^(1/2)`.
    pub fn alpha_norm(&self, spec: &SpectrumSpec, alpha: f64) -> Result<f64> {
        self.check_spectrum(spec)?;
        self.validate()?;
        Ok(self
            .coeffs
            .iter()
            .zip(spec.eigenvalues())
            .map(|(c, l)| c * c * (l + 1.0).powf(alpha))
            .sum::<f64>()
            .sqrt())
    }

    /// Norm with precomputed weights from [`SpectrumSpec::norm_weights`].
    pub fn weighted_norm(&self, weights: &[f64]) -> f64 {
        weighted_norm(&self.coeffs, weights)
    }

    /// `H = H^0` inner product.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    /// `P_c`: keeps the kernel modes `k <= n`.
    pub fn project_kernel(&self, spec: &SpectrumSpec) -> Result<Self> {
        self.check_spectrum(spec)?;
        self.validate()?;
        let mut out = self.clone();
        out.coeffs[spec.kernel_dim()..].iter_mut().for_each(|c| *c = 0.0);
        Ok(out)
    }

    /// `P_s`: keeps the stable modes `k > n`.
    pub fn project_stable(&self, spec: &SpectrumSpec) -> Result<Self> {
        self.check_spectrum(spec)?;
        self.validate()?;
        let mut out = self.clone();
        out.coeffs[..spec.kernel_dim()].iter_mut().for_each(|c| *c = 0.0);
        Ok(out)
    }

    /// `e^{At} f`.
    pub fn apply_semigroup(&self, spec: &SpectrumSpec, t: f64) -> Result<Self> {
        self.check_spectrum(spec)?;
        let factors = spec.semigroup_factors(t)?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&factors).for_each(|(c, f)| *c *= f);
        out.validate()?;
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * factor).collect(), alpha: self.alpha }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { coeffs, alpha: self.alpha })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { coeffs, alpha: self.alpha })
    }
}

pub(crate) fn weighted_norm(coeffs: &[f64], weights: &[f64]) -> f64 {
    coeffs.iter().zip(weights).map(|(c, w)| c * c * w).sum::<f64>().sqrt()
}

/// Empirical constant of the analytic-semigroup estimate on the stable space,
///
/// `max ||e^{At} P_s f||_alpha * t^{(alpha - beta)/m} * e^{rho t} / ||P_s f||_beta`
///
/// over all sampled times and fields. Fields with `P_s f = 0` carry no
/// information and are skipped.
pub fn check_semigroup_bound(
    spec: &SpectrumSpec,
    alpha: f64,
    beta: f64,
    t_samples: &[f64],
    field_samples: &[SpectralField],
) -> Result<f64> {
    if t_samples.is_empty() || field_samples.is_empty() {
        return Err(Error::Config("semigroup bound needs at least one time and one field".into()));
    }
    if beta > alpha {
        return Err(Error::Config(format!("need beta <= alpha, got beta = {beta}, alpha = {alpha}")));
    }
    let exponent = (alpha - beta) / spec.growth_exponent();
    let mut worst: Option<f64> = None;
    for field in field_samples {
        let stable = field.project_stable(spec)?;
        let base = stable.alpha_norm(spec, beta)?;
        if base == 0.0 {
            continue;
        }
        for &t in t_samples {
            let evolved = stable.apply_semigroup(spec, t)?.alpha_norm(spec, alpha)?;
            let ratio = evolved * t.powf(exponent) * (spec.rho() * t).exp() / base;
            worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
        }
    }
    worst.ok_or_else(|| Error::Config("every sampled field has a zero stable part".into()))
}
