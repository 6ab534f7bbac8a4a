//! Time integration of the full equation (exponential Euler–Maruyama on the
//! mild form) and of the scalar amplitude SDE (Euler–Maruyama), plus closed
//! form references for the linear and the noise-free amplitude equation.
//!
//! One fast step of size `dt` is
//!
//! `u+ = e^{A dt} [ u + dt (eps^2 nu u + F(u)) + eps G(u) dW ]`,
//!
//! which is exact on the diagonal linear part and places the noise before the
//! semigroup factor, as in the stochastic convolution. Itô throughout.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math comes from libm without std
use num_traits::Float;

use crate::error::{check_len, Error, Result};
use crate::model::{ModelSpec, NoiseConvention, ReducedCoefficients};
use crate::noise::{reduce_increments, Checksum, NoisePath, ReducedPath};
use crate::spectral::{weighted_norm, SpectralField};
use crate::transform::{GridScratch, DIRICHLET_NORM};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Fast-time step; rounded down so that `T0 / (eps^2 dt)` is an integer.
    pub dt_fast: f64,
    /// Slow-time horizon `T0`.
    pub t0: f64,
    /// `||u||_alpha` above this declares blow-up.
    pub blowup_guard: f64,
    pub record_stride: usize,
    /// Fast steps per amplitude step.
    pub amplitude_block: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dt_fast: 0.05, t0: 1.0, blowup_guard: 1e6, record_stride: 1, amplitude_block: 1 }
    }
}

/// Resolved step sizes for one `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub epsilon: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub t0: f64,
    pub block: usize,
}

impl StepPlan {
    /// Slow-time step of the amplitude equation, `eps^2 dt block`.
    pub fn slow_dt(&self) -> f64 {
        self.epsilon * self.epsilon * self.dt * self.block as f64
    }

    pub fn n_slow_steps(&self) -> usize {
        self.n_steps / self.block
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_fast > 0.0 && self.dt_fast.is_finite()) {
            return Err(Error::Config(format!("dt_fast = {} must be positive", self.dt_fast)));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::Config(format!("T0 = {} must be positive", self.t0)));
        }
        if !(self.blowup_guard > 0.0) {
            return Err(Error::Config("blow-up guard must be positive".into()));
        }
        if self.record_stride == 0 || self.amplitude_block == 0 {
            return Err(Error::Config("record stride and amplitude block must be >= 1".into()));
        }
        Ok(())
    }

    pub fn plan(&self, epsilon: f64) -> Result<StepPlan> {
        self.validate()?;
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon = {epsilon} must be positive")));
        }
        let horizon = self.t0 / (epsilon * epsilon);
        let block = self.amplitude_block;
        let raw = (horizon / self.dt_fast * (1.0 - 1e-12)).ceil() as usize;
        let n_steps = raw.div_ceil(block).max(1) * block;
        Ok(StepPlan { epsilon, dt: horizon / n_steps as f64, n_steps, t0: self.t0, block })
    }
}

/// Reusable state for repeated full steps at a fixed `dt`.
#[derive(Debug, Clone)]
pub struct FullStepper<'a> {
    model: &'a ModelSpec,
    dt: f64,
    decay: Vec<f64>,
    grid_u: Vec<f64>,
    grid_eta: Vec<f64>,
    eta: Vec<f64>,
    delta: Vec<f64>,
    delta_noise: Vec<f64>,
    scratch: GridScratch,
}

impl<'a> FullStepper<'a> {
    pub fn new(model: &'a ModelSpec, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt = {dt} must be positive")));
        }
        let g = model.grid();
        Ok(Self {
            model,
            dt,
            decay: model.spectrum().semigroup_factors(dt)?,
            grid_u: vec![0.0; g.grid_len()],
            grid_eta: vec![0.0; g.grid_len()],
            eta: vec![0.0; model.n_modes()],
            delta: vec![0.0; model.n_modes()],
            delta_noise: vec![0.0; model.n_modes()],
            scratch: g.scratch(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `u` in place by one step driven by the increments `dB_k`, `k = 1..=N`.
    pub fn step(&mut self, u: &mut [f64], increments: &[f64]) -> Result<()> {
        let model = self.model;
        let n = model.n_modes();
        check_len(n, u.len())?;
        if increments.len() < n {
            return Err(Error::Shape { expected: n, got: increments.len() });
        }
        let eps = model.epsilon();
        let (cubic, diffusion) = (model.cubic_enabled(), model.diffusion_enabled());
        let zero = u.iter().all(|x| *x == 0.0);
        self.delta.iter_mut().for_each(|d| *d = 0.0);
        if (cubic || diffusion) && !zero {
            let grid = model.grid();
            if diffusion {
                model.noise_coefficients(&increments[..n], &mut self.eta);
                grid.to_grid_pair(u, &self.eta, &mut self.grid_u, &mut self.grid_eta, &mut self.scratch)?;
            } else {
                grid.to_grid(u, &mut self.grid_u, &mut self.scratch)?;
            }
            let dt = self.dt;
            // odd part (cubic) stays in grid_u, even part (noise) goes to grid_eta
            for (x, e) in self.grid_u.iter_mut().zip(self.grid_eta.iter_mut()) {
                let v = *x;
                *x = if cubic { -dt * v * v * v } else { 0.0 };
                *e = if diffusion { eps * v * *e } else { 0.0 };
            }
            grid.from_grid_split(&self.grid_u, &self.grid_eta, &mut self.delta, &mut self.delta_noise, &mut self.scratch)?;
            self.delta.iter_mut().zip(&self.delta_noise).for_each(|(d, e)| *d += e);
        }
        let linear = self.dt * eps * eps * model.nu();
        for ((x, d), decay) in u.iter_mut().zip(&self.delta).zip(&self.decay) {
            *x = decay * (*x + linear * *x + d);
        }
        Ok(())
    }
}

/// One exponential Euler–Maruyama step of the full equation.
pub fn step_full(u: &SpectralField, dt: f64, noise_slice: &[f64], model: &ModelSpec) -> Result<SpectralField> {
    u.validate()?;
    let mut stepper = FullStepper::new(model, dt)?;
    let mut next = u.coeffs().to_vec();
    stepper.step(&mut next, noise_slice)?;
    SpectralField::new(next, u.alpha_index())
}

/// Trajectory of the full equation on the slow grid, split as `u = eps a + eps psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub epsilon: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub t0: f64,
    pub dt_fast: f64,
    pub record_stride: usize,
    pub n_modes: usize,
    pub kernel_dim: usize,
    pub eigenvalues: Vec<f64>,
    /// Slow time `T = eps^2 t` of each record.
    pub slow_times: Vec<f64>,
    /// Fast step index of each record.
    pub steps: Vec<usize>,
    /// `u` at each record, row-major `n_records x n_modes`.
    pub full_states: Vec<f64>,
    /// `psi(0) = P_s u(0) / eps`.
    pub psi0: Vec<f64>,
    pub norm_a: Vec<f64>,
    pub norm_psi: Vec<f64>,
    /// `||Q(T)||_alpha` with `Q(T) = e^{A_s T / eps^2} psi(0)`.
    pub norm_q: Vec<f64>,
    /// Amplitude `gamma` of `b = gamma sin` at each record, once attached.
    pub amplitude: Option<Vec<f64>>,
    /// First slow time with `||a||_alpha` or `||psi||_alpha` above `eps^-kappa`, else `T0`.
    pub tau_star: f64,
    pub tau_star_hit: bool,
    pub blowup: bool,
    pub noise_checksum: u64,
}

impl TrajectoryRecord {
    pub fn n_records(&self) -> usize {
        self.slow_times.len()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.full_states[i * self.n_modes..(i + 1) * self.n_modes]
    }

    /// `a = P_c u / eps`.
    pub fn a(&self, i: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self.state(i).iter().map(|x| x / self.epsilon).collect();
        out[self.kernel_dim..].iter_mut().for_each(|x| *x = 0.0);
        out
    }

    /// `psi = P_s u / eps`.
    pub fn psi(&self, i: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self.state(i).iter().map(|x| x / self.epsilon).collect();
        out[..self.kernel_dim].iter_mut().for_each(|x| *x = 0.0);
        out
    }

    /// `Q(T_i) = e^{A_s T_i / eps^2} psi(0)`.
    pub fn semigroup_tail(&self, i: usize) -> Vec<f64> {
        let t = self.steps[i] as f64 * self.dt_fast;
        self.psi0.iter().zip(&self.eigenvalues).map(|(p, l)| p * (-l * t).exp()).collect()
    }

    pub fn norm_weights(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| (l + 1.0).powf(self.alpha)).collect()
    }

    /// `b` in `e`-coefficients at record `i`.
    pub fn amplitude_field(&self, i: usize) -> Option<Vec<f64>> {
        let gamma = self.amplitude.as_ref()?[i];
        let mut out = vec![0.0; self.n_modes];
        out[0] = gamma / DIRICHLET_NORM;
        Some(out)
    }

    /// Samples the amplitude series at the recorded fast steps.
    pub fn attach_amplitude(&mut self, series: &AmplitudeSeries, block: usize) -> Result<()> {
        if self.kernel_dim != 1 {
            return Err(Error::Alignment("scalar amplitude needs a one-dimensional kernel".into()));
        }
        let mut gamma = Vec::with_capacity(self.n_records());
        for (&step, &t) in self.steps.iter().zip(&self.slow_times) {
            if step % block != 0 {
                return Err(Error::Alignment(format!("record at fast step {step} is not on the amplitude grid")));
            }
            let j = step / block;
            let Some(&g) = series.gamma.get(j) else {
                return Err(Error::Alignment(format!("amplitude series too short for step {step}")));
            };
            if (series.slow_times[j] - t).abs() > 1e-9 * t.max(1.0) {
                return Err(Error::Alignment(format!("slow times differ at step {step}")));
            }
            gamma.push(g);
        }
        self.amplitude = Some(gamma);
        Ok(())
    }
}

/// Integrates the full equation over `[0, eps^-2 T0]` (or until blow-up).
pub fn simulate_full(u0: &SpectralField, cfg: &SolverConfig, path: &NoisePath, model: &ModelSpec) -> Result<TrajectoryRecord> {
    u0.validate()?;
    let n = model.n_modes();
    check_len(n, u0.len())?;
    let plan = cfg.plan(model.epsilon())?;
    if path.n_steps() < plan.n_steps || path.n_modes() < n {
        return Err(Error::Alignment(format!(
            "noise path {}x{} too small for {}x{}",
            path.n_steps(),
            path.n_modes(),
            plan.n_steps,
            n
        )));
    }
    if (path.dt() - plan.dt).abs() > 1e-12 * plan.dt {
        return Err(Error::Alignment(format!("noise dt {} differs from solver dt {}", path.dt(), plan.dt)));
    }
    let eps = model.epsilon();
    let kd = model.spectrum().kernel_dim();
    let weights = model.spectrum().norm_weights(model.alpha_index());
    let threshold = eps.powf(-model.kappa());
    let mut stepper = FullStepper::new(model, plan.dt)?;

    let mut u = u0.coeffs().to_vec();
    let psi0: Vec<f64> = u.iter().enumerate().map(|(k, x)| if k < kd { 0.0 } else { x / eps }).collect();
    let capacity = plan.n_steps / cfg.record_stride + 2;
    let mut rec = TrajectoryRecord {
        epsilon: eps,
        kappa: model.kappa(),
        alpha: model.alpha_index(),
        t0: plan.t0,
        dt_fast: plan.dt,
        record_stride: cfg.record_stride,
        n_modes: n,
        kernel_dim: kd,
        eigenvalues: model.spectrum().eigenvalues().to_vec(),
        slow_times: Vec::with_capacity(capacity),
        steps: Vec::with_capacity(capacity),
        full_states: Vec::with_capacity(capacity * n),
        psi0,
        norm_a: Vec::with_capacity(capacity),
        norm_psi: Vec::with_capacity(capacity),
        norm_q: Vec::with_capacity(capacity),
        amplitude: None,
        tau_star: plan.t0,
        tau_star_hit: false,
        blowup: false,
        noise_checksum: 0,
    };
    let mut q = rec.psi0.clone();
    let q_decay = model.spectrum().semigroup_factors(plan.dt)?;
    let mut checksum = Checksum::default();
    let slow_dt = eps * eps * plan.dt;

    let split_norms = |u: &[f64]| (weighted_norm(&u[..kd], &weights[..kd]) / eps, weighted_norm(&u[kd..], &weights[kd..]) / eps);

    for step in 0..=plan.n_steps {
        let t_slow = step as f64 * slow_dt;
        let (na, npsi) = split_norms(&u);
        if !rec.tau_star_hit && (na > threshold || npsi > threshold) {
            rec.tau_star_hit = true;
            rec.tau_star = t_slow.min(plan.t0);
        }
        let full_norm = weighted_norm(&u, &weights);
        let blown = !(full_norm <= cfg.blowup_guard);
        if step % cfg.record_stride == 0 || step == plan.n_steps || blown {
            rec.slow_times.push(t_slow);
            rec.steps.push(step);
            rec.full_states.extend_from_slice(&u);
            rec.norm_a.push(na);
            rec.norm_psi.push(npsi);
            rec.norm_q.push(weighted_norm(&q, &weights));
        }
        if blown {
            rec.blowup = true;
            if !rec.tau_star_hit {
                rec.tau_star_hit = true;
                rec.tau_star = t_slow.min(plan.t0);
            }
            break;
        }
        if step == plan.n_steps {
            break;
        }
        let row = path.row(step);
        checksum.absorb(row);
        stepper.step(&mut u, row)?;
        q.iter_mut().zip(&q_decay).for_each(|(x, d)| *x *= d);
    }
    rec.noise_checksum = checksum.value();
    Ok(rec)
}

/// Amplitude `gamma(T)` of `b = gamma sin` on the slow grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSeries {
    pub slow_times: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Euler–Maruyama for `d gamma = [nu gamma + c gamma^3] dT + gamma Sigma^{1/2} d beta`.
///
/// `Sigma` is taken in the convention the reduced path was normalized with.
pub fn simulate_amplitude(
    gamma0: f64,
    reduced: &ReducedPath,
    coeffs: &ReducedCoefficients,
    convention: NoiseConvention,
) -> Result<AmplitudeSeries> {
    if !gamma0.is_finite() {
        return Err(Error::Domain("initial amplitude is not finite".into()));
    }
    let dt = reduced.dt;
    let vol = if reduced.degenerate { 0.0 } else { coeffs.noise_strength(convention).sqrt() };
    let (nu, c) = (coeffs.drift_coeff, coeffs.cubic_coeff);
    let mut gamma = Vec::with_capacity(reduced.increments.len() + 1);
    let mut times = Vec::with_capacity(reduced.increments.len() + 1);
    let mut g = gamma0;
    gamma.push(g);
    times.push(0.0);
    for (j, db) in reduced.increments.iter().enumerate() {
        g += dt * (nu * g + c * g * g * g) + g * vol * db;
        if !g.is_finite() {
            return Err(Error::Domain(format!("amplitude became non-finite at slow step {j}")));
        }
        gamma.push(g);
        times.push((j + 1) as f64 * dt);
    }
    Ok(AmplitudeSeries { slow_times: times, gamma })
}

/// `gamma0 exp((nu - Sigma/2) T + Sigma^{1/2} beta(T))`: the linear Itô SDE in closed form.
pub fn exact_linear_amplitude(gamma0: f64, nu: f64, sigma: f64, beta_t: f64, t: f64) -> f64 {
    gamma0 * ((nu - 0.5 * sigma) * t + sigma.sqrt() * beta_t).exp()
}

/// Solution of `gamma' = nu gamma + c gamma^3`, via `y = gamma^-2` which solves `y' = -2 nu y - 2 c`.
pub fn deterministic_amplitude(gamma0: f64, nu: f64, cubic_coeff: f64, t: f64) -> f64 {
    if gamma0 == 0.0 {
        return 0.0;
    }
    let y0 = 1.0 / (gamma0 * gamma0);
    let y = if nu == 0.0 {
        y0 - 2.0 * cubic_coeff * t
    } else {
        let y_inf = -cubic_coeff / nu;
        y_inf + (y0 - y_inf) * (-2.0 * nu * t).exp()
    };
    if y <= 0.0 {
        return f64::INFINITY.copysign(gamma0);
    }
    gamma0.signum() / y.sqrt()
}

/// `gamma` of `P_c u0 / eps = gamma sin` for a one-dimensional kernel.
pub fn initial_amplitude(u0: &SpectralField, epsilon: f64) -> f64 {
    DIRICHLET_NORM * u0.coeffs()[0] / epsilon
}

/// Runs the full equation and the amplitude SDE on one noise realization and
/// attaches the amplitude to the trajectory.
pub fn simulate_coupled(
    u0: &SpectralField,
    cfg: &SolverConfig,
    path: &NoisePath,
    model: &ModelSpec,
) -> Result<TrajectoryRecord> {
    let mut rec = simulate_full(u0, cfg, path, model)?;
    let plan = cfg.plan(model.epsilon())?;
    let coeffs = model.noise_strength()?;
    let head = NoisePath::from_table(
        path.seed(),
        path.dt(),
        plan.n_steps,
        path.n_modes(),
        path.increments()[..plan.n_steps * path.n_modes()].to_vec(),
    )?;
    let reduced = reduce_increments(&head, &coeffs, model.epsilon(), plan.block, NoiseConvention::Projected)?;
    let series = simulate_amplitude(initial_amplitude(u0, model.epsilon()), &reduced, &coeffs, NoiseConvention::Projected)?;
    rec.attach_amplitude(&series, plan.block)?;
    Ok(rec)
}

/// Initial-condition regimes: the theorem bounds `||u(0)||_alpha <= eps^{kappa/3}`,
/// the remainder estimates bound `||psi(0)||_alpha <= eps^{-kappa/3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialRegime {
    Theorem,
    Remainder,
    Unchecked,
}

/// `u(0) = eps (a0 e_1 + psi0)`.
pub fn initial_condition(
    model: &ModelSpec,
    kernel_amplitude: f64,
    stable: &[(usize, f64)],
    regime: InitialRegime,
) -> Result<SpectralField> {
    let n = model.n_modes();
    let kd = model.spectrum().kernel_dim();
    let eps = model.epsilon();
    let mut coeffs = vec![0.0; n];
    coeffs[0] = eps * kernel_amplitude;
    for &(k, c) in stable {
        if k <= kd || k > n {
            return Err(Error::Index { index: k, max: n });
        }
        coeffs[k - 1] += eps * c;
    }
    let u0 = SpectralField::new(coeffs, model.alpha_index())?;
    let spec = model.spectrum();
    let alpha = model.alpha_index();
    let kappa = model.kappa();
    match regime {
        InitialRegime::Theorem => {
            let norm = u0.alpha_norm(spec, alpha)?;
            if norm > eps.powf(kappa / 3.0) {
                return Err(Error::Config(format!("||u(0)|| = {norm} exceeds eps^(kappa/3)")));
            }
        }
        InitialRegime::Remainder => {
            let norm = u0.project_stable(spec)?.alpha_norm(spec, alpha)? / eps;
            if norm > eps.powf(-kappa / 3.0) {
                return Err(Error::Config(format!("||psi(0)|| = {norm} exceeds eps^(-kappa/3)")));
            }
        }
        InitialRegime::Unchecked => {}
    }
    Ok(u0)
}
