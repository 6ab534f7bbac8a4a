//! Diagnostics that turn trajectories into verdicts: the approximation error
//! functional, the split `psi = Q + I + J + K`, the kernel residual `R`,
//! stopping-time statistics, and log-log slope fits with bootstrap intervals.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // f64 math comes from libm without std
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::noise::NoisePath;
use crate::solver::{deterministic_amplitude, TrajectoryRecord};
use crate::spectral::weighted_norm;
use crate::transform::DIRICHLET_NORM;

const TIME_SLACK: f64 = 1e-12;

/// `||u(t) - eps b(eps^2 t) - eps Q(eps^2 t)||_alpha` at every record.
pub fn error_profile(traj: &TrajectoryRecord, alpha: f64) -> Result<Vec<f64>> {
    let gamma = traj
        .amplitude
        .as_ref()
        .ok_or_else(|| Error::Alignment("trajectory has no amplitude series attached".into()))?;
    if gamma.len() != traj.n_records() {
        return Err(Error::Alignment(format!("{} amplitude values for {} records", gamma.len(), traj.n_records())));
    }
    let weights: Vec<f64> = traj.eigenvalues.iter().map(|l| (l + 1.0).powf(alpha)).collect();
    let eps = traj.epsilon;
    let mut diff = vec![0.0; traj.n_modes];
    let mut out = Vec::with_capacity(traj.n_records());
    for (i, g) in gamma.iter().enumerate() {
        let q = traj.semigroup_tail(i);
        for ((d, u), q) in diff.iter_mut().zip(traj.state(i)).zip(&q) {
            *d = u - eps * q;
        }
        diff[0] -= eps * g / DIRICHLET_NORM;
        out.push(weighted_norm(&diff, &weights));
    }
    Ok(out)
}

/// Sup over all records of [`error_profile`].
pub fn approximation_error(traj: &TrajectoryRecord, alpha: f64) -> Result<f64> {
    Ok(error_profile(traj, alpha)?.into_iter().fold(0.0, f64::max))
}

fn sup_until(times: &[f64], values: &[f64], t_max: f64) -> f64 {
    times
        .iter()
        .zip(values)
        .take_while(|(t, _)| **t <= t_max + TIME_SLACK)
        .fold(0.0, |m, (_, v)| if v.is_nan() { f64::INFINITY } else { m.max(*v) })
}

/// First recorded slow time with `||a||_alpha` or `||psi||_alpha` above `eps^-kappa`, else `T0`.
pub fn tau_star(traj: &TrajectoryRecord, kappa: f64, epsilon: f64, t0: f64) -> f64 {
    let threshold = epsilon.powf(-kappa);
    traj.slow_times
        .iter()
        .zip(traj.norm_a.iter().zip(&traj.norm_psi))
        .find(|(_, (a, p))| !(**a <= threshold && **p <= threshold))
        .map_or(t0, |(t, _)| t.min(t0))
}

/// Per-path quantities that enter the ensemble statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    pub epsilon: f64,
    /// Error functional over `[0, T0]` (infinite after blow-up).
    pub sup_error: f64,
    /// Error functional over `[0, tau*]`.
    pub sup_error_tau: f64,
    pub sup_a_tau: f64,
    pub sup_psi_tau: f64,
    pub tau_star: f64,
    pub tau_star_hit: bool,
    pub blowup: bool,
}

pub fn summarize_path(traj: &TrajectoryRecord) -> Result<PathSummary> {
    let profile = error_profile(traj, traj.alpha)?;
    let tau = tau_star(traj, traj.kappa, traj.epsilon, traj.t0);
    let mut sup_error = profile.iter().fold(0.0, |m: f64, v| if v.is_nan() { f64::INFINITY } else { m.max(*v) });
    if traj.blowup {
        sup_error = f64::INFINITY;
    }
    Ok(PathSummary {
        epsilon: traj.epsilon,
        sup_error,
        sup_error_tau: sup_until(&traj.slow_times, &profile, tau),
        sup_a_tau: sup_until(&traj.slow_times, &traj.norm_a, tau),
        sup_psi_tau: sup_until(&traj.slow_times, &traj.norm_psi, tau),
        tau_star: tau,
        tau_star_hit: tau < traj.t0 - TIME_SLACK || traj.tau_star_hit,
        blowup: traj.blowup,
    })
}

/// Bounds defining the event on which the error estimate holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaThresholds {
    pub a: f64,
    pub psi: f64,
    pub error: f64,
}

impl OmegaThresholds {
    /// `||a|| < eps^{-kappa/2}`, `||psi|| < eps^{-kappa/2}`, error `< eps^{2 - 19 kappa}`.
    pub fn new(epsilon: f64, kappa: f64) -> Self {
        let norm = epsilon.powf(-kappa / 2.0);
        Self { a: norm, psi: norm, error: epsilon.powf(2.0 - 19.0 * kappa) }
    }

    pub fn contains(&self, s: &PathSummary) -> bool {
        !s.blowup && s.sup_a_tau < self.a && s.sup_psi_tau < self.psi && s.sup_error_tau < self.error
    }
}

pub fn omega_star_fraction(summaries: &[PathSummary], thresholds: &OmegaThresholds) -> Result<f64> {
    if summaries.is_empty() {
        return Err(Error::Config("empty ensemble".into()));
    }
    let inside = summaries.iter().filter(|s| thresholds.contains(s)).count();
    Ok(inside as f64 / summaries.len() as f64)
}

/// Kernel-coefficient rows for the grid analysis of one mode, `(2 / (P sqrt(2/pi))) sin(k x_j)`,
/// and the grid values of `e_k`.
struct KernelRows {
    analysis: Vec<Vec<f64>>,
    synthesis: Vec<Vec<f64>>,
}

impl KernelRows {
    fn new(model: &ModelSpec) -> Self {
        let grid = model.grid();
        let p = (grid.grid_len() + 1) as f64;
        let nodes = grid.nodes();
        let kd = model.spectrum().kernel_dim();
        let synthesis: Vec<Vec<f64>> =
            (1..=kd).map(|k| nodes.iter().map(|x| DIRICHLET_NORM * (k as f64 * x).sin()).collect()).collect();
        let analysis = (1..=kd)
            .map(|k| nodes.iter().map(|x| 2.0 / (p * DIRICHLET_NORM) * (k as f64 * x).sin()).collect())
            .collect();
        Self { analysis, synthesis }
    }
}

fn check_full_stride(traj: &TrajectoryRecord, path: &NoisePath, model: &ModelSpec) -> Result<usize> {
    if traj.record_stride != 1 || traj.steps.iter().enumerate().any(|(i, s)| *s != i) {
        return Err(Error::Refused("trajectory is subsampled; the quadratures need every fast step".into()));
    }
    if model.epsilon() != traj.epsilon || model.n_modes() != traj.n_modes {
        return Err(Error::Alignment("model does not match the trajectory".into()));
    }
    let n_steps = traj.steps.last().copied().unwrap_or(0);
    if path.n_steps() < n_steps || path.n_modes() < traj.n_modes {
        return Err(Error::Alignment("noise path is shorter than the trajectory".into()));
    }
    if (path.dt() - traj.dt_fast).abs() > 1e-12 * traj.dt_fast {
        return Err(Error::Alignment(format!("noise dt {} differs from trajectory dt {}", path.dt(), traj.dt_fast)));
    }
    if path.checksum_rows(n_steps) != traj.noise_checksum {
        return Err(Error::Alignment("noise path differs from the one that drove the trajectory".into()));
    }
    Ok(n_steps)
}

/// Stable-space fields of the split at every record, row-major `n_records x n_modes`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionFields {
    pub n_modes: usize,
    pub q: Vec<f64>,
    pub i: Vec<f64>,
    pub j: Vec<f64>,
    pub k: Vec<f64>,
}

impl DecompositionFields {
    pub fn row(part: &[f64], n_modes: usize, r: usize) -> &[f64] {
        &part[r * n_modes..(r + 1) * n_modes]
    }
}

/// `psi = Q + I + J + K` reconstructed along one trajectory.
///
/// `I`, `J`, `K` are the left-endpoint quadratures the solver itself performs,
/// so `defect` is at rounding level. `continuum_defect` uses the exact
/// semigroup integral over each step for `I` and `J` instead,
/// `(1 - e^{-lambda dt}) / lambda`, and measures the time-discretization gap; it is `O(dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionRecord {
    pub slow_times: Vec<f64>,
    pub norm_psi: Vec<f64>,
    pub norm_q: Vec<f64>,
    pub norm_i: Vec<f64>,
    pub norm_j: Vec<f64>,
    pub norm_k: Vec<f64>,
    pub defect: Vec<f64>,
    pub continuum_defect: Vec<f64>,
    pub fields: Option<DecompositionFields>,
    pub tau_star: f64,
    pub sup_q: f64,
    pub sup_i: f64,
    pub sup_j: f64,
    pub sup_k: f64,
    /// `(int_0^{tau*} ||K||_alpha^2 dT)^{1/2}`.
    pub k_time_integrated: f64,
    pub max_defect: f64,
    pub max_continuum_defect: f64,
}

pub fn decompose_psi(traj: &TrajectoryRecord, path: &NoisePath, model: &ModelSpec) -> Result<DecompositionRecord> {
    decompose(traj, path, model, true)
}

/// As [`decompose_psi`] without keeping the per-record fields.
pub fn decompose_psi_norms(traj: &TrajectoryRecord, path: &NoisePath, model: &ModelSpec) -> Result<DecompositionRecord> {
    decompose(traj, path, model, false)
}

fn decompose(traj: &TrajectoryRecord, path: &NoisePath, model: &ModelSpec, keep: bool) -> Result<DecompositionRecord> {
    check_full_stride(traj, path, model)?;
    let n = traj.n_modes;
    let kd = traj.kernel_dim;
    let eps = traj.epsilon;
    let dt = traj.dt_fast;
    let weights = traj.norm_weights();
    let spec = model.spectrum();
    let decay = spec.semigroup_factors(dt)?;
    let phi: Vec<f64> = spec
        .eigenvalues()
        .iter()
        .zip(&decay)
        .map(|(l, e)| if *l > 0.0 { (1.0 - e) / l } else { dt })
        .collect();
    let grid = model.grid();
    let mut scratch = grid.scratch();
    let len = grid.grid_len();
    let (mut gu, mut geta, mut gtmp) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let (mut eta, mut fu, mut noise) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    let mut i_part = vec![0.0; n];
    let mut j_part = vec![0.0; n];
    let mut k_part = vec![0.0; n];
    let mut ic = vec![0.0; n];
    let mut jc = vec![0.0; n];
    let mut psi = vec![0.0; n];
    let mut diff = vec![0.0; n];

    let n_rec = traj.n_records();
    let mut rec = DecompositionRecord {
        slow_times: traj.slow_times.clone(),
        norm_psi: Vec::with_capacity(n_rec),
        norm_q: Vec::with_capacity(n_rec),
        norm_i: Vec::with_capacity(n_rec),
        norm_j: Vec::with_capacity(n_rec),
        norm_k: Vec::with_capacity(n_rec),
        defect: Vec::with_capacity(n_rec),
        continuum_defect: Vec::with_capacity(n_rec),
        fields: keep.then(|| DecompositionFields {
            n_modes: n,
            q: Vec::with_capacity(n_rec * n),
            i: Vec::with_capacity(n_rec * n),
            j: Vec::with_capacity(n_rec * n),
            k: Vec::with_capacity(n_rec * n),
        }),
        tau_star: tau_star(traj, traj.kappa, eps, traj.t0),
        sup_q: 0.0,
        sup_i: 0.0,
        sup_j: 0.0,
        sup_k: 0.0,
        k_time_integrated: 0.0,
        max_defect: 0.0,
        max_continuum_defect: 0.0,
    };
    let slow_dt = eps * eps * dt;
    let mut k_integral = 0.0;

    for r in 0..n_rec {
        let u = traj.state(r);
        let q = traj.semigroup_tail(r);
        for m in 0..n {
            psi[m] = if m < kd { 0.0 } else { u[m] / eps };
        }
        let np = weighted_norm(&psi, &weights);
        let (nq, ni, nj, nk) = (
            weighted_norm(&q, &weights),
            weighted_norm(&i_part, &weights),
            weighted_norm(&j_part, &weights),
            weighted_norm(&k_part, &weights),
        );
        for m in 0..n {
            diff[m] = psi[m] - (q[m] + i_part[m] + j_part[m] + k_part[m]);
        }
        let defect = weighted_norm(&diff, &weights);
        for m in 0..n {
            diff[m] = psi[m] - (q[m] + ic[m] + jc[m] + k_part[m]);
        }
        let cdefect = weighted_norm(&diff, &weights);
        rec.norm_psi.push(np);
        rec.norm_q.push(nq);
        rec.norm_i.push(ni);
        rec.norm_j.push(nj);
        rec.norm_k.push(nk);
        rec.defect.push(defect);
        rec.continuum_defect.push(cdefect);
        rec.max_defect = rec.max_defect.max(defect);
        rec.max_continuum_defect = rec.max_continuum_defect.max(cdefect);
        if let Some(f) = rec.fields.as_mut() {
            f.q.extend_from_slice(&q);
            f.i.extend_from_slice(&i_part);
            f.j.extend_from_slice(&j_part);
            f.k.extend_from_slice(&k_part);
        }
        let t = traj.slow_times[r];
        if t <= rec.tau_star + TIME_SLACK {
            rec.sup_q = rec.sup_q.max(nq);
            rec.sup_i = rec.sup_i.max(ni);
            rec.sup_j = rec.sup_j.max(nj);
            rec.sup_k = rec.sup_k.max(nk);
            if t < rec.tau_star - TIME_SLACK {
                k_integral += nk * nk * slow_dt;
            }
        }
        if r + 1 == n_rec {
            break;
        }

        let row = &path.row(traj.steps[r])[..n];
        model.noise_coefficients(row, &mut eta);
        grid.to_grid_pair(u, &eta, &mut gu, &mut geta, &mut scratch)?;
        let cubic = if model.cubic_enabled() { 1.0 } else { 0.0 };
        for ((o, x), e) in gtmp.iter_mut().zip(gu.iter_mut()).zip(&geta) {
            let v = *x;
            *o = v * e;
            *x = -cubic * v * v * v;
        }
        grid.from_grid_split(&gu, &gtmp, &mut fu, &mut noise, &mut scratch)?;

        let linear = eps * eps * model.nu();
        for m in kd..n {
            let e = decay[m];
            i_part[m] = e * (i_part[m] + dt * linear * psi[m]);
            j_part[m] = e * (j_part[m] + dt * fu[m] / eps);
            k_part[m] = e * (k_part[m] + noise[m]);
            ic[m] = e * ic[m] + phi[m] * linear * psi[m];
            jc[m] = e * jc[m] + phi[m] * fu[m] / eps;
        }
    }
    rec.k_time_integrated = k_integral.sqrt();
    Ok(rec)
}

/// Kernel residual `R(T)` at every record, row-major `n_records x kernel_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub slow_times: Vec<f64>,
    pub kernel_dim: usize,
    pub values: Vec<f64>,
    pub norms: Vec<f64>,
    /// Sup of `||R||_alpha` over `[0, tau*]`.
    pub sup_tau: f64,
}

/// `R(T) = int_0^T [F_c(a + psi) - F_c(a)] dtau + int_0^T G_c(psi) dW~`, by the
/// solver's left-endpoint quadrature along the stored trajectory.
///
/// For the cubic, `F_c(a + psi) - F_c(a) = 3F_c(a, a, psi) + 3F_c(a, psi, psi) + F_c(psi)`;
/// `G` is linear, so its linearization error vanishes and only `G_c(psi)` remains.
pub fn residual_r(traj: &TrajectoryRecord, path: &NoisePath, model: &ModelSpec) -> Result<ResidualSeries> {
    check_full_stride(traj, path, model)?;
    let n = traj.n_modes;
    let kd = traj.kernel_dim;
    let eps = traj.epsilon;
    let dt = traj.dt_fast;
    let weights = traj.norm_weights();
    let rows = KernelRows::new(model);
    let grid = model.grid();
    let mut scratch = grid.scratch();
    let len = grid.grid_len();
    let (mut gu, mut geta, mut ga) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let (mut eta, mut stoch) = (vec![0.0; n], vec![0.0; n]);
    let mut acc = vec![0.0; kd];
    let tau = tau_star(traj, traj.kappa, eps, traj.t0);
    let n_rec = traj.n_records();
    let mut out = ResidualSeries {
        slow_times: traj.slow_times.clone(),
        kernel_dim: kd,
        values: Vec::with_capacity(n_rec * kd),
        norms: Vec::with_capacity(n_rec),
        sup_tau: 0.0,
    };
    let cubic = if model.cubic_enabled() { 1.0 } else { 0.0 };
    let scale_f = eps * eps * dt / (eps * eps * eps);
    for r in 0..n_rec {
        let norm = weighted_norm(&acc, &weights[..kd]);
        out.values.extend_from_slice(&acc);
        out.norms.push(norm);
        if traj.slow_times[r] <= tau + TIME_SLACK {
            out.sup_tau = out.sup_tau.max(norm);
        }
        if r + 1 == n_rec {
            break;
        }
        let u = traj.state(r);
        model.noise_coefficients(&path.row(traj.steps[r])[..n], &mut eta);
        grid.to_grid_pair(u, &eta, &mut gu, &mut geta, &mut scratch)?;
        ga.iter_mut().for_each(|g| *g = 0.0);
        for (m, basis) in rows.synthesis.iter().enumerate() {
            ga.iter_mut().zip(basis).for_each(|(g, b)| *g += u[m] * b);
        }
        // psi eta is a cosine polynomial and needs the even projection
        for j in 0..len {
            geta[j] *= gu[j] - ga[j];
        }
        grid.from_grid_even(&geta, &mut stoch, &mut scratch)?;
        for (m, row) in rows.analysis.iter().enumerate() {
            let mut drift = 0.0;
            for j in 0..len {
                let (x, xa) = (gu[j], ga[j]);
                drift += row[j] * (xa * xa * xa - x * x * x);
            }
            // F_c(u)/eps^3 over eps^2 dt of slow time; eps P_c(psi eta) = P_c(u_s eta)
            acc[m] += cubic * scale_f * drift + stoch[m];
        }
    }
    Ok(out)
}

/// Sup over records of `||a(T) - b_ode(T)||_alpha`, where `b_ode` solves the
/// noise-free amplitude equation from the trajectory's own `a(0)`.
pub fn deterministic_gap(traj: &TrajectoryRecord, nu: f64, cubic_coeff: f64) -> Result<f64> {
    if traj.kernel_dim != 1 {
        return Err(Error::Alignment("scalar amplitude needs a one-dimensional kernel".into()));
    }
    let w = traj.norm_weights()[0].sqrt();
    let gamma0 = DIRICHLET_NORM * traj.state(0)[0] / traj.epsilon;
    let mut sup = 0.0f64;
    for (r, t) in traj.slow_times.iter().enumerate() {
        let a = traj.state(r)[0] / traj.epsilon;
        let b = deterministic_amplitude(gamma0, nu, cubic_coeff, *t) / DIRICHLET_NORM;
        sup = sup.max(w * (a - b).abs());
    }
    Ok(sup)
}

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi || sorted[hi] == sorted[lo] {
        return sorted[lo];
    }
    let w = pos - lo as f64;
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    quantile(values, 0.5)
}

/// Ensemble statistics at one `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub epsilon: f64,
    pub n_paths: usize,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
    /// Fraction of paths with error above `threshold`.
    pub exceed_frac: f64,
    pub threshold: f64,
}

pub fn ensemble_stats(epsilon: f64, errors: &[f64], threshold: f64) -> Result<EnsembleStats> {
    if errors.is_empty() {
        return Err(Error::Config(format!("no paths at epsilon = {epsilon}")));
    }
    let mut sorted: Vec<f64> = errors.iter().map(|e| if e.is_nan() { f64::INFINITY } else { *e }).collect();
    sorted.sort_by(f64::total_cmp);
    let exceed = sorted.iter().filter(|e| **e > threshold).count();
    Ok(EnsembleStats {
        epsilon,
        n_paths: sorted.len(),
        median: quantile(&sorted, 0.5),
        p90: quantile(&sorted, 0.9),
        max: sorted[sorted.len() - 1],
        exceed_frac: exceed as f64 / sorted.len() as f64,
        threshold,
    })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Fits `y = C x^slope`; needs at least four distinct `x` spanning a factor of four.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::Fit(format!("{} abscissae for {} values", x.len(), y.len())));
    }
    let mut distinct: Vec<f64> = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::Fit(format!("{} distinct points; at least 4 are needed", distinct.len())));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Fit(format!("non-positive or non-finite value {v}")));
    }
    if distinct[distinct.len() - 1] / distinct[0] < 4.0 * (1.0 - 1e-9) {
        return Err(Error::Fit("points span less than a factor of 4".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(PowerLawFit { slope, intercept, residual: (ss / n).sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { resamples: 200, seed: 0x5ca1_ab1e }
    }
}

/// Slope of the median error against `epsilon` with a percentile bootstrap interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub levels: Vec<EnsembleStats>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    /// 2.5% and 97.5% bootstrap percentiles of the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

impl ScalingReport {
    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// Fits the median of each ensemble against `epsilon`; exceedance is measured
/// against `eps^{2 - 19 kappa}`. Bootstrap resamples paths within each `epsilon`.
pub fn fit_scaling(epsilons: &[f64], errors: &[Vec<f64>], kappa: f64, bootstrap: &BootstrapConfig) -> Result<ScalingReport> {
    if epsilons.len() != errors.len() {
        return Err(Error::Fit(format!("{} epsilons for {} ensembles", epsilons.len(), errors.len())));
    }
    let levels = epsilons
        .iter()
        .zip(errors)
        .map(|(e, errs)| ensemble_stats(*e, errs, e.powf(2.0 - 19.0 * kappa)))
        .collect::<Result<Vec<_>>>()?;
    let medians: Vec<f64> = levels.iter().map(|l| l.median).collect();
    let fit = fit_power_law(epsilons, &medians)?;

    let mut rng = ChaCha8Rng::seed_from_u64(bootstrap.seed);
    let mut slopes = Vec::with_capacity(bootstrap.resamples);
    let mut buf = Vec::new();
    let mut boot_medians = vec![0.0; epsilons.len()];
    for _ in 0..bootstrap.resamples {
        for (m, errs) in boot_medians.iter_mut().zip(errors) {
            buf.clear();
            buf.extend((0..errs.len()).map(|_| errs[rng.random_range(0..errs.len())]));
            *m = median_of(&mut buf);
        }
        if let Ok(f) = fit_power_law(epsilons, &boot_medians) {
            slopes.push(f.slope);
        }
    }
    slopes.sort_by(f64::total_cmp);
    let (ci_low, ci_high) = if slopes.is_empty() {
        (fit.slope, fit.slope)
    } else {
        (quantile(&slopes, 0.025), quantile(&slopes, 0.975))
    };
    Ok(ScalingReport {
        levels,
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        ci_low,
        ci_high,
        resamples: bootstrap.resamples,
    })
}
