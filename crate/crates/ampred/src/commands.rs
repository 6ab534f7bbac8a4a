//! The four subcommands. Each writes its files under `output.directory` and
//! returns a [`Verdict`] that the binary maps to an exit code.

use std::path::Path;

use ampred_core::analysis::{
    decompose_psi_norms, ensemble_stats, fit_scaling, residual_r, summarize_path, BootstrapConfig, OmegaThresholds,
};
use ampred_core::model::sigma_k;
use ampred_core::transform::DIRICHLET_NORM;
use ampred_core::Error as CoreError;
use anyhow::Context;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::ensemble::{by_level, path_seed, run_ensemble, run_path, JobKind};
use crate::output::{csv_writer, finite, num, write_json};
use crate::quadrature::sigma_quadrature;

/// Scientific outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    GateFail,
    FitError,
    Blowup,
    Refused,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::GateFail => 2,
            Self::FitError => 3,
            Self::Blowup => 4,
            Self::Refused => 5,
        }
    }
}

/// Largest tolerated gap between the closed-form and quadrature `sigma_k`.
pub const COEFF_TOLERANCE: f64 = 1e-10;
/// Largest tolerated solver-consistent reconstruction defect.
pub const DEFECT_TOLERANCE: f64 = 1e-6;

fn prepare(cfg: &RunConfig) -> anyhow::Result<&Path> {
    let dir = cfg.output.directory.as_path();
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

#[derive(Serialize)]
struct CoeffsSummary<'a> {
    command: &'static str,
    n_modes: usize,
    sigma_projected: f64,
    sigma_literal: f64,
    sigma_oracle: f64,
    convention_used: &'static str,
    max_sigma_discrepancy: f64,
    tolerance: f64,
    verdict: Verdict,
    config: &'a RunConfig,
}

pub fn coeffs(cfg: &RunConfig) -> anyhow::Result<Verdict> {
    let dir = prepare(cfg)?;
    let model = cfg.model_at(cfg.experiment.epsilon)?;
    let table = model.coefficient_table()?;
    let reduced = model.noise_strength()?;
    let mut worst: f64 = 0.0;
    let mut sigma_oracle = 0.0;
    let oracle: Vec<f64> = (1..=table.len()).map(sigma_quadrature).collect();
    for (row, q) in table.iter().zip(&oracle) {
        worst = worst.max((row.sigma - q).abs());
        let alpha = if cfg.model.diffusion { row.alpha } else { 0.0 };
        sigma_oracle += alpha * (DIRICHLET_NORM * q).powi(2);
    }
    // the downstream convention must agree with the quadrature projection too
    worst = worst.max((reduced.sigma_projected - sigma_oracle).abs());
    let verdict = if worst <= COEFF_TOLERANCE { Verdict::Pass } else { Verdict::GateFail };
    if cfg.wants(Format::Csv) {
        let mut w = csv_writer(&dir.join("coeffs.csv"))?;
        w.write_record(["k", "lambda", "alpha", "sigma_closed", "sigma_oracle", "kernel_loading"])?;
        for (row, q) in table.iter().zip(&oracle) {
            debug_assert_eq!(row.sigma, sigma_k(row.k)?);
            w.write_record([row.k.to_string(), num(row.lambda), num(row.alpha), num(row.sigma), num(*q), num(row.loading)])?;
        }
        w.flush()?;
    }
    if cfg.wants(Format::Json) {
        write_json(
            &dir.join("coeffs.json"),
            &CoeffsSummary {
                command: "coeffs",
                n_modes: table.len(),
                sigma_projected: reduced.sigma_projected,
                sigma_literal: reduced.sigma_literal,
                sigma_oracle,
                convention_used: "projected",
                max_sigma_discrepancy: worst,
                tolerance: COEFF_TOLERANCE,
                verdict,
                config: cfg,
            },
        )?;
    }
    Ok(verdict)
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    command: &'static str,
    epsilon: f64,
    seed: u64,
    noise_checksum: String,
    sup_error: Option<f64>,
    tau_star: f64,
    tau_star_hit: bool,
    blowup: bool,
    records: usize,
    verdict: Verdict,
    config: &'a RunConfig,
}

pub fn simulate(cfg: &RunConfig) -> anyhow::Result<Verdict> {
    let dir = prepare(cfg)?;
    let model = cfg.model_at(cfg.experiment.epsilon)?;
    let seed = path_seed(cfg.experiment.master_seed, 0);
    let (traj, _) = run_path(cfg, &model, seed)?;
    let summary = summarize_path(&traj)?;
    let gamma = traj.amplitude.as_deref().unwrap_or_default();
    let kd = traj.kernel_dim;
    if cfg.wants(Format::Csv) {
        let mut w = csv_writer(&dir.join("trajectory.csv"))?;
        let mut header = vec!["T".to_string(), "gamma_b".to_string()];
        header.extend((1..=kd).map(|k| format!("a_{k}")));
        header.extend(["norm_a", "norm_psi", "norm_Q_tail", "tau_star_flag"].map(String::from));
        w.write_record(&header)?;
        for r in 0..traj.n_records() {
            let t = traj.slow_times[r];
            let mut row = vec![num(t), gamma.get(r).map_or_else(String::new, |g| num(*g))];
            row.extend(traj.a(r)[..kd].iter().map(|x| num(*x)));
            row.push(num(traj.norm_a[r]));
            row.push(num(traj.norm_psi[r]));
            row.push(num(traj.norm_q[r]));
            row.push((traj.tau_star_hit && t >= traj.tau_star).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let verdict = if traj.blowup { Verdict::Blowup } else { Verdict::Pass };
    if cfg.wants(Format::Json) {
        write_json(
            &dir.join("simulate.json"),
            &SimulateSummary {
                command: "simulate",
                epsilon: traj.epsilon,
                seed,
                noise_checksum: format!("{:016x}", traj.noise_checksum),
                sup_error: finite(summary.sup_error),
                tau_star: traj.tau_star,
                tau_star_hit: traj.tau_star_hit,
                blowup: traj.blowup,
                records: traj.n_records(),
                verdict,
                config: cfg,
            },
        )?;
    }
    Ok(verdict)
}

#[derive(Serialize)]
struct DecomposeSummary<'a> {
    command: &'static str,
    epsilon: f64,
    seed: u64,
    dt_fast: f64,
    tau_star: f64,
    sup_q: f64,
    sup_i: f64,
    sup_j: f64,
    sup_k: f64,
    k_time_integrated: f64,
    sup_residual: f64,
    max_defect: f64,
    max_continuum_defect: f64,
    defect_tolerance: f64,
    verdict: Verdict,
    config: &'a RunConfig,
}

pub fn decompose(cfg: &RunConfig) -> anyhow::Result<Verdict> {
    if cfg.solver.record_stride != 1 {
        eprintln!("decompose needs every fast step recorded; solver.record_stride is {}", cfg.solver.record_stride);
        return Ok(Verdict::Refused);
    }
    let dir = prepare(cfg)?;
    let model = cfg.model_at(cfg.experiment.epsilon)?;
    let seed = path_seed(cfg.experiment.master_seed, 0);
    let (traj, path) = run_path(cfg, &model, seed)?;
    let dec = match decompose_psi_norms(&traj, &path, &model) {
        Err(CoreError::Refused(msg)) => {
            eprintln!("{msg}");
            return Ok(Verdict::Refused);
        }
        other => other?,
    };
    let res = residual_r(&traj, &path, &model)?;
    if cfg.wants(Format::Csv) {
        let mut w = csv_writer(&dir.join("decomposition.csv"))?;
        w.write_record(["T", "norm_psi", "norm_Q_tail", "norm_I", "norm_J", "norm_K", "defect", "continuum_defect", "norm_R"])?;
        for r in 0..dec.slow_times.len() {
            w.write_record([
                num(dec.slow_times[r]),
                num(dec.norm_psi[r]),
                num(dec.norm_q[r]),
                num(dec.norm_i[r]),
                num(dec.norm_j[r]),
                num(dec.norm_k[r]),
                num(dec.defect[r]),
                num(dec.continuum_defect[r]),
                num(res.norms[r]),
            ])?;
        }
        w.flush()?;
    }
    let verdict = if traj.blowup {
        Verdict::Blowup
    } else if dec.max_defect < DEFECT_TOLERANCE {
        Verdict::Pass
    } else {
        Verdict::GateFail
    };
    if cfg.wants(Format::Json) {
        write_json(
            &dir.join("decomposition.json"),
            &DecomposeSummary {
                command: "decompose",
                epsilon: traj.epsilon,
                seed,
                dt_fast: traj.dt_fast,
                tau_star: dec.tau_star,
                sup_q: dec.sup_q,
                sup_i: dec.sup_i,
                sup_j: dec.sup_j,
                sup_k: dec.sup_k,
                k_time_integrated: dec.k_time_integrated,
                sup_residual: res.sup_tau,
                max_defect: dec.max_defect,
                max_continuum_defect: dec.max_continuum_defect,
                defect_tolerance: DEFECT_TOLERANCE,
                verdict,
                config: cfg,
            },
        )?;
    }
    Ok(verdict)
}

#[derive(Serialize)]
struct Level {
    epsilon: f64,
    n_paths: usize,
    err_median: Option<f64>,
    err_p90: Option<f64>,
    err_max: Option<f64>,
    exceed_frac: f64,
    exceed_threshold: f64,
    omega_star_fraction: f64,
    tau_star_hit_fraction: f64,
    blowups: usize,
}

#[derive(Serialize)]
struct Seeds {
    master_seed: u64,
    bootstrap_seed: u64,
    path_seeds: Vec<u64>,
}

#[derive(Serialize)]
struct ScalingSummary<'a> {
    command: &'static str,
    synthetic: bool,
    slope: Option<f64>,
    intercept: Option<f64>,
    residual: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    bootstrap_resamples: usize,
    fit_error: Option<String>,
    slope_floor: f64,
    slope_ceiling: f64,
    slope_in_band: bool,
    kappa: f64,
    t0: f64,
    seeds: Seeds,
    levels: Vec<Level>,
    verdict: Verdict,
    config: &'a RunConfig,
}

/// Full sweep. Exit verdict is [`Verdict::Pass`] iff the lower end of the
/// bootstrap interval reaches `slope_floor`.
pub fn scaling(cfg: &RunConfig, synthetic: bool) -> anyhow::Result<Verdict> {
    let dir = prepare(cfg)?;
    let e = &cfg.experiment;
    let kind = if synthetic { JobKind::Synthetic } else { JobKind::Errors };
    let outcomes = run_ensemble(cfg, &e.epsilons, 0..e.paths, kind)?;
    let grouped = by_level(&outcomes, e.epsilons.len());
    let errors: Vec<Vec<f64>> = grouped.iter().map(|l| l.iter().map(|o| o.summary.sup_error).collect()).collect();

    let mut levels = Vec::with_capacity(e.epsilons.len());
    for ((eps, errs), group) in e.epsilons.iter().zip(&errors).zip(&grouped) {
        let stats = ensemble_stats(*eps, errs, eps.powf(2.0 - 19.0 * e.kappa))?;
        let thresholds = OmegaThresholds::new(*eps, e.kappa);
        let n = group.len() as f64;
        levels.push(Level {
            epsilon: *eps,
            n_paths: stats.n_paths,
            err_median: finite(stats.median),
            err_p90: finite(stats.p90),
            err_max: finite(stats.max),
            exceed_frac: stats.exceed_frac,
            exceed_threshold: stats.threshold,
            omega_star_fraction: group.iter().filter(|o| thresholds.contains(&o.summary)).count() as f64 / n,
            tau_star_hit_fraction: group.iter().filter(|o| o.summary.tau_star_hit).count() as f64 / n,
            blowups: group.iter().filter(|o| o.summary.blowup).count(),
        });
    }

    if cfg.wants(Format::Csv) {
        let mut w = csv_writer(&dir.join("scaling.csv"))?;
        w.write_record(["epsilon", "n_paths", "err_median", "err_p90", "err_max", "exceed_frac"])?;
        for l in &levels {
            let opt = |x: Option<f64>| x.map_or_else(|| "inf".to_string(), num);
            w.write_record([
                num(l.epsilon),
                l.n_paths.to_string(),
                opt(l.err_median),
                opt(l.err_p90),
                opt(l.err_max),
                num(l.exceed_frac),
            ])?;
        }
        w.flush()?;
        let mut p = csv_writer(&dir.join("paths.csv"))?;
        p.write_record(["epsilon", "path", "seed", "sup_error", "sup_error_tau", "tau_star", "tau_star_hit", "blowup"])?;
        for o in &outcomes {
            let s = &o.summary;
            p.write_record([
                num(s.epsilon),
                o.path_index.to_string(),
                o.seed.to_string(),
                num(s.sup_error),
                num(s.sup_error_tau),
                num(s.tau_star),
                s.tau_star_hit.to_string(),
                s.blowup.to_string(),
            ])?;
        }
        p.flush()?;
    }

    let bootstrap = BootstrapConfig { resamples: e.bootstrap_resamples, seed: e.bootstrap_seed };
    let (report, fit_error) = match fit_scaling(&e.epsilons, &errors, e.kappa, &bootstrap) {
        Ok(r) => (Some(r), None),
        Err(CoreError::Fit(msg)) => (None, Some(msg)),
        Err(other) => return Err(other.into()),
    };
    let verdict = match &report {
        None => Verdict::FitError,
        Some(r) if r.ci_low >= e.slope_floor => Verdict::Pass,
        Some(_) => Verdict::GateFail,
    };
    if let Some(msg) = &fit_error {
        eprintln!("fit error: {msg}");
    }
    if cfg.wants(Format::Json) {
        let r = report.as_ref();
        write_json(
            &dir.join("scaling.json"),
            &ScalingSummary {
                command: "scaling",
                synthetic,
                slope: r.map(|r| r.slope),
                intercept: r.map(|r| r.intercept),
                residual: r.map(|r| r.residual),
                ci_low: r.map(|r| r.ci_low),
                ci_high: r.map(|r| r.ci_high),
                bootstrap_resamples: bootstrap.resamples,
                fit_error,
                slope_floor: e.slope_floor,
                slope_ceiling: e.slope_ceiling,
                slope_in_band: r.is_some_and(|r| (e.slope_floor..=e.slope_ceiling).contains(&r.slope)),
                kappa: e.kappa,
                t0: cfg.solver.t0,
                seeds: Seeds {
                    master_seed: e.master_seed,
                    bootstrap_seed: e.bootstrap_seed,
                    path_seeds: (0..e.paths).map(|i| path_seed(e.master_seed, i)).collect(),
                },
                levels,
                verdict,
                config: cfg,
            },
        )?;
    }
    Ok(verdict)
}
