//! Fan-out of independent `(epsilon, path)` jobs and their deterministic merge.

use std::ops::Range;

use ampred_core::analysis::{decompose_psi_norms, residual_r, summarize_path, PathSummary};
use ampred_core::model::ModelSpec;
use ampred_core::solver::{initial_condition, simulate_coupled, InitialRegime};
use ampred_core::{NoisePath, SpectralField, TrajectoryRecord};
use rayon::prelude::*;

use crate::config::RunConfig;

/// Noise seed of path `index` under `master`. Independent of `epsilon`, so
/// every level of a sweep reuses the same seeds (common random numbers).
pub fn path_seed(master: u64, index: usize) -> u64 {
    let mut z = master ^ (index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sup statistics of the split `psi = Q + I + J + K` and of the residual on `[0, tau*]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartStats {
    pub sup_i: f64,
    pub sup_j: f64,
    pub sup_k: f64,
    pub k_time_integrated: f64,
    pub sup_residual: f64,
    pub max_defect: f64,
    pub max_continuum_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub eps_index: usize,
    pub path_index: usize,
    pub seed: u64,
    pub summary: PathSummary,
    pub parts: Option<PartStats>,
}

pub fn initial_state(cfg: &RunConfig, model: &ModelSpec) -> anyhow::Result<SpectralField> {
    let e = &cfg.experiment;
    Ok(initial_condition(model, e.initial_amplitude, &e.initial_stable, InitialRegime::Unchecked)?)
}

/// One coupled path (full equation plus amplitude) and the noise that drove it.
pub fn run_path(cfg: &RunConfig, model: &ModelSpec, seed: u64) -> anyhow::Result<(TrajectoryRecord, NoisePath)> {
    let solver = cfg.solver_config();
    let plan = solver.plan(model.epsilon())?;
    let path = NoisePath::generate(seed, plan.dt, plan.n_steps, model.n_modes())?;
    let u0 = initial_state(cfg, model)?;
    Ok((simulate_coupled(&u0, &solver, &path, model)?, path))
}

pub fn part_stats(traj: &TrajectoryRecord, path: &NoisePath, model: &ModelSpec) -> anyhow::Result<PartStats> {
    let dec = decompose_psi_norms(traj, path, model)?;
    let res = residual_r(traj, path, model)?;
    Ok(PartStats {
        sup_i: dec.sup_i,
        sup_j: dec.sup_j,
        sup_k: dec.sup_k,
        k_time_integrated: dec.k_time_integrated,
        sup_residual: res.sup_tau,
        max_defect: dec.max_defect,
        max_continuum_defect: dec.max_continuum_defect,
    })
}

/// What each job computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobKind {
    Errors,
    /// Errors plus [`PartStats`]; needs full-stride records.
    WithParts,
    /// Injects `sup_error = eps^2` to exercise the reporting path.
    Synthetic,
}

/// Runs paths `paths` at every `epsilon` in `epsilons` on the current rayon
/// pool. The result is ordered by `(eps_index, path_index)` whatever the schedule.
pub fn run_ensemble(
    cfg: &RunConfig,
    epsilons: &[f64],
    paths: Range<usize>,
    kind: JobKind,
) -> anyhow::Result<Vec<PathOutcome>> {
    let models = epsilons.iter().map(|e| cfg.model_at(*e)).collect::<anyhow::Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..epsilons.len()).flat_map(|i| paths.clone().map(move |p| (i, p))).collect();
    let master = cfg.experiment.master_seed;
    jobs.par_iter()
        .map(|&(eps_index, path_index)| {
            let model = &models[eps_index];
            let seed = path_seed(master, path_index);
            let (summary, parts) = match kind {
                JobKind::Synthetic => (synthetic_summary(cfg, model.epsilon()), None),
                JobKind::Errors => {
                    let (traj, _) = run_path(cfg, model, seed)?;
                    (summarize_path(&traj)?, None)
                }
                JobKind::WithParts => {
                    let (traj, path) = run_path(cfg, model, seed)?;
                    (summarize_path(&traj)?, Some(part_stats(&traj, &path, model)?))
                }
            };
            Ok(PathOutcome { eps_index, path_index, seed, summary, parts })
        })
        .collect()
}

fn synthetic_summary(cfg: &RunConfig, epsilon: f64) -> PathSummary {
    let err = epsilon * epsilon;
    PathSummary {
        epsilon,
        sup_error: err,
        sup_error_tau: err,
        sup_a_tau: 0.0,
        sup_psi_tau: 0.0,
        tau_star: cfg.solver.t0,
        tau_star_hit: false,
        blowup: false,
    }
}

/// Groups outcomes by `eps_index`, keeping path order.
pub fn by_level(outcomes: &[PathOutcome], n_levels: usize) -> Vec<Vec<&PathOutcome>> {
    let mut out = vec![Vec::new(); n_levels];
    for o in outcomes {
        out[o.eps_index].push(o);
    }
    out
}
