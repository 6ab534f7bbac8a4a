//! Run configuration: a versioned TOML document mirrored into every JSON summary.

use std::path::{Path, PathBuf};

use ampred_core::model::{ModelSpec, NoiseSpectrum};
use ampred_core::SolverConfig;
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub experiment: ExperimentBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub n_modes: usize,
    pub nu: f64,
    /// Index of the `||.||_alpha` norm used for errors and stopping times.
    pub alpha: f64,
    pub noise: NoiseBlock,
    pub cubic: bool,
    pub diffusion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseBlock {
    PowerLaw { exponent: f64 },
    Custom { values: Vec<f64> },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub dt_fast: f64,
    pub t0: f64,
    pub blowup_guard: f64,
    pub record_stride: usize,
    pub amplitude_block: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentBlock {
    /// Sweep for `scaling`.
    pub epsilons: Vec<f64>,
    /// Single value for `simulate` and `decompose`.
    pub epsilon: f64,
    pub paths: usize,
    pub master_seed: u64,
    pub kappa: f64,
    /// `u(0) = eps (a0 e_1 + sum psi0_k e_k)`.
    pub initial_amplitude: f64,
    pub initial_stable: Vec<(usize, f64)>,
    pub slope_floor: f64,
    pub slope_ceiling: f64,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: ModelBlock::default(),
            solver: SolverBlock::default(),
            experiment: ExperimentBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self { n_modes: 64, nu: 1.0, alpha: 1.0, noise: NoiseBlock::PowerLaw { exponent: 4.0 }, cubic: true, diffusion: true }
    }
}

impl Default for SolverBlock {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            dt_fast: s.dt_fast,
            t0: s.t0,
            blowup_guard: s.blowup_guard,
            record_stride: s.record_stride,
            amplitude_block: s.amplitude_block,
        }
    }
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        Self {
            epsilons: vec![0.1, 0.07, 0.05, 0.035, 0.025],
            epsilon: 0.1,
            paths: 200,
            master_seed: 0,
            kappa: 0.02,
            initial_amplitude: 0.5,
            initial_stable: Vec::new(),
            slope_floor: 1.6,
            slope_ceiling: 2.2,
            bootstrap_resamples: 200,
            bootstrap_seed: 0x5ca1_ab1e,
        }
    }
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl NoiseBlock {
    pub fn spectrum(&self) -> NoiseSpectrum {
        match self {
            Self::PowerLaw { exponent } => NoiseSpectrum::PowerLaw { exponent: *exponent },
            Self::Custom { values } => NoiseSpectrum::Custom(values.clone()),
            Self::Zero => NoiseSpectrum::Zero,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// Re-checks every invariant the core enforces, so bad files fail at load.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version);
        }
        let e = &self.experiment;
        for &eps in e.epsilons.iter().chain([&e.epsilon]) {
            self.model_at(eps)?;
        }
        self.solver_config().validate()?;
        if e.paths == 0 {
            bail!("experiment.paths must be at least 1");
        }
        if e.bootstrap_resamples == 0 {
            bail!("experiment.bootstrap_resamples must be at least 1");
        }
        if !(e.slope_floor <= e.slope_ceiling) {
            bail!("slope_floor {} exceeds slope_ceiling {}", e.slope_floor, e.slope_ceiling);
        }
        let model = self.model_at(e.epsilon)?;
        ampred_core::solver::initial_condition(
            &model,
            e.initial_amplitude,
            &e.initial_stable,
            ampred_core::solver::InitialRegime::Unchecked,
        )?;
        if self.output.formats.is_empty() {
            bail!("output.formats is empty");
        }
        Ok(())
    }

    pub fn model_at(&self, epsilon: f64) -> anyhow::Result<ModelSpec> {
        let m = &self.model;
        Ok(ModelSpec::ginzburg_landau(m.n_modes, m.nu, &m.noise.spectrum(), epsilon, self.experiment.kappa)?
            .with_alpha_index(m.alpha)?
            .with_cubic(m.cubic)
            .with_diffusion(m.diffusion))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            dt_fast: s.dt_fast,
            t0: s.t0,
            blowup_guard: s.blowup_guard,
            record_stride: s.record_stride,
            amplitude_block: s.amplitude_block,
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}
