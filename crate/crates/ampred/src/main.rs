use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ampred::commands;
use ampred::RunConfig;
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ampred", version, about = "Amplitude-equation scaling experiments for the stochastic Ginzburg-Landau equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coefficient table: lambda_k, alpha_k, sigma_k (closed form and quadrature), Sigma.
    Coeffs(Common),
    /// One coupled path: full equation and amplitude SDE.
    Simulate(Common),
    /// Epsilon sweep with ensembles and a log-log slope fit.
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Inject errors `eps^2` instead of simulating.
        #[arg(long)]
        synthetic: bool,
    },
    /// Split psi = Q + I + J + K along one fully recorded path.
    Decompose(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config, or a JSON summary written by an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `experiment.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn load(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let inner = value.get("config").cloned().unwrap_or(value);
        return RunConfig::from_json(&inner.to_string());
    }
    RunConfig::load(path)
}

fn run(cli: Cli) -> anyhow::Result<commands::Verdict> {
    let (common, synthetic) = match &cli.command {
        Command::Coeffs(c) | Command::Simulate(c) | Command::Decompose(c) => (c, false),
        Command::Scaling { common, synthetic } => (common, *synthetic),
    };
    let mut cfg = load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.experiment.master_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.directory = out.clone();
    }
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build()?;
    pool.install(|| match cli.command {
        Command::Coeffs(_) => commands::coeffs(&cfg),
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::Scaling { .. } => commands::scaling(&cfg, synthetic),
        Command::Decompose(_) => commands::decompose(&cfg),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(verdict) => ExitCode::from(verdict.exit_code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
