//! Subcommand dispatch.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lgqa::experiments::{lgi_sweep, resenergy_sweep, run_single_anneal, Dynamics};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::output::{anneal_csv, anneal_trace_csv, lgi_csv, resenergy_csv, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "lgqa", version, about = "Weakly measured Leggett-Garg functions during quantum annealing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Unmeasured sweep: residual energy, fidelity and the ⟨σz⟩ trace.
    Anneal(RunArgs),
    /// K₃ functions over the τ grid.
    Lgi(RunArgs),
    /// Residual energy and fidelity after weak measurements at τ and 2τ, per D.
    Resenergy(RunArgs),
    /// K₃ functions of the classical Langevin spin.
    ClassicalLgi(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides `experiment.master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Anneal(_) => "anneal",
            Command::Lgi(_) => "lgi",
            Command::Resenergy(_) => "resenergy",
            Command::ClassicalLgi(_) => "classical-lgi",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Anneal(a) | Command::Lgi(a) | Command::Resenergy(a) | Command::ClassicalLgi(a) => a,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Simulation(#[from] lgqa::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl RunError {
    /// 2 for numerical-invariant failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Simulation(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

fn write(dir: &Path, name: &str, body: &str, outputs: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    outputs.push(path);
    Ok(())
}

/// Runs `command` on an already resolved configuration, writing its CSV
/// files and manifest into `out`.
pub fn execute(command: &str, cfg: &Config, out: &Path) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    std::fs::create_dir_all(out).map_err(|source| RunError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let mut ec = cfg.experiment_config();
    let mut outputs = Vec::new();
    match command {
        "anneal" => {
            let run = run_single_anneal(&ec, 100)?;
            write(out, "anneal.csv", &anneal_csv(&run), &mut outputs)?;
            write(out, "anneal_trace.csv", &anneal_trace_csv(&run), &mut outputs)?;
        }
        "lgi" => {
            let rows = lgi_sweep(&ec)?;
            write(out, "lgi.csv", &lgi_csv(&rows), &mut outputs)?;
        }
        "resenergy" => {
            let rows = resenergy_sweep(&ec, &cfg.sweep.d_grid)?;
            write(out, "resenergy.csv", &resenergy_csv(&rows), &mut outputs)?;
        }
        "classical-lgi" => {
            ec.dynamics = Dynamics::Classical;
            let rows = lgi_sweep(&ec)?;
            write(out, "classical_lgi.csv", &lgi_csv(&rows), &mut outputs)?;
        }
        other => unreachable!("unknown command {other}"),
    }
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: cfg.experiment.master_seed,
        duration_seconds: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
        outputs,
    };
    let path = out.join(format!("{}_manifest.json", command.replace('-', "_")));
    manifest.write(&path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(manifest)
}

/// Parses the configuration, applies overrides and runs on a pool of the
/// requested size.
pub fn dispatch(cmd: &Command) -> Result<RunManifest, RunError> {
    let args = cmd.args();
    let mut cfg = Config::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.experiment.master_seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| RunError::Pool(e.to_string()))?;
    pool.install(|| execute(cmd.name(), &cfg, &args.out))
}
