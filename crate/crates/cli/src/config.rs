//! Run configuration: a JSON file, with command-line flags on top.

use std::path::{Path, PathBuf};

use robust_gxe::inference::SelectionRule;
use robust_gxe::method::{Hyperparameters, Method};
use robust_gxe::simgen::{ErrorModel, SimulationConfig};
use robust_gxe::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub method: Option<Method>,
    /// Data CSV with header `y,w1..wq,e1..ek,x1..xp`.
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Center and scale the data before fitting (default true).
    pub standardize: Option<bool>,
    pub chains: Option<usize>,
    pub jobs: Option<usize>,
    pub rule: Option<SelectionRule>,
    pub cutoff: Option<f64>,
    pub hyper: Hyperparameters,
    pub simulation: Option<SimulationConfig>,
    /// Replicate harness: methods, error models, replicate count.
    pub methods: Option<Vec<Method>>,
    pub error_models: Option<Vec<ErrorModel>>,
    pub replicates: Option<usize>,
    /// Sensitivity sweep of RBSG-SS over Beta(a, b) priors instead of `methods`.
    pub beta_priors: Option<Vec<(f64, f64)>>,
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// JSON run configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// mpm or ci95.
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long)]
    pub cutoff: Option<f64>,
}

impl RunConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read config {}: {e}", path.display())]))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(vec![format!("config {}: {e}", path.display())]))
    }

    /// Load the file named by `--config` (if any) and apply the flags.
    /// Unparseable flag values are collected into `problems`.
    pub fn resolve(flags: &Overrides, problems: &mut Vec<String>) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(p) => Self::read(p)?,
            None => Self::default(),
        };
        if let Some(m) = &flags.method {
            match m.parse() {
                Ok(m) => cfg.method = Some(m),
                Err(e) => problems.push(format!("--method: {e}")),
            }
        }
        if let Some(r) = &flags.rule {
            match r.parse() {
                Ok(r) => cfg.rule = Some(r),
                Err(e) => problems.push(format!("--rule: {e}")),
            }
        }
        if flags.data.is_some() {
            cfg.data = flags.data.clone();
        }
        if flags.out.is_some() {
            cfg.out = flags.out.clone();
        }
        if let Some(v) = flags.iters {
            cfg.hyper.n_iter = v;
        }
        if let Some(v) = flags.burnin {
            cfg.hyper.burn_in = v;
        }
        if let Some(v) = flags.seed {
            cfg.hyper.seed = v;
            if let Some(sim) = cfg.simulation.as_mut() {
                sim.seed = v;
            }
        }
        if flags.chains.is_some() {
            cfg.chains = flags.chains;
        }
        if flags.jobs.is_some() {
            cfg.jobs = flags.jobs;
        }
        if flags.cutoff.is_some() {
            cfg.cutoff = flags.cutoff;
        }
        Ok(cfg)
    }

    pub fn chains(&self) -> usize {
        self.chains.unwrap_or(1)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Checks common to every subcommand.
    pub fn common_problems(&self) -> Vec<String> {
        let mut out = self.hyper.problems();
        if self.chains == Some(0) {
            out.push("chains must be >= 1".to_string());
        }
        if self.jobs == Some(0) {
            out.push("jobs must be >= 1".to_string());
        }
        if let Some(c) = self.cutoff {
            if !(c > 0.0 && c <= 1.0) {
                out.push(format!("cutoff must lie in (0, 1], got {c}"));
            }
        }
        if self.replicates == Some(0) {
            out.push("replicates must be >= 1".to_string());
        }
        if let Some(sim) = &self.simulation {
            out.extend(sim.problems().into_iter().map(|p| format!("simulation: {p}")));
        }
        if let Some(priors) = &self.beta_priors {
            for &(a, b) in priors {
                if !(a > 0.0 && b > 0.0) {
                    out.push(format!("beta prior ({a}, {b}) must have positive parameters"));
                }
            }
        }
        out
    }

    pub fn require_data(&self, problems: &mut Vec<String>) {
        match &self.data {
            None => problems.push("data is required (--data or \"data\" in the config)".to_string()),
            Some(p) if !p.is_file() => problems.push(format!("data file {} does not exist", p.display())),
            Some(_) => {}
        }
    }

    pub fn require_method(&self, problems: &mut Vec<String>) {
        if self.method.is_none() {
            problems.push("method is required (--method or \"method\" in the config)".to_string());
        }
    }
}

pub fn finish(problems: Vec<String>) -> Result<()> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems))
    }
}
