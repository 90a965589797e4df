//! Experiment runner: multi-seed training campaigns, perturbation and risk
//! parameter sweeps, checkpoints, and CSV data for the training, robustness
//! and risk-sensitivity figures.
//!
//! Every run draws from three streams of its seed: stream 0 initializes the
//! networks, stream 1 drives training, stream 2 drives test episodes.
//!
//! Output layout under the campaign directory:
//!
//! ```text
//! config.toml                 resolved configuration
//! results.csv                 one ResultRow per run (training, beta sweep)
//! robustness.csv              one ResultRow per (value, seed) (perturbation sweep)
//! checkpoints/<run>.json      trained networks
//! logs/<run>.csv, .jsonl      per-episode training records
//! returns/<run>.csv           raw test returns (episode,return)
//! figures/training_curve.csv  algorithm,beta,episode,mean,std,n_runs
//! figures/robustness.csv      algorithm,beta,param_value,mean,cvar,n_runs
//! figures/beta_sensitivity.csv algorithm,beta,mean,cvar,n_runs
//! ```
//!
//! Figure rows average the per-run statistics over the successful seeds.

mod campaign;
mod checkpoint;
pub mod checks;
mod config;

use serde::{Deserialize, Serialize};

pub use campaign::{
    dump_trajectory, evaluate, run_beta_sweep, run_robustness_sweep, run_training, test_returns, write_returns,
    CampaignReport,
    CellOutcome,
};
pub use checkpoint::{Checkpoint, CheckpointDims, FORMAT_VERSION};
pub use config::{
    config_schema, default_beta_grid, default_hidden, default_perturbation_grid, default_threshold, seeds_from_env,
    ExperimentConfig, Sweep, TestPolicy,
};

use crate::algos::Algorithm;

/// Trailing window of the solved criterion.
pub const THRESHOLD_WINDOW: usize = 100;

/// One evaluated run. Statistics are empty when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub beta: f64,
    /// Value of the perturbable physical parameter in the test environment.
    pub param_value: f64,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Lower-tail VaR and CVaR at the configured risk level.
    pub var: Option<f64>,
    pub cvar: Option<f64>,
    pub episodes_to_threshold: Option<usize>,
    pub status: RunStatus,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// File-safe identifier of a training run.
pub fn run_id(algorithm: Algorithm, beta: f64, seed: u64) -> String {
    format!("{}_b{}_s{}", algorithm.name(), beta, seed)
}

pub fn write_results(path: &std::path::Path, rows: &[ResultRow]) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Usage(e.to_string()))?;
    crate::algos::write_file(path, &bytes)
}

pub fn read_results(path: &std::path::Path) -> crate::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(crate::Error::from)).collect()
}
