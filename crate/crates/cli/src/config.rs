//! Config files and the effective configuration of a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use robscatter::estimators::EstimatorConfig;
use robscatter::evalsim::Scenario;
use robscatter::start::StartConfig;

use crate::args::{EstimatorArgs, Format, GlobalArgs};
use crate::error::{CliError, CliResult};

/// JSON config file. Keys mirror the long flag names with underscores.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub subset: Option<String>,
    pub estimator: Option<String>,
    pub tuning: Option<f64>,
    pub delta: Option<f64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub mve_subsamples: Option<usize>,
    pub ksd_directions: Option<usize>,
    pub ksd_cutoff: Option<f64>,
    pub cutoff_quantile: Option<f64>,
    pub estimate: Option<PathBuf>,
    pub preset: Option<String>,
    /// Complete scenario list; overrides preset and the scenario flags' defaults.
    pub scenarios: Option<Vec<Scenario>>,
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub replicates: Option<usize>,
    pub k_grid: Option<Vec<f64>>,
    pub estimators: Option<Vec<String>>,
    pub clean: Option<bool>,
    pub family: Option<Vec<String>>,
    pub c: Option<f64>,
    pub rocke_gamma: Option<f64>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
    pub target: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Settings shared by every command after merging flags and config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Common {
    pub seed: u64,
    pub format: Format,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

pub fn resolve_common(g: &GlobalArgs, f: &FileConfig) -> Common {
    Common {
        seed: g.seed.or(f.seed).unwrap_or(0),
        format: g.format.or(f.format).unwrap_or(Format::Tsv),
        threads: g.threads.or(f.threads),
        output: g.output.clone().or_else(|| f.output.clone()),
    }
}

/// Estimator and start settings after merging flags and config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub estimator: EstimatorConfig,
    pub start: StartConfig,
}

pub const DEFAULT_ESTIMATOR: &str = "mm-opt+ksd";

pub fn resolve_estimator(a: &EstimatorArgs, f: &FileConfig, seed: u64) -> CliResult<EstimatorSettings> {
    let label = a.estimator.clone().or_else(|| f.estimator.clone()).unwrap_or_else(|| DEFAULT_ESTIMATOR.into());
    let mut est: EstimatorConfig = label.parse().map_err(|e: robscatter::Error| CliError::Usage(e.to_string()))?;
    est.tuning = a.tuning.or(f.tuning);
    est.delta = a.delta.or(f.delta);
    if let Some(m) = a.max_iter.or(f.max_iter) {
        est.max_iter = m;
    }
    if let Some(t) = a.tol.or(f.tol) {
        est.tol = t;
    }
    if let Some(t) = est.tuning {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("tuning must be positive, got {t}")));
        }
    }
    if let Some(d) = est.delta {
        if !(d > 0.0 && d <= 0.5) {
            return Err(CliError::Usage(format!("delta must lie in (0, 0.5], got {d}")));
        }
    }
    let defaults = StartConfig::default();
    let start = StartConfig {
        mve_subsamples: a.mve_subsamples.or(f.mve_subsamples).unwrap_or(defaults.mve_subsamples),
        ksd_specific_directions: a.ksd_directions.or(f.ksd_directions),
        ksd_cutoff_beta: a.ksd_cutoff.or(f.ksd_cutoff),
        seed,
        stream: 0,
    };
    if start.mve_subsamples == 0 {
        return Err(CliError::Usage("mve_subsamples must be positive".into()));
    }
    Ok(EstimatorSettings { estimator: est, start })
}
