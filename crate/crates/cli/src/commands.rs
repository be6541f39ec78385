//! Command implementations. Each command builds a serializable report; the
//! binary renders it as TSV or JSON.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use robscatter::estimators::{fit, Fit, RockeInfo};
use robscatter::evalsim::scenario::presets;
use robscatter::evalsim::{run_scenario, DivergenceReport, Scenario};
use robscatter::numkernel::linalg::mahalanobis_raw;
use robscatter::numkernel::{chi2_quantile, DataMatrix};
use robscatter::rho::{RhoFamily, RhoSpec};
use robscatter::tuning::{calibrate_efficiency, Calibration};

use crate::args::{CalibrateArgs, DataArgs, EstimateArgs, QqArgs, SimulateArgs, WeightsArgs};
use crate::config::{resolve_estimator, Common, EstimatorSettings, FileConfig};
use crate::error::{CliError, CliResult};
use crate::input::{read_csv, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub input: PathBuf,
    pub subset: Option<String>,
}

fn resolve_data(a: &DataArgs, f: &FileConfig) -> CliResult<DataSource> {
    let input = a
        .input
        .clone()
        .or_else(|| f.input.clone())
        .ok_or_else(|| CliError::Usage("an input CSV is required (--input)".into()))?;
    Ok(DataSource { input, subset: a.subset.clone().or_else(|| f.subset.clone()) })
}

fn load_table(src: &DataSource) -> CliResult<Table> {
    let table = read_csv(&src.input)?;
    match &src.subset {
        Some(spec) => table.subset(spec),
        None => Ok(table),
    }
}

fn load_matrix(src: &DataSource) -> CliResult<DataMatrix> {
    let table = load_table(src)?;
    DataMatrix::new(table.to_matrix()).map_err(|e| CliError::data(src.input.display(), e.to_string()))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub common: Common,
    pub data: DataSource,
    pub settings: EstimatorSettings,
    pub cutoff_quantile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub config: EstimateConfig,
    pub estimator: String,
    pub n: usize,
    pub p: usize,
    pub tuning: Option<f64>,
    pub scale: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub returned_start: bool,
    pub rocke: Option<RockeInfo>,
    pub warnings: Vec<String>,
    pub location: Vec<f64>,
    /// Full scatter `size · shape`, row by row.
    pub scatter: Vec<Vec<f64>>,
    pub size: f64,
    /// Squared distances under the full scatter.
    pub distances: Vec<f64>,
    pub cutoff: f64,
    /// 1-based row numbers of points beyond the cutoff.
    pub outliers: Vec<usize>,
}

pub const DEFAULT_CUTOFF_QUANTILE: f64 = 0.975;

fn resolve_estimate_config(
    common: &Common,
    data: &DataArgs,
    est: &crate::args::EstimatorArgs,
    cutoff_quantile: Option<f64>,
    f: &FileConfig,
) -> CliResult<EstimateConfig> {
    let q = cutoff_quantile.or(f.cutoff_quantile).unwrap_or(DEFAULT_CUTOFF_QUANTILE);
    if !(q > 0.0 && q < 1.0) {
        return Err(CliError::Usage(format!("cutoff quantile must lie in (0, 1), got {q}")));
    }
    Ok(EstimateConfig {
        common: common.clone(),
        data: resolve_data(data, f)?,
        settings: resolve_estimator(est, f, common.seed)?,
        cutoff_quantile: q,
    })
}

fn run_fit(x: &DataMatrix, settings: &EstimatorSettings) -> CliResult<Fit> {
    Ok(fit(x, &settings.estimator, &settings.start)?)
}

pub fn estimate(common: &Common, a: &EstimateArgs, f: &FileConfig) -> CliResult<EstimateReport> {
    let config = resolve_estimate_config(common, &a.data, &a.estimator, a.cutoff_quantile, f)?;
    let x = load_matrix(&config.data)?;
    let fitted = run_fit(&x, &config.settings)?;
    let est = &fitted.estimate;
    let scatter = est.scatter();
    let distances = mahalanobis_raw(x.values(), &est.mu, &scatter)?;
    let cutoff = chi2_quantile(x.p(), config.cutoff_quantile)?;
    let outliers = distances.iter().enumerate().filter(|(_, d)| **d > cutoff).map(|(i, _)| i + 1).collect();
    Ok(EstimateReport {
        estimator: config.settings.estimator.label(),
        n: x.n(),
        p: x.p(),
        tuning: fitted.tuning,
        scale: fitted.scale,
        iterations: fitted.iterations,
        converged: fitted.converged,
        returned_start: fitted.returned_start,
        rocke: fitted.rocke,
        warnings: fitted.warnings.clone(),
        location: est.mu.iter().copied().collect(),
        scatter: matrix_rows(&scatter),
        size: est.size,
        distances,
        cutoff,
        outliers,
        config,
    })
}

// ---------------------------------------------------------------------- qq

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqConfig {
    pub common: Common,
    pub data: DataSource,
    /// Estimator settings, or the report the estimate was read from.
    pub settings: Option<EstimatorSettings>,
    pub estimate: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqReport {
    pub config: QqConfig,
    pub p: usize,
    /// `(i-th smallest squared distance, χ²_p quantile at (i − 0.5)/n)`.
    pub rows: Vec<(f64, f64)>,
}

pub fn qq(common: &Common, a: &QqArgs, f: &FileConfig) -> CliResult<QqReport> {
    let data = resolve_data(&a.data, f)?;
    let estimate_path = a.estimate.clone().or_else(|| f.estimate.clone());
    let (distances, p, settings) = match &estimate_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let rep: EstimateReport = serde_json::from_str(&text)
                .map_err(|e| CliError::data(path.display(), format!("not an estimate report: {e}")))?;
            let table = load_table(&data)?;
            if table.ncols() != rep.p {
                return Err(CliError::data(
                    data.input.display(),
                    format!("{} columns but the estimate has p = {}", table.ncols(), rep.p),
                ));
            }
            let x = table.to_matrix();
            let mu = DVector::from_vec(rep.location.clone());
            let scatter = DMatrix::from_fn(rep.p, rep.p, |i, j| rep.scatter[i][j]);
            (mahalanobis_raw(&x, &mu, &scatter)?, rep.p, None)
        }
        None => {
            let settings = resolve_estimator(&a.estimator, f, common.seed)?;
            let x = load_matrix(&data)?;
            let fitted = run_fit(&x, &settings)?;
            let d = mahalanobis_raw(x.values(), &fitted.estimate.mu, &fitted.estimate.scatter())?;
            (d, x.p(), Some(settings))
        }
    };
    let mut sorted = distances;
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let rows = sorted
        .into_iter()
        .enumerate()
        .map(|(i, d)| Ok((d, chi2_quantile(p, (i as f64 + 0.5) / n)?)))
        .collect::<robscatter::Result<Vec<_>>>()?;
    Ok(QqReport { config: QqConfig { common: common.clone(), data, settings, estimate: estimate_path }, p, rows })
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub common: Common,
    pub preset: Option<String>,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub config: SimulateConfig,
    pub reports: Vec<DivergenceReport>,
}

fn resolve_scenarios(common: &Common, a: &SimulateArgs, f: &FileConfig) -> CliResult<(Option<String>, Vec<Scenario>)> {
    let preset = a.preset.clone().or_else(|| f.preset.clone());
    let mut scenarios = match (&preset, &f.scenarios) {
        (Some(name), _) => presets::by_name(name, common.seed).ok_or_else(|| {
            CliError::Usage(format!("unknown preset '{name}' (known: {})", presets::NAMES.join(", ")))
        })?,
        (None, Some(list)) => list.clone(),
        (None, None) => vec![Scenario { seed: common.seed, ..Scenario::default() }],
    };
    let estimators = match a.estimators.clone().or_else(|| f.estimators.clone()) {
        Some(labels) => Some(
            labels
                .iter()
                .map(|l| l.parse().map_err(|e: robscatter::Error| CliError::Usage(e.to_string())))
                .collect::<CliResult<Vec<_>>>()?,
        ),
        None => None,
    };
    for sc in &mut scenarios {
        sc.seed = common.seed;
        if let Some(p) = a.p.or(f.p) {
            sc.p = p;
            if preset.is_some() {
                sc.estimators = presets::summary_estimators(p);
            }
        }
        if let Some(n) = a.n.or(f.n) {
            sc.n = n;
        } else if a.p.or(f.p).is_some() && preset.is_some() {
            sc.n = 10 * sc.p;
        }
        if let Some(e) = a.epsilon.or(f.epsilon) {
            sc.epsilon = e;
        }
        if let Some(g) = a.gamma.or(f.gamma) {
            sc.gamma_c = g;
        }
        if let Some(r) = a.replicates.or(f.replicates) {
            sc.replicates = r;
        }
        if let Some(k) = a.k_grid.clone().or_else(|| f.k_grid.clone()) {
            sc.k_grid = k;
        }
        if let Some(e) = &estimators {
            sc.estimators = e.clone();
        }
        if a.clean || f.clean == Some(true) {
            sc.clean = true;
        }
        sc.validate().map_err(|e| CliError::Usage(format!("invalid scenario: {e}")))?;
    }
    if preset.is_some() && a.p.or(f.p).is_some() {
        // overriding p collapses the preset grid; keep each (n, ε) once
        let mut seen: Vec<(usize, f64)> = Vec::new();
        scenarios.retain(|sc| {
            let key = (sc.n, sc.epsilon);
            let fresh = !seen.contains(&key);
            seen.push(key);
            fresh
        });
    }
    Ok((preset, scenarios))
}

pub fn simulate(common: &Common, a: &SimulateArgs, f: &FileConfig) -> CliResult<SimulateReport> {
    let (preset, scenarios) = resolve_scenarios(common, a, f)?;
    let reports = scenarios.iter().map(run_scenario).collect::<robscatter::Result<Vec<_>>>()?;
    Ok(SimulateReport { config: SimulateConfig { common: common.clone(), preset, scenarios }, reports })
}

// ----------------------------------------------------------------- weights

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsConfig {
    pub common: Common,
    pub families: Vec<RhoFamily>,
    pub c: f64,
    pub rocke_gamma: f64,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsReport {
    pub config: WeightsConfig,
    pub t: Vec<f64>,
    /// One column per family, aligned with `t`.
    pub weights: Vec<Vec<f64>>,
}

pub fn weights(common: &Common, a: &WeightsArgs, f: &FileConfig) -> CliResult<WeightsReport> {
    let names = a.family.clone().or_else(|| f.family.clone()).unwrap_or_else(|| vec!["bisquare".into(), "optimal".into()]);
    let families = names
        .iter()
        .map(|s| s.parse::<RhoFamily>().map_err(|e| CliError::Usage(e.to_string())))
        .collect::<CliResult<Vec<_>>>()?;
    let c = a.c.or(f.c).unwrap_or(1.0);
    let rocke_gamma = a.rocke_gamma.or(f.rocke_gamma).unwrap_or(0.5);
    let from = a.from.or(f.from).unwrap_or(0.0);
    let to = a.to.or(f.to).unwrap_or_else(|| 10.0 * c);
    let steps = a.steps.or(f.steps).unwrap_or(200);
    if !(from >= 0.0 && to > from && from.is_finite() && to.is_finite()) {
        return Err(CliError::Usage(format!("grid needs 0 <= from < to, got [{from}, {to}]")));
    }
    if steps == 0 {
        return Err(CliError::Usage("steps must be positive".into()));
    }
    let specs = families
        .iter()
        .map(|fam| {
            let base = match fam {
                RhoFamily::RockeBiflat => RhoSpec::rocke_with_gamma(rocke_gamma)?,
                other => RhoSpec::of_family(*other)?,
            };
            base.scaled(c)
        })
        .collect::<robscatter::Result<Vec<_>>>()?;
    let t: Vec<f64> = (0..=steps)
        .map(|i| if i == steps { to } else { from + (to - from) * i as f64 / steps as f64 })
        .collect();
    let weights = specs.iter().map(|s| t.iter().map(|&v| s.weight_unchecked(v)).collect()).collect();
    Ok(WeightsReport {
        config: WeightsConfig { common: common.clone(), families, c, rocke_gamma, from, to, steps },
        t,
        weights,
    })
}

// --------------------------------------------------------------- calibrate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateConfig {
    pub common: Common,
    pub settings: EstimatorSettings,
    pub p: usize,
    pub n: usize,
    pub target: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateReport {
    pub config: CalibrateConfig,
    pub estimator: String,
    pub calibration: Calibration,
}

pub fn calibrate(common: &Common, a: &CalibrateArgs, f: &FileConfig) -> CliResult<CalibrateReport> {
    let settings = resolve_estimator(&a.estimator, f, common.seed)?;
    let p = a.p.or(f.p).unwrap_or(5);
    let n = a.n.or(f.n).unwrap_or(10 * p);
    let target = a.target.or(f.target).unwrap_or(0.9);
    let replicates = a.replicates.or(f.replicates).unwrap_or(100);
    if p < 2 || n < p + 2 {
        return Err(CliError::Usage(format!("calibration needs p >= 2 and n >= p + 2 (p = {p}, n = {n})")));
    }
    if replicates == 0 {
        return Err(CliError::Usage("replicates must be positive".into()));
    }
    let calibration = calibrate_efficiency(&settings.estimator, p, n, target, replicates, common.seed)?;
    Ok(CalibrateReport {
        estimator: settings.estimator.label(),
        config: CalibrateConfig { common: common.clone(), settings, p, n, target, replicates },
        calibration,
    })
}
