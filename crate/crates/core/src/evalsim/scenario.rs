//! Contamination sweeps over replicated normal samples.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{contaminate, contaminated_rows, kl_location, kl_scatter};
use crate::error::{Error, Result};
use crate::estimators::{compute_start, fit, fit_from_start, required_start, EstimatorConfig, Family, Start};
use crate::numkernel::linalg::sample_moments;
use crate::numkernel::rng::{rng_stream, standard_normal_matrix, stream_key};
use crate::numkernel::DataMatrix;
use crate::rho::RhoFamily;
use crate::start::{StartConfig, StartKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub p: usize,
    pub n: usize,
    /// Fraction of rows that are shifted.
    pub epsilon: f64,
    /// Scatter factor of the shifted coordinate.
    pub gamma_c: f64,
    /// Outlier sizes `K`.
    pub k_grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorConfig>,
    /// Also run every estimator on the uncontaminated samples and report
    /// efficiencies.
    pub clean: bool,
    pub mve_subsamples: usize,
    pub ksd_specific_directions: Option<usize>,
    pub ksd_cutoff_beta: Option<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            p: 5,
            n: 50,
            epsilon: 0.1,
            gamma_c: 0.0,
            k_grid: (1..=12).map(f64::from).collect(),
            replicates: 100,
            seed: 0,
            estimators: vec![EstimatorConfig::new(Family::MM)],
            clean: false,
            mve_subsamples: StartConfig::default().mve_subsamples,
            ksd_specific_directions: None,
            ksd_cutoff_beta: None,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Domain(m));
        if self.p < 2 || self.n < self.p + 2 {
            return fail(format!("scenario needs p >= 2 and n >= p + 2 (p = {}, n = {})", self.p, self.n));
        }
        if !(0.0..0.5).contains(&self.epsilon) || 2 * contaminated_rows(self.n, self.epsilon) >= self.n {
            return fail(format!("contamination rate {} must leave a majority of clean rows", self.epsilon));
        }
        if !(self.gamma_c >= 0.0 && self.gamma_c.is_finite()) {
            return fail(format!("outlier scatter factor {} must be nonnegative", self.gamma_c));
        }
        if self.replicates == 0 {
            return fail("scenario needs at least one replicate".into());
        }
        if self.estimators.is_empty() {
            return fail("scenario needs at least one estimator".into());
        }
        if self.k_grid.is_empty() && !self.clean {
            return fail("scenario has neither outlier sizes nor a clean pass".into());
        }
        if self.k_grid.iter().any(|k| !k.is_finite()) {
            return fail("outlier sizes must be finite".into());
        }
        Ok(())
    }

    fn start_config(&self, stream: u64) -> StartConfig {
        StartConfig {
            mve_subsamples: self.mve_subsamples,
            ksd_specific_directions: self.ksd_specific_directions,
            ksd_cutoff_beta: self.ksd_cutoff_beta,
            seed: self.seed,
            stream,
        }
    }
}

/// Mean divergences at one outlier size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub k: f64,
    /// Per estimator; `None` when every replicate failed.
    pub scatter: Vec<Option<f64>>,
    pub location: Vec<Option<f64>>,
    pub failures: Vec<usize>,
    pub nonconverged: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub label: String,
    pub config: EstimatorConfig,
    pub max_scatter: Option<f64>,
    pub max_scatter_k: Option<f64>,
    pub max_location: Option<f64>,
    pub max_location_k: Option<f64>,
    pub clean_scatter: Option<f64>,
    pub clean_location: Option<f64>,
    /// `D̄(C) / D̄(Σ̂)` on the clean samples.
    pub efficiency: Option<f64>,
    pub failures: usize,
    pub nonconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub scenario: Scenario,
    pub rows: Vec<KRow>,
    pub summaries: Vec<EstimatorSummary>,
    /// Mean scatter divergence of the sample covariance on clean samples.
    pub classical_clean_scatter: Option<f64>,
}

type Outcome = Option<(f64, f64, bool)>;

struct Replicate {
    classical: Option<f64>,
    clean: Vec<Outcome>,
    by_k: Vec<Vec<Outcome>>,
}

fn divergences(x: &DataMatrix, est: &crate::numkernel::LocationScatter) -> Option<(f64, f64)> {
    let p = x.p();
    let eye = DMatrix::<f64>::identity(p, p);
    let dl = kl_location(&est.mu, &DVector::zeros(p), &eye).ok()?;
    let ds = kl_scatter(&est.scatter(), &eye).ok()?;
    Some((ds, dl))
}

fn run_all(sc: &Scenario, x: &DataMatrix, replicate: usize, slot: u64) -> Vec<Outcome> {
    let mut starts: BTreeMap<u8, Option<Start>> = BTreeMap::new();
    let key = |kind: StartKind| match kind {
        StartKind::Mve => 0u8,
        StartKind::Ksd => 1u8,
    };
    let start_cfg = sc.start_config(stream_key(&[replicate as u64, slot]));
    sc.estimators
        .iter()
        .map(|cfg| {
            let fitted = match required_start(cfg) {
                Some(kind) => {
                    let start = starts
                        .entry(key(kind))
                        .or_insert_with(|| compute_start(x, kind, &start_cfg).ok());
                    match start {
                        Some(s) => fit_from_start(x, cfg, s, &start_cfg),
                        None => Err(Error::StartFailure("start failed".into())),
                    }
                }
                None => fit(x, cfg, &start_cfg),
            };
            let f = fitted.ok()?;
            let (ds, dl) = divergences(x, &f.estimate)?;
            Some((ds, dl, f.converged))
        })
        .collect()
}

fn run_replicate(sc: &Scenario, r: usize) -> Result<Replicate> {
    let mut rng = rng_stream(sc.seed, stream_key(&[r as u64]));
    let x = DataMatrix::new(standard_normal_matrix(&mut rng, sc.n, sc.p))?;
    let (classical, clean) = if sc.clean {
        let (_, cov) = sample_moments(x.values());
        let eye = DMatrix::<f64>::identity(sc.p, sc.p);
        (kl_scatter(&cov, &eye).ok(), run_all(sc, &x, r, 0))
    } else {
        (None, Vec::new())
    };
    let mut by_k = Vec::with_capacity(sc.k_grid.len());
    for (j, &k) in sc.k_grid.iter().enumerate() {
        let xc = contaminate(&x, sc.epsilon, sc.gamma_c, k)?;
        by_k.push(run_all(sc, &xc, r, j as u64 + 1));
    }
    Ok(Replicate { classical, clean, by_k })
}

struct Accumulator {
    scatter: f64,
    location: f64,
    ok: usize,
    failures: usize,
    nonconverged: usize,
}

impl Accumulator {
    fn new() -> Self {
        Self { scatter: 0.0, location: 0.0, ok: 0, failures: 0, nonconverged: 0 }
    }

    fn add(&mut self, o: &Outcome) {
        match o {
            Some((ds, dl, conv)) => {
                self.scatter += ds;
                self.location += dl;
                self.ok += 1;
                if !conv {
                    self.nonconverged += 1;
                }
            }
            None => self.failures += 1,
        }
    }

    fn means(&self) -> (Option<f64>, Option<f64>) {
        if self.ok == 0 {
            (None, None)
        } else {
            let n = self.ok as f64;
            (Some(self.scatter / n), Some(self.location / n))
        }
    }
}

fn max_with_arg(values: &[Option<f64>], ks: &[f64]) -> (Option<f64>, Option<f64>) {
    let mut best: Option<(f64, f64)> = None;
    for (v, &k) in values.iter().zip(ks) {
        if let Some(v) = v {
            if best.is_none_or(|(b, _)| *v > b) {
                best = Some((*v, k));
            }
        }
    }
    (best.map(|b| b.0), best.map(|b| b.1))
}

/// Runs the sweep. Replicates run in parallel on the current rayon pool and
/// are reduced in replicate order, so the report does not depend on the
/// number of worker threads.
pub fn run_scenario(sc: &Scenario) -> Result<DivergenceReport> {
    sc.validate()?;
    let reps: Vec<Replicate> = (0..sc.replicates)
        .into_par_iter()
        .map(|r| run_replicate(sc, r))
        .collect::<Result<_>>()?;

    let m = sc.estimators.len();
    let mut rows = Vec::with_capacity(sc.k_grid.len());
    for (j, &k) in sc.k_grid.iter().enumerate() {
        let mut acc: Vec<Accumulator> = (0..m).map(|_| Accumulator::new()).collect();
        for rep in &reps {
            for (a, o) in acc.iter_mut().zip(&rep.by_k[j]) {
                a.add(o);
            }
        }
        let (scatter, location) = acc.iter().map(Accumulator::means).unzip();
        rows.push(KRow {
            k,
            scatter,
            location,
            failures: acc.iter().map(|a| a.failures).collect(),
            nonconverged: acc.iter().map(|a| a.nonconverged).collect(),
        });
    }

    let (classical_clean_scatter, clean_acc) = if sc.clean {
        let vals: Vec<f64> = reps.iter().filter_map(|r| r.classical).collect();
        let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
        let mut acc: Vec<Accumulator> = (0..m).map(|_| Accumulator::new()).collect();
        for rep in &reps {
            for (a, o) in acc.iter_mut().zip(&rep.clean) {
                a.add(o);
            }
        }
        (mean, Some(acc))
    } else {
        (None, None)
    };

    let summaries = sc
        .estimators
        .iter()
        .enumerate()
        .map(|(e, cfg)| {
            let sc_col: Vec<Option<f64>> = rows.iter().map(|r| r.scatter[e]).collect();
            let loc_col: Vec<Option<f64>> = rows.iter().map(|r| r.location[e]).collect();
            let (max_scatter, max_scatter_k) = max_with_arg(&sc_col, &sc.k_grid);
            let (max_location, max_location_k) = max_with_arg(&loc_col, &sc.k_grid);
            let (clean_scatter, clean_location) =
                clean_acc.as_ref().map(|a| a[e].means()).unwrap_or((None, None));
            let efficiency = match (classical_clean_scatter, clean_scatter) {
                (Some(c), Some(s)) if s > 0.0 => Some(c / s),
                _ => None,
            };
            let mut failures: usize = rows.iter().map(|r| r.failures[e]).sum();
            let mut nonconverged: usize = rows.iter().map(|r| r.nonconverged[e]).sum();
            if let Some(a) = &clean_acc {
                failures += a[e].failures;
                nonconverged += a[e].nonconverged;
            }
            EstimatorSummary {
                label: cfg.label(),
                config: cfg.clone(),
                max_scatter,
                max_scatter_k,
                max_location,
                max_location_k,
                clean_scatter,
                clean_location,
                efficiency,
                failures,
                nonconverged,
            }
        })
        .collect();

    Ok(DivergenceReport { scenario: sc.clone(), rows, summaries, classical_clean_scatter })
}

/// Named scenario grids.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 2] = ["tabresumen-lite", "tabresumen-full"];

    /// Estimators of the summary comparison for dimension `p`, all from the
    /// KSD start. Rocke only has a tuning approximation from `p = 15` on.
    pub fn summary_estimators(p: usize) -> Vec<EstimatorConfig> {
        let mut v = vec![
            EstimatorConfig::new(Family::MM).with_rho(RhoFamily::Optimal),
            EstimatorConfig::new(Family::Tau).with_rho(RhoFamily::Optimal),
        ];
        if p >= crate::tuning::ROCKE_MIN_P {
            v.push(EstimatorConfig::new(Family::Rocke));
        }
        v.push(EstimatorConfig::new(Family::StahelDonoho));
        v.push(EstimatorConfig::new(Family::S).with_rho(RhoFamily::Bisquare).with_delta(0.5));
        v
    }

    fn grid(ps: &[usize], replicates: usize, seed: u64) -> Vec<Scenario> {
        let mut out = Vec::new();
        for &p in ps {
            for eps in [0.1, 0.2] {
                out.push(Scenario {
                    p,
                    n: 10 * p,
                    epsilon: eps,
                    gamma_c: 0.0,
                    replicates,
                    seed,
                    estimators: summary_estimators(p),
                    ..Scenario::default()
                });
            }
        }
        out
    }

    pub fn by_name(name: &str, seed: u64) -> Option<Vec<Scenario>> {
        match name {
            "tabresumen-lite" => Some(grid(&[5, 10], 100, seed)),
            "tabresumen-full" => Some(grid(&[5, 10, 15, 20, 30], 500, seed)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_estimator_has_unit_efficiency() {
        let sc = Scenario {
            p: 3,
            n: 30,
            replicates: 8,
            clean: true,
            k_grid: vec![2.0],
            estimators: vec![EstimatorConfig::new(Family::Classical)],
            ..Scenario::default()
        };
        let rep = run_scenario(&sc).unwrap();
        assert!((rep.summaries[0].efficiency.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let base = Scenario::default();
        assert!(Scenario { replicates: 0, ..base.clone() }.validate().is_err());
        assert!(Scenario { epsilon: 0.5, ..base.clone() }.validate().is_err());
        assert!(Scenario { estimators: vec![], ..base.clone() }.validate().is_err());
        assert!(base.validate().is_ok());
    }
}
