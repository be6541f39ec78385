//! The reweighting engine and the final estimators built on it.

pub mod irls;
pub mod mm;
pub mod s;
pub mod sd;
pub mod tau;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::linalg::mahalanobis_raw;
use crate::numkernel::{median, rng::stream_key, sample_moments, DataMatrix, LocationScatter};
use crate::rho::RhoFamily;
use crate::start::{self, ksd, size_from_median, DirectionSet, StartConfig, StartKind};
use crate::tuning::{approx_constant, TuningStart};

pub use irls::{reweighted_step, IrlsState};
pub use mm::mm_estimate;
pub use s::{rocke_estimate, s_estimate, RockeInfo};
pub use sd::stahel_donoho;
pub use tau::tau_estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "s")]
    S,
    #[serde(rename = "rocke")]
    Rocke,
    #[serde(rename = "mm")]
    MM,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "sd")]
    StahelDonoho,
    /// Sample mean and covariance.
    #[serde(rename = "classical")]
    Classical,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::S => "S",
            Family::Rocke => "Rocke",
            Family::MM => "MM",
            Family::Tau => "Tau",
            Family::StahelDonoho => "SD",
            Family::Classical => "Classical",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s" | "s-e" | "se" => Ok(Family::S),
            "rocke" => Ok(Family::Rocke),
            "mm" => Ok(Family::MM),
            "tau" | "τ" => Ok(Family::Tau),
            "sd" | "stahel-donoho" | "s-d" => Ok(Family::StahelDonoho),
            "classical" | "cov" => Ok(Family::Classical),
            other => Err(Error::Domain(format!(
                "unknown estimator '{other}' (expected s, rocke, mm, tau, sd or classical)"
            ))),
        }
    }
}

/// Where Stahel–Donoho takes its projection directions from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionSource {
    Ksd,
    /// Normals of hyperplanes through random `p`-subsets.
    Subsampling,
}

impl std::str::FromStr for DirectionSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ksd" => Ok(DirectionSource::Ksd),
            "subsampling" | "subs" => Ok(DirectionSource::Subsampling),
            other => Err(Error::Domain(format!("unknown direction source '{other}'"))),
        }
    }
}

/// Number of subsampled Stahel–Donoho directions per dimension.
pub const SUBSAMPLE_DIRECTIONS_PER_DIM: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub family: Family,
    /// ρ for S, MM and τ (bisquare or optimal); ignored by the others.
    pub rho: RhoFamily,
    /// `c` for MM, τ and Stahel–Donoho, `α` for Rocke. When unset the
    /// fitted approximation for 90% efficiency is used.
    pub tuning: Option<f64>,
    /// M-scale right-hand side; `(1 − p/n)/2` when unset.
    pub delta: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub start: StartKind,
    pub directions: DirectionSource,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::new(Family::MM)
    }
}

impl EstimatorConfig {
    pub fn new(family: Family) -> Self {
        let rho = match family {
            Family::S => RhoFamily::Bisquare,
            Family::Rocke => RhoFamily::RockeBiflat,
            _ => RhoFamily::Optimal,
        };
        Self {
            family,
            rho,
            tuning: None,
            delta: None,
            max_iter: 200,
            tol: 1e-7,
            start: StartKind::Ksd,
            directions: DirectionSource::Ksd,
        }
    }

    pub fn with_rho(mut self, rho: RhoFamily) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_start(mut self, start: StartKind) -> Self {
        self.start = start;
        self
    }

    pub fn with_tuning(mut self, tuning: f64) -> Self {
        self.tuning = Some(tuning);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub(crate) fn control(&self) -> irls::IrlsControl {
        irls::IrlsControl { max_iter: self.max_iter, tol: self.tol }
    }

    /// Short label such as `MM-opt+KSD`.
    pub fn label(&self) -> String {
        let rho = match self.rho {
            RhoFamily::Bisquare => "-bis",
            RhoFamily::Optimal => "-opt",
            RhoFamily::RockeBiflat => "",
        };
        let start = match self.start {
            StartKind::Mve => "MVE",
            StartKind::Ksd => "KSD",
        };
        match self.family {
            Family::S | Family::MM | Family::Tau => format!("{}{}+{}", self.family, rho, start),
            Family::Rocke => format!("Rocke+{start}"),
            Family::StahelDonoho => match self.directions {
                DirectionSource::Ksd => "SD+KSD".to_string(),
                DirectionSource::Subsampling => "SD+Subs".to_string(),
            },
            Family::Classical => "Classical".to_string(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self.family {
            Family::S | Family::MM | Family::Tau if self.rho == RhoFamily::RockeBiflat => {
                Err(Error::Domain(format!("{} needs a monotone ρ (bisquare or optimal)", self.family)))
            }
            _ if self.max_iter == 0 => Err(Error::Domain("max_iter must be positive".into())),
            _ if !(self.tol > 0.0) => Err(Error::Domain("tol must be positive".into())),
            _ => match self.tuning {
                Some(t) if !(t > 0.0 && t.is_finite()) => {
                    Err(Error::Domain(format!("tuning constant must be positive, got {t}")))
                }
                _ => Ok(()),
            },
        }
    }

    /// The tuning constant this configuration runs with on an `n x p` sample.
    pub fn resolve_tuning(&self, p: usize, n: usize) -> Result<Option<f64>> {
        if let Some(t) = self.tuning {
            return Ok(Some(t));
        }
        let start = match (self.family, self.start, self.directions) {
            (Family::StahelDonoho, _, DirectionSource::Ksd) => TuningStart::Ksd,
            (Family::StahelDonoho, _, DirectionSource::Subsampling) => TuningStart::Subsampling,
            (_, StartKind::Mve, _) => TuningStart::Mve,
            (_, StartKind::Ksd, _) => TuningStart::Ksd,
        };
        match self.family {
            Family::S | Family::Classical => Ok(None),
            family => approx_constant(family, start, self.rho, p, n).map(Some),
        }
    }
}

/// Parses labels of the form `family[-rho][+start]`, e.g. `mm-opt+ksd`,
/// `tau-bis+mve`, `rocke+ksd`, `sd+subs` or `classical`.
impl std::str::FromStr for EstimatorConfig {
    type Err = Error;

    fn from_str(label: &str) -> Result<Self> {
        let lower = label.trim().to_ascii_lowercase();
        let (head, start) = match lower.split_once('+') {
            Some((h, s)) => (h.to_string(), Some(s.to_string())),
            None => (lower.clone(), None),
        };
        let (family, rho) = match head.rsplit_once('-') {
            Some((f, r)) if r.parse::<RhoFamily>().is_ok() => (f.to_string(), Some(r.parse::<RhoFamily>()?)),
            _ => (head.clone(), None),
        };
        let mut cfg = EstimatorConfig::new(family.parse()?);
        if let Some(rho) = rho {
            cfg.rho = rho;
        }
        if let Some(start) = start {
            if cfg.family == Family::StahelDonoho {
                cfg.directions = start.parse()?;
            } else {
                cfg.start = start.parse()?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Result of a fit with its run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    /// Location, det-1 shape and size; the scatter is `size · shape`.
    pub estimate: LocationScatter,
    pub family: Family,
    pub tuning: Option<f64>,
    /// Final M-scale (S, Rocke), fixed MM scale `S`, or τ-scale.
    pub scale: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Objective after the start and after every accepted step.
    pub objective_trace: Vec<f64>,
    /// Weights of the last reweighting step.
    pub weights: Vec<f64>,
    pub rocke: Option<RockeInfo>,
    /// MM only: the start was returned because the objective did not drop.
    pub returned_start: bool,
    pub warnings: Vec<String>,
}

/// Sets the size so that the median squared distance matches the `χ²_p` median.
pub fn size_correct(x: &DataMatrix, est: &LocationScatter) -> Result<LocationScatter> {
    let d = mahalanobis_raw(x.values(), &est.mu, &est.shape)?;
    let med = median(&d).ok_or_else(|| Error::InvalidData("empty data".into()))?;
    let size = size_from_median(med, x.p())?;
    Ok(LocationScatter { mu: est.mu.clone(), shape: est.shape.clone(), size })
}

/// Sample mean and covariance as a fit.
pub fn classical(x: &DataMatrix) -> Result<Fit> {
    let (mu, cov) = sample_moments(x.values());
    let estimate = LocationScatter::from_scatter(mu, &cov)?;
    Ok(Fit {
        estimate,
        family: Family::Classical,
        tuning: None,
        scale: None,
        converged: true,
        iterations: 0,
        objective_trace: Vec::new(),
        weights: vec![1.0; x.n()],
        rocke: None,
        returned_start: false,
        warnings: Vec::new(),
    })
}

/// A starting estimate together with the KSD directions when available.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Start {
    pub kind: StartKind,
    pub estimate: LocationScatter,
    pub directions: Option<DirectionSet>,
}

pub fn compute_start(x: &DataMatrix, kind: StartKind, cfg: &StartConfig) -> Result<Start> {
    match kind {
        StartKind::Mve => Ok(Start { kind, estimate: start::mve_start(x, cfg)?, directions: None }),
        StartKind::Ksd => {
            let (estimate, dirs) = start::ksd_start(x, cfg)?;
            Ok(Start { kind, estimate, directions: Some(dirs) })
        }
    }
}

/// Runs `cfg` from an already computed start. Stahel–Donoho ignores the start
/// estimate and uses the start's KSD directions or fresh subsampled ones.
pub fn fit_from_start(x: &DataMatrix, cfg: &EstimatorConfig, start: &Start, start_cfg: &StartConfig) -> Result<Fit> {
    cfg.validate()?;
    let (n, p) = (x.n(), x.p());
    let tuning = cfg.resolve_tuning(p, n)?;
    let need = |t: Option<f64>| t.expect("tuned families resolve a constant");
    match cfg.family {
        Family::Classical => classical(x),
        Family::S => s_estimate(x, cfg, &start.estimate),
        Family::Rocke => rocke_estimate(x, cfg, &start.estimate, need(tuning)),
        Family::MM => mm_estimate(x, cfg, &start.estimate, need(tuning)),
        Family::Tau => tau_estimate(x, cfg, &start.estimate, need(tuning)),
        Family::StahelDonoho => {
            let dirs = sd_directions(x, cfg.directions, start, start_cfg)?;
            stahel_donoho(x, cfg, &dirs, need(tuning))
        }
    }
}

fn sd_directions(x: &DataMatrix, source: DirectionSource, start: &Start, start_cfg: &StartConfig) -> Result<DirectionSet> {
    match source {
        DirectionSource::Ksd => match &start.directions {
            Some(d) => Ok(d.clone()),
            None => ksd::kurtosis_directions(x, start_cfg),
        },
        DirectionSource::Subsampling => Ok(subsampled(x, start_cfg)),
    }
}

fn subsampled(x: &DataMatrix, start_cfg: &StartConfig) -> DirectionSet {
    ksd::subsample_directions(
        x,
        SUBSAMPLE_DIRECTIONS_PER_DIM * x.p(),
        start_cfg.seed,
        stream_key(&[start_cfg.stream, 0x5d]),
    )
}

/// The start `cfg` needs, if any.
pub fn required_start(cfg: &EstimatorConfig) -> Option<StartKind> {
    match (cfg.family, cfg.directions) {
        (Family::Classical, _) | (Family::StahelDonoho, DirectionSource::Subsampling) => None,
        (Family::StahelDonoho, DirectionSource::Ksd) => Some(StartKind::Ksd),
        _ => Some(cfg.start),
    }
}

/// Computes the start `cfg` needs and runs the estimator from it.
pub fn fit(x: &DataMatrix, cfg: &EstimatorConfig, start_cfg: &StartConfig) -> Result<Fit> {
    cfg.validate()?;
    // resolve the constant before paying for the start
    let tuning = cfg.resolve_tuning(x.p(), x.n())?;
    match required_start(cfg) {
        Some(kind) => {
            let start = compute_start(x, kind, start_cfg)?;
            fit_from_start(x, cfg, &start, start_cfg)
        }
        None if cfg.family == Family::Classical => classical(x),
        None => {
            let dirs = subsampled(x, start_cfg);
            stahel_donoho(x, cfg, &dirs, tuning.expect("tuned families resolve a constant"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::rng::{rng_stream, standard_normal_matrix};

    #[test]
    fn size_is_one_when_medians_match() {
        let x = DataMatrix::new(standard_normal_matrix(&mut rng_stream(31, 0), 40, 3)).unwrap();
        let (mu, cov) = sample_moments(x.values());
        let est = LocationScatter::from_scatter(mu, &cov).unwrap();
        let fixed = size_correct(&x, &est).unwrap();
        let again = size_correct(&x, &LocationScatter { size: 1.0, ..fixed.clone() }).unwrap();
        assert!((again.size - fixed.size).abs() < 1e-14 * fixed.size);
        let d = crate::numkernel::mahalanobis(&x, &fixed, true).unwrap();
        let med = median(d.as_slice()).unwrap();
        assert!((med / crate::numkernel::chi2_median(3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn size_scales_quadratically() {
        let x = DataMatrix::new(standard_normal_matrix(&mut rng_stream(32, 0), 40, 3)).unwrap();
        let (mu, cov) = sample_moments(x.values());
        let est = LocationScatter::from_scatter(mu, &cov).unwrap();
        let base = size_correct(&x, &est).unwrap().size;
        let k = 3.0;
        let xk = DataMatrix::new(x.values() * k).unwrap();
        let estk = LocationScatter { mu: &est.mu * k, ..est.clone() };
        let sk = size_correct(&xk, &estk).unwrap().size;
        assert!((sk / base - k * k).abs() < 1e-10 * k * k);
    }

    #[test]
    fn labels() {
        assert_eq!(EstimatorConfig::new(Family::MM).label(), "MM-opt+KSD");
        assert_eq!(EstimatorConfig::new(Family::Rocke).with_start(StartKind::Mve).label(), "Rocke+MVE");
        assert_eq!(EstimatorConfig::new(Family::S).label(), "S-bis+KSD");
    }

    #[test]
    fn labels_parse_back() {
        for label in ["MM-opt+KSD", "Tau-bis+MVE", "Rocke+KSD", "SD+Subs", "S-bis+KSD", "Classical"] {
            let cfg: EstimatorConfig = label.parse().unwrap();
            assert_eq!(cfg.label(), label);
        }
        assert!("mm-rocke+ksd".parse::<EstimatorConfig>().is_err());
        assert!("xyz".parse::<EstimatorConfig>().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = EstimatorConfig::new(Family::Tau).with_tuning(1.25).with_delta(0.4);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<EstimatorConfig>(&json).unwrap(), cfg);
    }
}
