//! Tuning constants: closed-form approximations giving 90% normal
//! efficiency, and a Monte Carlo calibrator for arbitrary targets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{compute_start, fit_from_start, EstimatorConfig, Family, Start};
use crate::evalsim::kl_scatter;
use crate::numkernel::linalg::sample_moments;
use crate::numkernel::rng::{rng_stream, standard_normal_matrix, stream_key};
use crate::numkernel::DataMatrix;
use crate::rho::RhoFamily;
use crate::start::{StartConfig, StartKind};

/// Highest normal efficiency the Rocke estimator reaches for `p < 15`.
pub const ROCKE_SMALL_P_MAX_EFFICIENCY: f64 = 0.876;

/// Smallest dimension covered by the Rocke approximation.
pub const ROCKE_MIN_P: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuningStart {
    Mve,
    Ksd,
    Subsampling,
}

impl From<StartKind> for TuningStart {
    fn from(k: StartKind) -> Self {
        match k {
            StartKind::Mve => TuningStart::Mve,
            StartKind::Ksd => TuningStart::Ksd,
        }
    }
}

/// Functional form of a fitted approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    /// `(a + b/p + c/p²)(d + e·p/n)`
    QuadraticInverseP,
    /// `a + b/p + c·p/n`
    InversePPlusRatio,
    /// `a · p^b · n^c`
    PowerPN,
    /// `a · p^b`
    PowerP,
    /// `a + b/n + c·p/n`
    InverseNPlusRatio,
}

impl Formula {
    fn arity(self) -> usize {
        match self {
            Formula::QuadraticInverseP => 5,
            Formula::PowerP => 2,
            _ => 3,
        }
    }

    pub fn eval(self, coef: &[f64], p: usize, n: usize) -> f64 {
        let (p, n) = (p as f64, n as f64);
        match self {
            Formula::QuadraticInverseP => {
                (coef[0] + coef[1] / p + coef[2] / (p * p)) * (coef[3] + coef[4] * p / n)
            }
            Formula::InversePPlusRatio => coef[0] + coef[1] / p + coef[2] * p / n,
            Formula::PowerPN => coef[0] * p.powf(coef[1]) * n.powf(coef[2]),
            Formula::PowerP => coef[0] * p.powf(coef[1]),
            Formula::InverseNPlusRatio => coef[0] + coef[1] / n + coef[2] * p / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningEntry {
    pub family: Family,
    /// `None` when the constant does not depend on the start.
    pub start: Option<TuningStart>,
    /// `None` when the constant does not depend on ρ.
    pub rho: Option<RhoFamily>,
    pub formula: Formula,
    pub coef: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningTable {
    pub entries: Vec<TuningEntry>,
}

impl Default for TuningTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl TuningTable {
    /// Coefficients of the fitted approximations.
    pub fn standard() -> Self {
        use Formula::*;
        use RhoFamily::{Bisquare, Optimal};
        let e = |family, start, rho, formula, coef: &[f64]| TuningEntry {
            family,
            start,
            rho,
            formula,
            coef: coef.to_vec(),
        };
        let (mve, ksd, subs) = (Some(TuningStart::Mve), Some(TuningStart::Ksd), Some(TuningStart::Subsampling));
        Self {
            entries: vec![
                e(Family::MM, mve, Some(Bisquare), QuadraticInverseP, &[0.540, 3.538, -7.505, 1.114, -0.968]),
                e(Family::MM, mve, Some(Optimal), QuadraticInverseP, &[0.469, 3.158, -0.928, 1.167, -1.698]),
                e(Family::MM, ksd, Some(Bisquare), InversePPlusRatio, &[0.716, 2.572, -0.786]),
                e(Family::MM, ksd, Some(Optimal), InversePPlusRatio, &[0.612, 4.504, -1.112]),
                e(Family::Rocke, mve, None, PowerPN, &[0.00436, -0.5030, 0.4214]),
                e(Family::Rocke, ksd, None, PowerPN, &[0.00216, -1.0078, 0.8156]),
                e(Family::Tau, None, Some(Bisquare), PowerP, &[6.2984, -0.8458]),
                e(Family::Tau, None, Some(Optimal), PowerP, &[2.9987, -0.4647]),
                e(Family::StahelDonoho, subs, None, InverseNPlusRatio, &[5.116, 63.820, 2.213]),
                e(Family::StahelDonoho, ksd, None, InverseNPlusRatio, &[6.564, 0.211, 24.286]),
            ],
        }
    }

    pub fn lookup(&self, family: Family, start: TuningStart, rho: RhoFamily) -> Option<&TuningEntry> {
        self.entries.iter().find(|e| {
            e.family == family && e.start.is_none_or(|s| s == start) && e.rho.is_none_or(|r| r == rho)
        })
    }

    pub fn constant(&self, family: Family, start: TuningStart, rho: RhoFamily, p: usize, n: usize) -> Result<f64> {
        if p < 2 || n <= p {
            return Err(Error::Domain(format!("tuning needs p >= 2 and n > p (p = {p}, n = {n})")));
        }
        if family == Family::Rocke && p < ROCKE_MIN_P {
            return Err(Error::Tunability(format!(
                "the Rocke approximation covers p >= {ROCKE_MIN_P} only; below that the Rocke \
                 estimator cannot reach 0.90 efficiency (its maximum is about \
                 {ROCKE_SMALL_P_MAX_EFFICIENCY}); pass an explicit alpha"
            )));
        }
        let entry = self.lookup(family, start, rho).ok_or_else(|| {
            Error::Domain(format!("no tuning approximation for {family} with {start:?} start and {rho} ρ"))
        })?;
        if entry.coef.len() != entry.formula.arity() {
            return Err(Error::Domain(format!("malformed tuning entry for {family}")));
        }
        let c = entry.formula.eval(&entry.coef, p, n);
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Tunability(format!(
                "approximation for {family} gives a non-positive constant {c} at p = {p}, n = {n}"
            )));
        }
        Ok(c)
    }
}

/// Approximate constant (`c`, or `α` for Rocke) for 90% efficiency.
pub fn approx_constant(family: Family, start: TuningStart, rho: RhoFamily, p: usize, n: usize) -> Result<f64> {
    TuningTable::standard().constant(family, start, rho, p, n)
}

/// Outcome of a Monte Carlo calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub constant: f64,
    pub efficiency: f64,
    pub target: f64,
    /// False when the target lies outside the efficiencies reachable on the
    /// search bracket; `constant` is then the closest bracket end.
    pub attainable: bool,
    /// `(constant, efficiency)` for every evaluation, in order.
    pub path: Vec<(f64, f64)>,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Search bracket for the constant.
    pub lower: f64,
    pub upper: f64,
    /// Acceptable efficiency error.
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl CalibrationOptions {
    pub fn for_family(family: Family) -> Self {
        let (lower, upper) = match family {
            Family::Rocke => (1e-6, 0.5),
            Family::StahelDonoho => (0.05, 100.0),
            _ => (0.02, 50.0),
        };
        Self { lower, upper, tolerance: 0.005, max_evaluations: 40 }
    }
}

/// Clean samples and their starts, shared by every evaluated constant.
pub struct CommonSamples {
    pub samples: Vec<(DataMatrix, Start, StartConfig)>,
    pub classical_mean: f64,
}

impl CommonSamples {
    pub fn generate(cfg: &EstimatorConfig, p: usize, n: usize, replicates: usize, seed: u64) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::Domain("calibration needs at least one replicate".into()));
        }
        let samples: Vec<Result<(DataMatrix, Start, StartConfig, f64)>> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_stream(seed, stream_key(&[r as u64]));
                let x = DataMatrix::new(standard_normal_matrix(&mut rng, n, p))?;
                let start_cfg = StartConfig { seed, stream: stream_key(&[r as u64, 1]), ..StartConfig::default() };
                let start = compute_start(&x, cfg.start, &start_cfg)?;
                let (_, cov) = sample_moments(x.values());
                let dc = kl_scatter(&cov, &nalgebra::DMatrix::identity(p, p))?;
                Ok((x, start, start_cfg, dc))
            })
            .collect();
        let mut out = Vec::with_capacity(replicates);
        let mut total = 0.0;
        for s in samples {
            let (x, start, start_cfg, dc) = s?;
            total += dc;
            out.push((x, start, start_cfg));
        }
        Ok(Self { samples: out, classical_mean: total / replicates as f64 })
    }

    /// Efficiency `D̄(C) / D̄(Σ̂)` with tuning constant `c`, and the number of
    /// failed fits left out of the mean.
    pub fn efficiency(&self, cfg: &EstimatorConfig, c: f64) -> (f64, usize) {
        let cfg = cfg.clone().with_tuning(c);
        let ds: Vec<Option<f64>> = self
            .samples
            .par_iter()
            .map(|(x, start, start_cfg)| {
                let fit = fit_from_start(x, &cfg, start, start_cfg).ok()?;
                let p = x.p();
                kl_scatter(&fit.estimate.scatter(), &nalgebra::DMatrix::identity(p, p)).ok()
            })
            .collect();
        let ok: Vec<f64> = ds.iter().flatten().copied().collect();
        let failures = ds.len() - ok.len();
        if ok.is_empty() {
            return (0.0, failures);
        }
        let mean = ok.iter().sum::<f64>() / ok.len() as f64;
        (self.classical_mean / mean, failures)
    }
}

/// Finds the tuning constant giving normal efficiency `target` by bisection
/// on common random numbers. The bisection runs on `log c`; for Rocke the
/// efficiency decreases in `α`, for the other families it increases in `c`.
pub fn calibrate_efficiency(
    cfg: &EstimatorConfig,
    p: usize,
    n: usize,
    target: f64,
    replicates: usize,
    seed: u64,
) -> Result<Calibration> {
    calibrate_with(cfg, p, n, target, replicates, seed, CalibrationOptions::for_family(cfg.family))
}

pub fn calibrate_with(
    cfg: &EstimatorConfig,
    p: usize,
    n: usize,
    target: f64,
    replicates: usize,
    seed: u64,
    opts: CalibrationOptions,
) -> Result<Calibration> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target efficiency must lie in (0, 1), got {target}")));
    }
    if matches!(cfg.family, Family::S | Family::Classical) {
        return Err(Error::Domain(format!("{} has no tuning constant", cfg.family)));
    }
    if !(opts.lower > 0.0 && opts.upper > opts.lower) {
        return Err(Error::Domain("calibration bracket must satisfy 0 < lower < upper".into()));
    }
    let common = CommonSamples::generate(cfg, p, n, replicates, seed)?;
    let increasing = cfg.family != Family::Rocke;
    let mut path = Vec::new();
    let mut failures = 0;
    let mut eval = |c: f64, path: &mut Vec<(f64, f64)>| {
        let (e, f) = common.efficiency(cfg, c);
        failures = failures.max(f);
        path.push((c, e));
        e
    };

    // efficient end and inefficient end of the bracket
    let (hi_c, lo_c) = if increasing { (opts.upper, opts.lower) } else { (opts.lower, opts.upper) };
    let e_hi = eval(hi_c, &mut path);
    if e_hi < target - opts.tolerance {
        return Ok(Calibration { constant: hi_c, efficiency: e_hi, target, attainable: false, path, failures });
    }
    let e_lo = eval(lo_c, &mut path);
    if e_lo > target + opts.tolerance {
        return Ok(Calibration { constant: lo_c, efficiency: e_lo, target, attainable: false, path, failures });
    }

    let (mut a, mut b) = (lo_c.ln(), hi_c.ln());
    let mut best = if (e_hi - target).abs() < (e_lo - target).abs() { (hi_c, e_hi) } else { (lo_c, e_lo) };
    while path.len() < opts.max_evaluations {
        let mid = 0.5 * (a + b);
        let c = mid.exp();
        let e = eval(c, &mut path);
        if (e - target).abs() < (best.1 - target).abs() {
            best = (c, e);
        }
        if (e - target).abs() <= opts.tolerance {
            break;
        }
        if e < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Calibration {
        constant: best.0,
        efficiency: best.1,
        target,
        attainable: (best.1 - target).abs() <= 0.02,
        path,
        failures,
    })
}
