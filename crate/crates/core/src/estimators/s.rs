//! S-estimators: minimize an M-scale of the squared distances. The Rocke
//! variant uses the biflat ρ with a first-iteration guard on its band width.

use serde::{Deserialize, Serialize};

use super::irls::{run_irls, Eval, Objective};
use super::{size_correct, EstimatorConfig, Family, Fit};
use crate::error::Result;
use crate::numkernel::linalg::mahalanobis_raw;
use crate::numkernel::{DataMatrix, LocationScatter};
use crate::rho::{RhoFamily, RhoSpec};
use crate::scales::{breakdown_delta, mscale_slice, MScaleParams};

/// Factor applied to the Rocke band half-width while too few points carry
/// positive weight.
pub const GAMMA_GROWTH: f64 = 1.5;

pub(crate) struct MScaleObjective {
    pub params: MScaleParams,
}

impl Objective for MScaleObjective {
    fn evaluate(&mut self, d: &[f64]) -> Result<Eval> {
        let s = mscale_slice(d, &self.params)?;
        let rho = &self.params.rho;
        let inv = 1.0 / s;
        let weights = d.iter().map(|&v| rho.weight_unchecked(v * inv)).collect();
        Ok(Eval { value: s, scale: s, weights })
    }
}

/// Band-width history of a Rocke fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RockeInfo {
    pub gamma_initial: f64,
    pub gamma_used: f64,
    /// Points with positive weight at the start after any band widening.
    pub first_positive: usize,
    pub fell_back_to_bisquare: bool,
}

fn resolve_delta(cfg: &EstimatorConfig, n: usize, p: usize) -> Result<f64> {
    match cfg.delta {
        Some(d) => Ok(d),
        None => breakdown_delta(n, p),
    }
}

fn finish(
    x: &DataMatrix,
    family: Family,
    out: super::irls::IrlsOutcome,
    rocke: Option<RockeInfo>,
    tuning: Option<f64>,
) -> Result<Fit> {
    let estimate = size_correct(x, &out.state.current)?;
    let mut warnings = Vec::new();
    if out.stalled {
        warnings.push("no descending step found; returning the best iterate".to_string());
    }
    Ok(Fit {
        estimate,
        family,
        tuning,
        scale: Some(out.state.scale),
        converged: out.converged,
        iterations: out.state.iteration,
        objective_trace: out.trace,
        weights: out.weights,
        rocke,
        returned_start: false,
        warnings,
    })
}

/// S-estimate with the monotone ρ of `cfg.rho` (bisquare or optimal).
pub fn s_estimate(x: &DataMatrix, cfg: &EstimatorConfig, start: &LocationScatter) -> Result<Fit> {
    let rho = RhoSpec::of_family(cfg.rho)?;
    s_with_rho(x, cfg, start, rho, Family::S)
}

fn s_with_rho(x: &DataMatrix, cfg: &EstimatorConfig, start: &LocationScatter, rho: RhoSpec, family: Family) -> Result<Fit> {
    let delta = resolve_delta(cfg, x.n(), x.p())?;
    let mut obj = MScaleObjective { params: MScaleParams::new(rho, delta)? };
    let out = run_irls(x.values(), &mut obj, start.mu.clone(), start.shape.clone(), cfg.control())?;
    finish(x, family, out, None, None)
}

/// Rocke S-estimate with band parameter `α` (`cfg.tuning`).
pub fn rocke_estimate(x: &DataMatrix, cfg: &EstimatorConfig, start: &LocationScatter, alpha: f64) -> Result<Fit> {
    let (n, p) = (x.n(), x.p());
    let delta = resolve_delta(cfg, n, p)?;
    let mut rho = RhoSpec::rocke(p, alpha)?;
    let gamma_initial = rho.gamma().expect("rocke spec carries gamma");
    let d0 = mahalanobis_raw(x.values(), &start.mu, &start.shape)?;

    let mut first_positive;
    loop {
        let s = mscale_slice(&d0, &MScaleParams::new(rho, delta)?)?;
        first_positive = d0.iter().filter(|&&v| rho.weight_unchecked(v / s) > 0.0).count();
        let gamma = rho.gamma().expect("rocke spec carries gamma");
        if first_positive >= 2 * p || gamma >= 1.0 {
            break;
        }
        rho = rho.with_gamma((gamma * GAMMA_GROWTH).min(1.0));
    }
    let gamma_used = rho.gamma().expect("rocke spec carries gamma");

    if first_positive < 2 * p {
        let fallback_cfg = EstimatorConfig { rho: RhoFamily::Bisquare, ..cfg.clone() };
        let mut fit = s_with_rho(x, &fallback_cfg, start, RhoSpec::bisquare(), Family::Rocke)?;
        fit.tuning = Some(alpha);
        fit.rocke = Some(RockeInfo { gamma_initial, gamma_used, first_positive, fell_back_to_bisquare: true });
        fit.warnings.push("Rocke weights left fewer than 2p points; fell back to a bisquare S-estimate".into());
        return Ok(fit);
    }

    let mut obj = MScaleObjective { params: MScaleParams::new(rho, delta)? };
    let out = run_irls(x.values(), &mut obj, start.mu.clone(), start.shape.clone(), cfg.control())?;
    let info = RockeInfo { gamma_initial, gamma_used, first_positive, fell_back_to_bisquare: false };
    finish(x, Family::Rocke, out, Some(info), Some(alpha))
}
