//! MM-estimator: fixes the M-scale of the start's distances and minimizes
//! `Σ ρ(d_i / (cS))` over locations and det-1 shapes.

use super::irls::{run_irls, Eval, Objective};
use super::{size_correct, EstimatorConfig, Family, Fit};
use crate::error::{Error, Result};
use crate::numkernel::linalg::mahalanobis_raw;
use crate::numkernel::{DataMatrix, LocationScatter};
use crate::rho::RhoSpec;
use crate::scales::{breakdown_delta, mscale_slice, MScaleParams};

pub(crate) struct FixedScaleObjective {
    pub rho: RhoSpec,
    pub divisor: f64,
}

impl Objective for FixedScaleObjective {
    fn evaluate(&mut self, d: &[f64]) -> Result<Eval> {
        let inv = 1.0 / self.divisor;
        let mut value = 0.0;
        let mut weights = Vec::with_capacity(d.len());
        for &v in d {
            let t = v * inv;
            value += self.rho.rho_unchecked(t);
            weights.push(self.rho.weight_unchecked(t));
        }
        Ok(Eval { value: value / d.len() as f64, scale: self.divisor, weights })
    }
}

/// MM-estimate with tuning constant `c`.
pub fn mm_estimate(x: &DataMatrix, cfg: &EstimatorConfig, start: &LocationScatter, c: f64) -> Result<Fit> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("MM tuning constant must be positive, got {c}")));
    }
    let (n, p) = (x.n(), x.p());
    let rho = RhoSpec::of_family(cfg.rho)?;
    let delta = match cfg.delta {
        Some(d) => d,
        None => breakdown_delta(n, p)?,
    };
    let d0 = mahalanobis_raw(x.values(), &start.mu, &start.shape)?;
    let s = mscale_slice(&d0, &MScaleParams::new(rho, delta)?)?;

    let mut obj = FixedScaleObjective { rho, divisor: c * s };
    let start_value = obj.evaluate(&d0)?.value;
    let out = run_irls(x.values(), &mut obj, start.mu.clone(), start.shape.clone(), cfg.control())?;

    let mut warnings = Vec::new();
    if out.stalled {
        warnings.push("no descending step found; returning the best iterate".to_string());
    }
    // The descent guard makes this unreachable in exact arithmetic; it is the
    // contract that matters, so check it explicitly.
    let returned_start = !(out.state.objective <= start_value);
    let (current, trace, weights) = if returned_start {
        warnings.push("MM objective did not improve on the start; returning the start".to_string());
        let w = obj.evaluate(&d0)?.weights;
        (LocationScatter { mu: start.mu.clone(), shape: start.shape.clone(), size: 1.0 }, vec![start_value], w)
    } else {
        (out.state.current, out.trace, out.weights)
    };
    Ok(Fit {
        estimate: size_correct(x, &current)?,
        family: Family::MM,
        tuning: Some(c),
        scale: Some(s),
        converged: out.converged && !returned_start,
        iterations: out.state.iteration,
        objective_trace: trace,
        weights,
        rocke: None,
        returned_start,
        warnings,
    })
}
