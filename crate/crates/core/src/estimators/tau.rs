//! τ-estimator: minimizes the τ-scale `σ₀ · mean ρ₁(d_i / (c σ₀))` of the
//! squared distances, where `σ₀` is the M-scale with `ρ₁`.

use super::irls::{run_irls, Eval, Objective};
use super::{size_correct, EstimatorConfig, Family, Fit};
use crate::error::{Error, Result};
use crate::numkernel::{DataMatrix, LocationScatter};
use crate::rho::RhoSpec;
use crate::scales::{breakdown_delta, mscale_slice, MScaleParams};

pub(crate) struct TauObjective {
    pub params: MScaleParams,
    pub rho2: RhoSpec,
    /// Steps that used the plain ρ₂ weights because the composite
    /// coefficient was not positive.
    pub fallbacks: usize,
}

impl TauObjective {
    pub fn new(rho1: RhoSpec, c: f64, delta: f64) -> Result<Self> {
        Ok(Self { params: MScaleParams::new(rho1, delta)?, rho2: rho1.scaled(c)?, fallbacks: 0 })
    }
}

/// Stationarity of the τ-scale gives the weights
/// `w_i = A ρ₁'(t_i) + ρ₂'(t_i)` with `t_i = d_i/σ₀` and
/// `A = (Σ ρ₂(t_j) − Σ t_j ρ₂'(t_j)) / Σ t_j ρ₁'(t_j)`.
pub fn composite_coefficient(t: &[f64], rho1: &RhoSpec, rho2: &RhoSpec) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &v in t {
        num += rho2.rho_unchecked(v) - v * rho2.derivative(v);
        den += v * rho1.derivative(v);
    }
    num / den
}

impl Objective for TauObjective {
    fn evaluate(&mut self, d: &[f64]) -> Result<Eval> {
        let rho1 = self.params.rho;
        let sigma0 = mscale_slice(d, &self.params)?;
        let t: Vec<f64> = d.iter().map(|v| v / sigma0).collect();
        let mean2 = t.iter().map(|&v| self.rho2.rho_unchecked(v)).sum::<f64>() / t.len() as f64;
        let a = composite_coefficient(&t, &rho1, &self.rho2);
        let weights = if a > 0.0 && a.is_finite() {
            t.iter().map(|&v| a * rho1.derivative(v) + self.rho2.derivative(v)).collect()
        } else {
            self.fallbacks += 1;
            t.iter().map(|&v| self.rho2.weight_unchecked(v)).collect()
        };
        Ok(Eval { value: sigma0 * mean2, scale: sigma0, weights })
    }
}

/// τ-estimate with `ρ₁ = cfg.rho` and `ρ₂(t) = ρ₁(t/c)`.
pub fn tau_estimate(x: &DataMatrix, cfg: &EstimatorConfig, start: &LocationScatter, c: f64) -> Result<Fit> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("τ tuning constant must be positive, got {c}")));
    }
    let rho1 = RhoSpec::of_family(cfg.rho)?;
    let delta = match cfg.delta {
        Some(d) => d,
        None => breakdown_delta(x.n(), x.p())?,
    };
    let mut obj = TauObjective::new(rho1, c, delta)?;
    let out = run_irls(x.values(), &mut obj, start.mu.clone(), start.shape.clone(), cfg.control())?;
    let mut warnings = Vec::new();
    if out.stalled {
        warnings.push("no descending step found; returning the best iterate".to_string());
    }
    if obj.fallbacks > 0 {
        warnings.push(format!("{} steps used plain ρ₂ weights", obj.fallbacks));
    }
    Ok(Fit {
        estimate: size_correct(x, &out.state.current)?,
        family: Family::Tau,
        tuning: Some(c),
        scale: Some(out.state.objective),
        converged: out.converged,
        iterations: out.state.iteration,
        objective_trace: out.trace,
        weights: out.weights,
        rocke: None,
        returned_start: false,
        warnings,
    })
}
