//! Stahel–Donoho estimator: weighted mean and covariance with weights
//! `W_opt(r_i / c)` of the projection outlyingness `r_i`.

use super::{size_correct, EstimatorConfig, Family, Fit};
use crate::error::{Error, Result};
use crate::numkernel::linalg::weighted_moments;
use crate::numkernel::{normalize_shape, DataMatrix, LocationScatter};
use crate::rho::optimal_weight;
use crate::start::DirectionSet;

/// Stahel–Donoho weights for outlyingness values `r` and constant `c`;
/// zero from `r = 9c` on.
pub fn sd_weights(r: &[f64], c: f64) -> Vec<f64> {
    r.iter().map(|&v| optimal_weight(v / c)).collect()
}

pub fn stahel_donoho(x: &DataMatrix, _cfg: &EstimatorConfig, dirs: &DirectionSet, c: f64) -> Result<Fit> {
    if dirs.is_empty() {
        return Err(Error::Domain("Stahel–Donoho needs at least one direction".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("Stahel–Donoho constant must be positive, got {c}")));
    }
    let r = dirs.outlyingness(x.values());
    let weights = sd_weights(&r, c);
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::ZeroWeights(format!(
            "every Stahel–Donoho weight vanished at c = {c}; use a larger constant"
        )));
    }
    let (mu, cov) = weighted_moments(x.values(), &weights)?;
    let (shape, _) = normalize_shape(&cov)?;
    let estimate = size_correct(x, &LocationScatter { mu, shape, size: 1.0 })?;
    Ok(Fit {
        estimate,
        family: Family::StahelDonoho,
        tuning: Some(c),
        scale: None,
        converged: true,
        iterations: 1,
        objective_trace: Vec::new(),
        weights,
        rocke: None,
        returned_start: false,
        warnings: Vec::new(),
    })
}
