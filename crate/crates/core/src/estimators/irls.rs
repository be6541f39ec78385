//! Descent-guarded iteratively reweighted means and covariances.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::linalg::{cholesky, mahalanobis_raw, weighted_moments};
use crate::numkernel::{normalize_shape, DistanceVector, LocationScatter};

/// Maximum number of step halvings before a step is declared non-descending.
pub const MAX_HALVINGS: usize = 10;

/// Objective value and reweighting weights at the current distances.
#[derive(Debug, Clone)]
pub struct Eval {
    pub value: f64,
    /// Scale the squared distances are divided by inside the weight function.
    pub scale: f64,
    pub weights: Vec<f64>,
}

/// Objective minimized over locations and det-1 shapes, seen through the
/// squared distances it depends on.
pub trait Objective {
    fn evaluate(&mut self, d: &[f64]) -> Result<Eval>;
}

/// Current iterate of a reweighting run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrlsState {
    /// Location and det-1 shape; `size` is left at 1 during iterations.
    pub current: LocationScatter,
    pub distances: DistanceVector,
    pub scale: f64,
    pub objective: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone)]
pub struct IrlsOutcome {
    pub state: IrlsState,
    pub weights: Vec<f64>,
    pub converged: bool,
    /// Objective after the start and after every accepted step.
    pub trace: Vec<f64>,
    /// Set when no step-halving produced a decrease before convergence.
    pub stalled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsControl {
    pub max_iter: usize,
    pub tol: f64,
}

/// Weighted mean and det-1 weighted covariance.
pub fn reweighted_step(x: &DMatrix<f64>, weights: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::Domain("reweighting weights must be finite and nonnegative".into()));
    }
    let (mu, cov) = weighted_moments(x, weights)?;
    let (shape, _) = normalize_shape(&cov)?;
    Ok((mu, shape))
}

struct Point {
    mu: DVector<f64>,
    shape: DMatrix<f64>,
    d: Vec<f64>,
    eval: Eval,
}

fn evaluate_point<O: Objective>(
    x: &DMatrix<f64>,
    obj: &mut O,
    mu: DVector<f64>,
    shape: DMatrix<f64>,
) -> Result<Point> {
    let d = mahalanobis_raw(x, &mu, &shape)?;
    let eval = obj.evaluate(&d)?;
    if !eval.value.is_finite() {
        return Err(Error::Convergence("objective is not finite".into()));
    }
    Ok(Point { mu, shape, d, eval })
}

fn blend(old: &Point, new_mu: &DVector<f64>, new_shape: &DMatrix<f64>, lambda: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let mu = &old.mu * (1.0 - lambda) + new_mu * lambda;
    let s = &old.shape * (1.0 - lambda) + new_shape * lambda;
    let (shape, _) = normalize_shape(&s)?;
    Ok((mu, shape))
}

/// Squared location change measured in the metric of `shape`, in units of
/// the objective's distance scale. Affine invariant.
fn location_change(old: &DVector<f64>, new: &DVector<f64>, shape: &DMatrix<f64>, scale: f64) -> f64 {
    match cholesky(shape) {
        Ok(l) => {
            let diff = new - old;
            let z = l.solve_lower_triangular(&diff).unwrap_or(diff);
            z.norm_squared() / scale
        }
        Err(_) => f64::INFINITY,
    }
}

/// Runs reweighting steps from `(mu, shape)` until the relative objective
/// change and the relative location change both fall below `tol`.
///
/// Every accepted step lowers the objective: when the full step does not,
/// the new iterate is blended with the old one with weight `½^k`,
/// `k = 1..=MAX_HALVINGS`.
pub fn run_irls<O: Objective>(
    x: &DMatrix<f64>,
    obj: &mut O,
    mu: DVector<f64>,
    shape: DMatrix<f64>,
    control: IrlsControl,
) -> Result<IrlsOutcome> {
    let mut cur = evaluate_point(x, obj, mu, shape)?;
    let mut trace = vec![cur.eval.value];
    let mut converged = false;
    let mut stalled = false;
    let mut iteration = 0;

    while iteration < control.max_iter {
        iteration += 1;
        let (new_mu, new_shape) = match reweighted_step(x, &cur.eval.weights) {
            Ok(step) => step,
            Err(_) => {
                stalled = true;
                break;
            }
        };
        let full = evaluate_point(x, obj, new_mu.clone(), new_shape.clone()).ok();
        let threshold = cur.eval.value;
        let mut accepted = match full {
            Some(pt) if pt.eval.value <= threshold => Some(pt),
            _ => None,
        };
        if accepted.is_none() {
            let mut lambda = 1.0;
            for _ in 0..MAX_HALVINGS {
                lambda *= 0.5;
                let Ok((m, s)) = blend(&cur, &new_mu, &new_shape, lambda) else { continue };
                if let Ok(pt) = evaluate_point(x, obj, m, s) {
                    if pt.eval.value < threshold {
                        accepted = Some(pt);
                        break;
                    }
                }
            }
        }
        let Some(next) = accepted else {
            // Nothing descends: either already at a fixed point or stuck.
            let rel = location_change(&cur.mu, &new_mu, &cur.shape, cur.eval.scale);
            converged = rel.sqrt() <= control.tol;
            stalled = !converged;
            break;
        };
        let rel_obj = (cur.eval.value - next.eval.value).abs() / cur.eval.value.abs().max(f64::MIN_POSITIVE);
        let rel_loc = location_change(&cur.mu, &next.mu, &next.shape, next.eval.scale).sqrt();
        trace.push(next.eval.value);
        cur = next;
        if rel_obj <= control.tol && rel_loc <= control.tol {
            converged = true;
            break;
        }
    }

    let Point { mu, shape, d, eval } = cur;
    Ok(IrlsOutcome {
        state: IrlsState {
            current: LocationScatter { mu, shape, size: 1.0 },
            distances: DistanceVector(d),
            scale: eval.scale,
            objective: eval.value,
            iteration,
        },
        weights: eval.weights,
        converged,
        trace,
        stalled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::rng::{rng_stream, standard_normal_matrix};
    use crate::numkernel::sample_moments;

    #[test]
    fn equal_weights_give_classical_moments() {
        let x = standard_normal_matrix(&mut rng_stream(1, 0), 30, 4);
        let (mu, shape) = reweighted_step(&x, &[2.5; 30]).unwrap();
        let (m0, c0) = sample_moments(&x);
        let (s0, _) = normalize_shape(&c0).unwrap();
        assert!((mu - m0).amax() < 1e-12);
        assert!((shape - s0).amax() < 1e-10);
    }

    #[test]
    fn weights_on_a_subset_fit_the_subset() {
        let x = standard_normal_matrix(&mut rng_stream(2, 0), 20, 3);
        let mut w = vec![0.0; 20];
        for i in [1, 4, 7, 11, 15] {
            w[i] = 1.0;
        }
        let (mu, _) = reweighted_step(&x, &w).unwrap();
        let sub = x.select_rows(&[1, 4, 7, 11, 15]);
        let (m0, _) = sample_moments(&sub);
        assert!((mu - m0).amax() < 1e-12);
    }

    #[test]
    fn negative_weights_are_rejected() {
        let x = standard_normal_matrix(&mut rng_stream(3, 0), 10, 2);
        let mut w = vec![1.0; 10];
        w[3] = -1.0;
        assert!(reweighted_step(&x, &w).is_err());
    }
}
