//! Monte Carlo evaluation: Kullback–Leibler divergences, shift
//! contamination and the contamination sweep runner.

pub mod scenario;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numkernel::linalg::{cholesky, log_det_from_cholesky};
use crate::numkernel::DataMatrix;

pub use scenario::{presets, run_scenario, DivergenceReport, EstimatorSummary, KRow, Scenario};

/// `(μ̂ − μ₀)' Σ₀⁻¹ (μ̂ − μ₀)`.
pub fn kl_location(mu_hat: &DVector<f64>, mu0: &DVector<f64>, sigma0: &DMatrix<f64>) -> Result<f64> {
    let l = cholesky(sigma0)?;
    let diff = mu_hat - mu0;
    let z = l
        .solve_lower_triangular(&diff)
        .ok_or_else(|| Error::SingularScatter { pivot: 0.0 })?;
    Ok(z.norm_squared())
}

/// `tr(Σ₀⁻¹Σ̂) − log|Σ₀⁻¹Σ̂| − p`, computed through Cholesky factors.
pub fn kl_scatter(sigma_hat: &DMatrix<f64>, sigma0: &DMatrix<f64>) -> Result<f64> {
    let p = sigma0.nrows();
    let l0 = cholesky(sigma0)?;
    let lh = cholesky(sigma_hat)?;
    // tr(Σ₀⁻¹Σ̂) = ‖L₀⁻¹ L̂‖²_F
    let m = l0
        .solve_lower_triangular(&lh)
        .ok_or_else(|| Error::SingularScatter { pivot: 0.0 })?;
    let trace = m.norm_squared();
    let log_det = log_det_from_cholesky(&lh) - log_det_from_cholesky(&l0);
    Ok((trace - log_det - p as f64).max(0.0))
}

/// Replaces the first coordinate of the first `⌊n ε⌋` rows by `γ x_{i1} + K`.
pub fn contaminate(x: &DataMatrix, epsilon: f64, gamma_c: f64, k: f64) -> Result<DataMatrix> {
    let n = x.n();
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("contamination rate {epsilon} outside [0, 1]")));
    }
    let m = (n as f64 * epsilon).floor() as usize;
    let mut v = x.values().clone();
    for i in 0..m {
        v[(i, 0)] = gamma_c * v[(i, 0)] + k;
    }
    DataMatrix::new(v)
}

/// Number of rows `contaminate` replaces.
pub fn contaminated_rows(n: usize, epsilon: f64) -> usize {
    (n as f64 * epsilon).floor() as usize
}
