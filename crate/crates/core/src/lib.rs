//! Robust, affine-equivariant estimation of multivariate location and scatter.
//!
//! The crate provides S-, Rocke (biflat S-), MM-, τ- and Stahel–Donoho
//! estimators computed by iteratively reweighted means and covariances from
//! either a subsampled minimum-volume-ellipsoid start or the kurtosis plus
//! specific directions (KSD) start, the tuning-constant approximations that
//! target 90% normal efficiency, and a Monte Carlo harness measuring
//! Kullback–Leibler divergences under shift contamination.

pub mod error;
pub mod estimators;
pub mod evalsim;
pub mod numkernel;
pub mod rho;
pub mod scales;
pub mod start;
pub mod tuning;

pub use error::{Error, Result};
