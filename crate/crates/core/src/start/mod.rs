//! Initial estimators used to seed the reweighting iterations: the
//! subsampled minimum volume ellipsoid and the KSD projection start.

pub mod ksd;
pub mod mve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::chi2_median;

pub use ksd::{ksd_fit, ksd_start, subsample_directions, Direction, DirectionKind, DirectionSet, KsdFit};
pub use mve::{mve_fit, mve_start, MveFit, SubsetPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartKind {
    Mve,
    Ksd,
}

impl std::fmt::Display for StartKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StartKind::Mve => "mve",
            StartKind::Ksd => "ksd",
        })
    }
}

impl std::str::FromStr for StartKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mve" => Ok(StartKind::Mve),
            "ksd" => Ok(StartKind::Ksd),
            other => Err(Error::Domain(format!("unknown start '{other}' (expected mve or ksd)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StartConfig {
    pub mve_subsamples: usize,
    /// Number of hyperplane-normal specific directions; `max(5p, 100)` when unset.
    pub ksd_specific_directions: Option<usize>,
    /// Fixed outlyingness cutoff; the chi-square based default when unset.
    pub ksd_cutoff_beta: Option<f64>,
    pub seed: u64,
    pub stream: u64,
}

impl Default for StartConfig {
    fn default() -> Self {
        Self {
            mve_subsamples: 1000,
            ksd_specific_directions: None,
            ksd_cutoff_beta: None,
            seed: 0,
            stream: 0,
        }
    }
}

/// Size making the median squared distance match the `χ²_p` median.
pub fn size_from_median(median_d: f64, p: usize) -> Result<f64> {
    let size = median_d / chi2_median(p);
    if !(size > 0.0 && size.is_finite()) {
        return Err(Error::DegenerateScatter(format!(
            "median squared distance {median_d:e} gives no usable size"
        )));
    }
    Ok(size)
}
