//! Linear-algebra and probability primitives shared by every estimator.

pub mod chi2;
pub mod linalg;
pub mod rng;

pub use chi2::{chi2_cdf, chi2_median, chi2_quantile};
pub use linalg::{
    cholesky, mahalanobis, normalize_shape, sample_moments, weighted_moments, DataMatrix,
    DistanceVector, LocationScatter,
};
pub use rng::{rng_stream, stream_key, StreamRng};

/// Sample median, averaging the two middle order statistics for even length.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        Some(upper)
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lower + upper))
    }
}
