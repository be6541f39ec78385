//! Minimum volume ellipsoid approximated by scoring random `(p+1)`-subsets.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;

use super::{size_from_median, StartConfig};
use crate::error::{Error, Result};
use crate::numkernel::linalg::{mahalanobis_raw, weighted_moments};
use crate::numkernel::{median, normalize_shape, rng_stream, DataMatrix, LocationScatter};

/// Largest subset count accepted for exhaustive enumeration.
pub const MAX_EXHAUSTIVE: u64 = 2_000_000;

/// How candidate subsets are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsetPlan {
    /// `count` random `(p+1)`-subsets from stream `(seed, stream)`.
    Random { count: usize, seed: u64, stream: u64 },
    /// Every `(p+1)`-subset, in lexicographic order.
    Exhaustive,
}

/// Outcome of an MVE search.
#[derive(Debug, Clone)]
pub struct MveFit {
    /// Final estimate with size correction applied.
    pub estimate: LocationScatter,
    /// Median squared distance under the det-1 shape of the final estimate.
    pub score: f64,
    /// Best score among the raw subset candidates, before concentration.
    pub candidate_score: f64,
    /// Indices of the winning subset.
    pub best_subset: Vec<usize>,
    /// Whether the concentration step improved the score.
    pub concentrated: bool,
    /// Candidates skipped because their covariance was singular.
    pub singular_candidates: usize,
}

struct Candidate {
    mu: DVector<f64>,
    shape: DMatrix<f64>,
    score: f64,
}

fn score_weights(x: &DMatrix<f64>, weights: &[f64]) -> Option<Candidate> {
    let (mu, cov) = weighted_moments(x, weights).ok()?;
    let (shape, _) = normalize_shape(&cov).ok()?;
    let d = mahalanobis_raw(x, &mu, &shape).ok()?;
    let score = median(&d)?;
    Some(Candidate { mu, shape, score })
}

fn score_subset(x: &DMatrix<f64>, subset: &[usize], weights: &mut [f64]) -> Option<Candidate> {
    weights.iter_mut().for_each(|w| *w = 0.0);
    for &i in subset {
        weights[i] = 1.0;
    }
    score_weights(x, weights)
}

/// Next lexicographic combination of `k` indices out of `n`.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    acc
}

/// Searches subsets per `plan`, refines the winner with one concentration
/// step on the `⌈n/2⌉` closest points and applies the median size correction.
pub fn mve_fit(x: &DataMatrix, plan: SubsetPlan) -> Result<MveFit> {
    let (n, p) = (x.n(), x.p());
    if n < p + 2 {
        return Err(Error::InvalidData(format!("MVE needs n >= p + 2 (n = {n}, p = {p})")));
    }
    let xv = x.values();
    let k = p + 1;
    let mut weights = vec![0.0; n];
    let mut best: Option<(Candidate, Vec<usize>)> = None;
    let mut singular = 0usize;
    let mut consider = |subset: &[usize], best: &mut Option<(Candidate, Vec<usize>)>| {
        match score_subset(xv, subset, &mut weights) {
            Some(c) => {
                if best.as_ref().is_none_or(|(b, _)| c.score < b.score) {
                    *best = Some((c, subset.to_vec()));
                }
            }
            None => singular += 1,
        }
    };

    match plan {
        SubsetPlan::Random { count, seed, stream } => {
            if count == 0 {
                return Err(Error::Domain("MVE needs at least one subsample".into()));
            }
            let mut rng = rng_stream(seed, stream);
            let mut subset = vec![0usize; k];
            for _ in 0..count {
                for (slot, i) in subset.iter_mut().zip(index::sample(&mut rng, n, k).iter()) {
                    *slot = i;
                }
                subset.sort_unstable();
                consider(&subset, &mut best);
            }
        }
        SubsetPlan::Exhaustive => {
            let total = binomial(n, k);
            if total > MAX_EXHAUSTIVE {
                return Err(Error::Domain(format!(
                    "exhaustive MVE over {total} subsets exceeds the limit {MAX_EXHAUSTIVE}"
                )));
            }
            let mut subset: Vec<usize> = (0..k).collect();
            loop {
                consider(&subset, &mut best);
                if !next_combination(&mut subset, n) {
                    break;
                }
            }
        }
    }

    let (cand, best_subset) = best.ok_or_else(|| {
        Error::StartFailure(format!("all {singular} MVE subsample covariances are singular"))
    })?;
    let candidate_score = cand.score;

    // one concentration step
    let d = mahalanobis_raw(xv, &cand.mu, &cand.shape)?;
    let h = n.div_ceil(2);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut w = vec![0.0; n];
    for &i in &order[..h] {
        w[i] = 1.0;
    }
    let (chosen, concentrated) = match score_weights(xv, &w) {
        Some(c) if c.score < cand.score => (c, true),
        _ => (cand, false),
    };

    let size = size_from_median(chosen.score, p)?;
    Ok(MveFit {
        estimate: LocationScatter { mu: chosen.mu, shape: chosen.shape, size },
        score: chosen.score,
        candidate_score,
        best_subset,
        concentrated,
        singular_candidates: singular,
    })
}

/// Subsampled MVE start per `cfg`.
pub fn mve_start(x: &DataMatrix, cfg: &StartConfig) -> Result<LocationScatter> {
    let plan = SubsetPlan::Random { count: cfg.mve_subsamples, seed: cfg.seed, stream: cfg.stream };
    Ok(mve_fit(x, plan)?.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::rng::standard_normal_matrix;

    #[test]
    fn combinations_enumerate_binomial() {
        let mut c: Vec<usize> = (0..3).collect();
        let mut count = 1;
        while next_combination(&mut c, 8) {
            count += 1;
        }
        assert_eq!(count, 56);
        assert_eq!(binomial(8, 3), 56);
    }

    #[test]
    fn concentration_never_increases_score() {
        for seed in 0..5 {
            let x = DataMatrix::new(standard_normal_matrix(&mut rng_stream(seed, 1), 40, 3)).unwrap();
            let fit = mve_fit(&x, SubsetPlan::Random { count: 50, seed, stream: 2 }).unwrap();
            assert!(fit.score <= fit.candidate_score);
        }
    }

    #[test]
    fn rejects_small_samples_and_zero_subsamples() {
        let x = DataMatrix::new(standard_normal_matrix(&mut rng_stream(0, 0), 4, 3)).unwrap();
        assert!(mve_fit(&x, SubsetPlan::Exhaustive).is_err());
        let x = DataMatrix::new(standard_normal_matrix(&mut rng_stream(0, 0), 10, 3)).unwrap();
        assert!(mve_fit(&x, SubsetPlan::Random { count: 0, seed: 0, stream: 0 }).is_err());
    }

    #[test]
    fn collinear_data_fails_to_start() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        assert!(matches!(
            mve_fit(&x, SubsetPlan::Exhaustive),
            Err(Error::StartFailure(_))
        ));
    }
}
