//! Library routines against independent computations: statrs for the
//! chi-square distribution, explicit inverses and determinants for distances
//! and divergences, and plain enumeration for the exhaustive MVE.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use robscatter::evalsim::{kl_location, kl_scatter};
use robscatter::numkernel::linalg::mahalanobis_raw;
use robscatter::numkernel::rng::{rng_stream, standard_normal_matrix};
use robscatter::numkernel::{chi2_cdf, chi2_median, chi2_quantile, DataMatrix};
use robscatter::start::{mve_fit, SubsetPlan};

fn random_spd(seed: u64, p: usize) -> DMatrix<f64> {
    let a = standard_normal_matrix(&mut rng_stream(seed, 77), p, p);
    &a * a.transpose() + DMatrix::identity(p, p) * 0.5
}

#[test]
fn chi2_matches_statrs() {
    for dof in [1usize, 2, 3, 5, 10, 13, 20, 50] {
        let oracle = ChiSquared::new(dof as f64).unwrap();
        for beta in [0.001, 0.025, 0.1, 0.5, 0.9, 0.975, 0.99, 0.999] {
            let q = chi2_quantile(dof, beta).unwrap();
            let want = oracle.inverse_cdf(beta);
            assert!((q - want).abs() <= 1e-8 * want.max(1.0), "dof {dof} beta {beta}: {q} vs {want}");
            assert!((chi2_cdf(dof as f64, q) - beta).abs() < 1e-12);
        }
        for x in [0.01, 0.5, 1.0, 3.0, dof as f64, 2.0 * dof as f64 + 7.0] {
            assert!((chi2_cdf(dof as f64, x) - oracle.cdf(x)).abs() < 1e-12, "dof {dof} x {x}");
        }
        let med = oracle.inverse_cdf(0.5);
        assert!((chi2_median(dof) - med).abs() <= 1e-8 * med);
    }
}

#[test]
fn mahalanobis_matches_explicit_inverse() {
    for seed in 0..20 {
        let p = 2 + (seed as usize % 6);
        let sigma = random_spd(seed, p);
        let x = standard_normal_matrix(&mut rng_stream(seed, 1), 30, p) * 3.0;
        let mu = DVector::from_fn(p, |i, _| i as f64 - 1.5);
        let inv = sigma.clone().try_inverse().unwrap();
        let got = mahalanobis_raw(&x, &mu, &sigma).unwrap();
        for (i, g) in got.iter().enumerate() {
            let r = x.row(i).transpose() - &mu;
            let want = (r.transpose() * &inv * &r)[(0, 0)];
            assert!((g - want).abs() <= 1e-10 * want.max(1.0), "seed {seed} row {i}: {g} vs {want}");
        }
    }
}

#[test]
fn kl_matches_explicit_inverse() {
    for seed in 0..20 {
        let p = 2 + (seed as usize % 8);
        let s0 = random_spd(seed, p);
        let s1 = random_spd(seed + 1000, p);
        let inv = s0.clone().try_inverse().unwrap();
        let m = &inv * &s1;
        let want = m.trace() - m.determinant().ln() - p as f64;
        let got = kl_scatter(&s1, &s0).unwrap();
        assert!((got - want).abs() <= 1e-10 * want.max(1.0), "seed {seed}: {got} vs {want}");

        let mu0 = DVector::from_fn(p, |i, _| i as f64);
        let mu1 = DVector::from_fn(p, |i, _| (i as f64).sin());
        let diff = &mu1 - &mu0;
        let want = (diff.transpose() * &inv * &diff)[(0, 0)];
        let got = kl_location(&mu1, &mu0, &s0).unwrap();
        assert!((got - want).abs() <= 1e-10 * want.max(1.0));
    }
}

/// Median squared distance under the det-1 shape of the subset covariance,
/// computed with explicit inverses.
fn subset_score(x: &DMatrix<f64>, subset: &[usize]) -> Option<f64> {
    let p = x.ncols();
    let k = subset.len() as f64;
    let mean = subset.iter().fold(DVector::zeros(p), |acc, &i| acc + x.row(i).transpose()) / k;
    let cov = subset.iter().fold(DMatrix::zeros(p, p), |acc, &i| {
        let r = x.row(i).transpose() - &mean;
        acc + &r * r.transpose()
    }) / (k - 1.0);
    let det = cov.determinant();
    if det <= 1e-12 {
        return None;
    }
    let shape = cov / det.powf(1.0 / p as f64);
    let inv = shape.try_inverse()?;
    let mut d: Vec<f64> = (0..x.nrows())
        .map(|i| {
            let r = x.row(i).transpose() - &mean;
            (r.transpose() * &inv * &r)[(0, 0)]
        })
        .collect();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    Some(if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) })
}

#[test]
fn exhaustive_mve_finds_the_enumerated_optimum() {
    let mut rng = rng_stream(5, 0);
    for case in 0..10 {
        let mut x = standard_normal_matrix(&mut rng, 8, 2);
        if case % 2 == 1 {
            x[(0, 0)] += 6.0;
            x[(1, 1)] -= 5.0;
        }
        let mut best = (f64::INFINITY, vec![]);
        for a in 0..8 {
            for b in a + 1..8 {
                for c in b + 1..8 {
                    if let Some(s) = subset_score(&x, &[a, b, c]) {
                        if s < best.0 {
                            best = (s, vec![a, b, c]);
                        }
                    }
                }
            }
        }
        let fit = mve_fit(&DataMatrix::new(x.clone()).unwrap(), SubsetPlan::Exhaustive).unwrap();
        assert!((fit.candidate_score - best.0).abs() <= 1e-10 * best.0, "case {case}");
        assert_eq!(fit.best_subset, best.1, "case {case}");
        assert!(fit.score <= fit.candidate_score * (1.0 + 1e-12));
    }
}
