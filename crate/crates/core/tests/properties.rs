//! Invariants checked on generated inputs.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use robscatter::estimators::{compute_start, fit_from_start, EstimatorConfig, Family};
use robscatter::evalsim::{contaminate, contaminated_rows, kl_location, kl_scatter};
use robscatter::numkernel::rng::{rng_stream, standard_normal_matrix};
use robscatter::numkernel::{DataMatrix, DistanceVector};
use robscatter::rho::RhoSpec;
use robscatter::scales::{mscale, MScaleParams};
use robscatter::start::{StartConfig, StartKind};

fn families() -> Vec<RhoSpec> {
    vec![
        RhoSpec::bisquare(),
        RhoSpec::optimal(),
        RhoSpec::rocke_with_gamma(0.3).unwrap(),
        RhoSpec::rocke_with_gamma(1.0).unwrap(),
        RhoSpec::bisquare().scaled(2.5).unwrap(),
        RhoSpec::optimal().scaled(0.4).unwrap(),
    ]
}

fn spd(seed: u64, p: usize) -> DMatrix<f64> {
    let a = standard_normal_matrix(&mut rng_stream(seed, 3), p, p);
    &a * a.transpose() + DMatrix::identity(p, p) * 0.1
}

proptest! {
    #[test]
    fn rho_is_monotone_and_bounded(a in 0.0f64..30.0, b in 0.0f64..30.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for rho in families() {
            let (rl, rh) = (rho.rho(lo).unwrap(), rho.rho(hi).unwrap());
            prop_assert!(rl <= rh + 1e-15);
            prop_assert!((0.0..=1.0).contains(&rl) && (0.0..=1.0).contains(&rh));
            prop_assert!(rho.weight(lo).unwrap() >= 0.0);
        }
    }

    #[test]
    fn rho_derivative_matches_finite_difference(t in 0.001f64..25.0) {
        for rho in families() {
            let h = 1e-6;
            // skip the kinks of the piecewise families
            let kinks = [1.0, 4.0, 9.0, 0.7, 1.3, 0.0, 2.0].map(|k| k * rho.divisor());
            if kinks.iter().any(|k| (t - k).abs() < 10.0 * h) {
                continue;
            }
            let fd = (rho.rho(t + h).unwrap() - rho.rho((t - h).max(0.0)).unwrap()) / (t + h - (t - h).max(0.0));
            prop_assert!((fd - rho.derivative(t)).abs() <= 1e-5, "t {t}: {fd} vs {}", rho.derivative(t));
        }
    }

    #[test]
    fn mscale_solves_its_equation_and_scales(
        d in prop::collection::vec(0.01f64..50.0, 10..60),
        k in 0.01f64..100.0,
        delta in 0.1f64..0.5,
    ) {
        for rho in families() {
            let params = MScaleParams::new(rho, delta).unwrap();
            let s = mscale(&DistanceVector(d.clone()), &params).unwrap();
            let mean: f64 = d.iter().map(|v| rho.rho(v / s).unwrap()).sum::<f64>() / d.len() as f64;
            prop_assert!((mean - delta).abs() <= 1e-10 * delta);
            let sk = mscale(&DistanceVector(d.iter().map(|v| v * k).collect()), &params).unwrap();
            prop_assert!((sk - k * s).abs() <= 1e-8 * k * s);
        }
    }

    #[test]
    fn kl_is_nonnegative_and_zero_at_equality(seed in 0u64..10_000, p in 1usize..8) {
        let s0 = spd(seed, p);
        let s1 = spd(seed + 1, p);
        prop_assert!(kl_scatter(&s1, &s0).unwrap() >= 0.0);
        prop_assert!(kl_scatter(&s0, &s0).unwrap().abs() < 1e-10);
        let mu = DVector::from_fn(p, |i, _| i as f64 + seed as f64 * 1e-3);
        prop_assert!(kl_location(&mu, &DVector::zeros(p), &s0).unwrap() >= 0.0);
        prop_assert!(kl_location(&mu, &mu, &s0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn contamination_touches_exactly_the_leading_rows(n in 10usize..200, eps in 0.0f64..0.5, k in 1.0f64..20.0) {
        let x = DataMatrix::new(standard_normal_matrix(&mut rng_stream(n as u64, 0), n, 3)).unwrap();
        let y = contaminate(&x, eps, 0.0, k).unwrap();
        let m = contaminated_rows(n, eps);
        prop_assert_eq!(m, (n as f64 * eps).floor() as usize);
        for i in 0..n {
            prop_assert_eq!(y.values()[(i, 0)] == k, i < m);
            for j in 1..3 {
                prop_assert_eq!(y.values()[(i, j)], x.values()[(i, j)]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn estimates_ignore_row_order(seed in 0u64..1000) {
        let (n, p) = (40, 3);
        let x = standard_normal_matrix(&mut rng_stream(seed, 0), n, p);
        let mut perm: Vec<usize> = (0..n).rev().collect();
        perm.rotate_left(seed as usize % n);
        let y = DataMatrix::new(DMatrix::from_fn(n, p, |i, j| x[(perm[i], j)])).unwrap();
        let x = DataMatrix::new(x).unwrap();
        // the starts draw random subsets by row index, so both fits share one
        let start_cfg = StartConfig { seed, ..StartConfig::default() };
        let start = compute_start(&x, StartKind::Ksd, &start_cfg).unwrap();
        for family in [Family::Classical, Family::S, Family::MM, Family::Tau, Family::Rocke, Family::StahelDonoho] {
            let mut cfg = EstimatorConfig::new(family);
            if family == Family::Rocke {
                cfg.tuning = Some(0.05);
            }
            let a = fit_from_start(&x, &cfg, &start, &start_cfg).unwrap().estimate;
            let b = fit_from_start(&y, &cfg, &start, &start_cfg).unwrap().estimate;
            prop_assert!((&a.mu - &b.mu).norm() <= 1e-6 * (1.0 + a.mu.norm()), "{family}");
            prop_assert!((a.scatter() - b.scatter()).norm() <= 1e-6 * a.scatter().norm(), "{family}");
        }
    }
}
