mod common;

use codegrain::design::SparseDesignMatrix;
use codegrain::regression::{
    coefficient_variances_default, effective_dimension, effective_dimension_bound, fit, predict, r2_score, FitConfig,
};
use codegrain::spectra::augmented_spectrum;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random count design with `n` rows and `p` columns, plus an outcome.
fn instance(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (SparseDesignMatrix, Vec<f64>) {
    let rows: Vec<Vec<(usize, u32)>> = (0..n)
        .map(|_| {
            let k = rng.random_range(1..=p.min(8));
            (0..k).map(|_| (rng.random_range(0..p), rng.random_range(1..=2u32))).collect()
        })
        .collect();
    let x = SparseDesignMatrix::from_rows(7, p, rows).unwrap();
    let y = (0..n).map(|_| rng.random_range(2.0..5.0)).collect();
    (x, y)
}

fn stacked(f: &codegrain::regression::FitResult) -> Vec<f64> {
    let mut v = f.coefficients.clone();
    v.push(f.intercept);
    v
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn iterative_fit_matches_dense_solve(
        seed in any::<u64>(),
        n in 2usize..=500,
        p in 1usize..=64,
        lam_idx in 0usize..3,
        penalize in any::<bool>(),
    ) {
        let lambda = [0.0, 0.1, 10.0][lam_idx];
        let mut rng = common::rng(seed);
        let (x, y) = instance(&mut rng, n, p);
        let cfg = FitConfig { penalize_intercept: penalize, ..FitConfig::ridge(lambda) };
        let f = fit(&x, &y, &cfg).unwrap();
        prop_assert!(f.converged, "residual {}", f.relative_residual);
        let oracle = common::dense_solve(&common::dense_augmented(&x), &y, lambda, penalize || lambda == 0.0);
        let diff = common::max_abs_diff(&stacked(&f), &oracle);
        prop_assert!(diff <= 1e-6, "max abs diff {diff:e}");
    }

    #[test]
    fn shrinkage_and_training_fit_fall_with_lambda(seed in any::<u64>(), n in 20usize..200, p in 2usize..40) {
        let mut rng = common::rng(seed);
        let (x, y) = instance(&mut rng, n, p);
        let mut last: Option<(f64, f64)> = None;
        for lambda in [0.0, 0.01, 0.1, 1.0, 10.0, 100.0] {
            let f = fit(&x, &y, &FitConfig::ridge(lambda)).unwrap();
            let r2 = r2_score(&y, &predict(&f, &x).unwrap()).unwrap();
            let size = norm(&stacked(&f));
            if let Some((prev_size, prev_r2)) = last {
                prop_assert!(size <= prev_size * (1.0 + 1e-9) + 1e-12, "norm grew {prev_size} -> {size}");
                prop_assert!(r2 <= prev_r2 + 1e-9, "train r2 grew {prev_r2} -> {r2}");
            }
            last = Some((size, r2));
        }
    }

    #[test]
    fn effective_dimension_below_bound(seed in any::<u64>(), dim in 1usize..40, n in 1usize..10_000) {
        let mut rng = common::rng(seed);
        let eigs: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..50.0)).collect();
        let mean = eigs.iter().sum::<f64>() / dim as f64;
        prop_assume!(mean > 0.0);
        for lambda in [0.0, 1e-3, 0.1, 1.0, 10.0, 1e3] {
            let Ok(rho) = effective_dimension(&eigs, lambda) else { continue };
            let bound = effective_dimension_bound(dim, mean / n as f64, lambda, n);
            prop_assert!(rho <= bound * (1.0 + 1e-12), "{rho} > {bound}");
        }
    }
}

#[test]
fn spec_sized_instance_matches_normal_equations() {
    let mut rng = common::rng(20);
    let (x, y) = instance(&mut rng, 100, 20);
    let a = common::dense_augmented(&x);
    for lambda in [0.0, 0.5] {
        let f = fit(&x, &y, &FitConfig::ridge(lambda)).unwrap();
        let oracle = common::dense_solve(&a, &y, lambda, true);
        assert!(common::max_abs_diff(&stacked(&f), &oracle) <= 1e-6);
    }
}

#[test]
fn free_intercept_matches_partial_penalty() {
    let mut rng = common::rng(7);
    let (x, y) = instance(&mut rng, 150, 25);
    let a = common::dense_augmented(&x);
    for lambda in [0.3, 30.0] {
        let cfg = FitConfig {
            penalize_intercept: false,
            ..FitConfig::ridge(lambda)
        };
        let f = fit(&x, &y, &cfg).unwrap();
        let oracle = common::dense_solve(&a, &y, lambda, false);
        assert!(common::max_abs_diff(&stacked(&f), &oracle) <= 1e-6);
    }
}

#[test]
fn fit_without_intercept_matches_dense_solve() {
    let mut rng = common::rng(8);
    let (x, y) = instance(&mut rng, 120, 15);
    let a = common::dense_augmented(&x);
    let plain = a.columns(0, 15).into_owned();
    let cfg = FitConfig {
        fit_intercept: false,
        ..FitConfig::ols()
    };
    let f = fit(&x, &y, &cfg).unwrap();
    assert_eq!(f.intercept, 0.0);
    let oracle = common::dense_solve(&plain, &y, 0.0, true);
    assert!(common::max_abs_diff(&f.coefficients, &oracle) <= 1e-6);
}

#[test]
fn exact_system_reproduces_training_rows() {
    // square full-rank system: y is interpolated
    let x = SparseDesignMatrix::from_rows(7, 3, vec![vec![(0, 1)], vec![(1, 1)], vec![(2, 1)], vec![(0, 1), (2, 1)]])
        .unwrap();
    let y = [1.0, 2.0, 4.0, 5.5];
    let f = fit(&x, &y, &FitConfig::ols()).unwrap();
    let yhat = predict(&f, &x).unwrap();
    assert!(common::max_abs_diff(&yhat, &y) < 1e-9);
}

#[test]
fn variance_sum_matches_inverse_spectrum() {
    let mut rng = common::rng(3);
    let (x, y) = loop {
        let (x, y) = instance(&mut rng, 80, 10);
        if augmented_spectrum(&x, 64).unwrap().clamped == 0 {
            break (x, y);
        }
    };
    let f = fit(&x, &y, &FitConfig::ols()).unwrap();
    let report = coefficient_variances_default(&x, &y, &f).unwrap();
    let s_i: f64 = augmented_spectrum(&x, 64).unwrap().eigenvalues.iter().map(|s| 1.0 / s).sum();
    assert!((report.s_v - s_i).abs() <= 1e-8 * s_i);
    assert!(report.v.iter().all(|&v| v > 0.0));
    assert_eq!(report.rank, 11);

    // the same quantities from a dense inverse
    let a = common::dense_augmented(&x);
    let inv = (a.transpose() * &a).try_inverse().unwrap();
    for (j, v) in report.v.iter().enumerate() {
        assert!((v - inv[(j, j)]).abs() <= 1e-9 * inv[(j, j)].abs());
    }
    let sse: f64 = y.iter().zip(predict(&f, &x).unwrap()).map(|(a, b)| (a - b).powi(2)).sum();
    assert!((report.sigma2_hat.unwrap() - sse / 69.0).abs() < 1e-12);
}

#[test]
fn equal_eigenvalues_attain_the_bound() {
    for dim in [1usize, 3, 17] {
        for lambda in [0.0, 0.5, 4.0] {
            let rho = effective_dimension(&vec![2.5; dim], lambda).unwrap();
            let bound = effective_dimension_bound(dim, 2.5 / 40.0, lambda, 40);
            assert!((rho - bound).abs() <= 1e-12 * bound.max(1.0));
        }
    }
}
