//! Random corpora and dense reference solvers shared by the integration tests.
#![allow(dead_code)]

use codegrain::design::SparseDesignMatrix;
use codegrain::stays::{StayCorpus, StayRecord};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` distinct seven-character codes over a small alphabet, so that
/// truncation to shorter levels pools a fair number of them.
pub fn random_codes(rng: &mut ChaCha8Rng, count: usize) -> Vec<String> {
    let count = count.min(3 * 3usize.pow(6));
    let mut out = std::collections::BTreeSet::new();
    while out.len() < count {
        let mut s = String::with_capacity(7);
        s.push((b'A' + rng.random_range(0..3u8)) as char);
        for _ in 0..6 {
            s.push((b'0' + rng.random_range(0..3u8)) as char);
        }
        out.insert(s);
    }
    out.into_iter().collect()
}

/// `n` stays drawing 1..=`max_d` distinct codes each from `pool`.
pub fn random_corpus(rng: &mut ChaCha8Rng, n: usize, pool: &[String], max_d: usize) -> StayCorpus {
    let records = (0..n)
        .map(|i| {
            let d = rng.random_range(1..=max_d.min(pool.len()));
            let codes: Vec<&str> = sample(rng, pool.len(), d).iter().map(|j| pool[j].as_str()).collect();
            let cost = 10f64.powf(rng.random_range(2.0..5.0));
            StayRecord::new(format!("r{i}"), cost, &codes).unwrap()
        })
        .collect();
    StayCorpus::new(records)
}

/// Dense `[X, 1]` straight from the sparse rows.
pub fn dense_augmented(x: &SparseDesignMatrix) -> DMatrix<f64> {
    let (n, p) = (x.n_rows(), x.n_cols());
    let mut a = DMatrix::zeros(n, p + 1);
    for (i, (cols, vals)) in x.rows().enumerate() {
        for (&j, &v) in cols.iter().zip(vals) {
            a[(i, j as usize)] = v as f64;
        }
        a[(i, p)] = 1.0;
    }
    a
}

/// Reference solution on the augmented design: the pseudo-inverse for
/// `lambda = 0`, otherwise the regularized normal equations. Returns the
/// coefficients followed by the intercept.
pub fn dense_solve(a: &DMatrix<f64>, y: &[f64], lambda: f64, penalize_intercept: bool) -> Vec<f64> {
    let y = DVector::from_column_slice(y);
    let sol = if lambda == 0.0 {
        a.clone().pseudo_inverse(1e-10).unwrap() * y
    } else {
        let mut g = a.transpose() * a;
        let k = g.ncols();
        for j in 0..k {
            if j + 1 < k || penalize_intercept {
                g[(j, j)] += lambda;
            }
        }
        g.cholesky().expect("regularized gram is positive definite").solve(&(a.transpose() * y))
    };
    sol.iter().copied().collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
