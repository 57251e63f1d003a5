mod common;

use std::collections::HashMap;

use codegrain::codes::{build_merge_map, build_vocabulary, truncate};
use codegrain::design::{build, diagonal_histogram, hessian_summary, merge_columns};
use codegrain::spectra::verify_merge_trace;
use codegrain::stays::{StayCorpus, StayRecord};
use proptest::prelude::*;

/// Trace of the count gram at `level`, counted straight from the stays.
fn trace_from_stays(c: &StayCorpus, level: usize) -> u64 {
    c.records()
        .iter()
        .map(|r| {
            let mut counts: HashMap<&str, u64> = HashMap::new();
            for code in &r.codes {
                *counts.entry(truncate(code.as_str(), level)).or_default() += 1;
            }
            counts.values().map(|k| k * k).sum::<u64>()
        })
        .sum()
}

/// Number of same-stay pairs of distinct level-7 codes sharing a prefix.
fn pooled_pairs_from_stays(c: &StayCorpus, level: usize) -> u64 {
    c.records()
        .iter()
        .map(|r| {
            let mut counts: HashMap<&str, u64> = HashMap::new();
            for code in &r.codes {
                *counts.entry(truncate(code.as_str(), level)).or_default() += 1;
            }
            counts.values().map(|k| k * (k - 1) / 2).sum::<u64>()
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_trace_matches_stay_counts(seed in any::<u64>(), n in 1usize..300, pool in 2usize..150, level in 2usize..7) {
        let mut rng = common::rng(seed);
        let codes = common::random_codes(&mut rng, pool);
        let c = common::random_corpus(&mut rng, n, &codes, 8);
        let v7 = build_vocabulary(&c, 7).unwrap();
        let x7 = build(&c, &v7).unwrap();
        let q = build_merge_map(&v7, level).unwrap();
        let r = verify_merge_trace(&x7, &q).unwrap();
        prop_assert!(r.passed);
        prop_assert!(r.trace_after >= r.trace_before);
        prop_assert_eq!(r.trace_before, trace_from_stays(&c, 7));
        prop_assert_eq!(r.trace_after, trace_from_stays(&c, level));
        prop_assert_eq!(r.merged_pair_mass, pooled_pairs_from_stays(&c, level));
        prop_assert_eq!(r.delta, 2 * r.merged_pair_mass);
    }

    #[test]
    fn one_code_per_stay_merges_for_free(seed in any::<u64>(), n in 1usize..200, level in 2usize..7) {
        let mut rng = common::rng(seed);
        let codes = common::random_codes(&mut rng, 60);
        let c = common::random_corpus(&mut rng, n, &codes, 1);
        let v7 = build_vocabulary(&c, 7).unwrap();
        let r = verify_merge_trace(&build(&c, &v7).unwrap(), &build_merge_map(&v7, level).unwrap()).unwrap();
        prop_assert_eq!((r.delta, r.merged_pair_mass), (0, 0));
        prop_assert!(r.passed);
    }

    #[test]
    fn merging_equals_building_coarse(seed in any::<u64>(), n in 1usize..200, level in 2usize..7) {
        let mut rng = common::rng(seed);
        let codes = common::random_codes(&mut rng, 80);
        let c = common::random_corpus(&mut rng, n, &codes, 10);
        let v7 = build_vocabulary(&c, 7).unwrap();
        let x7 = build(&c, &v7).unwrap();
        let q = build_merge_map(&v7, level).unwrap();
        prop_assert!(q.check_invariants());
        let merged = merge_columns(&x7, &q).unwrap();
        let direct = build(&c, &build_vocabulary(&c, level).unwrap()).unwrap();
        prop_assert_eq!(merged.row_sums(), x7.row_sums());
        prop_assert_eq!(merged.n_cols(), direct.n_cols());
        for i in 0..c.len() {
            prop_assert_eq!(merged.row(i), direct.row(i));
        }
        let d: Vec<u64> = c.records().iter().map(|r| r.diagnosis_count() as u64).collect();
        prop_assert_eq!(x7.row_sums(), d);
    }

    #[test]
    fn merged_gram_is_congruence(seed in any::<u64>(), n in 1usize..120, level in 2usize..7) {
        let mut rng = common::rng(seed);
        let codes = common::random_codes(&mut rng, 40);
        let c = common::random_corpus(&mut rng, n, &codes, 6);
        let v7 = build_vocabulary(&c, 7).unwrap();
        let x7 = build(&c, &v7).unwrap();
        let q = build_merge_map(&v7, level).unwrap();
        let g = hessian_summary(&x7).dense_gram(64).unwrap();
        let gm = hessian_summary(&merge_columns(&x7, &q).unwrap()).dense_gram(64).unwrap();
        let qd = q.to_dense();
        let (pf, pc) = (q.source_dim(), q.target_dim());
        for a in 0..pc {
            for b in 0..pc {
                let mut s = 0u64;
                for j in 0..pf {
                    for k in 0..pf {
                        s += qd[j][a] as u64 * g[j][k] * qd[k][b] as u64;
                    }
                }
                prop_assert_eq!(gm[a][b], s);
            }
        }
    }

    #[test]
    fn diagonal_sums_and_histograms(seed in any::<u64>(), n in 1usize..300, log_binning in any::<bool>()) {
        let mut rng = common::rng(seed);
        let codes = common::random_codes(&mut rng, 100);
        let c = common::random_corpus(&mut rng, n, &codes, 12);
        let x = build(&c, &build_vocabulary(&c, 7).unwrap()).unwrap();
        let h = hessian_summary(&x);
        prop_assert_eq!(h.diagonal.iter().sum::<u64>(), c.total_diagnoses() as u64);
        prop_assert_eq!(h.trace, c.total_diagnoses() as u64);
        prop_assert!((h.mean_eigenvalue - h.trace as f64 / (h.n * h.p) as f64).abs() < 1e-15);
        let bins = diagonal_histogram(&h, log_binning);
        prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), h.p);
        for b in &bins {
            let inside = h.diagonal.iter().filter(|&&d| (d as f64) >= b.bin_low && (d as f64) < b.bin_high).count();
            prop_assert_eq!(inside, b.count);
        }
    }

    #[test]
    fn vocabulary_is_deterministic(seed in any::<u64>(), level in 2usize..=7) {
        let mut rng = common::rng(seed);
        let codes = common::random_codes(&mut rng, 50);
        let c = common::random_corpus(&mut rng, 100, &codes, 5);
        let a = serde_json::to_string(&build_vocabulary(&c, level).unwrap()).unwrap();
        let b = serde_json::to_string(&build_vocabulary(&c, level).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn toy_merge_pools_two_codes() {
    let s = |codes: &[&str]| StayRecord::new("s".into(), 100.0, codes).unwrap();
    let c = StayCorpus::new(vec![s(&["A001", "A002"]), s(&["A001", "B01"]), s(&["A002"])]);
    let v4 = build_vocabulary(&c, 4).unwrap();
    let x4 = build(&c, &v4).unwrap();
    let merged = merge_columns(&x4, &build_merge_map(&v4, 3).unwrap()).unwrap();
    assert_eq!((hessian_summary(&x4).trace, hessian_summary(&merged).trace), (5, 7));
    assert_eq!(merged.row_sums(), x4.row_sums());
    assert_eq!(merged.get(0, 0), 2);
}
