//! Rank consistency of coefficient vectors across resampled fits.
//!
//! Each replicate splits the corpus with its own seed, fits on the training
//! rows and records the coefficients in a shared vocabulary order. The
//! consistency metric `eta` is the mean pairwise Spearman correlation.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::codes::{build_vocabulary, CodeError, CodeVocabulary};
use crate::design::{build, DesignError};
use crate::regression::{fit, predict, r2_score, FitConfig, FitError};
use crate::stays::{split, StayCorpus, StayError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConsistencyError {
    #[error("vectors must have equal length >= 2 (got {0} and {1})")]
    ShapeMismatch(usize, usize),
    #[error("constant coefficient vector{}", .replicate.map(|r| format!(" in replicate {r}")).unwrap_or_default())]
    DegenerateVector { replicate: Option<usize> },
    #[error("an ensemble needs at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("replicate {replicate}: {message}")]
    Replicate { replicate: usize, message: String },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Fractional ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && v[order[j]] == v[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, ConsistencyError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(ConsistencyError::ShapeMismatch(a.len(), b.len()));
    }
    pearson(&average_ranks(a), &average_ranks(b)).ok_or(ConsistencyError::DegenerateVector { replicate: None })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCorrelation {
    pub a: usize,
    pub b: usize,
    pub spearman: f64,
}

/// All unordered pairs `a < b` of rows, in lexicographic order.
pub fn pairwise_spearman(rows: &[Vec<f64>]) -> Result<Vec<PairCorrelation>, ConsistencyError> {
    if rows.len() < 2 {
        return Err(ConsistencyError::TooFewReplicates(rows.len()));
    }
    let p = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != p) {
        return Err(ConsistencyError::ShapeMismatch(p, r.len()));
    }
    if p < 2 {
        return Err(ConsistencyError::ShapeMismatch(p, p));
    }
    let ranks: Vec<Vec<f64>> = rows.iter().map(|r| average_ranks(r)).collect();
    for (i, r) in ranks.iter().enumerate() {
        if r.iter().all(|&x| x == r[0]) {
            return Err(ConsistencyError::DegenerateVector { replicate: Some(i) });
        }
    }
    let mut out = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            let spearman = pearson(&ranks[a], &ranks[b]).expect("non-constant ranks");
            out.push(PairCorrelation { a, b, spearman });
        }
    }
    Ok(out)
}

/// `eta = 1/(N(N-1)) sum_{a != b} r_s(a, b)`, computed as the mean over
/// unordered pairs.
pub fn eta(rows: &[Vec<f64>]) -> Result<f64, ConsistencyError> {
    let pairs = pairwise_spearman(rows)?;
    Ok(pairs.iter().map(|p| p.spearman).sum::<f64>() / pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub replicates: usize,
    pub train_ratio: f64,
    /// Replicate `r` splits with seed `base_seed + r`.
    pub base_seed: u64,
    pub fit: FitConfig,
    pub level: usize,
    /// Append the intercept to each coefficient vector before ranking.
    pub include_intercept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateSummary {
    pub replicate: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub intercept: f64,
    pub train_r2: f64,
    pub test_r2: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub spec: EnsembleSpec,
    pub p: usize,
    pub eta: f64,
    pub pairwise: Vec<PairCorrelation>,
    pub replicates: Vec<ReplicateSummary>,
    /// `replicates x p`, vocabulary order, with the intercept last when
    /// `include_intercept` is set.
    #[serde(skip)]
    pub coefficients: Vec<Vec<f64>>,
    #[serde(skip)]
    pub codes: Vec<String>,
}

impl ConsistencyReport {
    pub fn all_converged(&self) -> bool {
        self.replicates.iter().all(|r| r.converged)
    }

    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, self)
    }

    /// Schema comment, then `code,rep0,rep1,...` with one row per code.
    pub fn write_coefficients_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# codegrain coefficients v1")?;
        let header: Vec<String> = (0..self.coefficients.len()).map(|r| format!("rep{r}")).collect();
        writeln!(out, "code,{}", header.join(","))?;
        for (j, code) in self.codes.iter().enumerate() {
            let row: Vec<String> = self.coefficients.iter().map(|c| format!("{:e}", c[j])).collect();
            writeln!(out, "{code},{}", row.join(","))?;
        }
        Ok(())
    }
}

fn annotate(replicate: usize) -> impl Fn(String) -> ConsistencyError {
    move |message| ConsistencyError::Replicate { replicate, message }
}

pub fn run_ensemble(corpus: &StayCorpus, spec: &EnsembleSpec) -> Result<ConsistencyReport, ConsistencyError> {
    if spec.replicates < 2 {
        return Err(ConsistencyError::TooFewReplicates(spec.replicates));
    }
    let vocab = build_vocabulary(corpus, spec.level)?;
    run_ensemble_with_vocabulary(corpus, &vocab, spec)
}

/// As [`run_ensemble`], with a vocabulary built by the caller.
pub fn run_ensemble_with_vocabulary(
    corpus: &StayCorpus,
    vocab: &CodeVocabulary,
    spec: &EnsembleSpec,
) -> Result<ConsistencyReport, ConsistencyError> {
    if spec.replicates < 2 {
        return Err(ConsistencyError::TooFewReplicates(spec.replicates));
    }
    let x = build(corpus, vocab)?;
    let y = corpus.outcomes();

    let results: Vec<Result<(ReplicateSummary, Vec<f64>), ConsistencyError>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let err = annotate(r);
            let seed = spec.base_seed.wrapping_add(r as u64);
            let s = split(corpus.len(), spec.train_ratio, seed).map_err(|e: StayError| err(e.to_string()))?;
            let (x_tr, x_te) = (x.select_rows(&s.train), x.select_rows(&s.test));
            let y_tr: Vec<f64> = s.train.iter().map(|&i| y[i]).collect();
            let y_te: Vec<f64> = s.test.iter().map(|&i| y[i]).collect();
            let f = fit(&x_tr, &y_tr, &spec.fit).map_err(|e| err(e.to_string()))?;
            let score = |xm, ym: &[f64]| -> Result<f64, FitError> { r2_score(ym, &predict(&f, xm)?) };
            let train_r2 = score(&x_tr, &y_tr).map_err(|e| err(e.to_string()))?;
            let test_r2 = score(&x_te, &y_te).map_err(|e| err(e.to_string()))?;
            let mut coef = f.coefficients.clone();
            if spec.include_intercept {
                coef.push(f.intercept);
            }
            Ok((
                ReplicateSummary {
                    replicate: r,
                    seed,
                    n_train: s.train.len(),
                    n_test: s.test.len(),
                    intercept: f.intercept,
                    train_r2,
                    test_r2,
                    iterations: f.iterations,
                    converged: f.converged,
                },
                coef,
            ))
        })
        .collect();

    let mut replicates = Vec::with_capacity(spec.replicates);
    let mut rows = Vec::with_capacity(spec.replicates);
    for r in results {
        let (summary, coef) = r?;
        replicates.push(summary);
        rows.push(coef);
    }
    let pairwise = pairwise_spearman(&rows)?;
    let eta = pairwise.iter().map(|p| p.spearman).sum::<f64>() / pairwise.len() as f64;
    let mut codes = vocab.codes().to_vec();
    if spec.include_intercept {
        codes.push(crate::regression::INTERCEPT_LABEL.to_string());
    }
    Ok(ConsistencyReport {
        spec: spec.clone(),
        p: vocab.len(),
        eta,
        pairwise,
        replicates,
        coefficients: rows,
        codes,
    })
}
