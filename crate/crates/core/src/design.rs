//! Sparse count design matrices over a code vocabulary, column merging, and
//! the occurrence / co-occurrence structure of their Gram matrix.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::codes::{truncate, CodeVocabulary, MergeMap};
use crate::stays::StayCorpus;

/// Largest dimension for which dense Gram matrices, spectra and inverses
/// are materialized.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("stay {row}: code {code} truncates to a prefix missing from the level-{level} vocabulary")]
    UnknownCode { row: usize, code: String, level: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension {dim} exceeds the dense cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
}

/// Row-compressed matrix of positive integer counts. Column indices within a
/// row are strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseDesignMatrix {
    level: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<u32>,
}

impl SparseDesignMatrix {
    /// Assembles a matrix from per-row `(column, count)` lists. Entries in a
    /// row may come in any order; repeated columns are summed and zero
    /// counts dropped.
    pub fn from_rows<R>(level: usize, n_cols: usize, rows: R) -> Result<Self, DesignError>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = (usize, u32)>,
    {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut scratch: Vec<(usize, u32)> = Vec::new();
        for row in rows {
            scratch.clear();
            scratch.extend(row);
            scratch.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &scratch {
                if c >= n_cols {
                    return Err(DesignError::ShapeMismatch(format!(
                        "column {c} out of range for {n_cols} columns"
                    )));
                }
                if v == 0 {
                    continue;
                }
                let start = row_ptr[row_ptr.len() - 1];
                if cols.len() > start && *cols.last().unwrap() as usize == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseDesignMatrix {
            level,
            n_cols,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Column indices and counts of row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[u32]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[u32], &[u32])> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        let (c, v) = self.row(i);
        c.binary_search(&(j as u32)).map_or(0, |k| v[k])
    }

    /// Per-row count totals; equal to D_i at every level.
    pub fn row_sums(&self) -> Vec<u64> {
        self.rows()
            .map(|(_, v)| v.iter().map(|&x| x as u64).sum())
            .collect()
    }

    /// Per-column count totals.
    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.n_cols];
        for (c, v) in self.cols.iter().zip(&self.vals) {
            sums[*c as usize] += *v as u64;
        }
        sums
    }

    pub fn is_binary(&self) -> bool {
        self.vals.iter().all(|&v| v == 1)
    }

    /// Copy of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseDesignMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &i in rows {
            let (c, v) = self.row(i);
            cols.extend_from_slice(c);
            vals.extend_from_slice(v);
            row_ptr.push(cols.len());
        }
        SparseDesignMatrix {
            level: self.level,
            n_cols: self.n_cols,
            row_ptr,
            cols,
            vals,
        }
    }

    /// `out += X v`
    pub fn mul_vec_add(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows());
        for (i, o) in out.iter_mut().enumerate() {
            let (c, x) = self.row(i);
            let mut acc = 0.0;
            for (&j, &x) in c.iter().zip(x) {
                acc += x as f64 * v[j as usize];
            }
            *o += acc;
        }
    }

    /// `out += X' u`
    pub fn tr_mul_vec_add(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.n_rows());
        debug_assert_eq!(out.len(), self.n_cols);
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            let (c, x) = self.row(i);
            for (&j, &x) in c.iter().zip(x) {
                out[j as usize] += x as f64 * ui;
            }
        }
    }

    /// Dense row-major copy of the matrix with a trailing column of ones.
    pub fn to_dense_augmented(&self) -> Vec<Vec<f64>> {
        self.rows()
            .map(|(c, v)| {
                let mut row = vec![0.0; self.n_cols + 1];
                for (&j, &x) in c.iter().zip(v) {
                    row[j as usize] = x as f64;
                }
                row[self.n_cols] = 1.0;
                row
            })
            .collect()
    }

    /// Dense augmented Gram matrix `[X, 1]'[X, 1]`, (p+1) x (p+1) with the
    /// intercept last.
    pub fn augmented_gram(&self, cap: usize) -> Result<Vec<Vec<f64>>, DesignError> {
        let dim = self.n_cols + 1;
        if dim > cap {
            return Err(DesignError::CapExceeded { dim, cap });
        }
        let p = self.n_cols;
        let mut g = vec![vec![0.0; dim]; dim];
        for (c, v) in self.rows() {
            for (a, (&j, &xj)) in c.iter().zip(v).enumerate() {
                let (j, xj) = (j as usize, xj as f64);
                for (&k, &xk) in c[a..].iter().zip(&v[a..]) {
                    g[j][k as usize] += xj * xk as f64;
                }
                g[j][p] += xj;
            }
            g[p][p] += 1.0;
        }
        for j in 0..dim {
            for k in 0..j {
                g[j][k] = g[k][j];
            }
        }
        Ok(g)
    }

    /// Coordinate export: a `%n p nnz level` header, then one zero-based
    /// `row col value` line per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "%{} {} {} {}", self.n_rows(), self.n_cols, self.nnz(), self.level)?;
        for (i, (c, v)) in self.rows().enumerate() {
            for (j, x) in c.iter().zip(v) {
                writeln!(out, "{i} {j} {x}")?;
            }
        }
        Ok(())
    }
}

/// Counts, for every stay and vocabulary column, the stay's codes whose
/// truncation to the vocabulary level equals that column's code.
pub fn build(corpus: &StayCorpus, vocab: &CodeVocabulary) -> Result<SparseDesignMatrix, DesignError> {
    let level = vocab.level();
    let mut rows = Vec::with_capacity(corpus.len());
    for (i, r) in corpus.records().iter().enumerate() {
        let mut row = Vec::with_capacity(r.codes.len());
        for code in &r.codes {
            let col = vocab
                .column(truncate(code.as_str(), level))
                .ok_or_else(|| DesignError::UnknownCode {
                    row: i,
                    code: code.to_string(),
                    level,
                })?;
            row.push((col, 1u32));
        }
        rows.push(row);
    }
    SparseDesignMatrix::from_rows(level, vocab.len(), rows)
}

/// `X Q`: pools the columns of `x` according to `q`.
pub fn merge_columns(x: &SparseDesignMatrix, q: &MergeMap) -> Result<SparseDesignMatrix, DesignError> {
    if q.source_dim() != x.n_cols() {
        return Err(DesignError::ShapeMismatch(format!(
            "merge map has {} source columns, matrix has {}",
            q.source_dim(),
            x.n_cols()
        )));
    }
    if q.from_level() != x.level() {
        return Err(DesignError::ShapeMismatch(format!(
            "merge map starts at level {}, matrix is at level {}",
            q.from_level(),
            x.level()
        )));
    }
    let a = q.assignments();
    SparseDesignMatrix::from_rows(
        q.to_level(),
        q.target_dim(),
        x.rows()
            .map(|(c, v)| c.iter().zip(v).map(|(&j, &x)| (a[j as usize], x)).collect::<Vec<_>>()),
    )
}

/// Diagonal, trace and on-demand entries of `X'X`.
#[derive(Debug, Clone)]
pub struct HessianSummary {
    pub n: usize,
    pub p: usize,
    /// `[X'X]_jj = sum_i X_ij^2`
    pub diagonal: Vec<u64>,
    pub trace: u64,
    /// `trace / (n p)`, the mean eigenvalue of `X'X / n`.
    pub mean_eigenvalue: f64,
    // column-compressed copy for co-occurrence queries
    col_ptr: Vec<usize>,
    col_rows: Vec<u32>,
    col_vals: Vec<u32>,
}

impl HessianSummary {
    /// Co-occurrence `[X'X]_jk = sum_i X_ij X_ik`.
    pub fn cooccurrence(&self, j: usize, k: usize) -> u64 {
        let (rj, vj) = self.column(j);
        let (rk, vk) = self.column(k);
        let (mut a, mut b) = (0, 0);
        let mut acc = 0u64;
        while a < rj.len() && b < rk.len() {
            match rj[a].cmp(&rk[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += vj[a] as u64 * vk[b] as u64;
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    fn column(&self, j: usize) -> (&[u32], &[u32]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.col_rows[r.clone()], &self.col_vals[r])
    }

    /// Dense `X'X` (without the intercept block).
    pub fn dense_gram(&self, cap: usize) -> Result<Vec<Vec<u64>>, DesignError> {
        if self.p > cap {
            return Err(DesignError::CapExceeded { dim: self.p, cap });
        }
        Ok((0..self.p)
            .map(|j| (0..self.p).map(|k| self.cooccurrence(j, k)).collect())
            .collect())
    }

    /// Trace of the augmented Hessian `[X, 1]'[X, 1]`.
    pub fn augmented_trace(&self) -> u64 {
        self.trace + self.n as u64
    }

    /// Mean eigenvalue of `[X, 1]'[X, 1] / n`.
    pub fn augmented_mean_eigenvalue(&self) -> f64 {
        self.augmented_trace() as f64 / (self.n as f64 * (self.p + 1) as f64)
    }
}

pub fn hessian_summary(x: &SparseDesignMatrix) -> HessianSummary {
    let p = x.n_cols();
    let mut col_ptr = vec![0usize; p + 1];
    for &c in &x.cols {
        col_ptr[c as usize + 1] += 1;
    }
    for j in 0..p {
        col_ptr[j + 1] += col_ptr[j];
    }
    let mut fill = col_ptr.clone();
    let mut col_rows = vec![0u32; x.nnz()];
    let mut col_vals = vec![0u32; x.nnz()];
    let mut diagonal = vec![0u64; p];
    for (i, (c, v)) in x.rows().enumerate() {
        for (&j, &val) in c.iter().zip(v) {
            let j = j as usize;
            col_rows[fill[j]] = i as u32;
            col_vals[fill[j]] = val;
            fill[j] += 1;
            diagonal[j] += val as u64 * val as u64;
        }
    }
    let trace = diagonal.iter().sum();
    let n = x.n_rows();
    HessianSummary {
        n,
        p,
        mean_eigenvalue: trace as f64 / (n as f64 * p as f64),
        diagonal,
        trace,
        col_ptr,
        col_rows,
        col_vals,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    /// Inclusive lower edge.
    pub bin_low: f64,
    /// Exclusive upper edge.
    pub bin_high: f64,
    pub count: usize,
}

/// Histogram of the Gram diagonal. Linear binning gives one unit-width bin
/// per distinct value; log binning uses power-of-two edges `[2^k, 2^(k+1))`.
/// Empty bins are omitted.
pub fn diagonal_histogram(h: &HessianSummary, log_binning: bool) -> Vec<HistogramBin> {
    let mut counts = std::collections::BTreeMap::<u64, usize>::new();
    for &d in &h.diagonal {
        let key = if log_binning {
            // zero diagonals (codes absent from these rows) share bin [0, 1)
            if d == 0 {
                0
            } else {
                1u64 << (63 - d.leading_zeros())
            }
        } else {
            d
        };
        *counts.entry(key).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(low, count)| {
            let high = if log_binning && low > 0 { 2 * low } else { low + 1 };
            HistogramBin {
                bin_low: low as f64,
                bin_high: high as f64,
                count,
            }
        })
        .collect()
}

/// Least-squares slope of log(count / width) against log(geometric bin
/// center) over bins with positive lower edge; estimates minus the
/// power-law exponent of a log-binned histogram.
pub fn log_log_slope(bins: &[HistogramBin]) -> Option<f64> {
    log_log_slope_from(bins, 0.0)
}

/// [`log_log_slope`] over the bins starting at or above `x_min` only, so
/// the flat head below a power-law cutoff does not bias the fit.
pub fn log_log_slope_from(bins: &[HistogramBin], x_min: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = bins
        .iter()
        .filter(|b| b.bin_low > 0.0 && b.bin_low >= x_min && b.count > 0)
        .map(|b| {
            let center = (b.bin_low * (b.bin_high - 1.0).max(b.bin_low)).sqrt();
            let density = b.count as f64 / (b.bin_high - b.bin_low);
            (center.ln(), density.ln())
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Histogram CSV: schema comment line, then `bin_low,bin_high,count`.
pub fn write_histogram_csv<W: Write>(bins: &[HistogramBin], out: W) -> csv::Result<()> {
    let mut out = out;
    writeln!(out, "# codegrain histogram v1")?;
    let mut w = csv::Writer::from_writer(out);
    for b in bins {
        w.serialize(b)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_merge_map, build_vocabulary};
    use crate::stays::StayRecord;

    pub(crate) fn toy_corpus() -> StayCorpus {
        let s = |id: &str, codes: &[&str]| StayRecord::new(id.into(), 100.0, codes).unwrap();
        StayCorpus::new(vec![
            s("s1", &["A001", "A002"]),
            s("s2", &["A001", "B01"]),
            s("s3", &["A002"]),
        ])
    }

    fn dense(x: &SparseDesignMatrix) -> Vec<Vec<u32>> {
        (0..x.n_rows())
            .map(|i| (0..x.n_cols()).map(|j| x.get(i, j)).collect())
            .collect()
    }

    #[test]
    fn toy_build_and_merge() {
        let c = toy_corpus();
        let v4 = build_vocabulary(&c, 4).unwrap();
        let x4 = build(&c, &v4).unwrap();
        assert_eq!(v4.codes(), ["A001", "A002", "B01"]);
        assert_eq!(dense(&x4), [[1, 1, 0], [1, 0, 1], [0, 1, 0]]);
        assert!(x4.is_binary());

        let v3 = build_vocabulary(&c, 3).unwrap();
        let x3 = build(&c, &v3).unwrap();
        assert_eq!(dense(&x3), [[2, 0], [1, 1], [1, 0]]);

        let q = build_merge_map(&v4, 3).unwrap();
        let merged = merge_columns(&x4, &q).unwrap();
        assert_eq!(merged, x3);
        assert_eq!(merged.row_sums(), x4.row_sums());
    }

    #[test]
    fn single_indicator_row() {
        let c = StayCorpus::new(vec![StayRecord::new("s".into(), 1.0, &["B01"]).unwrap()]);
        let v = CodeVocabulary::from_codes(["A001", "B01"], 3).unwrap();
        let x = build(&c, &v).unwrap();
        assert_eq!(dense(&x), [[0, 1]]);
    }

    #[test]
    fn unknown_code_and_shape_errors() {
        let c = toy_corpus();
        let v = CodeVocabulary::from_codes(["A001"], 4).unwrap();
        assert!(matches!(build(&c, &v), Err(DesignError::UnknownCode { row: 0, .. })));

        let v4 = build_vocabulary(&c, 4).unwrap();
        let x4 = build(&c, &v4).unwrap();
        let other = build_merge_map(&CodeVocabulary::from_codes(["A001", "A002"], 4).unwrap(), 3).unwrap();
        assert!(matches!(merge_columns(&x4, &other), Err(DesignError::ShapeMismatch(_))));
    }

    #[test]
    fn identity_merge_is_noop() {
        let c = toy_corpus();
        let v = CodeVocabulary::from_codes(["A001", "A002", "B01"], 5).unwrap();
        let x = build(&c, &v).unwrap();
        let q = build_merge_map(&v, 4).unwrap();
        assert!(q.is_identity());
        let m = merge_columns(&x, &q).unwrap();
        assert_eq!(dense(&m), dense(&x));
    }

    #[test]
    fn toy_hessians() {
        let c = toy_corpus();
        let x4 = build(&c, &build_vocabulary(&c, 4).unwrap()).unwrap();
        let h4 = hessian_summary(&x4);
        assert_eq!(h4.diagonal, [2, 2, 1]);
        assert_eq!(h4.trace, 5);
        assert_eq!(h4.cooccurrence(0, 1), 1);
        assert_eq!(h4.cooccurrence(1, 2), 0);
        assert_eq!(h4.diagonal, x4.column_sums());

        let x3 = build(&c, &build_vocabulary(&c, 3).unwrap()).unwrap();
        let h3 = hessian_summary(&x3);
        assert_eq!(h3.diagonal, [6, 1]);
        assert_eq!(h3.trace, 7);
        assert_eq!(h3.trace - h4.trace, 2 * h4.cooccurrence(0, 1));
        assert_eq!(h3.dense_gram(10).unwrap(), [[6, 1], [1, 1]]);
        assert_eq!(h3.augmented_trace(), 10);
        assert!((h3.mean_eigenvalue - 7.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_merge_keeps_trace() {
        let s = |codes: &[&str]| StayRecord::new("s".into(), 1.0, codes).unwrap();
        let c = StayCorpus::new(vec![s(&["A001"]), s(&["A002", "B01"]), s(&["B01"])]);
        let v4 = build_vocabulary(&c, 4).unwrap();
        let x4 = build(&c, &v4).unwrap();
        let x3 = merge_columns(&x4, &build_merge_map(&v4, 3).unwrap()).unwrap();
        assert_eq!(hessian_summary(&x4).trace, hessian_summary(&x3).trace);
    }

    #[test]
    fn augmented_gram_matches_summary() {
        let c = toy_corpus();
        let x = build(&c, &build_vocabulary(&c, 3).unwrap()).unwrap();
        let g = x.augmented_gram(10).unwrap();
        assert_eq!(g, [[6.0, 1.0, 4.0], [1.0, 1.0, 1.0], [4.0, 1.0, 3.0]]);
        assert!(matches!(x.augmented_gram(2), Err(DesignError::CapExceeded { dim: 3, cap: 2 })));
    }

    #[test]
    fn histograms() {
        let h = HessianSummary {
            n: 4,
            p: 4,
            diagonal: vec![1, 1, 1, 10],
            trace: 13,
            mean_eigenvalue: 13.0 / 16.0,
            col_ptr: vec![0; 5],
            col_rows: vec![],
            col_vals: vec![],
        };
        let lin = diagonal_histogram(&h, false);
        let pairs: Vec<(f64, usize)> = lin.iter().map(|b| (b.bin_low, b.count)).collect();
        assert_eq!(pairs, [(1.0, 3), (10.0, 1)]);
        let log = diagonal_histogram(&h, true);
        let pairs: Vec<(f64, f64, usize)> = log.iter().map(|b| (b.bin_low, b.bin_high, b.count)).collect();
        assert_eq!(pairs, [(1.0, 2.0, 3), (8.0, 16.0, 1)]);

        let mut buf = Vec::new();
        write_histogram_csv(&lin, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# codegrain histogram v1\nbin_low,bin_high,count\n1.0,2.0,3\n10.0,11.0,1\n");
    }

    #[test]
    fn coordinate_export() {
        let c = toy_corpus();
        let x = build(&c, &build_vocabulary(&c, 3).unwrap()).unwrap();
        let mut buf = Vec::new();
        x.write_coordinate(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "%3 2 4 3\n0 0 2\n1 0 1\n1 1 1\n2 0 1\n");
    }

    #[test]
    fn matvecs() {
        let c = toy_corpus();
        let x = build(&c, &build_vocabulary(&c, 3).unwrap()).unwrap();
        let mut out = vec![1.0; 3];
        x.mul_vec_add(&[0.5, 1.0], &mut out);
        assert_eq!(out, [2.0, 2.5, 1.5]);
        let mut out = vec![0.0; 2];
        x.tr_mul_vec_add(&[1.0, 2.0, 3.0], &mut out);
        assert_eq!(out, [7.0, 2.0]);
        let sub = x.select_rows(&[2, 0]);
        assert_eq!(sub.row(0), (&[0u32][..], &[1u32][..]));
        assert_eq!(sub.row_sums(), [1, 2]);
    }
}
