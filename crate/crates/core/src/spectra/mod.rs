//! Hessian spectra at desk scale, power-law fits of Hessian diagonals, and
//! executable checks of the variance and trace identities.

mod eigen;
mod powerlaw;

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::codes::MergeMap;
use crate::design::{hessian_summary, merge_columns, DesignError, SparseDesignMatrix, DEFAULT_DENSE_CAP};

pub use eigen::symmetric_eigenvalues;
pub use powerlaw::{
    fit_power_law, PowerLawEstimator, PowerLawFit, XminMethod, XminSelection, DEFAULT_MIN_TAIL,
};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Allowed relative asymmetry of an input matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
/// Required agreement between the eigenvalue sum and the trace.
pub const TRACE_TOLERANCE: f64 = 1e-8;
/// Required agreement between the two routes to the summed variance.
pub const INVERSE_TRACE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("matrix is not symmetric (max relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("dimension {dim} exceeds the dense cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
    #[error("matrix has a negative eigenvalue {0:e}")]
    Indefinite(f64),
    #[error("matrix is singular or not positive definite")]
    SingularMatrix,
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("power-law tail needs at least {needed} samples, found {found}")]
    InsufficientTail { needed: usize, found: usize },
    #[error("power-law tail has no spread above the cutoff")]
    DegenerateTail,
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Square symmetric matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetric {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SpectraError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(DesignError::ShapeMismatch("matrix is not square".into()).into());
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        let scale = data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((data[i * n + j] - data[j * n + i]).abs() / scale);
            }
        }
        if worst > SYMMETRY_TOLERANCE {
            return Err(SpectraError::NotSymmetric(worst));
        }
        Ok(DenseSymmetric { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Copy with `shift` added to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> DenseSymmetric {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += shift;
        }
        out
    }

    /// Copy with `shift[i]` added to diagonal entry `i`.
    pub fn with_diagonal_added(&self, shift: &[f64]) -> DenseSymmetric {
        assert_eq!(shift.len(), self.n);
        let mut out = self.clone();
        for (i, s) in shift.iter().enumerate() {
            out.data[i * self.n + i] += s;
        }
        out
    }

    /// Diagonal of the inverse via Cholesky. Fails unless positive definite.
    pub fn inverse_diagonal(&self) -> Result<Vec<f64>, SpectraError> {
        let m = DMatrix::from_row_slice(self.n, self.n, &self.data);
        let chol = m.cholesky().ok_or(SpectraError::SingularMatrix)?;
        let inv = chol.inverse();
        let diag: Vec<f64> = (0..self.n).map(|i| inv[(i, i)]).collect();
        if diag.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(diag)
        } else {
            Err(SpectraError::SingularMatrix)
        }
    }
}

/// Descending eigenvalues of a positive semi-definite matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub dim: usize,
    /// `|sum s_i - trace| / trace`
    pub trace_check: f64,
    /// Eigenvalues at or below the rank tolerance, clamped to zero.
    pub clamped: usize,
}

impl Spectrum {
    /// Numerical rank: eigenvalues above `RANK_TOLERANCE * max`.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len() - self.clamped
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.dim as f64
    }

    /// Sum of reciprocal eigenvalues; infinite when singular.
    pub fn inverse_sum(&self) -> f64 {
        self.eigenvalues.iter().map(|s| 1.0 / s).sum()
    }

    /// CSV export: schema comment, then `index,eigenvalue`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# codegrain spectrum v1")?;
        writeln!(out, "index,eigenvalue")?;
        for (i, s) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{i},{s:e}")?;
        }
        Ok(())
    }
}

pub fn eigen_spectrum(h: &DenseSymmetric, cap: usize) -> Result<Spectrum, SpectraError> {
    if h.dim() > cap {
        return Err(SpectraError::CapExceeded { dim: h.dim(), cap });
    }
    let mut ev = symmetric_eigenvalues(&h.data, h.n).ok_or(SpectraError::NoConvergence)?;
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let max = ev.first().copied().unwrap_or(0.0).max(0.0);
    let floor = RANK_TOLERANCE * max;
    if let Some(&min) = ev.last() {
        if min < -floor {
            return Err(SpectraError::Indefinite(min));
        }
    }
    let mut clamped = 0;
    for s in ev.iter_mut() {
        if *s <= floor {
            *s = 0.0;
            clamped += 1;
        }
    }
    let trace = h.trace();
    let sum: f64 = ev.iter().sum();
    let trace_check = if trace == 0.0 { sum.abs() } else { (sum - trace).abs() / trace.abs() };
    Ok(Spectrum {
        eigenvalues: ev,
        dim: h.dim(),
        trace_check,
        clamped,
    })
}

/// Spectrum of the augmented Hessian `[X, 1]'[X, 1]`.
pub fn augmented_spectrum(x: &SparseDesignMatrix, cap: usize) -> Result<Spectrum, SpectraError> {
    let g = x.augmented_gram(cap)?;
    eigen_spectrum(&DenseSymmetric::from_rows(&g)?, cap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseTraceReport {
    pub dim: usize,
    /// Sum of the diagonal of the inverse.
    pub s_v: f64,
    /// Sum of reciprocal eigenvalues.
    pub s_i: f64,
    pub trace: f64,
    pub lower_bound: f64,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub equality_holds: bool,
    pub bound_holds: bool,
    pub passed: bool,
}

/// Compares the summed inverse diagonal with the summed inverse spectrum,
/// and both with the reciprocal trace.
pub fn verify_inverse_trace(h: &DenseSymmetric) -> Result<InverseTraceReport, SpectraError> {
    verify_inverse_trace_with_cap(h, DEFAULT_DENSE_CAP)
}

pub fn verify_inverse_trace_with_cap(h: &DenseSymmetric, cap: usize) -> Result<InverseTraceReport, SpectraError> {
    let spectrum = eigen_spectrum(h, cap)?;
    if spectrum.clamped > 0 {
        return Err(SpectraError::SingularMatrix);
    }
    let s_v: f64 = h.inverse_diagonal()?.iter().sum();
    let s_i = spectrum.inverse_sum();
    let trace = h.trace();
    let lower_bound = 1.0 / trace;
    let relative_gap = (s_v - s_i).abs() / s_i;
    let equality_holds = relative_gap <= INVERSE_TRACE_TOLERANCE;
    // a 1x1 matrix meets the bound with equality
    let bound_holds = if h.dim() == 1 {
        (s_i - lower_bound).abs() <= INVERSE_TRACE_TOLERANCE * lower_bound
    } else {
        s_i > lower_bound
    };
    Ok(InverseTraceReport {
        dim: h.dim(),
        s_v,
        s_i,
        trace,
        lower_bound,
        relative_gap,
        tolerance: INVERSE_TRACE_TOLERANCE,
        equality_holds,
        bound_holds,
        passed: equality_holds && bound_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeTraceReport {
    pub from_level: usize,
    pub to_level: usize,
    pub p_before: usize,
    pub p_after: usize,
    pub trace_before: u64,
    pub trace_after: u64,
    pub delta: u64,
    /// Sum of co-occurrences over unordered pairs of distinct source
    /// columns pooled into the same target.
    pub merged_pair_mass: u64,
    pub monotone: bool,
    pub identity_holds: bool,
    pub passed: bool,
}

/// Merges `x` with `q` and checks that the Gram trace grows by exactly twice
/// the co-occurrence mass of the pooled column pairs.
pub fn verify_merge_trace(x: &SparseDesignMatrix, q: &MergeMap) -> Result<MergeTraceReport, SpectraError> {
    let merged = merge_columns(x, q)?;
    let before = hessian_summary(x);
    let after = hessian_summary(&merged);
    let mut mass = 0u64;
    for group in q.groups() {
        for (a, &k) in group.iter().enumerate() {
            for &m in &group[a + 1..] {
                mass += before.cooccurrence(k, m);
            }
        }
    }
    let monotone = after.trace >= before.trace;
    let delta = after.trace.saturating_sub(before.trace);
    let identity_holds = monotone && delta == 2 * mass;
    Ok(MergeTraceReport {
        from_level: q.from_level(),
        to_level: q.to_level(),
        p_before: x.n_cols(),
        p_after: merged.n_cols(),
        trace_before: before.trace,
        trace_after: after.trace,
        delta,
        merged_pair_mass: mass,
        monotone,
        identity_holds,
        passed: monotone && identity_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_merge_map, build_vocabulary};
    use crate::design::build;
    use crate::stays::{StayCorpus, StayRecord};

    fn sym(rows: &[&[f64]]) -> DenseSymmetric {
        DenseSymmetric::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn diagonal_and_toy_spectra() {
        let s = eigen_spectrum(&sym(&[&[3.0, 0.0], &[0.0, 1.0]]), 10).unwrap();
        assert_eq!(s.eigenvalues, [3.0, 1.0]);
        let s = eigen_spectrum(&sym(&[&[6.0, 1.0], &[1.0, 1.0]]), 10).unwrap();
        assert!((s.sum() - 7.0).abs() < 1e-12);
        assert!(s.trace_check < 1e-14);
        // closed form (7 +- sqrt(29)) / 2
        assert!((s.eigenvalues[0] - (7.0 + 29f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejections() {
        assert!(matches!(
            DenseSymmetric::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]),
            Err(SpectraError::NotSymmetric(_))
        ));
        let h = sym(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(eigen_spectrum(&h, 1), Err(SpectraError::CapExceeded { dim: 2, cap: 1 })));
        assert!(matches!(
            eigen_spectrum(&sym(&[&[1.0, 2.0], &[2.0, 1.0]]), 10),
            Err(SpectraError::Indefinite(_))
        ));
        let singular = sym(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let s = eigen_spectrum(&singular, 10).unwrap();
        assert_eq!((s.rank(), s.clamped), (1, 1));
        assert!(matches!(verify_inverse_trace(&singular), Err(SpectraError::SingularMatrix)));
    }

    #[test]
    fn inverse_trace_hand_cases() {
        let r = verify_inverse_trace(&sym(&[&[2.0, 0.0], &[0.0, 2.0]])).unwrap();
        assert!((r.s_v - 1.0).abs() < 1e-12 && (r.s_i - 1.0).abs() < 1e-12 && r.lower_bound == 0.25);
        assert!(r.passed);
        let k = 5;
        let id: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| (i == j) as u8 as f64).collect()).collect();
        let r = verify_inverse_trace(&DenseSymmetric::from_rows(&id).unwrap()).unwrap();
        assert!((r.s_v - 5.0).abs() < 1e-12 && (r.s_i - 5.0).abs() < 1e-12);
        assert!(r.passed && r.s_i > 1.0 / 5.0);
    }

    #[test]
    fn merge_trace_toy() {
        let s = |codes: &[&str]| StayRecord::new("s".into(), 1.0, codes).unwrap();
        let c = StayCorpus::new(vec![s(&["A001", "A002"]), s(&["A001", "B01"]), s(&["A002"])]);
        let v4 = build_vocabulary(&c, 4).unwrap();
        let x4 = build(&c, &v4).unwrap();
        let r = verify_merge_trace(&x4, &build_merge_map(&v4, 3).unwrap()).unwrap();
        assert_eq!((r.trace_before, r.trace_after, r.delta, r.merged_pair_mass), (5, 7, 2, 1));
        assert!(r.passed);

        let c = StayCorpus::new(vec![s(&["A001"]), s(&["A002", "B01"])]);
        let v4 = build_vocabulary(&c, 4).unwrap();
        let r = verify_merge_trace(&build(&c, &v4).unwrap(), &build_merge_map(&v4, 3).unwrap()).unwrap();
        assert_eq!((r.delta, r.merged_pair_mass), (0, 0));
        assert!(r.passed);
    }

    #[test]
    fn spectrum_csv() {
        let s = eigen_spectrum(&sym(&[&[3.0, 0.0], &[0.0, 1.0]]), 10).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# codegrain spectrum v1\nindex,eigenvalue\n0,3e0\n1,1e0\n");
    }
}
