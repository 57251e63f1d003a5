//! OLS and Ridge fits of log cost on code counts with an intercept,
//! prediction scoring, coefficient variances and effective dimension.
//!
//! The design is always augmented with a trailing column of ones, so the
//! Hessian of the squared loss is `[X, 1]'[X, 1]`. Fits never form that
//! matrix: they run LSQR on matrix-vector products with the sparse design.
//! The dense Hessian is only built for variance reports, below the dense
//! cap.

mod lsqr;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::CodeVocabulary;
use crate::design::{DesignError, SparseDesignMatrix, DEFAULT_DENSE_CAP};
use crate::spectra::{eigen_spectrum, DenseSymmetric, SpectraError};

pub use lsqr::{lsqr, normal_residual, LinearOperator, LsqrOptions, LsqrOutcome};

/// Row label of the intercept in coefficient exports.
pub const INTERCEPT_LABEL: &str = "__intercept__";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("design has no rows")]
    EmptyDesign,
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("outcome vector is constant")]
    DegenerateOutcome,
    #[error("augmented Hessian is singular (rank {rank} < {dim})")]
    SingularHessian { rank: usize, dim: usize },
    #[error("dimension {dim} exceeds the dense cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
    #[error("zero eigenvalue with no penalty: effective dimension undefined")]
    DegenerateSpectrum,
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

impl From<DesignError> for FitError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::CapExceeded { dim, cap } => FitError::CapExceeded { dim, cap },
            other => FitError::ShapeMismatch(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Ridge penalty on the unscaled squared loss; zero gives OLS.
    pub lambda: f64,
    /// Whether the design is augmented with an intercept column at all.
    pub fit_intercept: bool,
    /// Whether the intercept is penalized along with the code coefficients.
    pub penalize_intercept: bool,
    /// Target relative normal-equation residual.
    pub tolerance: f64,
    /// Iteration cap; `None` means `10 (p + 1)`.
    pub max_iterations: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda: 0.0,
            fit_intercept: true,
            penalize_intercept: true,
            tolerance: 1e-10,
            max_iterations: None,
        }
    }
}

impl FitConfig {
    pub fn ols() -> Self {
        Self::default()
    }

    pub fn ridge(lambda: f64) -> Self {
        FitConfig {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(FitError::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.tolerance > 0.0) {
            return Err(FitError::InvalidConfig(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(FitError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub intercept: f64,
    /// One coefficient per design column.
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub fit_intercept: bool,
    pub penalize_intercept: bool,
    pub iterations: usize,
    /// `|gradient| / |[X, 1]' y|` at the returned coefficients.
    pub relative_residual: f64,
    pub tolerance: f64,
    pub converged: bool,
}

impl FitResult {
    /// CSV export `code,beta`, intercept first as `__intercept__`.
    pub fn write_coefficients_csv<W: Write>(&self, vocab: &CodeVocabulary, out: W) -> Result<(), FitError> {
        if vocab.len() != self.coefficients.len() {
            return Err(FitError::ShapeMismatch(format!(
                "vocabulary has {} codes, fit has {} coefficients",
                vocab.len(),
                self.coefficients.len()
            )));
        }
        let io = |e: std::io::Error| FitError::ShapeMismatch(e.to_string());
        let mut out = out;
        writeln!(out, "code,beta").map_err(io)?;
        writeln!(out, "{INTERCEPT_LABEL},{:e}", self.intercept).map_err(io)?;
        for (code, b) in vocab.codes().iter().zip(&self.coefficients) {
            writeln!(out, "{code},{b:e}").map_err(io)?;
        }
        Ok(())
    }
}

/// JSON sidecar written next to a coefficient export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub level: usize,
    pub n_train: usize,
    pub p: usize,
    pub lambda: f64,
    pub lambda_per_n: f64,
    pub fit_intercept: bool,
    pub penalize_intercept: bool,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    pub train_r2: Option<f64>,
    pub test_r2: Option<f64>,
}

impl FitMetadata {
    pub fn new(fit: &FitResult, level: usize, n_train: usize) -> Self {
        FitMetadata {
            level,
            n_train,
            p: fit.coefficients.len(),
            lambda: fit.lambda,
            lambda_per_n: fit.lambda / n_train.max(1) as f64,
            fit_intercept: fit.fit_intercept,
            penalize_intercept: fit.penalize_intercept,
            iterations: fit.iterations,
            relative_residual: fit.relative_residual,
            converged: fit.converged,
            train_r2: None,
            test_r2: None,
        }
    }
}

/// `[X, 1]` as an operator.
struct Augmented<'a> {
    x: &'a SparseDesignMatrix,
}

impl LinearOperator for Augmented<'_> {
    fn nrows(&self) -> usize {
        self.x.n_rows()
    }

    fn ncols(&self) -> usize {
        self.x.n_cols() + 1
    }

    fn apply_add(&self, v: &[f64], y: &mut [f64]) {
        let p = self.x.n_cols();
        self.x.mul_vec_add(&v[..p], y);
        y.iter_mut().for_each(|yi| *yi += v[p]);
    }

    fn apply_transpose_add(&self, u: &[f64], out: &mut [f64]) {
        let p = self.x.n_cols();
        self.x.tr_mul_vec_add(u, &mut out[..p]);
        out[p] += u.iter().sum::<f64>();
    }
}

/// `X` alone, for fits without an intercept.
struct Plain<'a> {
    x: &'a SparseDesignMatrix,
}

impl LinearOperator for Plain<'_> {
    fn nrows(&self) -> usize {
        self.x.n_rows()
    }

    fn ncols(&self) -> usize {
        self.x.n_cols()
    }

    fn apply_add(&self, v: &[f64], y: &mut [f64]) {
        self.x.mul_vec_add(v, y);
    }

    fn apply_transpose_add(&self, u: &[f64], out: &mut [f64]) {
        self.x.tr_mul_vec_add(u, out);
    }
}

/// `X - 1 mu'` with column means `mu`, without materializing it.
struct Centered<'a> {
    x: &'a SparseDesignMatrix,
    means: Vec<f64>,
}

impl LinearOperator for Centered<'_> {
    fn nrows(&self) -> usize {
        self.x.n_rows()
    }

    fn ncols(&self) -> usize {
        self.x.n_cols()
    }

    fn apply_add(&self, v: &[f64], y: &mut [f64]) {
        let shift: f64 = self.means.iter().zip(v).map(|(m, v)| m * v).sum();
        self.x.mul_vec_add(v, y);
        y.iter_mut().for_each(|yi| *yi -= shift);
    }

    fn apply_transpose_add(&self, u: &[f64], out: &mut [f64]) {
        let total: f64 = u.iter().sum();
        self.x.tr_mul_vec_add(u, out);
        out.iter_mut().zip(&self.means).for_each(|(o, m)| *o -= m * total);
    }
}

fn check_outcomes(x: &SparseDesignMatrix, y: &[f64]) -> Result<(), FitError> {
    if x.n_rows() == 0 {
        return Err(FitError::EmptyDesign);
    }
    if y.len() != x.n_rows() {
        return Err(FitError::ShapeMismatch(format!(
            "{} outcomes for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    Ok(())
}

/// Minimizes `|y - b0 - X b|^2 + lambda |b|^2`, where the penalty covers
/// `b0` unless `penalize_intercept` is off. With `lambda = 0` and a
/// rank-deficient design the minimum-norm solution is returned.
///
/// A run that hits the iteration cap still returns its last iterate, with
/// `converged = false`.
pub fn fit(x: &SparseDesignMatrix, y: &[f64], cfg: &FitConfig) -> Result<FitResult, FitError> {
    cfg.validate()?;
    check_outcomes(x, y)?;
    let p = x.n_cols();
    let max_iterations = cfg.max_iterations.unwrap_or(10 * (p + 1));
    let opts = LsqrOptions {
        damp: cfg.lambda.sqrt(),
        tolerance: cfg.tolerance,
        max_iterations,
    };

    let (intercept, coefficients, iterations) = if !cfg.fit_intercept {
        let out = lsqr(&Plain { x }, y, opts);
        (0.0, out.x, out.iterations)
    } else if cfg.lambda > 0.0 && !cfg.penalize_intercept {
        let n = x.n_rows() as f64;
        let means: Vec<f64> = x.column_sums().iter().map(|&s| s as f64 / n).collect();
        let y_mean = y.iter().sum::<f64>() / n;
        let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        let op = Centered { x, means };
        let out = lsqr(&op, &yc, opts);
        let intercept = y_mean - op.means.iter().zip(&out.x).map(|(m, b)| m * b).sum::<f64>();
        (intercept, out.x, out.iterations)
    } else {
        let out = lsqr(&Augmented { x }, y, opts);
        let mut beta = out.x;
        let intercept = beta.pop().expect("augmented solution has an intercept");
        (intercept, beta, out.iterations)
    };

    let relative_residual = gradient_norm_ratio(x, y, cfg, intercept, &coefficients);
    let converged = relative_residual <= cfg.tolerance;
    if !converged {
        log::warn!(
            "fit stopped after {iterations} iterations at relative residual {relative_residual:e} (target {:e})",
            cfg.tolerance
        );
    }
    Ok(FitResult {
        intercept,
        coefficients,
        lambda: cfg.lambda,
        fit_intercept: cfg.fit_intercept,
        penalize_intercept: cfg.penalize_intercept,
        iterations,
        relative_residual,
        tolerance: cfg.tolerance,
        converged,
    })
}

/// Half-gradient of the objective relative to `|[X, 1]' y|` (or `|X'y|`
/// without an intercept).
fn gradient_norm_ratio(x: &SparseDesignMatrix, y: &[f64], cfg: &FitConfig, b0: f64, b: &[f64]) -> f64 {
    let mut yhat = vec![b0; x.n_rows()];
    x.mul_vec_add(b, &mut yhat);
    let r: Vec<f64> = y.iter().zip(&yhat).map(|(y, f)| y - f).collect();
    let mut g: Vec<f64> = b.iter().map(|bi| -cfg.lambda * bi).collect();
    let mut aty = vec![0.0; x.n_cols()];
    if cfg.fit_intercept {
        g.push(if cfg.penalize_intercept { -cfg.lambda * b0 } else { 0.0 });
        aty.push(0.0);
        let op = Augmented { x };
        op.apply_transpose_add(&r, &mut g);
        op.apply_transpose_add(y, &mut aty);
    } else {
        x.tr_mul_vec_add(&r, &mut g);
        x.tr_mul_vec_add(y, &mut aty);
    }
    let scale = aty.iter().map(|v| v * v).sum::<f64>().sqrt();
    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale > 0.0 {
        gn / scale
    } else {
        gn
    }
}

/// `y_hat_i = b0 + sum_j b_j X_ij`
pub fn predict(fit: &FitResult, x: &SparseDesignMatrix) -> Result<Vec<f64>, FitError> {
    if x.n_cols() != fit.coefficients.len() {
        return Err(FitError::ShapeMismatch(format!(
            "design has {} columns, fit has {} coefficients",
            x.n_cols(),
            fit.coefficients.len()
        )));
    }
    let mut out = vec![fit.intercept; x.n_rows()];
    x.mul_vec_add(&fit.coefficients, &mut out);
    Ok(out)
}

/// Coefficient of determination about the mean of `y`.
pub fn r2_score(y: &[f64], y_hat: &[f64]) -> Result<f64, FitError> {
    if y.len() != y_hat.len() || y.len() < 2 {
        return Err(FitError::ShapeMismatch(format!(
            "r2 needs two equal-length vectors of length >= 2, got {} and {}",
            y.len(),
            y_hat.len()
        )));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(FitError::DegenerateOutcome);
    }
    let sse: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - sse / sst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    /// `SSE / (n - rank)`; absent when `n <= rank`.
    pub sigma2_hat: Option<f64>,
    /// Diagonal of the (regularized) inverse Hessian, intercept last when
    /// the fit has one.
    pub v: Vec<f64>,
    pub s_v: f64,
    /// Numerical rank of the design (with its intercept column).
    pub rank: usize,
}

/// Per-coefficient variance factors from the dense inverse Hessian.
pub fn coefficient_variances(
    x: &SparseDesignMatrix,
    y: &[f64],
    fit: &FitResult,
    cap: usize,
) -> Result<VarianceReport, FitError> {
    check_outcomes(x, y)?;
    let yhat = predict(fit, x)?;
    let mut rows = x.augmented_gram(cap)?;
    if !fit.fit_intercept {
        rows.pop();
        rows.iter_mut().for_each(|r| {
            r.pop();
        });
    }
    let gram = DenseSymmetric::from_rows(&rows)?;
    let dim = gram.dim();
    let rank = eigen_spectrum(&gram, cap)?.rank();
    if fit.lambda == 0.0 && rank < dim {
        return Err(FitError::SingularHessian { rank, dim });
    }
    let mut shift = vec![fit.lambda; dim];
    if fit.fit_intercept && !fit.penalize_intercept {
        shift[dim - 1] = 0.0;
    }
    let v = gram.with_diagonal_added(&shift).inverse_diagonal().map_err(|e| match e {
        SpectraError::SingularMatrix => FitError::SingularHessian { rank, dim },
        other => other.into(),
    })?;
    let sse: f64 = y.iter().zip(&yhat).map(|(a, b)| (a - b).powi(2)).sum();
    let n = x.n_rows();
    Ok(VarianceReport {
        sigma2_hat: (n > rank).then(|| sse / (n - rank) as f64),
        s_v: v.iter().sum(),
        v,
        rank,
    })
}

/// Same as [`coefficient_variances`] with the default dense cap.
pub fn coefficient_variances_default(
    x: &SparseDesignMatrix,
    y: &[f64],
    fit: &FitResult,
) -> Result<VarianceReport, FitError> {
    coefficient_variances(x, y, fit, DEFAULT_DENSE_CAP)
}

/// `rho = sum s_i / (s_i + lambda)`
pub fn effective_dimension(eigenvalues: &[f64], lambda: f64) -> Result<f64, FitError> {
    if lambda < 0.0 || eigenvalues.iter().any(|&s| s < 0.0) {
        return Err(FitError::InvalidConfig("eigenvalues and lambda must be non-negative".into()));
    }
    if lambda == 0.0 {
        if eigenvalues.iter().any(|&s| s == 0.0) {
            return Err(FitError::DegenerateSpectrum);
        }
        return Ok(eigenvalues.len() as f64);
    }
    Ok(eigenvalues.iter().map(|s| s / (s + lambda)).sum())
}

/// Concavity bound `rho_B = (p + 1) s_bar / (s_bar + lambda / n)`, where
/// `s_bar` is the mean eigenvalue of the Hessian divided by `n`.
pub fn effective_dimension_bound(p_plus_1: usize, mean_eig: f64, lambda: f64, n_train: usize) -> f64 {
    p_plus_1 as f64 * mean_eig / (mean_eig + lambda / n_train as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: &[&[u32]]) -> SparseDesignMatrix {
        let p = rows[0].len();
        SparseDesignMatrix::from_rows(
            7,
            p,
            rows.iter()
                .map(|r| r.iter().enumerate().map(|(j, &v)| (j, v)).collect::<Vec<_>>()),
        )
        .unwrap()
    }

    #[test]
    fn single_column_exact() {
        let x = design(&[&[1], &[1]]);
        let no_intercept = FitConfig {
            fit_intercept: false,
            ..FitConfig::ols()
        };
        let f = fit(&x, &[3.0, 3.0], &no_intercept).unwrap();
        assert!((f.coefficients[0] - 3.0).abs() < 1e-12 && f.intercept == 0.0);
        let f = fit(&x, &[3.0, 3.0], &FitConfig::ols()).unwrap();
        // minimum norm splits 3 between the column and the intercept
        assert!((f.coefficients[0] - 1.5).abs() < 1e-10 && (f.intercept - 1.5).abs() < 1e-10);
        let yhat = predict(&f, &x).unwrap();
        assert!(yhat.iter().all(|v| (v - 3.0).abs() < 1e-10));
    }

    #[test]
    fn identity_design_interpolates() {
        let x = design(&[&[1, 0], &[0, 1]]);
        let y = [1.0, 2.0];
        let f = fit(&x, &y, &FitConfig::ols()).unwrap();
        assert!(f.converged);
        let yhat = predict(&f, &x).unwrap();
        assert!((r2_score(&y, &yhat).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predict_hand_case() {
        let x = design(&[&[2, 0], &[1, 1]]);
        let f = FitResult {
            intercept: 0.0,
            coefficients: vec![0.5, 1.0],
            lambda: 0.0,
            fit_intercept: true,
            penalize_intercept: true,
            iterations: 0,
            relative_residual: 0.0,
            tolerance: 1e-10,
            converged: true,
        };
        assert_eq!(predict(&f, &x).unwrap(), [1.0, 1.5]);
        let constant = FitResult {
            intercept: 2.5,
            coefficients: vec![0.0, 0.0],
            ..f.clone()
        };
        assert_eq!(predict(&constant, &x).unwrap(), [2.5, 2.5]);
        assert!(matches!(predict(&f, &design(&[&[1]])), Err(FitError::ShapeMismatch(_))));
    }

    #[test]
    fn r2_hand_cases() {
        let y = [0.0, 1.0, 2.0];
        assert_eq!(r2_score(&y, &y).unwrap(), 1.0);
        assert_eq!(r2_score(&y, &[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((r2_score(&y, &[0.0, 1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(r2_score(&[1.0, 1.0], &[1.0, 2.0]), Err(FitError::DegenerateOutcome)));
    }

    #[test]
    fn unpenalized_intercept_matches_centering() {
        let x = design(&[&[1, 0], &[1, 1], &[0, 1], &[1, 1], &[0, 0]]);
        let y = [1.0, 2.5, 1.0, 3.0, 0.5];
        let cfg = FitConfig {
            lambda: 2.0,
            penalize_intercept: false,
            ..FitConfig::default()
        };
        let f = fit(&x, &y, &cfg).unwrap();
        assert!(f.converged, "{f:?}");
        // residuals sum to zero when the intercept is free
        let yhat = predict(&f, &x).unwrap();
        let rsum: f64 = y.iter().zip(&yhat).map(|(a, b)| a - b).sum();
        assert!(rsum.abs() < 1e-9);
    }

    #[test]
    fn invalid_configs() {
        let x = design(&[&[1]]);
        for cfg in [
            FitConfig::ridge(-1.0),
            FitConfig {
                tolerance: 0.0,
                ..FitConfig::default()
            },
            FitConfig {
                max_iterations: Some(0),
                ..FitConfig::default()
            },
        ] {
            assert!(matches!(fit(&x, &[1.0], &cfg), Err(FitError::InvalidConfig(_))));
        }
        assert!(matches!(fit(&x, &[1.0, 2.0], &FitConfig::ols()), Err(FitError::ShapeMismatch(_))));
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let x = design(&[&[1, 0, 1], &[1, 1, 0], &[0, 1, 1], &[1, 1, 1], &[0, 0, 1], &[2, 0, 0]]);
        let y = [1.0, 2.0, 0.3, 4.0, 0.1, 1.7];
        let cfg = FitConfig {
            max_iterations: Some(1),
            ..FitConfig::default()
        };
        let f = fit(&x, &y, &cfg).unwrap();
        assert_eq!(f.iterations, 1);
        assert!(!f.converged && f.relative_residual > cfg.tolerance);
    }

    #[test]
    fn variances_orthonormal_and_diagonal() {
        // rows (1,0) and (0,1) with intercept give [[1,0,1],[0,1,1],[1,1,2]]:
        // use a design whose augmented Gram is diagonal instead
        let x = design(&[&[1], &[0]]);
        let y = [1.0, 0.0];
        let f = fit(&x, &y, &FitConfig::ols()).unwrap();
        let r = coefficient_variances(&x, &y, &f, 10).unwrap();
        // gram [[1,1],[1,2]], inverse [[2,-1],[-1,1]]
        assert!((r.v[0] - 2.0).abs() < 1e-12 && (r.v[1] - 1.0).abs() < 1e-12);
        assert!((r.s_v - 3.0).abs() < 1e-12);
        assert_eq!(r.rank, 2);
        assert_eq!(r.sigma2_hat, None);

        let singular = design(&[&[1], &[1]]);
        let f = fit(&singular, &[1.0, 2.0], &FitConfig::ols()).unwrap();
        assert!(matches!(
            coefficient_variances(&singular, &[1.0, 2.0], &f, 10),
            Err(FitError::SingularHessian { rank: 1, dim: 2 })
        ));
        assert!(matches!(
            coefficient_variances(&singular, &[1.0, 2.0], &f, 1),
            Err(FitError::CapExceeded { dim: 2, cap: 1 })
        ));
    }

    #[test]
    fn effective_dimension_cases() {
        assert_eq!(effective_dimension(&[1.0, 1.0], 1.0).unwrap(), 1.0);
        assert_eq!(effective_dimension(&[0.5, 3.0, 9.0], 0.0).unwrap(), 3.0);
        assert!(matches!(effective_dimension(&[1.0, 0.0], 0.0), Err(FitError::DegenerateSpectrum)));
        let mut last = f64::INFINITY;
        for lambda in [0.1, 1.0, 10.0, 1e3, 1e6, 1e12] {
            let rho = effective_dimension(&[0.5, 3.0, 9.0], lambda).unwrap();
            assert!(rho < last);
            last = rho;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn bound_cases() {
        assert_eq!(effective_dimension_bound(3, 2.0, 4.0, 2), 1.5);
        assert!((effective_dimension_bound(7, 0.3, 0.0, 100) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_csv() {
        let vocab = CodeVocabulary::from_codes(["A00", "B01"], 3).unwrap();
        let f = FitResult {
            intercept: 1.0,
            coefficients: vec![0.5, -2.0],
            lambda: 0.0,
            fit_intercept: true,
            penalize_intercept: true,
            iterations: 3,
            relative_residual: 0.0,
            tolerance: 1e-10,
            converged: true,
        };
        let mut buf = Vec::new();
        f.write_coefficients_csv(&vocab, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "code,beta\n__intercept__,1e0\nA00,5e-1\nB01,-2e0\n"
        );
    }
}
