//! Maximum-likelihood power-law exponents for heavy-tailed frequency data,
//! with optional Kolmogorov-Smirnov selection of the lower cutoff.

use serde::Serialize;

use super::SpectraError;

/// Smallest tail a KS scan will consider by default.
pub const DEFAULT_MIN_TAIL: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerLawEstimator {
    /// Integer data: `1 + n / sum ln(x / (x_min - 1/2))`.
    Discrete,
    /// Real data: `1 + n / sum ln(x / x_min)`.
    Continuous,
}

impl PowerLawEstimator {
    fn shift(self) -> f64 {
        match self {
            PowerLawEstimator::Discrete => 0.5,
            PowerLawEstimator::Continuous => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XminSelection {
    Fixed(f64),
    /// Try every distinct sample value leaving at least `min_tail` samples
    /// and keep the one whose fit has the smallest KS distance.
    KsScan { min_tail: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XminMethod {
    FixedXmin,
    KsScan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub alpha_hat: f64,
    pub x_min: f64,
    pub n_tail: usize,
    pub method: XminMethod,
    pub estimator: PowerLawEstimator,
    /// KS distance between the tail and the fitted law.
    pub ks_distance: f64,
}

pub fn fit_power_law(
    samples: &[f64],
    selection: XminSelection,
    estimator: PowerLawEstimator,
) -> Result<PowerLawFit, SpectraError> {
    let mut xs: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > estimator.shift())
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // suffix sums of ln x
    let mut suffix_ln = vec![0.0; xs.len() + 1];
    for i in (0..xs.len()).rev() {
        suffix_ln[i] = suffix_ln[i + 1] + xs[i].ln();
    }
    let fit_at = |start: usize, x_min: f64, method| -> Option<PowerLawFit> {
        let tail = &xs[start..];
        let n_tail = tail.len();
        let base = x_min - estimator.shift();
        if n_tail < 2 || base <= 0.0 {
            return None;
        }
        let denom = suffix_ln[start] - n_tail as f64 * base.ln();
        if denom <= 0.0 {
            return None;
        }
        let alpha_hat = 1.0 + n_tail as f64 / denom;
        Some(PowerLawFit {
            alpha_hat,
            x_min,
            n_tail,
            method,
            estimator,
            ks_distance: ks_distance(tail, alpha_hat, base, estimator.shift()),
        })
    };

    match selection {
        XminSelection::Fixed(x_min) => {
            let start = xs.partition_point(|&x| x < x_min);
            if xs.len() - start < 2 {
                return Err(SpectraError::InsufficientTail {
                    needed: 2,
                    found: xs.len() - start,
                });
            }
            fit_at(start, x_min, XminMethod::FixedXmin).ok_or(SpectraError::DegenerateTail)
        }
        XminSelection::KsScan { min_tail } => {
            let min_tail = min_tail.max(2);
            let mut best: Option<PowerLawFit> = None;
            let mut start = 0;
            while start < xs.len() && xs.len() - start >= min_tail {
                if let Some(fit) = fit_at(start, xs[start], XminMethod::KsScan) {
                    if best.as_ref().is_none_or(|b| fit.ks_distance < b.ks_distance) {
                        best = Some(fit);
                    }
                }
                let v = xs[start];
                start += xs[start..].partition_point(|&x| x == v);
            }
            best.ok_or(SpectraError::InsufficientTail {
                needed: min_tail,
                found: xs.len(),
            })
        }
    }
}

/// Largest gap between the empirical and fitted survival functions,
/// evaluated at each distinct tail value.
fn ks_distance(tail: &[f64], alpha: f64, base: f64, shift: f64) -> f64 {
    let n = tail.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < tail.len() {
        let v = tail[i];
        let empirical = (tail.len() - i) as f64 / n;
        let model = ((v - shift) / base).powf(1.0 - alpha);
        d = d.max((empirical - model).abs());
        i += tail[i..].partition_point(|&x| x == v);
    }
    d
}
