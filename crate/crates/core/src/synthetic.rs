//! Seeded synthetic stay corpora with power-law code popularity, capped
//! codes per stay and a known linear process for the log10 cost.
//!
//! Code strings come from a random prefix tree whose level counts follow
//! the proportions of a real diagnosis vocabulary, so truncation merges
//! codes the way it would on real data. True coefficients are built from
//! one normal component per prefix level, which makes merged codes share
//! most of their effect.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{truncate, CodeVocabulary, MAX_CODE_LEN};
use crate::stays::{StayCorpus, StayRecord, MAX_CODES_PER_STAY};

/// Distinct truncations at levels 2..=7 of a full-size vocabulary; the
/// generator scales these to `n_codes`.
const LEVEL_COUNTS: [f64; 6] = [227.0, 1580.0, 6831.0, 11949.0, 16757.0, 19249.0];

/// Fraction of nodes at levels 3..=6 that stop and become codes.
const TERMINATE_SHARE: [f64; 4] = [0.1, 0.1, 0.2, 0.4];

/// Share of the coefficient variance carried by each prefix level 2..=7.
const LEVEL_VARIANCE_SHARE: [f64; 6] = [0.2, 0.3, 0.15, 0.15, 0.1, 0.1];

const LETTERS: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
const ALNUM: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";

/// Largest vocabulary the prefix tree can host at the default proportions.
pub const MAX_CODES: usize = 100_000;

// independent RNG streams per concern
const STREAM_TREE: u64 = 1;
const STREAM_WEIGHTS: u64 = 2;
const STREAM_BETA: u64 = 3;
const STREAM_STAYS: u64 = 4;
const STREAM_NOISE: u64 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SyntheticError {
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
}

fn config_error(field: &str, message: impl Into<String>) -> SyntheticError {
    SyntheticError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_stays: usize,
    /// Number of distinct full-length codes (p at level 7).
    pub n_codes: usize,
    /// Exponent of the code popularity power law.
    pub alpha: f64,
    pub d_mean: f64,
    pub d_max: usize,
    /// Standard deviation of the true code coefficients.
    pub beta_scale: f64,
    pub beta0: f64,
    pub noise_sigma: f64,
    /// Added to every true coefficient, so the expected log cost grows by
    /// this much per extra diagnosis.
    pub count_slope: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_stays: 50_000,
            n_codes: 2_000,
            alpha: 1.93,
            d_mean: 6.0,
            d_max: MAX_CODES_PER_STAY,
            beta_scale: 0.1,
            beta0: 3.8,
            noise_sigma: 0.2,
            count_slope: 0.02,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.n_stays == 0 {
            return Err(config_error("n_stays", "must be >= 1"));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(config_error("alpha", format!("must be > 1, got {}", self.alpha)));
        }
        if self.d_max == 0 || self.d_max > MAX_CODES_PER_STAY {
            return Err(config_error(
                "d_max",
                format!("must be in 1..={MAX_CODES_PER_STAY}, got {}", self.d_max),
            ));
        }
        if !(self.d_mean >= 1.0 && self.d_mean <= self.d_max as f64) {
            return Err(config_error(
                "d_mean",
                format!("must be in [1, {}], got {}", self.d_max, self.d_mean),
            ));
        }
        if self.n_codes < self.d_max || self.n_codes > MAX_CODES {
            return Err(config_error(
                "n_codes",
                format!("must be in {}..={MAX_CODES}, got {}", self.d_max, self.n_codes),
            ));
        }
        for (field, v) in [
            ("beta_scale", self.beta_scale),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(config_error(field, format!("must be >= 0, got {v}")));
            }
        }
        for (field, v) in [("beta0", self.beta0), ("count_slope", self.count_slope)] {
            if !v.is_finite() {
                return Err(config_error(field, "must be finite"));
            }
        }
        Ok(())
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SyntheticError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, SyntheticError> {
            value
                .trim()
                .parse()
                .map_err(|_| config_error(key, format!("cannot parse `{value}`")))
        }
        match key.trim() {
            "n_stays" => self.n_stays = parse(key, value)?,
            "n_codes" => self.n_codes = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "d_mean" => self.d_mean = parse(key, value)?,
            "d_max" => self.d_max = parse(key, value)?,
            "beta_scale" => self.beta_scale = parse(key, value)?,
            "beta0" => self.beta0 = parse(key, value)?,
            "noise_sigma" => self.noise_sigma = parse(key, value)?,
            "count_slope" => self.count_slope = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(config_error(other, "unknown field")),
        }
        Ok(())
    }

    /// All fields as `(key, value)` text pairs, in declaration order.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n_stays", self.n_stays.to_string()),
            ("n_codes", self.n_codes.to_string()),
            ("alpha", self.alpha.to_string()),
            ("d_mean", self.d_mean.to_string()),
            ("d_max", self.d_max.to_string()),
            ("beta_scale", self.beta_scale.to_string()),
            ("beta0", self.beta0.to_string()),
            ("noise_sigma", self.noise_sigma.to_string()),
            ("count_slope", self.count_slope.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub true_beta0: f64,
    /// Every generated code, sorted; some may never occur in the corpus.
    pub codes: Vec<String>,
    /// Aligned with `codes`, including `count_slope`.
    pub true_beta: Vec<f64>,
    /// Popularity weight of each code, aligned with `codes`.
    pub popularity: Vec<f64>,
    pub noise_sigma: f64,
    pub config: GeneratorConfig,
}

impl GroundTruth {
    /// True coefficients in the column order of a level-7 vocabulary.
    /// Codes missing from the ground truth map to `None`.
    pub fn beta_for(&self, vocab: &CodeVocabulary) -> Vec<Option<f64>> {
        vocab
            .codes()
            .iter()
            .map(|c| self.codes.binary_search(c).ok().map(|i| self.true_beta[i]))
            .collect()
    }

    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, self)
    }
}

fn scaled_level_counts(n_codes: usize) -> [usize; 6] {
    let full = LEVEL_COUNTS[5];
    let mut out = [0usize; 6];
    for (i, c) in LEVEL_COUNTS.iter().enumerate() {
        let v = (c / full * n_codes as f64).round() as usize;
        out[i] = if i == 0 {
            v.clamp(1, LETTERS.len() * 10)
        } else {
            v.max(out[i - 1])
        };
    }
    out[5] = n_codes;
    out
}

/// Gives each of `parents` at least one of `total` children, at most
/// `ALNUM.len()` each, spreading the rest uniformly.
fn spread_children(parents: usize, total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let cap = ALNUM.len();
    assert!(total >= parents && total <= parents * cap);
    let mut counts = vec![1usize; parents];
    let mut open: Vec<usize> = (0..parents).collect();
    for _ in parents..total {
        let k = rng.random_range(0..open.len());
        let p = open[k];
        counts[p] += 1;
        if counts[p] == cap {
            open.swap_remove(k);
        }
    }
    counts
}

fn children_of(parent: &str, count: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut picks = index::sample(rng, ALNUM.len(), count).into_vec();
    picks.sort_unstable();
    picks
        .into_iter()
        .map(|i| format!("{parent}{}", ALNUM[i] as char))
        .collect()
}

/// Sorted list of `n_codes` distinct codes of lengths 3..=7.
fn code_tree(n_codes: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let counts = scaled_level_counts(n_codes);
    let mut picks = index::sample(rng, LETTERS.len() * 10, counts[0]).into_vec();
    picks.sort_unstable();
    let mut level: Vec<String> = picks
        .into_iter()
        .map(|i| format!("{}{}", LETTERS[i / 10] as char, i % 10))
        .collect();

    // no code stops at length 2
    let per_parent = spread_children(level.len(), counts[1], rng);
    level = level
        .iter()
        .zip(per_parent)
        .flat_map(|(p, k)| children_of(p, k, rng))
        .collect();

    let mut codes = Vec::with_capacity(n_codes);
    for depth in 4..=MAX_CODE_LEN {
        // codes that stopped earlier keep their own column at this level
        let target = counts[depth - 2] - codes.len();
        let n_prev = level.len();
        let cap = ALNUM.len();
        let mut stop = (TERMINATE_SHARE[depth - 4] * n_prev as f64).round() as usize;
        stop = stop.min((cap * n_prev - target) / (cap - 1));
        if target > n_prev {
            stop = stop.min(n_prev - 1);
        }
        let mut order: Vec<usize> = (0..n_prev).collect();
        order.shuffle(rng);
        let mut stops = vec![false; n_prev];
        order[..stop].iter().for_each(|&i| stops[i] = true);
        let extending: Vec<&String> = level.iter().zip(&stops).filter(|(_, &s)| !s).map(|(c, _)| c).collect();
        let per_parent = spread_children(extending.len(), target - stop, rng);
        let mut next = Vec::with_capacity(target - stop);
        for (p, k) in extending.into_iter().zip(per_parent) {
            next.extend(children_of(p, k, rng));
        }
        codes.extend(level.iter().zip(&stops).filter(|(_, &s)| s).map(|(c, _)| c.clone()));
        level = next;
    }
    codes.extend(level);
    codes.sort();
    codes
}

/// Stratified Pareto quantiles `(1 - u)^(-1/(alpha - 1))` with one draw per
/// stratum of `u`, shuffled across codes. Much less noisy in the tail than
/// independent draws.
fn popularity_weights(p: usize, alpha: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..p)
        .map(|j| {
            let u = (j as f64 + rng.random::<f64>()) / p as f64;
            (1.0 - u).max(f64::MIN_POSITIVE).powf(-1.0 / (alpha - 1.0))
        })
        .collect();
    w.shuffle(rng);
    w
}

fn hierarchical_betas(codes: &[String], scale: f64, slope: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut components: Vec<BTreeMap<&str, f64>> = vec![BTreeMap::new(); LEVEL_VARIANCE_SHARE.len()];
    // draw in a fixed order: level, then sorted prefix
    for (li, share) in LEVEL_VARIANCE_SHARE.iter().enumerate() {
        let level = li + 2;
        let normal = Normal::new(0.0, scale * share.sqrt()).expect("finite std");
        let mut prefixes: Vec<&str> = codes.iter().map(|c| truncate(c, level)).collect();
        prefixes.dedup();
        for prefix in prefixes {
            components[li].insert(prefix, normal.sample(rng));
        }
    }
    codes
        .iter()
        .map(|c| {
            slope
                + components
                    .iter()
                    .enumerate()
                    .map(|(li, m)| m[truncate(c, li + 2)])
                    .sum::<f64>()
        })
        .collect()
}

/// Probabilities of `1..=d_max` under a geometric law truncated at `d_max`
/// with the given mean.
fn count_distribution(d_mean: f64, d_max: usize) -> Vec<f64> {
    let probs = |q: f64| -> Vec<f64> {
        let raw: Vec<f64> = (0..d_max).map(|k| q.powi(k as i32)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / s).collect()
    };
    let mean = |q: f64| -> f64 { probs(q).iter().enumerate().map(|(k, p)| (k + 1) as f64 * p).sum() };
    if d_mean <= 1.0 || d_max == 1 {
        let mut p = vec![0.0; d_max];
        p[0] = 1.0;
        return p;
    }
    if d_mean >= d_max as f64 {
        let mut p = vec![0.0; d_max];
        p[d_max - 1] = 1.0;
        return p;
    }
    // the mean is increasing in q; bracket then bisect
    let (mut lo, mut hi) = (0.0, 1.0);
    while mean(hi) < d_mean {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < d_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    probs(0.5 * (lo + hi))
}

/// `d` distinct indices drawn proportionally to `weights` without
/// replacement.
fn draw_distinct(
    d: usize,
    weights: &[f64],
    sampler: &WeightedIndex<f64>,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::with_capacity(d);
    let mut attempts = 0;
    while picked.len() < d && attempts < 200 * d {
        attempts += 1;
        let j = sampler.sample(rng);
        if !picked.contains(&j) {
            picked.push(j);
        }
    }
    if picked.len() < d {
        // very skewed weights: fall back to exact sequential draws
        let mut w = weights.to_vec();
        picked.iter().for_each(|&j| w[j] = 0.0);
        while picked.len() < d {
            let j = WeightedIndex::new(&w).expect("positive weights remain").sample(rng);
            w[j] = 0.0;
            picked.push(j);
        }
    }
    picked
}

fn generate_with(cfg: &GeneratorConfig, noise_sigma: f64) -> Result<(StayCorpus, GroundTruth), SyntheticError> {
    cfg.validate()?;
    let rng_for = |stream| {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
        r.set_stream(stream);
        r
    };
    let codes = code_tree(cfg.n_codes, &mut rng_for(STREAM_TREE));
    let weights = popularity_weights(codes.len(), cfg.alpha, &mut rng_for(STREAM_WEIGHTS));
    let true_beta = hierarchical_betas(&codes, cfg.beta_scale, cfg.count_slope, &mut rng_for(STREAM_BETA));

    let sampler = WeightedIndex::new(&weights).map_err(|e| config_error("alpha", e.to_string()))?;
    let count_sampler = WeightedIndex::new(count_distribution(cfg.d_mean, cfg.d_max))
        .map_err(|e| config_error("d_mean", e.to_string()))?;
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| config_error("noise_sigma", e.to_string()))?;
    let mut stays_rng = rng_for(STREAM_STAYS);
    let mut noise_rng = rng_for(STREAM_NOISE);
    let width = (cfg.n_stays.max(2) - 1).to_string().len();

    let mut records = Vec::with_capacity(cfg.n_stays);
    for i in 0..cfg.n_stays {
        let d = count_sampler.sample(&mut stays_rng) + 1;
        let mut picked = draw_distinct(d, &weights, &sampler, &mut stays_rng);
        picked.sort_unstable();
        let signal = cfg.beta0 + picked.iter().map(|&j| true_beta[j]).sum::<f64>();
        let log_cost = signal + noise.sample(&mut noise_rng);
        let raw: Vec<&str> = picked.iter().map(|&j| codes[j].as_str()).collect();
        let record = StayRecord::new(format!("s{i:0width$}"), 10f64.powf(log_cost), &raw)
            .map_err(|m| config_error("beta0", format!("generated cost is not representable: {m}")))?;
        records.push(record);
    }
    Ok((
        StayCorpus::new(records),
        GroundTruth {
            true_beta0: cfg.beta0,
            codes,
            true_beta,
            popularity: weights,
            noise_sigma,
            config: cfg.clone(),
        },
    ))
}

pub fn generate(cfg: &GeneratorConfig) -> Result<(StayCorpus, GroundTruth), SyntheticError> {
    generate_with(cfg, cfg.noise_sigma)
}

/// Population variance of the noiseless log cost of the corpus `cfg`
/// would generate.
pub fn signal_variance(cfg: &GeneratorConfig) -> Result<f64, SyntheticError> {
    let (corpus, _) = generate_with(cfg, 0.0)?;
    let y = corpus.outcomes();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    Ok(y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64)
}

/// Noise level giving population `R^2 = target_r2` on the corpus `cfg`
/// generates: `sigma^2 = var_signal (1 - R^2) / R^2`.
pub fn calibrate_noise(cfg: &GeneratorConfig, target_r2: f64) -> Result<f64, SyntheticError> {
    if !(target_r2 > 0.0 && target_r2 < 1.0) {
        return Err(config_error("target_r2", format!("must be in (0, 1), got {target_r2}")));
    }
    let (corpus, _) = generate_with(cfg, 0.0)?;
    let y = corpus.outcomes();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    // spread at the level of log/exp round-off is no signal
    let floor = (16.0 * f64::EPSILON * mean.abs().max(1.0)).powi(2);
    noise_for_variance(if var > floor { var } else { 0.0 }, target_r2)
}

/// The variance-ratio step of [`calibrate_noise`] for a known signal
/// variance.
pub fn noise_for_variance(signal_variance: f64, target_r2: f64) -> Result<f64, SyntheticError> {
    if !(target_r2 > 0.0 && target_r2 < 1.0) {
        return Err(config_error("target_r2", format!("must be in (0, 1), got {target_r2}")));
    }
    if !(signal_variance > 0.0) {
        return Err(config_error("beta_scale", "signal has no variance to calibrate against"));
    }
    Ok((signal_variance * (1.0 - target_r2) / target_r2).sqrt())
}
