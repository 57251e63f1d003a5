//! Stay records: parsing, validation, persistence, summaries and splits.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CodeError, IcdCode};

/// Maximum number of diagnosis codes a stay may carry.
pub const MAX_CODES_PER_STAY: usize = 25;

#[derive(Debug, Error)]
pub enum StayError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("train ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("split of {n} stays at ratio {ratio} leaves an empty side")]
    DegenerateSplit { n: usize, ratio: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StayRecord {
    pub stay_id: String,
    pub cost: f64,
    pub log_cost: f64,
    /// De-duplicated, in first-seen order.
    pub codes: Vec<IcdCode>,
}

impl StayRecord {
    /// Validates and normalizes a raw record. Duplicate codes collapse.
    pub fn new<S: AsRef<str>>(stay_id: String, cost: f64, raw_codes: &[S]) -> Result<Self, String> {
        if !cost.is_finite() || cost <= 0.0 {
            return Err(format!("cost must be positive and finite, got {cost}"));
        }
        let mut codes: Vec<IcdCode> = Vec::with_capacity(raw_codes.len());
        for raw in raw_codes {
            let code = IcdCode::normalize(raw.as_ref()).map_err(|e: CodeError| e.to_string())?;
            if !codes.contains(&code) {
                codes.push(code);
            }
        }
        if codes.is_empty() {
            return Err("stay has no diagnosis codes".into());
        }
        if codes.len() > MAX_CODES_PER_STAY {
            return Err(format!(
                "stay has {} distinct codes, at most {MAX_CODES_PER_STAY} allowed",
                codes.len()
            ));
        }
        Ok(StayRecord {
            stay_id,
            cost,
            log_cost: cost.log10(),
            codes,
        })
    }

    /// Number of distinct diagnoses, D_i.
    pub fn diagnosis_count(&self) -> usize {
        self.codes.len()
    }
}

/// Immutable, load-ordered collection of stays.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StayCorpus {
    records: Vec<StayRecord>,
}

impl StayCorpus {
    pub fn new(records: Vec<StayRecord>) -> Self {
        StayCorpus { records }
    }

    pub fn records(&self) -> &[StayRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Log10 costs in load order.
    pub fn outcomes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.log_cost).collect()
    }

    /// Total diagnosis count, the sum of D_i.
    pub fn total_diagnoses(&self) -> usize {
        self.records.iter().map(StayRecord::diagnosis_count).sum()
    }

    /// Writes the JSONL interchange format.
    pub fn write_jsonl(&self, path: &Path) -> Result<(), StayError> {
        let mut out = BufWriter::new(File::create(path)?);
        for r in &self.records {
            let line = serde_json::json!({
                "stay_id": r.stay_id,
                "cost": r.cost,
                "codes": r.codes,
            });
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes the CSV interchange format, codes joined by `;`.
    pub fn write_csv(&self, path: &Path) -> Result<(), StayError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["stay_id", "cost", "codes"])?;
        for r in &self.records {
            let codes: Vec<&str> = r.codes.iter().map(IcdCode::as_str).collect();
            w.write_record([r.stay_id.clone(), r.cost.to_string(), codes.join(";")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

/// What to do with a record that parses but fails validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InvalidRecordPolicy {
    #[default]
    Reject,
    Skip,
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: StayCorpus,
    /// Records dropped under [`InvalidRecordPolicy::Skip`].
    pub skipped: usize,
}

#[derive(Deserialize)]
struct RawJsonStay {
    stay_id: Option<String>,
    cost: f64,
    codes: Vec<String>,
}

#[derive(Deserialize)]
struct RawCsvStay {
    stay_id: Option<String>,
    cost: f64,
    codes: String,
}

pub fn load_corpus(
    path: &Path,
    format: CorpusFormat,
    policy: InvalidRecordPolicy,
) -> Result<LoadedCorpus, StayError> {
    let file = File::open(path)?;
    match format {
        CorpusFormat::Jsonl => read_jsonl(BufReader::new(file), policy),
        CorpusFormat::Csv => read_csv(file, policy),
    }
}

fn accept(
    line: usize,
    result: Result<StayRecord, String>,
    policy: InvalidRecordPolicy,
    records: &mut Vec<StayRecord>,
    skipped: &mut usize,
) -> Result<(), StayError> {
    match (result, policy) {
        (Ok(r), _) => records.push(r),
        (Err(_), InvalidRecordPolicy::Skip) => *skipped += 1,
        (Err(message), InvalidRecordPolicy::Reject) => {
            return Err(StayError::Validation { line, message })
        }
    }
    Ok(())
}

fn finish(records: Vec<StayRecord>, skipped: usize) -> Result<LoadedCorpus, StayError> {
    if records.is_empty() {
        return Err(StayError::EmptyCorpus);
    }
    Ok(LoadedCorpus {
        corpus: StayCorpus::new(records),
        skipped,
    })
}

pub fn read_jsonl<R: BufRead>(reader: R, policy: InvalidRecordPolicy) -> Result<LoadedCorpus, StayError> {
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawJsonStay = serde_json::from_str(&line).map_err(|e| StayError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let id = raw.stay_id.unwrap_or_else(|| format!("line{line_no}"));
        let result = StayRecord::new(id, raw.cost, &raw.codes);
        accept(line_no, result, policy, &mut records, &mut skipped)?;
    }
    finish(records, skipped)
}

pub fn read_csv<R: std::io::Read>(reader: R, policy: InvalidRecordPolicy) -> Result<LoadedCorpus, StayError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, row) in rdr.deserialize::<RawCsvStay>().enumerate() {
        let raw = row.map_err(|e| StayError::Parse {
            line: e.position().map_or(i + 2, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        // header is line 1
        let line_no = i + 2;
        let codes: Vec<&str> = raw
            .codes
            .split(';')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .collect();
        let id = raw
            .stay_id
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("line{line_no}"));
        let result = StayRecord::new(id, raw.cost, &codes);
        accept(line_no, result, policy, &mut records, &mut skipped)?;
    }
    finish(records, skipped)
}

/// One row of the codes-per-stay table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountBucket {
    pub codes_per_stay: usize,
    pub stays: usize,
    pub mean_cost: f64,
    pub mean_log_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub n: usize,
    /// Only non-empty buckets, ascending in code count.
    pub buckets: Vec<CountBucket>,
    pub mean_log_cost: f64,
    pub std_log_cost: f64,
}

/// Cost by number of attached diagnoses, plus overall log-cost moments.
pub fn summarize(corpus: &StayCorpus) -> CorpusSummary {
    let mut acc: BTreeMap<usize, (usize, f64, f64)> = BTreeMap::new();
    for r in corpus.records() {
        let e = acc.entry(r.diagnosis_count()).or_default();
        e.0 += 1;
        e.1 += r.cost;
        e.2 += r.log_cost;
    }
    let buckets = acc
        .into_iter()
        .map(|(k, (count, cost, log_cost))| CountBucket {
            codes_per_stay: k,
            stays: count,
            mean_cost: cost / count as f64,
            mean_log_cost: log_cost / count as f64,
        })
        .collect();
    let n = corpus.len();
    let y = corpus.outcomes();
    let mean = y.iter().sum::<f64>() / n.max(1) as f64;
    // population standard deviation
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64;
    CorpusSummary {
        n,
        buckets,
        mean_log_cost: mean,
        std_log_cost: var.sqrt(),
    }
}

/// Disjoint sorted train/test row indices covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle without replacement; `round(ratio * n)` rows go to train,
/// clamped so that both sides keep at least one row.
pub fn split(n: usize, train_ratio: f64, seed: u64) -> Result<Split, StayError> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(StayError::InvalidRatio(train_ratio));
    }
    if n < 2 {
        return Err(StayError::DegenerateSplit {
            n,
            ratio: train_ratio,
        });
    }
    let n_train = ((train_ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
