//! Diagnosis code normalization, prefix truncation and merge maps between
//! granularity levels.
//!
//! A granularity level `l` keeps at most the first `l` characters of every
//! code. Lowering the level pools all codes sharing a prefix into one column;
//! [`MergeMap`] records that pooling as a column assignment.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stays::StayCorpus;

/// Shortest code length accepted after normalization.
pub const MIN_CODE_LEN: usize = 3;
/// Longest code length accepted after normalization (full ICD-10-CM).
pub const MAX_CODE_LEN: usize = 7;
/// Coarsest granularity level supported by truncation.
pub const MIN_LEVEL: usize = 2;
/// Finest granularity level; nothing is truncated.
pub const MAX_LEVEL: usize = MAX_CODE_LEN;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid diagnosis code {raw:?}: {reason}")]
    InvalidCode { raw: String, reason: &'static str },
    #[error("granularity level {0} outside [{MIN_LEVEL}, {MAX_LEVEL}]")]
    InvalidLevel(usize),
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("merge target level {coarse} must be below the source level {fine}")]
    LevelOrder { fine: usize, coarse: usize },
}

/// A normalized diagnosis code: 3 to 7 upper-case alphanumerics, leading
/// letter, no dot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IcdCode(String);

impl IcdCode {
    /// Upper-cases `raw`, strips dots and validates the result.
    pub fn normalize(raw: &str) -> Result<Self, CodeError> {
        let invalid = |reason| CodeError::InvalidCode {
            raw: raw.to_string(),
            reason,
        };
        let text: String = raw
            .trim()
            .chars()
            .filter(|&c| c != '.')
            .map(|c| c.to_ascii_uppercase())
            .collect();
        if text.is_empty() {
            return Err(invalid("empty"));
        }
        if !text.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
            return Err(invalid("illegal character"));
        }
        if !(MIN_CODE_LEN..=MAX_CODE_LEN).contains(&text.len()) {
            return Err(invalid("length outside [3, 7]"));
        }
        if !text.as_bytes()[0].is_ascii_uppercase() {
            return Err(invalid("first character must be a letter"));
        }
        Ok(IcdCode(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for IcdCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for IcdCode {
    type Error = CodeError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        IcdCode::normalize(&value)
    }
}

impl From<IcdCode> for String {
    fn from(code: IcdCode) -> Self {
        code.0
    }
}

/// Shorthand for [`IcdCode::normalize`].
pub fn normalize_code(raw: &str) -> Result<IcdCode, CodeError> {
    IcdCode::normalize(raw)
}

pub fn check_level(level: usize) -> Result<(), CodeError> {
    if (MIN_LEVEL..=MAX_LEVEL).contains(&level) {
        Ok(())
    } else {
        Err(CodeError::InvalidLevel(level))
    }
}

/// First `level` characters of `code`, or all of it when it is shorter.
///
/// Accepts already-truncated prefixes too, which is what makes truncation
/// composable across levels.
pub fn truncate(code: &str, level: usize) -> &str {
    debug_assert!((MIN_LEVEL..=MAX_LEVEL).contains(&level));
    // codes are ASCII, so byte slicing is character slicing
    &code[..code.len().min(level)]
}

/// Column index of a granularity level: the sorted distinct code prefixes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeVocabulary {
    level: usize,
    codes: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl CodeVocabulary {
    /// Builds a vocabulary from arbitrary code prefixes, truncating each to
    /// `level`. Duplicates collapse; order is lexicographic.
    pub fn from_codes<I, S>(codes: I, level: usize) -> Result<Self, CodeError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        check_level(level)?;
        let set: BTreeSet<String> = codes
            .into_iter()
            .map(|c| truncate(c.as_ref(), level).to_string())
            .collect();
        Ok(Self::from_sorted(set.into_iter().collect(), level))
    }

    fn from_sorted(codes: Vec<String>, level: usize) -> Self {
        let index = codes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        CodeVocabulary {
            level,
            codes,
            index,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Number of columns, p at this level.
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn code(&self, column: usize) -> &str {
        &self.codes[column]
    }

    /// Column of an already-truncated prefix.
    pub fn column(&self, prefix: &str) -> Option<usize> {
        self.index.get(prefix).copied()
    }

    /// Column of a full code after truncating it to this level.
    pub fn column_of(&self, code: &str) -> Option<usize> {
        self.column(truncate(code, self.level))
    }

    /// Restores the lookup table after deserialization.
    pub fn reindex(self) -> Self {
        Self::from_sorted(self.codes, self.level)
    }
}

/// Distinct truncated codes of every stay in `corpus`.
pub fn build_vocabulary(corpus: &StayCorpus, level: usize) -> Result<CodeVocabulary, CodeError> {
    check_level(level)?;
    if corpus.is_empty() {
        return Err(CodeError::EmptyCorpus);
    }
    CodeVocabulary::from_codes(
        corpus
            .records()
            .iter()
            .flat_map(|r| r.codes.iter().map(IcdCode::as_str)),
        level,
    )
}

/// Assignment of fine columns to coarse columns, the 0/1 matrix Q with one
/// nonzero per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeMap {
    from_level: usize,
    to_level: usize,
    assignments: Vec<usize>,
    coarse: CodeVocabulary,
}

impl MergeMap {
    pub fn from_level(&self) -> usize {
        self.from_level
    }

    pub fn to_level(&self) -> usize {
        self.to_level
    }

    /// `assignments()[j]` is the coarse column receiving fine column `j`.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn source_dim(&self) -> usize {
        self.assignments.len()
    }

    pub fn target_dim(&self) -> usize {
        self.coarse.len()
    }

    pub fn coarse_vocabulary(&self) -> &CodeVocabulary {
        &self.coarse
    }

    /// Number of fine columns pooled into each coarse column.
    pub fn column_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.target_dim()];
        for &t in &self.assignments {
            sums[t] += 1;
        }
        sums
    }

    /// Fine columns grouped by target, in ascending order within a group.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.target_dim()];
        for (j, &t) in self.assignments.iter().enumerate() {
            groups[t].push(j);
        }
        groups
    }

    /// Whether no two fine columns share a target.
    pub fn is_identity(&self) -> bool {
        self.source_dim() == self.target_dim()
    }

    /// Dense p_fine x p_coarse 0/1 matrix, row major.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.assignments
            .iter()
            .map(|&t| {
                let mut row = vec![0u8; self.target_dim()];
                row[t] = 1;
                row
            })
            .collect()
    }

    /// `self` followed by `next`: the map from this source level straight to
    /// `next`'s target level.
    pub fn compose(&self, next: &MergeMap) -> Option<MergeMap> {
        if next.from_level != self.to_level || next.source_dim() != self.target_dim() {
            return None;
        }
        Some(MergeMap {
            from_level: self.from_level,
            to_level: next.to_level,
            assignments: self
                .assignments
                .iter()
                .map(|&t| next.assignments[t])
                .collect(),
            coarse: next.coarse.clone(),
        })
    }

    /// Row sums of one, no empty target column.
    pub fn check_invariants(&self) -> bool {
        self.assignments.iter().all(|&t| t < self.target_dim())
            && self.column_sums().iter().all(|&s| s >= 1)
    }
}

/// Merge map from `fine`'s level down to `coarse_level`.
pub fn build_merge_map(fine: &CodeVocabulary, coarse_level: usize) -> Result<MergeMap, CodeError> {
    check_level(coarse_level)?;
    if coarse_level >= fine.level() {
        return Err(CodeError::LevelOrder {
            fine: fine.level(),
            coarse: coarse_level,
        });
    }
    let coarse = CodeVocabulary::from_codes(fine.codes(), coarse_level)?;
    let assignments = fine
        .codes()
        .iter()
        .map(|c| {
            coarse
                .column_of(c)
                .expect("coarse vocabulary holds every truncated fine code")
        })
        .collect();
    Ok(MergeMap {
        from_level: fine.level(),
        to_level: coarse_level,
        assignments,
        coarse,
    })
}
