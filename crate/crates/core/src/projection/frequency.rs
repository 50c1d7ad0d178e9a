//! Word-frequency prior aligned to projection order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{VocabularyProjection, WordId};
use crate::error::{Error, Location, Result};

/// Raw counts plus their normalization `f_i = counts_i / Σ counts`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    counts: Vec<f64>,
    normalized: Vec<f64>,
    total: f64,
    min_normalized: f64,
}

impl FrequencyTable {
    pub fn from_counts(counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidFrequencies("no entries".into()));
        }
        if let Some(i) = counts.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidFrequencies(format!("count for word {i} is negative or non-finite")));
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidFrequencies("all counts are zero".into()));
        }
        let normalized: Vec<f64> = counts.iter().map(|c| c / total).collect();
        let min_normalized = normalized.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(FrequencyTable { counts, normalized, total, min_normalized })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// The normalized prior `f`.
    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn count(&self, id: WordId) -> f64 {
        self.counts[id.index()]
    }

    pub fn freq(&self, id: WordId) -> f64 {
        self.normalized[id.index()]
    }

    /// True when every `f_i > 0`.
    pub fn is_strictly_positive(&self) -> bool {
        self.min_normalized > 0.0
    }
}

/// Reads `<token> <count>` lines. Tokens missing from the file, or listed
/// with a zero count, receive `floor`.
pub fn load_frequencies(
    path: impl AsRef<Path>,
    projection: &VocabularyProjection,
    floor: f64,
) -> Result<FrequencyTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_frequencies(&text, projection, floor)
}

pub fn parse_frequencies(text: &str, projection: &VocabularyProjection, floor: f64) -> Result<FrequencyTable> {
    if !floor.is_finite() || floor < 0.0 {
        return Err(Error::InvalidFrequencies(format!("floor {floor} must be finite and non-negative")));
    }
    let mut counts = vec![0.0f64; projection.vocab_size()];
    let mut seen: HashMap<WordId, usize> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [token, count] = fields[..] else {
            return Err(Error::parse(Location::Line(line_no), "expected `<token> <count>`"));
        };
        let id = projection
            .id_of(token)
            .ok_or_else(|| Error::parse(Location::Line(line_no), format!("unknown token `{token}`")))?;
        let value: f64 =
            count.parse().map_err(|_| Error::parse(Location::Line(line_no), format!("invalid count `{count}`")))?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::parse(
                Location::Line(line_no),
                format!("count `{count}` must be finite and non-negative"),
            ));
        }
        if let Some(first) = seen.insert(id, line_no) {
            return Err(Error::parse(
                Location::Line(line_no),
                format!("duplicate token `{token}` (first seen at line {first})"),
            ));
        }
        counts[id.index()] = value;
    }
    for c in counts.iter_mut().filter(|c| **c == 0.0) {
        *c = floor;
    }
    FrequencyTable::from_counts(counts)
}

pub fn save_frequencies(
    table: &FrequencyTable,
    projection: &VocabularyProjection,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if table.len() != projection.vocab_size() {
        return Err(Error::DimensionMismatch { expected: projection.vocab_size(), got: table.len() });
    }
    let mut out = String::new();
    for (token, count) in projection.tokens().iter().zip(table.counts()) {
        let _ = writeln!(out, "{token} {count}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
