//! The vocabulary projection layer: one weight row and one bias per word.
//!
//! Weights are held at 32-bit precision. Every reduction over them (norms,
//! dot products) is accumulated at 64-bit.

mod frequency;
mod io;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub use frequency::{load_frequencies, parse_frequencies, save_frequencies, FrequencyTable};
pub use io::{load_projection, read_binary, read_text, save_projection, write_binary, write_text, ProjectionFormat};

/// Position of a word in the projection file. All modules past the
/// projection store address words by id only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordId(pub u32);

impl WordId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for WordId {
    fn from(i: usize) -> Self {
        WordId(i as u32)
    }
}

impl fmt::Display for WordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VocabularyProjection {
    tokens: Vec<String>,
    token_ids: HashMap<String, WordId>,
    weights: Vec<f32>,
    biases: Vec<f32>,
    dim: usize,
    has_bias: bool,
}

impl VocabularyProjection {
    /// Builds a projection from row-major weights. A missing bias vector is
    /// zero-filled.
    pub fn new(tokens: Vec<String>, weights: Vec<f32>, biases: Option<Vec<f32>>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidProjection("dimension must be at least 1".into()));
        }
        if tokens.is_empty() {
            return Err(Error::InvalidProjection("vocabulary is empty".into()));
        }
        let n = tokens.len();
        if weights.len() != n * dim {
            return Err(Error::InvalidProjection(format!(
                "expected {} weights for {n} words of dimension {dim}, got {}",
                n * dim,
                weights.len()
            )));
        }
        if let Some(pos) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidProjection(format!(
                "non-finite weight for word {} at column {}",
                pos / dim,
                pos % dim
            )));
        }
        let has_bias = biases.is_some();
        let biases = biases.unwrap_or_else(|| vec![0.0; n]);
        if biases.len() != n {
            return Err(Error::InvalidProjection(format!("expected {n} biases, got {}", biases.len())));
        }
        if let Some(pos) = biases.iter().position(|b| !b.is_finite()) {
            return Err(Error::InvalidProjection(format!("non-finite bias for word {pos}")));
        }

        let mut token_ids = HashMap::with_capacity(n);
        for (i, token) in tokens.iter().enumerate() {
            if token.is_empty() || token.chars().any(char::is_whitespace) {
                return Err(Error::InvalidProjection(format!("word {i} has an empty or whitespace-containing token")));
            }
            if token_ids.insert(token.clone(), WordId::from(i)).is_some() {
                return Err(Error::InvalidProjection(format!("duplicate token `{token}`")));
            }
        }

        Ok(VocabularyProjection { tokens, token_ids, weights, biases, dim, has_bias })
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether the source carried an explicit bias column.
    pub fn has_bias(&self) -> bool {
        self.has_bias
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: WordId) -> &str {
        &self.tokens[id.index()]
    }

    pub fn id_of(&self, token: &str) -> Option<WordId> {
        self.token_ids.get(token).copied()
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn biases(&self) -> &[f32] {
        &self.biases
    }

    pub fn row(&self, id: WordId) -> &[f32] {
        let start = id.index() * self.dim;
        &self.weights[start..start + self.dim]
    }

    pub fn bias(&self, id: WordId) -> f32 {
        self.biases[id.index()]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.weights.chunks_exact(self.dim)
    }

    /// `‖[w_i; b_i]‖²` accumulated at 64-bit.
    pub fn augmented_norm_sq(&self, id: WordId) -> f64 {
        let b = self.bias(id) as f64;
        self.row(id).iter().map(|&w| (w as f64) * (w as f64)).sum::<f64>() + b * b
    }

    /// Direct logit `w_iᵀh + b_i`, accumulated at 64-bit.
    pub fn logit(&self, id: WordId, h: &[f64]) -> f64 {
        debug_assert_eq!(h.len(), self.dim);
        self.row(id).iter().zip(h).map(|(&w, &x)| w as f64 * x).sum::<f64>() + self.bias(id) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn zero_fills_missing_bias() {
        let p = VocabularyProjection::new(toks(&["a", "b"]), vec![1.0, 2.0], None, 1).unwrap();
        assert!(!p.has_bias());
        assert_eq!(p.biases(), &[0.0, 0.0]);
        assert_eq!(p.id_of("b"), Some(WordId(1)));
        assert_eq!(p.logit(WordId(1), &[3.0]), 6.0);
    }

    #[test]
    fn rejects_duplicates_and_non_finite() {
        let dup = VocabularyProjection::new(toks(&["a", "a"]), vec![1.0, 2.0], None, 1);
        assert!(matches!(dup, Err(Error::InvalidProjection(m)) if m.contains("duplicate")));

        let nan = VocabularyProjection::new(toks(&["a", "b"]), vec![1.0, f32::NAN], None, 1);
        assert!(nan.is_err());

        let inf_bias = VocabularyProjection::new(toks(&["a"]), vec![1.0], Some(vec![f32::INFINITY]), 1);
        assert!(inf_bias.is_err());
    }

    #[test]
    fn rejects_shape_errors() {
        assert!(VocabularyProjection::new(toks(&["a"]), vec![1.0, 2.0], None, 1).is_err());
        assert!(VocabularyProjection::new(vec![], vec![], None, 1).is_err());
        assert!(VocabularyProjection::new(toks(&["a"]), vec![], None, 0).is_err());
    }
}
