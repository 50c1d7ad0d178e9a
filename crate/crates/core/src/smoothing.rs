//! Spreading probability onto words the search never visited.
//!
//! Three rules, all producing a distribution over the whole vocabulary
//! while storing only the retrieved set plus a closed-form tail:
//!
//! * consistent: `ỹ_i = (y_i + ε g_i) / (1 + ε)`, where `g` is the frequency
//!   prior conditioned on the words outside the retrieved set and
//!   `0 < ε < min y`. Positivity, order within the retrieved set, and
//!   dominance of the retrieved set over the tail all hold.
//! * laplacian: `ỹ_i = (y_i + ε f_i) / (1 + ε)` over a dense `y`. It can
//!   let a frequent tail word overtake a retrieved one.
//! * winners take all: every tail word gets a fixed `ε`, the retrieved set
//!   is rescaled to absorb the rest.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::projection::{FrequencyTable, WordId};

/// Tolerance on `Σ y = 1` for incoming distributions.
const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingMode {
    Consistent,
    Laplacian,
    WinnersTakeAll,
}

impl fmt::Display for SmoothingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SmoothingMode::Consistent => "consistent",
            SmoothingMode::Laplacian => "laplacian",
            SmoothingMode::WinnersTakeAll => "wta",
        })
    }
}

impl FromStr for SmoothingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "consistent" => Ok(SmoothingMode::Consistent),
            "laplacian" => Ok(SmoothingMode::Laplacian),
            "wta" | "winners-take-all" => Ok(SmoothingMode::WinnersTakeAll),
            other => Err(format!("unknown smoothing mode `{other}`")),
        }
    }
}

/// How ε is chosen; see [`smooth_topk`] for the per-mode meaning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Fixed(f64),
    /// `ε = c · min y` for `c ∈ (0, 1)`.
    FractionOfMin(f64),
}

impl Default for Epsilon {
    fn default() -> Self {
        Epsilon::FractionOfMin(0.5)
    }
}

/// Probability of a word outside the retrieved set, in O(1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailRule<'f> {
    /// The retrieved set is the whole vocabulary.
    Empty,
    Constant(f64),
    /// `ỹ_j = scale · counts_j`.
    ScaledCounts {
        freq: &'f FrequencyTable,
        scale: f64,
    },
}

#[derive(Debug, Clone)]
pub struct SmoothedDistribution<'f> {
    vocab_size: usize,
    topk_ids: Vec<WordId>,
    topk_probs: Vec<f64>,
    position: HashMap<WordId, usize>,
    tail: TailRule<'f>,
    epsilon: f64,
    mode: SmoothingMode,
}

impl<'f> SmoothedDistribution<'f> {
    fn new(
        vocab_size: usize,
        topk_ids: Vec<WordId>,
        topk_probs: Vec<f64>,
        tail: TailRule<'f>,
        epsilon: f64,
        mode: SmoothingMode,
    ) -> Self {
        let position = topk_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        SmoothedDistribution { vocab_size, topk_ids, topk_probs, position, tail, epsilon, mode }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn topk_ids(&self) -> &[WordId] {
        &self.topk_ids
    }

    pub fn topk_probs(&self) -> &[f64] {
        &self.topk_probs
    }

    pub fn tail_rule(&self) -> &TailRule<'f> {
        &self.tail
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mode(&self) -> SmoothingMode {
        self.mode
    }

    pub fn tail_prob(&self, id: WordId) -> f64 {
        match self.tail {
            TailRule::Empty => 0.0,
            TailRule::Constant(p) => p,
            TailRule::ScaledCounts { freq, scale } => scale * freq.count(id),
        }
    }

    pub fn prob(&self, id: WordId) -> f64 {
        match self.position.get(&id) {
            Some(&i) => self.topk_probs[i],
            None => self.tail_prob(id),
        }
    }

    /// Total tail probability, from the closed form.
    pub fn tail_mass(&self) -> f64 {
        1.0 - self.topk_probs.iter().sum::<f64>()
    }

    /// Dense length-|V| vector.
    pub fn materialize(&self) -> Vec<f64> {
        let mut dense: Vec<f64> = (0..self.vocab_size).map(|i| self.tail_prob(WordId::from(i))).collect();
        for (&id, &p) in self.topk_ids.iter().zip(&self.topk_probs) {
            dense[id.index()] = p;
        }
        dense
    }
}

fn check_topk(ids: &[WordId], y: &[f64], vocab_size: usize) -> Result<()> {
    if ids.len() != y.len() {
        return Err(Error::InvalidDistribution(format!("{} ids but {} probabilities", ids.len(), y.len())));
    }
    if ids.is_empty() {
        return Err(Error::InvalidDistribution("empty top-K set".into()));
    }
    let mut seen = HashSet::with_capacity(ids.len());
    for &id in ids {
        if id.index() >= vocab_size {
            return Err(Error::IdOutOfRange { id: id.index(), n: vocab_size });
        }
        if !seen.insert(id) {
            return Err(Error::InvalidDistribution(format!("word {id} appears twice")));
        }
    }
    check_normalized(y)
}

fn check_normalized(y: &[f64]) -> Result<()> {
    if let Some(i) = y.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {i} is negative or non-finite")));
    }
    let total: f64 = y.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Rank-consistent smoothing of a top-K distribution.
pub fn smooth_consistent<'f>(
    ids: &[WordId],
    y: &[f64],
    freq: &'f FrequencyTable,
    epsilon: Epsilon,
) -> Result<SmoothedDistribution<'f>> {
    let vocab_size = freq.len();
    check_topk(ids, y, vocab_size)?;
    if let Some(i) = y.iter().position(|&p| p <= 0.0) {
        return Err(Error::InvalidDistribution(format!("top-K probability {i} is not positive")));
    }
    if !freq.is_strictly_positive() {
        return Err(Error::InvalidFrequencies("every frequency must be positive".into()));
    }

    let min_y = y.iter().copied().fold(f64::INFINITY, f64::min);
    let eps = match epsilon {
        Epsilon::Fixed(e) => e,
        Epsilon::FractionOfMin(c) => {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::EpsilonBound { epsilon: c, bound: 1.0 });
            }
            c * min_y
        }
    };
    if !(eps > 0.0 && eps < min_y) {
        return Err(Error::EpsilonBound { epsilon: eps, bound: min_y });
    }

    if ids.len() == vocab_size {
        return Ok(SmoothedDistribution::new(
            vocab_size,
            ids.to_vec(),
            y.to_vec(),
            TailRule::Empty,
            0.0,
            SmoothingMode::Consistent,
        ));
    }

    let total = freq.total();
    let mut tail_count = total - ids.iter().map(|&id| freq.count(id)).sum::<f64>();
    if tail_count < 1e-6 * total {
        // Too much cancellation; sum the complement directly.
        let in_topk: HashSet<WordId> = ids.iter().copied().collect();
        tail_count =
            (0..vocab_size).map(WordId::from).filter(|id| !in_topk.contains(id)).map(|id| freq.count(id)).sum();
    }
    let topk_probs = y.iter().map(|&p| p / (1.0 + eps)).collect();
    let scale = eps / ((1.0 + eps) * tail_count);
    Ok(SmoothedDistribution::new(
        vocab_size,
        ids.to_vec(),
        topk_probs,
        TailRule::ScaledCounts { freq, scale },
        eps,
        SmoothingMode::Consistent,
    ))
}

/// Laplacian smoothing of a dense distribution (zeros allowed). The
/// retrieved set of the result is the support of `y`.
pub fn smooth_laplacian<'f>(y: &[f64], freq: &'f FrequencyTable, epsilon: f64) -> Result<SmoothedDistribution<'f>> {
    let vocab_size = freq.len();
    if y.len() != vocab_size {
        return Err(Error::DimensionMismatch { expected: vocab_size, got: y.len() });
    }
    check_normalized(y)?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::EpsilonBound { epsilon, bound: f64::INFINITY });
    }
    let (ids, probs): (Vec<WordId>, Vec<f64>) = y
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| {
            let id = WordId::from(i);
            (id, (p + epsilon * freq.freq(id)) / (1.0 + epsilon))
        })
        .unzip();
    let tail = if ids.len() == vocab_size {
        TailRule::Empty
    } else {
        TailRule::ScaledCounts { freq, scale: epsilon / ((1.0 + epsilon) * freq.total()) }
    };
    Ok(SmoothedDistribution::new(vocab_size, ids, probs, tail, epsilon, SmoothingMode::Laplacian))
}

/// Every unretrieved word gets `epsilon_tail`; the retrieved set is scaled
/// by `1 − epsilon_tail · (|V| − K)`.
pub fn smooth_winners_take_all(
    ids: &[WordId],
    y: &[f64],
    vocab_size: usize,
    epsilon_tail: f64,
) -> Result<SmoothedDistribution<'static>> {
    check_topk(ids, y, vocab_size)?;
    let tail_len = vocab_size - ids.len();
    if tail_len == 0 {
        return Ok(SmoothedDistribution::new(
            vocab_size,
            ids.to_vec(),
            y.to_vec(),
            TailRule::Empty,
            0.0,
            SmoothingMode::WinnersTakeAll,
        ));
    }
    let tail_mass = epsilon_tail * tail_len as f64;
    if !(epsilon_tail > 0.0 && tail_mass < 1.0) {
        return Err(Error::EpsilonBound { epsilon: epsilon_tail, bound: 1.0 / tail_len as f64 });
    }
    let keep = 1.0 - tail_mass;
    Ok(SmoothedDistribution::new(
        vocab_size,
        ids.to_vec(),
        y.iter().map(|&p| p * keep).collect(),
        TailRule::Constant(epsilon_tail),
        epsilon_tail,
        SmoothingMode::WinnersTakeAll,
    ))
}

/// Applies `mode` to a top-K result, resolving `epsilon` per mode.
///
/// `FractionOfMin(c)` means `c · min y` for consistent and laplacian, and
/// `c · min y / (|V| − K)` per tail word for winners take all.
pub fn smooth_topk<'f>(
    ids: &[WordId],
    y: &[f64],
    mode: SmoothingMode,
    freq: Option<&'f FrequencyTable>,
    vocab_size: usize,
    epsilon: Epsilon,
) -> Result<SmoothedDistribution<'f>> {
    let need_freq =
        || freq.ok_or_else(|| Error::InvalidFrequencies(format!("frequency table required for {mode} smoothing")));
    let min_y = y.iter().copied().fold(f64::INFINITY, f64::min);
    match mode {
        SmoothingMode::Consistent => smooth_consistent(ids, y, need_freq()?, epsilon),
        SmoothingMode::Laplacian => {
            let freq = need_freq()?;
            check_topk(ids, y, vocab_size)?;
            let mut dense = vec![0.0; vocab_size];
            for (id, p) in ids.iter().zip(y) {
                dense[id.index()] = *p;
            }
            let eps = match epsilon {
                Epsilon::Fixed(e) => e,
                Epsilon::FractionOfMin(c) => c * min_y,
            };
            smooth_laplacian(&dense, freq, eps)
        }
        SmoothingMode::WinnersTakeAll => {
            let eps = match epsilon {
                Epsilon::Fixed(e) => e,
                Epsilon::FractionOfMin(c) => c * min_y / vocab_size.saturating_sub(ids.len()).max(1) as f64,
            };
            smooth_winners_take_all(ids, y, vocab_size, eps)
        }
    }
}

/// The three consistency conditions, evaluated literally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConsistencyReport {
    /// Every word has positive probability.
    pub positivity: bool,
    /// Within the retrieved set, `y_i ≤ y_j ⇔ ỹ_i ≤ ỹ_j`.
    pub order_preserved: bool,
    /// Every retrieved word is at least as likely as every other word.
    pub topk_dominates: bool,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.positivity && self.order_preserved && self.topk_dominates
    }
}

/// `y` is the original distribution over `dist.topk_ids()`, in that order.
pub fn check_consistency(dist: &SmoothedDistribution<'_>, y: &[f64]) -> ConsistencyReport {
    let dense = dist.materialize();
    let smoothed = dist.topk_probs();
    let positivity = dense.iter().all(|&p| p > 0.0);

    let order_preserved = y.len() == smoothed.len()
        && (0..y.len()).all(|i| (0..y.len()).all(|j| (y[i] <= y[j]) == (smoothed[i] <= smoothed[j])));

    let in_topk: HashSet<WordId> = dist.topk_ids().iter().copied().collect();
    let min_topk = smoothed.iter().copied().fold(f64::INFINITY, f64::min);
    let topk_dominates =
        dense.iter().enumerate().filter(|(j, _)| !in_topk.contains(&WordId::from(*j))).all(|(_, &p)| min_topk >= p);

    ConsistencyReport { positivity, order_preserved, topk_dominates }
}
