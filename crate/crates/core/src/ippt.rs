//! Inner-product-preserving lift from the projection layer to a sphere.
//!
//! Each word `i` becomes `z_i = [w_i; b_i; √(U² − ‖w_i‖² − b_i²)] ∈ ℝ^(d+2)`
//! and each context vector becomes `h̃ = [h; 1; 0]`. Then
//!
//! ```text
//! ‖z_i − h̃‖² = U² + ‖h‖² + 1 − 2(w_iᵀh + b_i)
//! ```
//!
//! so ranking words by ascending distance to `h̃` is exactly ranking them by
//! descending logit, and the logit is recovered from the distance in O(1).
//! Distances are kept squared internally; square roots are taken only where
//! `μ` and `ρ` are reported.

use crate::error::{Error, Result};
use crate::projection::{VocabularyProjection, WordId};

/// Scalar type used to store lifted points. Arithmetic is always done in f64.
pub trait Storage: Copy + Send + Sync + PartialEq + std::fmt::Debug + 'static {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Storage for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Storage for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundMode {
    /// `U = max_i ‖[w_i; b_i]‖₂`, the smallest bound that keeps every lift real.
    MaxAugmentedRowNorm,
    /// A caller-supplied `U`, which must not be below the max row norm.
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformBound {
    u: f64,
    explicit: bool,
    max_row_norm: f64,
}

impl TransformBound {
    pub(crate) fn from_parts(u: f64, explicit: bool, max_row_norm: f64) -> Result<Self> {
        if !(u.is_finite() && max_row_norm.is_finite()) || u <= 0.0 || u < max_row_norm {
            return Err(Error::BoundTooSmall { explicit: u, max_row_norm });
        }
        Ok(TransformBound { u, explicit, max_row_norm })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn u_sq(&self) -> f64 {
        self.u * self.u
    }

    pub fn is_explicit(&self) -> bool {
        self.explicit
    }

    pub fn max_row_norm(&self) -> f64 {
        self.max_row_norm
    }
}

pub fn compute_bound(projection: &VocabularyProjection, mode: BoundMode) -> Result<TransformBound> {
    let max_sq =
        (0..projection.vocab_size()).map(|i| projection.augmented_norm_sq(WordId::from(i))).fold(0.0f64, f64::max);
    if max_sq == 0.0 {
        return Err(Error::DegenerateProjection);
    }
    let max_row_norm = max_sq.sqrt();
    match mode {
        BoundMode::MaxAugmentedRowNorm => TransformBound::from_parts(max_row_norm, false, max_row_norm),
        BoundMode::Explicit(u) => {
            if !u.is_finite() || u < max_row_norm {
                return Err(Error::BoundTooSmall { explicit: u, max_row_norm });
            }
            TransformBound::from_parts(u, true, max_row_norm)
        }
    }
}

/// The lifted words, one row of `d + 2` values per word, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedPoints<S: Storage = f32> {
    data: Vec<S>,
    bound: TransformBound,
    source_dim: usize,
}

/// Radicands down to `−RADICAND_TOLERANCE · U²` are clamped to zero; below
/// that the bound is inconsistent with the projection.
const RADICAND_TOLERANCE: f64 = 1e-6;

/// Radicands within this many ulps of `U²` are the rounding error of
/// squaring `U` itself and are snapped to zero.
const RADICAND_SNAP: f64 = 4.0 * f64::EPSILON;

pub fn transform_points<S: Storage>(
    projection: &VocabularyProjection,
    bound: TransformBound,
) -> Result<TransformedPoints<S>> {
    let d = projection.dim();
    let u_sq = bound.u_sq();
    let mut data = Vec::with_capacity(projection.vocab_size() * (d + 2));
    for i in 0..projection.vocab_size() {
        let id = WordId::from(i);
        let radicand = u_sq - projection.augmented_norm_sq(id);
        if radicand < -RADICAND_TOLERANCE * u_sq {
            return Err(Error::InconsistentBound { id: i, radicand });
        }
        data.extend(projection.row(id).iter().map(|&w| S::from_f64(w as f64)));
        data.push(S::from_f64(projection.bias(id) as f64));
        let radicand = if radicand <= RADICAND_SNAP * u_sq { 0.0 } else { radicand };
        data.push(S::from_f64(radicand.sqrt()));
    }
    Ok(TransformedPoints { data, bound, source_dim: d })
}

impl<S: Storage> TransformedPoints<S> {
    pub(crate) fn from_raw(data: Vec<S>, bound: TransformBound, source_dim: usize) -> Self {
        debug_assert_eq!(data.len() % (source_dim + 2), 0);
        TransformedPoints { data, bound, source_dim }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.lifted_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    /// `d + 2`.
    pub fn lifted_dim(&self) -> usize {
        self.source_dim + 2
    }

    pub fn bound(&self) -> &TransformBound {
        &self.bound
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        let w = self.lifted_dim();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|v| v.to_f64()).collect()
    }

    /// `‖z_i − q‖²` for an arbitrary lifted-space vector.
    #[inline]
    pub(crate) fn dist_sq_to(&self, i: usize, q: &[f64]) -> f64 {
        sq_dist(self.row(i), q)
    }

    /// `‖z_i − z_j‖²`.
    #[inline]
    pub(crate) fn dist_sq_between(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| {
                let d = a.to_f64() - b.to_f64();
                d * d
            })
            .sum()
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|v| v.to_f64() * v.to_f64()).sum::<f64>().sqrt()
    }
}

#[inline]
fn sq_dist<S: Storage>(z: &[S], q: &[f64]) -> f64 {
    z.iter()
        .zip(q)
        .map(|(a, b)| {
            let d = a.to_f64() - b;
            d * d
        })
        .sum()
}

/// A context vector lifted to `[h; 1; 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedQuery {
    h_tilde: Vec<f64>,
    h_norm_sq: f64,
}

impl TransformedQuery {
    pub fn as_slice(&self) -> &[f64] {
        &self.h_tilde
    }

    pub fn h_norm_sq(&self) -> f64 {
        self.h_norm_sq
    }

    pub fn source_dim(&self) -> usize {
        self.h_tilde.len() - 2
    }
}

/// Lifts `h`. `dim` is the projection's source dimension `d`.
pub fn transform_query(h: &[f64], dim: usize) -> Result<TransformedQuery> {
    if h.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: h.len() });
    }
    if let Some(pos) = h.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    let mut h_tilde = Vec::with_capacity(dim + 2);
    h_tilde.extend_from_slice(h);
    h_tilde.push(1.0);
    h_tilde.push(0.0);
    Ok(TransformedQuery { h_tilde, h_norm_sq: h.iter().map(|x| x * x).sum() })
}

/// `‖z_i − h̃‖²`.
pub fn squared_distance<S: Storage>(z: &[S], q: &TransformedQuery) -> Result<f64> {
    if z.len() != q.h_tilde.len() {
        return Err(Error::DimensionMismatch { expected: z.len(), got: q.h_tilde.len() });
    }
    Ok(sq_dist(z, &q.h_tilde))
}

/// Inverts the distance identity: `(U² + ‖h‖² + 1 − dist²) / 2 = w_iᵀh + b_i`.
#[inline]
pub fn distance_to_logit(dist_sq: f64, bound: &TransformBound, h_norm_sq: f64) -> f64 {
    (bound.u_sq() + h_norm_sq + 1.0 - dist_sq) / 2.0
}

/// The matching function `μ(x_i, h) = ‖z_i − h̃‖`.
pub fn matching_mu<S: Storage>(points: &TransformedPoints<S>, id: WordId, q: &TransformedQuery) -> f64 {
    points.dist_sq_to(id.index(), &q.h_tilde).sqrt()
}

/// The word metric `ρ(x_i, x_j) = ‖z_i − z_j‖`.
pub fn metric_rho<S: Storage>(points: &TransformedPoints<S>, i: WordId, j: WordId) -> Result<f64> {
    let n = points.len();
    for id in [i, j] {
        if id.index() >= n {
            return Err(Error::IdOutOfRange { id: id.index(), n });
        }
    }
    Ok(points.dist_sq_between(i.index(), j.index()).sqrt())
}
