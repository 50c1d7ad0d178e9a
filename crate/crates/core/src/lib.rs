//! Top-K vocabulary projection without scoring the whole vocabulary.
//!
//! The softmax projection layer is lifted onto a sphere so that the words
//! with the largest logits are exactly the nearest neighbors of the lifted
//! context vector. A small-world graph over the lifted words retrieves them
//! in sub-linear time, logits are read back from the distances, and the
//! remaining probability mass can be spread over unretrieved words with a
//! rank-consistent smoothing rule.

pub mod bench;
mod bytes;
pub mod decoder;
pub mod error;
pub mod ippt;
pub mod projection;
pub mod smoothing;
pub mod swvg;

pub use decoder::{batch_decode, decode_topk, Index, SearchMode, TopKResult};
pub use error::{Error, Result};
pub use projection::{FrequencyTable, VocabularyProjection, WordId};
