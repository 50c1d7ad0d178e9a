//! Deterministic synthetic projections, frequencies and queries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::projection::{FrequencyTable, VocabularyProjection};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Standard normal weights and biases; uniform frequencies.
    Gaussian,
    /// Row `i` scaled by `(i + 1)^-1/4`; frequencies proportional to `1 / (i + 1)`.
    ZipfScaledGaussian,
}

impl std::str::FromStr for Distribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(Distribution::Gaussian),
            "zipf" | "zipf_scaled_gaussian" => Ok(Distribution::ZipfScaledGaussian),
            other => Err(format!("unknown distribution `{other}` (expected gaussian or zipf)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub projection: VocabularyProjection,
    pub frequencies: FrequencyTable,
    pub queries: Vec<Vec<f64>>,
}

const ZIPF_COUNT_SCALE: f64 = 1e6;

/// Projection rows come from stream 0 of a ChaCha8 generator seeded with
/// `seed`, queries from stream 1, so changing `query_count` leaves the
/// projection untouched.
///
/// # Panics
/// If `vocab_size` or `dim` is zero.
pub fn synth_dataset(
    vocab_size: usize,
    dim: usize,
    distribution: Distribution,
    seed: u64,
    query_count: usize,
) -> SynthDataset {
    assert!(vocab_size >= 1 && dim >= 1, "vocab_size and dim must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = |i: usize| match distribution {
        Distribution::Gaussian => 1.0,
        Distribution::ZipfScaledGaussian => ((i + 1) as f64).powf(-0.25),
    };

    let mut weights = Vec::with_capacity(vocab_size * dim);
    let mut biases = Vec::with_capacity(vocab_size);
    for i in 0..vocab_size {
        let s = scale(i);
        for _ in 0..dim {
            weights.push((s * rng.sample::<f64, _>(StandardNormal)) as f32);
        }
        biases.push((s * rng.sample::<f64, _>(StandardNormal)) as f32);
    }
    let width = vocab_size.to_string().len();
    let tokens = (0..vocab_size).map(|i| format!("w{i:0width$}")).collect();
    let projection =
        VocabularyProjection::new(tokens, weights, Some(biases), dim).expect("synthetic rows are finite and nonzero");

    let counts = (0..vocab_size)
        .map(|i| match distribution {
            Distribution::Gaussian => 1.0,
            Distribution::ZipfScaledGaussian => (ZIPF_COUNT_SCALE / (i + 1) as f64).round().max(1.0),
        })
        .collect();
    let frequencies = FrequencyTable::from_counts(counts).expect("positive counts");

    let mut qrng = ChaCha8Rng::seed_from_u64(seed);
    qrng.set_stream(1);
    let queries = (0..query_count).map(|_| (0..dim).map(|_| qrng.sample(StandardNormal)).collect()).collect();

    SynthDataset { projection, frequencies, queries }
}
