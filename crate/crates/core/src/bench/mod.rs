//! Ground truth and measurement: the full-projection oracle, precision@K,
//! latency sampling, and synthetic datasets.

mod queries;
mod report;
mod synth;

use std::time::Instant;

use rayon::prelude::*;

use crate::decoder::{decode_topk, Index, SearchMode, TopKResult};
use crate::error::{Error, Result};
use crate::ippt::Storage;
use crate::projection::{VocabularyProjection, WordId};

pub use queries::{load_queries, parse_queries, save_queries, write_queries};
pub use report::{EvalReport, LatencyStats, QueryRecord};
pub use synth::{synth_dataset, Distribution, SynthDataset};

/// Exact top-K by scoring every row of the projection. Never touches the
/// lifted points.
pub fn oracle_topk(projection: &VocabularyProjection, h: &[f64], k: usize) -> Result<TopKResult> {
    let n = projection.vocab_size();
    if h.len() != projection.dim() {
        return Err(Error::DimensionMismatch { expected: projection.dim(), got: h.len() });
    }
    if let Some(i) = h.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut scored: Vec<(WordId, f64)> = (0..n)
        .map(|i| {
            let id = WordId::from(i);
            (id, projection.logit(id, h))
        })
        .collect();
    let by_rank = |a: &(WordId, f64), b: &(WordId, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k < n {
        scored.select_nth_unstable_by(k - 1, by_rank);
        scored.truncate(k);
    }
    Ok(TopKResult::from_scored(scored, true, n as u64))
}

/// `|ids(approx) ∩ ids(exact)| / K`.
pub fn precision_at_k(approx: &TopKResult, exact: &TopKResult) -> Result<f64> {
    if approx.ids.len() != exact.ids.len() {
        return Err(Error::KMismatch { approx: approx.ids.len(), exact: exact.ids.len() });
    }
    let mut truth: Vec<WordId> = exact.ids.clone();
    truth.sort_unstable();
    let hits = approx.ids.iter().filter(|id| truth.binary_search(id).is_ok()).count();
    Ok(hits as f64 / exact.ids.len() as f64)
}

/// Latency sampling schedule.
///
/// After `warmup` untimed executions, every query is timed in rounds until
/// at least `measured` executions have been recorded. A query's sample is
/// the median of its rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Timing {
    pub warmup: usize,
    pub measured: usize,
}

impl Default for Timing {
    fn default() -> Self {
        Timing { warmup: 10, measured: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    /// `None` skips latency measurement.
    pub timing: Option<Timing>,
    /// Seed echoed in the report; the index file does not carry it.
    pub seed: Option<u64>,
}

/// [`run_eval_with`] with default timing.
pub fn run_eval<S: Storage>(
    index: &Index<S>,
    projection: &VocabularyProjection,
    queries: &[Vec<f64>],
    k: usize,
    ef_search: usize,
) -> Result<EvalReport> {
    let options = EvalOptions { timing: Some(Timing::default()), seed: index.params().map(|p| p.seed) };
    run_eval_with(index, projection, queries, k, ef_search, &options)
}

/// Graph search against the oracle for every query. Metrics are computed
/// in parallel; latency is sampled sequentially afterwards.
pub fn run_eval_with<S: Storage>(
    index: &Index<S>,
    projection: &VocabularyProjection,
    queries: &[Vec<f64>],
    k: usize,
    ef_search: usize,
    options: &EvalOptions,
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::Empty("no queries"));
    }
    if index.vocab_size() != projection.vocab_size() || index.source_dim() != projection.dim() {
        return Err(Error::InvalidProjection(format!(
            "index covers {} words of dimension {}, projection has {} of dimension {}",
            index.vocab_size(),
            index.source_dim(),
            projection.vocab_size(),
            projection.dim()
        )));
    }
    let records = queries
        .par_iter()
        .enumerate()
        .map(|(i, h)| {
            evaluate_query(index, projection, h, k, ef_search)
                .map_err(|e| Error::Query { index: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .enumerate()
        .map(|(i, (graph, oracle, precision))| QueryRecord {
            query: i,
            ef_search,
            precision,
            order_agrees: graph.ids == oracle.ids,
            distance_evals: graph.distance_evals,
            graph_ids: graph.ids.iter().map(|id| id.0).collect(),
            oracle_ids: oracle.ids.iter().map(|id| id.0).collect(),
            graph_latency_us: None,
            flat_latency_us: None,
        })
        .collect::<Vec<_>>();

    let mut report = EvalReport::new(
        index.vocab_size(),
        index.source_dim(),
        k,
        ef_search,
        index.params().copied(),
        options.seed,
        records,
    );
    if let Some(timing) = options.timing {
        let graph = time_queries(queries, timing, |h| decode_topk(index, h, k, ef_search, SearchMode::Graph))?;
        let flat = time_queries(queries, timing, |h| decode_topk(index, h, k, ef_search, SearchMode::Flat))?;
        report.attach_latency(graph, flat);
    }
    Ok(report)
}

fn evaluate_query<S: Storage>(
    index: &Index<S>,
    projection: &VocabularyProjection,
    h: &[f64],
    k: usize,
    ef_search: usize,
) -> Result<(TopKResult, TopKResult, f64)> {
    let graph = decode_topk(index, h, k, ef_search, SearchMode::Graph)?;
    let oracle = oracle_topk(projection, h, k)?;
    let precision = precision_at_k(&graph, &oracle)?;
    Ok((graph, oracle, precision))
}

/// Per-query latency in microseconds.
fn time_queries(
    queries: &[Vec<f64>],
    timing: Timing,
    mut run: impl FnMut(&[f64]) -> Result<TopKResult>,
) -> Result<Vec<f64>> {
    for h in queries.iter().cycle().take(timing.warmup) {
        std::hint::black_box(run(h)?);
    }
    let rounds = timing.measured.div_ceil(queries.len()).max(1);
    let mut samples = vec![Vec::with_capacity(rounds); queries.len()];
    for _ in 0..rounds {
        for (h, out) in queries.iter().zip(samples.iter_mut()) {
            let start = Instant::now();
            std::hint::black_box(run(h)?);
            out.push(start.elapsed().as_secs_f64() * 1e6);
        }
    }
    Ok(samples
        .into_iter()
        .map(|mut s| {
            s.sort_by(f64::total_cmp);
            median_sorted(&s)
        })
        .collect())
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}
