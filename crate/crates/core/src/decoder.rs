//! End-to-end query path: lift the context vector, retrieve the nearest
//! lifted words, read their logits back from the distances and softmax over
//! the retrieved set.

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ippt::{
    compute_bound, distance_to_logit, transform_points, transform_query, BoundMode, Storage, TransformBound,
    TransformedPoints,
};
use crate::projection::{VocabularyProjection, WordId};
use crate::swvg::{build_graph, flat_search, load_graph, save_graph, search_topk, SwvgGraph, SwvgParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Small-world graph search.
    Graph,
    /// Exhaustive scan over every lifted word.
    Flat,
}

impl FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "graph" => Ok(SearchMode::Graph),
            "flat" => Ok(SearchMode::Flat),
            other => Err(format!("unknown search mode `{other}` (expected graph or flat)")),
        }
    }
}

/// Lifted points together with the graph built over them.
#[derive(Debug, Clone, PartialEq)]
pub struct Index<S: Storage = f32> {
    graph: SwvgGraph,
    points: TransformedPoints<S>,
    params: Option<SwvgParams>,
}

impl<S: Storage> Index<S> {
    pub fn build(projection: &VocabularyProjection, bound: BoundMode, params: &SwvgParams) -> Result<Self> {
        params.validate()?;
        let bound = compute_bound(projection, bound)?;
        let points = transform_points(projection, bound)?;
        let graph = build_graph(&points, params)?;
        Ok(Index { graph, points, params: Some(*params) })
    }

    pub fn from_parts(graph: SwvgGraph, points: TransformedPoints<S>) -> Result<Self> {
        if graph.node_count() != points.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: graph.node_count() });
        }
        Ok(Index { graph, points, params: None })
    }

    pub fn graph(&self) -> &SwvgGraph {
        &self.graph
    }

    pub fn points(&self) -> &TransformedPoints<S> {
        &self.points
    }

    pub fn bound(&self) -> &TransformBound {
        self.points.bound()
    }

    /// Build parameters, when the index was built in this process.
    pub fn params(&self) -> Option<&SwvgParams> {
        self.params.as_ref()
    }

    pub fn vocab_size(&self) -> usize {
        self.points.len()
    }

    pub fn source_dim(&self) -> usize {
        self.points.source_dim()
    }
}

impl Index<f32> {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_graph(&self.graph, &self.points, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (graph, points, _) = load_graph(path)?;
        Index::from_parts(graph, points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopKResult {
    /// Sorted by logit descending, ties by id ascending.
    pub ids: Vec<WordId>,
    pub logits: Vec<f64>,
    /// Softmax over `logits` alone.
    pub probs: Vec<f64>,
    pub k: usize,
    pub exact: bool,
    pub distance_evals: u64,
}

impl TopKResult {
    /// Orders `(id, logit)` pairs by logit descending with id tie-break and
    /// attaches the softmax.
    pub fn from_scored(mut scored: Vec<(WordId, f64)>, exact: bool, distance_evals: u64) -> Self {
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let (ids, logits): (Vec<WordId>, Vec<f64>) = scored.into_iter().unzip();
        let probs = softmax(&logits);
        TopKResult { k: ids.len(), ids, logits, probs, exact, distance_evals }
    }
}

/// Softmax with the max logit subtracted before exponentiation.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn check_k<S: Storage>(index: &Index<S>, k: usize, ef_search: usize, mode: SearchMode) -> Result<()> {
    let n = index.vocab_size();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if mode == SearchMode::Graph && ef_search < k {
        return Err(Error::EfTooSmall { ef: ef_search, k });
    }
    Ok(())
}

/// Logits come from [`distance_to_logit`], never from re-scoring the
/// projection rows.
pub fn decode_topk<S: Storage>(
    index: &Index<S>,
    h: &[f64],
    k: usize,
    ef_search: usize,
    mode: SearchMode,
) -> Result<TopKResult> {
    check_k(index, k, ef_search, mode)?;
    let q = transform_query(h, index.source_dim())?;
    let found = match mode {
        SearchMode::Graph => search_topk(&index.graph, &index.points, &q, k, ef_search)?,
        SearchMode::Flat => flat_search(&index.points, &q, k)?,
    };
    let scored = found
        .ids
        .iter()
        .zip(&found.dists_sq)
        .map(|(&id, &d)| (id, distance_to_logit(d, index.bound(), q.h_norm_sq())))
        .collect();
    Ok(TopKResult::from_scored(scored, mode == SearchMode::Flat, found.distance_evals))
}

/// [`decode_topk`] over many queries, in parallel, results in input order.
pub fn batch_decode<S: Storage>(
    index: &Index<S>,
    queries: &[Vec<f64>],
    k: usize,
    ef_search: usize,
    mode: SearchMode,
) -> Result<Vec<TopKResult>> {
    check_k(index, k, ef_search, mode)?;
    for (i, h) in queries.iter().enumerate() {
        transform_query(h, index.source_dim()).map_err(|e| Error::Query { index: i, source: Box::new(e) })?;
    }
    queries.par_iter().map(|h| decode_topk(index, h, k, ef_search, mode)).collect()
}
