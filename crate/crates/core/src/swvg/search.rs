use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{SearchResult, SwvgGraph};
use crate::error::{Error, Result};
use crate::ippt::{Storage, TransformedPoints, TransformedQuery};
use crate::projection::WordId;

/// A node and its squared distance to the current target, ordered by
/// `(dist, id)` so ties resolve to the smaller id.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub dist: f64,
    pub id: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.id.cmp(&other.id))
    }
}

/// Epoch-stamped visited marks, reusable across searches without clearing.
pub(crate) struct VisitedSet {
    marks: Vec<u32>,
    epoch: u32,
}

impl VisitedSet {
    pub(crate) fn new(n: usize) -> Self {
        VisitedSet { marks: vec![0; n], epoch: 0 }
    }

    pub(crate) fn reset(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Marks `id`; returns false if it was already marked this epoch.
    #[inline]
    pub(crate) fn insert(&mut self, id: u32) -> bool {
        let slot = &mut self.marks[id as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}

/// Best-first search on one layer. Returns up to `ef` candidates sorted
/// ascending. The search stops once the closest unexpanded candidate is
/// worse than the worst kept result and the result list is full, so with
/// `ef >= node_count` it expands every reachable node.
pub(crate) fn search_layer_raw<S: Storage>(
    adjacency: &[Vec<u32>],
    points: &TransformedPoints<S>,
    target: &[f64],
    entry: u32,
    ef: usize,
    visited: &mut VisitedSet,
    evals: &mut u64,
) -> Vec<Candidate> {
    visited.reset();
    visited.insert(entry);
    let first = Candidate { dist: points.dist_sq_to(entry as usize, target), id: entry };
    *evals += 1;

    let mut frontier = BinaryHeap::new();
    let mut results = BinaryHeap::with_capacity(ef + 1);
    frontier.push(Reverse(first));
    results.push(first);

    while let Some(Reverse(current)) = frontier.pop() {
        if results.len() >= ef && current > *results.peek().expect("results are never empty") {
            break;
        }
        for &nb in &adjacency[current.id as usize] {
            if !visited.insert(nb) {
                continue;
            }
            let cand = Candidate { dist: points.dist_sq_to(nb as usize, target), id: nb };
            *evals += 1;
            if results.len() < ef || cand < *results.peek().expect("results are never empty") {
                frontier.push(Reverse(cand));
                results.push(cand);
                if results.len() > ef {
                    results.pop();
                }
            }
        }
    }
    results.into_sorted_vec()
}

fn into_result(found: Vec<Candidate>, distance_evals: u64) -> SearchResult {
    let (ids, dists_sq) = found.into_iter().map(|c| (WordId(c.id), c.dist)).unzip();
    SearchResult { ids, dists_sq, distance_evals }
}

fn check_query<S: Storage>(points: &TransformedPoints<S>, q: &TransformedQuery) -> Result<()> {
    if q.as_slice().len() != points.lifted_dim() {
        return Err(Error::DimensionMismatch { expected: points.source_dim(), got: q.source_dim() });
    }
    Ok(())
}

fn check_graph<S: Storage>(graph: &SwvgGraph, points: &TransformedPoints<S>) -> Result<()> {
    if graph.node_count() != points.len() {
        return Err(Error::DimensionMismatch { expected: graph.node_count(), got: points.len() });
    }
    Ok(())
}

pub fn search_layer<S: Storage>(
    graph: &SwvgGraph,
    points: &TransformedPoints<S>,
    q: &TransformedQuery,
    entry: WordId,
    ef: usize,
    layer: usize,
) -> Result<SearchResult> {
    check_graph(graph, points)?;
    check_query(points, q)?;
    let n = graph.node_count();
    if entry.index() >= n {
        return Err(Error::IdOutOfRange { id: entry.index(), n });
    }
    if ef == 0 {
        return Err(Error::InvalidParams("ef must be at least 1".into()));
    }
    if layer > graph.max_level() || graph.level(entry) < layer {
        return Err(Error::InvalidParams(format!("entry {entry} is not present on layer {layer}")));
    }
    let mut visited = VisitedSet::new(n);
    let mut evals = 0;
    let found = search_layer_raw(&graph.layers[layer], points, q.as_slice(), entry.0, ef, &mut visited, &mut evals);
    Ok(into_result(found, evals))
}

pub(crate) fn search_topk_raw<S: Storage>(
    graph: &SwvgGraph,
    points: &TransformedPoints<S>,
    target: &[f64],
    k: usize,
    ef_search: usize,
    visited: &mut VisitedSet,
) -> SearchResult {
    let mut evals = 0;
    let mut ep = graph.entry_point;
    for layer in (1..graph.layers.len()).rev() {
        ep = search_layer_raw(&graph.layers[layer], points, target, ep, 1, visited, &mut evals)[0].id;
    }
    let mut found = search_layer_raw(&graph.layers[0], points, target, ep, ef_search, visited, &mut evals);
    found.truncate(k);
    into_result(found, evals)
}

/// Approximate top-K: greedy descent with `ef = 1` through the upper
/// layers, then a layer-0 search of width `ef_search`, truncated to `k`.
pub fn search_topk<S: Storage>(
    graph: &SwvgGraph,
    points: &TransformedPoints<S>,
    q: &TransformedQuery,
    k: usize,
    ef_search: usize,
) -> Result<SearchResult> {
    check_graph(graph, points)?;
    check_query(points, q)?;
    let n = graph.node_count();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if ef_search < k {
        return Err(Error::EfTooSmall { ef: ef_search, k });
    }
    let mut visited = VisitedSet::new(n);
    Ok(search_topk_raw(graph, points, q.as_slice(), k, ef_search, &mut visited))
}

/// Exhaustive scan: the exact K-minimum subset, `distance_evals == n`.
pub fn flat_search<S: Storage>(points: &TransformedPoints<S>, q: &TransformedQuery, k: usize) -> Result<SearchResult> {
    check_query(points, q)?;
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut all: Vec<Candidate> =
        (0..n).map(|i| Candidate { dist: points.dist_sq_to(i, q.as_slice()), id: i as u32 }).collect();
    if k < n {
        all.select_nth_unstable(k - 1);
        all.truncate(k);
    }
    all.sort_unstable();
    Ok(into_result(all, n as u64))
}
