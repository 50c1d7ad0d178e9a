//! Small-world vocabulary graph over lifted word vectors.
//!
//! A layered navigable small-world graph: node levels are drawn from a
//! seeded SplitMix64 stream, nodes are inserted in id order, neighbors are
//! chosen with the usual diversity heuristic, and layer 0 is repaired after
//! the build so every node can reach every other. Search descends greedily
//! through the upper layers and runs a best-first search with a dynamic
//! candidate list of width `ef` on layer 0.

mod build;
mod persist;
mod search;

use crate::error::{Error, Result};
use crate::projection::WordId;

pub use build::build_graph;
pub use persist::{decode_index, encode_index, load_graph, save_graph};
pub use search::{flat_search, search_layer, search_topk};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwvgParams {
    /// Max neighbors per node on layers above 0.
    pub m: usize,
    /// Max neighbors per node on layer 0.
    pub m0: usize,
    pub ef_construction: usize,
    pub level_mult: f64,
    pub seed: u64,
}

impl Default for SwvgParams {
    fn default() -> Self {
        SwvgParams::with_m(16)
    }
}

impl SwvgParams {
    /// Defaults derived from `m`: `m0 = 2m`, `level_mult = 1 / ln m`.
    pub fn with_m(m: usize) -> Self {
        SwvgParams { m, m0: 2 * m, ef_construction: 200, level_mult: 1.0 / (m.max(2) as f64).ln(), seed: 42 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidParams(format!("M = {} must be at least 2", self.m)));
        }
        if self.m0 < self.m {
            return Err(Error::InvalidParams(format!("M0 = {} must be at least M = {}", self.m0, self.m)));
        }
        if self.m0 > u16::MAX as usize {
            return Err(Error::InvalidParams(format!("M0 = {} exceeds {}", self.m0, u16::MAX)));
        }
        if self.ef_construction < self.m {
            return Err(Error::InvalidParams(format!(
                "ef_construction = {} must be at least M = {}",
                self.ef_construction, self.m
            )));
        }
        if !(self.level_mult.is_finite() && self.level_mult > 0.0) {
            return Err(Error::InvalidParams(format!("level_mult = {} must be positive", self.level_mult)));
        }
        Ok(())
    }

    pub(crate) fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            self.m0
        } else {
            self.m
        }
    }
}

/// Layered adjacency. `layers[l][v]` lists the neighbors of `v` on layer
/// `l`; it is empty for nodes whose level is below `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwvgGraph {
    levels: Vec<u8>,
    layers: Vec<Vec<Vec<u32>>>,
    entry_point: u32,
}

impl SwvgGraph {
    pub(crate) fn from_parts(levels: Vec<u8>, layers: Vec<Vec<Vec<u32>>>) -> Self {
        let entry_point = entry_for_levels(&levels);
        SwvgGraph { levels, layers, entry_point }
    }

    pub fn node_count(&self) -> usize {
        self.levels.len()
    }

    pub fn entry_point(&self) -> WordId {
        WordId(self.entry_point)
    }

    pub fn level(&self, id: WordId) -> usize {
        self.levels[id.index()] as usize
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn max_level(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn neighbors(&self, layer: usize, id: WordId) -> &[u32] {
        &self.layers[layer][id.index()]
    }

    /// Number of nodes per level, index = level.
    pub fn level_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.layers.len()];
        for &l in &self.levels {
            hist[l as usize] += 1;
        }
        hist
    }

    /// Checks the structural invariants: neighbor ids valid and not self,
    /// no duplicate neighbors, no neighbors on layers above a node's level,
    /// and the entry point holds the maximum level.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        let bad = |msg: String| Err(Error::Format(msg));
        if self.levels[self.entry_point as usize] as usize != self.max_level() {
            return bad("entry point is not on the top layer".into());
        }
        for (l, layer) in self.layers.iter().enumerate() {
            for (v, adj) in layer.iter().enumerate() {
                if !adj.is_empty() && (self.levels[v] as usize) < l {
                    return bad(format!("node {v} has neighbors on layer {l} above its level"));
                }
                let mut sorted = adj.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != adj.len() {
                    return bad(format!("node {v} has duplicate neighbors on layer {l}"));
                }
                if let Some(&u) = adj.iter().find(|&&u| u as usize >= n || u as usize == v) {
                    return bad(format!("node {v} has invalid neighbor {u} on layer {l}"));
                }
                if adj.iter().any(|&u| (self.levels[u as usize] as usize) < l) {
                    return bad(format!("node {v} links to a node below layer {l}"));
                }
            }
        }
        Ok(())
    }

    /// True when every node on layer 0 can reach every other node along
    /// directed edges.
    pub fn is_layer0_strongly_connected(&self) -> bool {
        let n = self.node_count();
        let entry = self.entry_point as usize;
        let forward = reachable(n, entry, |v| self.layers[0][v].iter().map(|&u| u as usize).collect());
        if forward.iter().any(|r| !r) {
            return false;
        }
        let reverse = reverse_adjacency(&self.layers[0]);
        reachable(n, entry, |v| reverse[v].clone()).into_iter().all(|r| r)
    }
}

/// The first node holding the maximum level. Insertion in id order with a
/// strict `>` promotion rule always ends on this node.
pub(crate) fn entry_for_levels(levels: &[u8]) -> u32 {
    let max = levels.iter().copied().max().unwrap_or(0);
    levels.iter().position(|&l| l == max).unwrap_or(0) as u32
}

pub(crate) fn reachable(n: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for u in next(v) {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen
}

pub(crate) fn reverse_adjacency(layer: &[Vec<u32>]) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); layer.len()];
    for (v, adj) in layer.iter().enumerate() {
        for &u in adj {
            rev[u as usize].push(v);
        }
    }
    rev
}

/// Ids ascending by `(dist_sq, id)`, with the number of distance
/// computations spent finding them.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub ids: Vec<WordId>,
    pub dists_sq: Vec<f64>,
    pub distance_evals: u64,
}

impl SearchResult {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}
