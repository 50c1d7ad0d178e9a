use std::collections::HashSet;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::search::{search_layer_raw, Candidate, VisitedSet};
use super::{reachable, SwvgGraph, SwvgParams};
use crate::error::{Error, Result};
use crate::ippt::{Storage, TransformedPoints};

/// Level for one node: `⌊−ln(u) · level_mult⌋` with `u` uniform on (0, 1]
/// taken from the top 53 bits of the next SplitMix64 output.
pub(crate) fn draw_level(rng: &mut SplitMix64, level_mult: f64) -> u8 {
    let u = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
    let level = (-u.ln() * level_mult).floor();
    level.min(u8::MAX as f64) as u8
}

/// Keeps a candidate only if it is closer to the base node than to every
/// neighbor already kept. `candidates` must be sorted ascending.
fn select_neighbors<S: Storage>(points: &TransformedPoints<S>, candidates: &[Candidate], m: usize) -> Vec<u32> {
    let mut kept: Vec<u32> = Vec::with_capacity(m);
    for c in candidates {
        if kept.len() >= m {
            break;
        }
        let diverse = kept.iter().all(|&r| c.dist < points.dist_sq_between(c.id as usize, r as usize));
        if diverse {
            kept.push(c.id);
        }
    }
    kept
}

fn sorted_by_distance<S: Storage>(points: &TransformedPoints<S>, base: u32, ids: &[u32]) -> Vec<Candidate> {
    let mut out: Vec<Candidate> =
        ids.iter().map(|&id| Candidate { dist: points.dist_sq_between(base as usize, id as usize), id }).collect();
    out.sort_unstable();
    out
}

/// Deterministic for fixed points and params: levels come from the seeded
/// stream and nodes are inserted in id order.
pub fn build_graph<S: Storage>(points: &TransformedPoints<S>, params: &SwvgParams) -> Result<SwvgGraph> {
    params.validate()?;
    let n = points.len();
    if n == 0 {
        return Err(Error::Empty("cannot build a graph over zero points"));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidParams(format!("{n} nodes exceed the u32 id space")));
    }

    let mut rng = SplitMix64::seed_from_u64(params.seed);
    let levels: Vec<u8> = (0..n).map(|_| draw_level(&mut rng, params.level_mult)).collect();
    let top = *levels.iter().max().expect("n >= 1") as usize;
    let mut layers: Vec<Vec<Vec<u32>>> = vec![vec![Vec::new(); n]; top + 1];

    let mut visited = VisitedSet::new(n);
    let mut evals = 0u64;
    let mut entry = 0u32;
    let mut entry_level = levels[0] as usize;

    for i in 1..n {
        let target = points.row_f64(i);
        let level = levels[i] as usize;
        let mut ep = entry;
        for layer in (level + 1..=entry_level).rev() {
            ep = search_layer_raw(&layers[layer], points, &target, ep, 1, &mut visited, &mut evals)[0].id;
        }
        for layer in (0..=level.min(entry_level)).rev() {
            let found =
                search_layer_raw(&layers[layer], points, &target, ep, params.ef_construction, &mut visited, &mut evals);
            let selected = select_neighbors(points, &found, params.m);
            let max_degree = params.max_degree(layer);
            for &nb in &selected {
                let adj = &mut layers[layer][nb as usize];
                adj.push(i as u32);
                if adj.len() > max_degree {
                    let ranked = sorted_by_distance(points, nb, adj);
                    *adj = select_neighbors(points, &ranked, max_degree);
                }
            }
            layers[layer][i] = selected;
            ep = found[0].id;
        }
        if level > entry_level {
            entry = i as u32;
            entry_level = level;
        }
    }

    repair_layer0(points, &mut layers[0], params.m0);
    let graph = SwvgGraph::from_parts(levels, layers);
    debug_assert_eq!(graph.entry_point, entry);
    Ok(graph)
}

/// Strongly connected components of layer 0, each sorted, ordered by
/// smallest member.
fn components(layer0: &[Vec<u32>]) -> Vec<Vec<usize>> {
    let n = layer0.len();
    let mut g = DiGraph::<(), ()>::with_capacity(n, layer0.iter().map(Vec::len).sum());
    for _ in 0..n {
        g.add_node(());
    }
    for (v, adj) in layer0.iter().enumerate() {
        for &u in adj {
            g.add_edge(NodeIndex::new(v), NodeIndex::new(u as usize), ());
        }
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut members: Vec<usize> = c.into_iter().map(|i| i.index()).collect();
            members.sort_unstable();
            members
        })
        .collect();
    comps.sort_unstable_by_key(|c| c[0]);
    comps
}

/// Whether `comp` stays strongly connected after dropping the edge
/// `x -> victim`.
fn stays_strong(layer0: &[Vec<u32>], comp_of: &[usize], x: usize, victim: u32) -> bool {
    let n = layer0.len();
    let c = comp_of[x];
    let forward = reachable(n, x, |v| {
        layer0[v]
            .iter()
            .filter(|&&u| comp_of[u as usize] == c && !(v == x && u == victim))
            .map(|&u| u as usize)
            .collect()
    });
    let mut reverse = vec![Vec::new(); n];
    for (v, adj) in layer0.iter().enumerate().filter(|(v, _)| comp_of[*v] == c) {
        for &u in adj.iter().filter(|&&u| comp_of[u as usize] == c && !(v == x && u == victim)) {
            reverse[u as usize].push(v);
        }
    }
    let backward = reachable(n, x, |v| reverse[v].clone());
    (0..n).filter(|&v| comp_of[v] == c).all(|v| forward[v] && backward[v])
}

/// Adds one edge from component `from` into component `to`, preferring the
/// closest pair whose source has room. A full source gives up an edge that
/// leaves its component, or failing that an internal edge whose removal
/// keeps the component strongly connected. Returns the bridging edge.
fn add_bridge<S: Storage>(
    points: &TransformedPoints<S>,
    layer0: &mut [Vec<u32>],
    from: &[usize],
    to: &[usize],
    comp_of: &[usize],
    protected: &HashSet<(usize, u32)>,
    max_degree: usize,
) -> Option<(usize, u32)> {
    let target = comp_of[to[0]];
    for &x in from {
        if let Some(&y) = layer0[x].iter().find(|&&y| comp_of[y as usize] == target) {
            return Some((x, y));
        }
    }

    let mut pairs: Vec<(Candidate, usize)> = from
        .iter()
        .map(|&x| {
            let best = to
                .iter()
                .map(|&y| Candidate { dist: points.dist_sq_between(x, y), id: y as u32 })
                .min()
                .expect("components are non-empty");
            (best, x)
        })
        .collect();
    pairs.sort_unstable();

    let mut chosen = pairs.iter().find(|(_, x)| layer0[*x].len() < max_degree).map(|&(c, x)| (x, c.id));

    if chosen.is_none() {
        'outer: for &(c, x) in &pairs {
            let ranked = sorted_by_distance(points, x as u32, &layer0[x]);
            for victim in ranked.iter().rev() {
                if comp_of[victim.id as usize] != comp_of[x] && !protected.contains(&(x, victim.id)) {
                    layer0[x].retain(|&u| u != victim.id);
                    chosen = Some((x, c.id));
                    break 'outer;
                }
            }
        }
    }
    if chosen.is_none() {
        'outer: for &(c, x) in &pairs {
            let ranked = sorted_by_distance(points, x as u32, &layer0[x]);
            for victim in ranked.iter().rev() {
                if comp_of[victim.id as usize] == comp_of[x] && stays_strong(layer0, comp_of, x, victim.id) {
                    layer0[x].retain(|&u| u != victim.id);
                    chosen = Some((x, c.id));
                    break 'outer;
                }
            }
        }
    }

    let (x, y) = chosen?;
    layer0[x].push(y);
    let back = &mut layer0[y as usize];
    if back.len() < max_degree && !back.contains(&(x as u32)) {
        back.push(x as u32);
    }
    Some((x, y))
}

/// Makes layer 0 strongly connected by chaining its strongly connected
/// components into a ring.
fn repair_layer0<S: Storage>(points: &TransformedPoints<S>, layer0: &mut [Vec<u32>], max_degree: usize) {
    for _ in 0..8 {
        let comps = components(layer0);
        if comps.len() <= 1 {
            return;
        }
        let mut comp_of = vec![0; layer0.len()];
        for (c, members) in comps.iter().enumerate() {
            for &v in members {
                comp_of[v] = c;
            }
        }
        let mut protected = HashSet::new();
        for i in 0..comps.len() {
            let next = &comps[(i + 1) % comps.len()];
            if let Some(edge) = add_bridge(points, layer0, &comps[i], next, &comp_of, &protected, max_degree) {
                protected.insert(edge);
            }
        }
    }
}
