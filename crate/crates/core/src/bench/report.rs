//! Evaluation report and its two serializations.
//!
//! Summary text, one `key=value` per line, in this order:
//!
//! ```text
//! vocab_size  dim  queries  k  ef_search
//! m  m0  ef_construction  level_mult        (only when build params are known)
//! seed                                      (only when known)
//! mean_precision_at_k  min_precision_at_k  order_agreement
//! mean_distance_evals  distance_evals_fraction
//! graph_latency_us_{mean,p50,p90,p99}  flat_latency_us_{mean,p50,p90,p99}
//! speedup_p50                               (latency keys only when timed)
//! ```
//!
//! Records: one JSON object per line, fields as in [`QueryRecord`].

use std::fmt::Write as _;

use serde::Serialize;

use crate::swvg::SwvgParams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRecord {
    pub query: usize,
    pub ef_search: usize,
    pub precision: f64,
    /// Graph and oracle returned the same ids in the same order.
    pub order_agrees: bool,
    pub distance_evals: u64,
    pub graph_ids: Vec<u32>,
    pub oracle_ids: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_latency_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flat_latency_us: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub mean_us: f64,
    pub p50_us: f64,
    pub p90_us: f64,
    pub p99_us: f64,
}

impl LatencyStats {
    /// Nearest-rank percentiles.
    pub fn from_samples(samples: &[f64]) -> Self {
        assert!(!samples.is_empty());
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = |p: f64| sorted[((p / 100.0 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        LatencyStats { mean_us: mean, p50_us: rank(50.0), p90_us: rank(90.0), p99_us: rank(99.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    vocab_size: usize,
    dim: usize,
    k: usize,
    ef_search: usize,
    params: Option<SwvgParams>,
    seed: Option<u64>,
    records: Vec<QueryRecord>,
    graph_latency: Option<LatencyStats>,
    flat_latency: Option<LatencyStats>,
}

impl EvalReport {
    pub(crate) fn new(
        vocab_size: usize,
        dim: usize,
        k: usize,
        ef_search: usize,
        params: Option<SwvgParams>,
        seed: Option<u64>,
        records: Vec<QueryRecord>,
    ) -> Self {
        EvalReport { vocab_size, dim, k, ef_search, params, seed, records, graph_latency: None, flat_latency: None }
    }

    pub(crate) fn attach_latency(&mut self, graph: Vec<f64>, flat: Vec<f64>) {
        self.graph_latency = Some(LatencyStats::from_samples(&graph));
        self.flat_latency = Some(LatencyStats::from_samples(&flat));
        for ((r, g), f) in self.records.iter_mut().zip(graph).zip(flat) {
            r.graph_latency_us = Some(g);
            r.flat_latency_us = Some(f);
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn query_count(&self) -> usize {
        self.records.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ef_search(&self) -> usize {
        self.ef_search
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    pub fn graph_latency(&self) -> Option<&LatencyStats> {
        self.graph_latency.as_ref()
    }

    pub fn flat_latency(&self) -> Option<&LatencyStats> {
        self.flat_latency.as_ref()
    }

    pub fn mean_precision(&self) -> f64 {
        self.records.iter().map(|r| r.precision).sum::<f64>() / self.records.len() as f64
    }

    pub fn min_precision(&self) -> f64 {
        self.records.iter().map(|r| r.precision).fold(f64::INFINITY, f64::min)
    }

    pub fn order_agreement(&self) -> f64 {
        self.records.iter().filter(|r| r.order_agrees).count() as f64 / self.records.len() as f64
    }

    pub fn mean_distance_evals(&self) -> f64 {
        self.records.iter().map(|r| r.distance_evals as f64).sum::<f64>() / self.records.len() as f64
    }

    /// Summary document. Latency keys are left out when `include_latency`
    /// is false, which makes the output reproducible byte for byte.
    pub fn to_text(&self, include_latency: bool) -> String {
        let mut out = String::new();
        let mut kv = |key: &str, value: &dyn std::fmt::Display| {
            writeln!(out, "{key}={value}").expect("writing to a String");
        };
        kv("vocab_size", &self.vocab_size);
        kv("dim", &self.dim);
        kv("queries", &self.records.len());
        kv("k", &self.k);
        kv("ef_search", &self.ef_search);
        if let Some(p) = &self.params {
            kv("m", &p.m);
            kv("m0", &p.m0);
            kv("ef_construction", &p.ef_construction);
            kv("level_mult", &p.level_mult);
        }
        if let Some(seed) = self.seed {
            kv("seed", &seed);
        }
        kv("mean_precision_at_k", &self.mean_precision());
        kv("min_precision_at_k", &self.min_precision());
        kv("order_agreement", &self.order_agreement());
        kv("mean_distance_evals", &self.mean_distance_evals());
        kv("distance_evals_fraction", &(self.mean_distance_evals() / self.vocab_size as f64));
        if include_latency {
            for (name, stats) in [("graph", &self.graph_latency), ("flat", &self.flat_latency)] {
                if let Some(s) = stats {
                    kv(&format!("{name}_latency_us_mean"), &s.mean_us);
                    kv(&format!("{name}_latency_us_p50"), &s.p50_us);
                    kv(&format!("{name}_latency_us_p90"), &s.p90_us);
                    kv(&format!("{name}_latency_us_p99"), &s.p99_us);
                }
            }
            if let (Some(g), Some(f)) = (&self.graph_latency, &self.flat_latency) {
                kv("speedup_p50", &(f.p50_us / g.p50_us));
            }
        }
        out
    }

    /// One JSON record per query.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records contain only plain data"));
            out.push('\n');
        }
        out
    }
}
