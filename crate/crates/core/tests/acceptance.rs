//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use fgd::bench::{oracle_topk, run_eval_with, synth_dataset, Distribution, EvalOptions};
use fgd::ippt::{compute_bound, matching_mu, metric_rho, transform_points, transform_query, BoundMode, Storage};
use fgd::smoothing::{check_consistency, smooth_consistent, smooth_laplacian, Epsilon};
use fgd::swvg::{encode_index, SwvgParams};
use fgd::{decode_topk, FrequencyTable, Index, SearchMode, VocabularyProjection, WordId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

struct Instance {
    projection: VocabularyProjection,
    queries: Vec<Vec<f64>>,
}

fn random_instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(16..=512);
            let d = rng.random_range(2..=32);
            let tokens = (0..n).map(|i| format!("t{i}")).collect();
            let w = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal) as f32).collect();
            let b = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) as f32).collect();
            let projection = VocabularyProjection::new(tokens, w, Some(b), d).unwrap();
            let queries = (0..4).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
            Instance { projection, queries }
        })
        .collect()
}

fn small_params() -> SwvgParams {
    SwvgParams { ef_construction: 64, ..SwvgParams::with_m(8) }
}

fn equivalence() -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    for (t, inst) in random_instances(200, 1).iter().enumerate() {
        let index: Index<f64> = Index::build(&inst.projection, BoundMode::MaxAugmentedRowNorm, &small_params())
            .map_err(|e| format!("instance {t}: {e}"))?;
        let n = inst.projection.vocab_size();
        for (qi, h) in inst.queries.iter().enumerate() {
            for k in [1, 5, n] {
                let flat = decode_topk(&index, h, k, k, SearchMode::Flat).map_err(|e| e.to_string())?;
                let oracle = oracle_topk(&inst.projection, h, k).map_err(|e| e.to_string())?;
                if flat.ids != oracle.ids {
                    return Err(format!("instance {t} query {qi} K={k}: id order differs"));
                }
                checks += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("{checks} comparisons took {secs:.1}s (limit 60s)"));
    }
    Ok(format!("{checks} comparisons over 200 instances, 0 mismatches, {secs:.2}s"))
}

fn worst_sphere_error<S: Storage>(projection: &VocabularyProjection) -> f64 {
    let bound = compute_bound(projection, BoundMode::MaxAugmentedRowNorm).unwrap();
    let points = transform_points::<S>(projection, bound).unwrap();
    (0..points.len()).map(|i| (points.norm(i) - bound.u()).abs() / bound.u()).fold(0.0, f64::max)
}

fn test_projections() -> Vec<VocabularyProjection> {
    let mut all: Vec<VocabularyProjection> = random_instances(200, 2).into_iter().map(|i| i.projection).collect();
    all.push(synth_dataset(5000, 64, Distribution::Gaussian, 42, 0).projection);
    all.push(synth_dataset(5000, 16, Distribution::ZipfScaledGaussian, 42, 0).projection);
    all.push(
        VocabularyProjection::new(vec!["apple".into(), "banana".into()], vec![1.0, -1.0], Some(vec![0.0, 0.5]), 1)
            .unwrap(),
    );
    all
}

fn sphere_invariant() -> Outcome {
    let projections = test_projections();
    let worst64 = projections.iter().map(worst_sphere_error::<f64>).fold(0.0, f64::max);
    let worst32 = projections.iter().map(worst_sphere_error::<f32>).fold(0.0, f64::max);
    let detail = format!(
        "{} projections, max relative error {worst64:.2e} (64-bit, limit 1e-9), {worst32:.2e} (32-bit, limit 1e-4)",
        projections.len()
    );
    if worst64 <= 1e-9 && worst32 <= 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn logit_recovery() -> Outcome {
    let mut worst_rel64 = 0.0f64;
    let mut worst_abs32 = 0.0f64;
    let mut words = 0usize;
    for inst in random_instances(100, 3) {
        let n = inst.projection.vocab_size();
        let index64: Index<f64> =
            Index::build(&inst.projection, BoundMode::MaxAugmentedRowNorm, &small_params()).unwrap();
        let index32: Index<f32> =
            Index::build(&inst.projection, BoundMode::MaxAugmentedRowNorm, &small_params()).unwrap();
        for h in &inst.queries {
            let r64 = decode_topk(&index64, h, n, n, SearchMode::Flat).unwrap();
            for (id, logit) in r64.ids.iter().zip(&r64.logits) {
                let direct = inst.projection.logit(*id, h);
                worst_rel64 = worst_rel64.max((logit - direct).abs() / direct.abs().max(1.0));
            }
            for mode in [SearchMode::Flat, SearchMode::Graph] {
                let r32 = decode_topk(&index32, h, 10, 64, mode).unwrap();
                for (id, logit) in r32.ids.iter().zip(&r32.logits) {
                    worst_abs32 = worst_abs32.max((logit - inst.projection.logit(*id, h)).abs());
                }
            }
            words += n;
        }
    }
    let detail = format!(
        "{words}+ retrieved words, worst 64-bit relative {worst_rel64:.2e} (limit 1e-9), worst 32-bit absolute {worst_abs32:.2e} (limit 1e-3)"
    );
    if worst_rel64 <= 1e-9 && worst_abs32 <= 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn metric_and_lipschitz() -> Outcome {
    let inst = &random_instances(1, 4)[0];
    let ds = synth_dataset(2000, 16, Distribution::ZipfScaledGaussian, 4, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_triangle = f64::INFINITY;
    let mut worst_lipschitz = f64::INFINITY;
    for projection in [&inst.projection, &ds.projection] {
        let bound = compute_bound(projection, BoundMode::MaxAugmentedRowNorm).unwrap();
        let points = transform_points::<f64>(projection, bound).unwrap();
        let n = points.len();
        let d = projection.dim();
        let pick = |rng: &mut ChaCha8Rng| WordId::from(rng.random_range(0..n));
        for _ in 0..5000 {
            let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let slack = metric_rho(&points, a, b).unwrap() + metric_rho(&points, b, c).unwrap()
                - metric_rho(&points, a, c).unwrap();
            worst_triangle = worst_triangle.min(slack);
        }
        for _ in 0..5000 {
            let (i, j) = (pick(&mut rng), pick(&mut rng));
            let h: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let q = transform_query(&h, d).unwrap();
            let gap =
                metric_rho(&points, i, j).unwrap() - (matching_mu(&points, i, &q) - matching_mu(&points, j, &q)).abs();
            worst_lipschitz = worst_lipschitz.min(gap);
        }
    }
    let detail = format!(
        "10000 triples, min triangle slack {worst_triangle:.2e}; 10000 (pair, query), min Lipschitz margin {worst_lipschitz:.2e} (limit -1e-9)"
    );
    if worst_triangle >= -1e-9 && worst_lipschitz >= -1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn smoothing_theorem() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_norm = 0.0f64;
    for t in 0..1000 {
        let n = rng.random_range(1..=256usize);
        let k = rng.random_range(1..=n);
        let counts: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1.0)).collect();
        let freq = FrequencyTable::from_counts(counts).unwrap();
        let mut ids: Vec<WordId> = (0..n).map(WordId::from).collect();
        for i in 0..k {
            let j = rng.random_range(i..n);
            ids.swap(i, j);
        }
        ids.truncate(k);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(1e-3..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let y: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let min_y = y.iter().copied().fold(f64::INFINITY, f64::min);
        let eps = loop {
            let e = rng.random::<f64>() * min_y;
            if e > 0.0 && e < min_y {
                break e;
            }
        };
        let dist = smooth_consistent(&ids, &y, &freq, Epsilon::Fixed(eps)).map_err(|e| format!("instance {t}: {e}"))?;
        let report = check_consistency(&dist, &y);
        if !report.is_consistent() {
            return Err(format!("instance {t} (|V|={n}, K={k}, eps={eps}): {report:?}"));
        }
        let sum: f64 = dist.materialize().iter().sum();
        worst_norm = worst_norm.max((sum - 1.0).abs());
    }
    if worst_norm > 1e-10 {
        return Err(format!("normalization error {worst_norm:.2e} exceeds 1e-10"));
    }

    let f = FrequencyTable::from_counts(vec![0.01, 0.01, 0.98]).unwrap();
    let lap = smooth_laplacian(&[0.5, 0.5, 0.0], &f, 1.0).map_err(|e| e.to_string())?;
    let report = check_consistency(&lap, &[0.5, 0.5]);
    if report.topk_dominates {
        return Err("Laplacian counterexample unexpectedly satisfies dominance".into());
    }
    Ok(format!(
        "1000 instances consistent, max |sum - 1| {worst_norm:.2e}; Laplacian counterexample fails dominance ({:.3} > {:.3})",
        lap.prob(WordId(2)),
        lap.prob(WordId(0))
    ))
}

fn graph_quality() -> Outcome {
    let ds = synth_dataset(20_000, 64, Distribution::Gaussian, 42, 1000);
    let params = SwvgParams::default();
    let start = Instant::now();
    let index: Index =
        Index::build(&ds.projection, BoundMode::MaxAugmentedRowNorm, &params).map_err(|e| e.to_string())?;
    let build_secs = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let options = EvalOptions { timing: None, seed: Some(params.seed) };
    let report = run_eval_with(&index, &ds.projection, &ds.queries, 10, 128, &options).map_err(|e| e.to_string())?;
    let eval_secs = start.elapsed().as_secs_f64();
    let witness = run_eval_with(&index, &ds.projection, &ds.queries, 10, 64, &options).map_err(|e| e.to_string())?;

    let precision = report.mean_precision();
    let evals = report.mean_distance_evals();
    let detail = format!(
        "precision@10 {precision:.4} (>= 0.95), mean distance evals {evals:.0} (<= {}), build {build_secs:.1}s (< 300), eval {eval_secs:.1}s (< 120); at ef 64: {:.0} evals = {:.3}|V|",
        0.25 * 20_000.0,
        witness.mean_distance_evals(),
        witness.mean_distance_evals() / 20_000.0
    );
    if precision >= 0.95 && evals <= 0.25 * 20_000.0 && build_secs < 300.0 && eval_secs < 120.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exactness_at_limit() -> Outcome {
    let mut queries_checked = 0;
    for (t, inst) in random_instances(60, 6).into_iter().enumerate() {
        let n = inst.projection.vocab_size().min(256);
        let projection = if n < inst.projection.vocab_size() {
            let d = inst.projection.dim();
            VocabularyProjection::new(
                inst.projection.tokens()[..n].to_vec(),
                inst.projection.weights()[..n * d].to_vec(),
                Some(inst.projection.biases()[..n].to_vec()),
                d,
            )
            .unwrap()
        } else {
            inst.projection
        };
        let params = SwvgParams { ef_construction: 16, ..SwvgParams::with_m(2 + t % 6) };
        let index: Index = Index::build(&projection, BoundMode::MaxAugmentedRowNorm, &params).unwrap();
        if !index.graph().is_layer0_strongly_connected() {
            return Err(format!("instance {t}: layer 0 not strongly connected"));
        }
        let report = run_eval_with(&index, &projection, &inst.queries, 10.min(n), n, &EvalOptions::default())
            .map_err(|e| e.to_string())?;
        if report.min_precision() != 1.0 {
            return Err(format!("instance {t} (|V|={n}): min precision {}", report.min_precision()));
        }
        queries_checked += inst.queries.len();
    }
    Ok(format!("60 indexes with |V| <= 256, {queries_checked} queries, all precision@K = 1"))
}

fn determinism() -> Outcome {
    let ds = synth_dataset(3000, 24, Distribution::ZipfScaledGaussian, 42, 200);
    let build =
        || -> Index { Index::build(&ds.projection, BoundMode::MaxAugmentedRowNorm, &SwvgParams::default()).unwrap() };
    let (a, b) = (build(), build());
    let bytes_a = encode_index(a.graph(), a.points()).map_err(|e| e.to_string())?;
    let bytes_b = encode_index(b.graph(), b.points()).map_err(|e| e.to_string())?;
    if bytes_a != bytes_b {
        return Err("index files differ between identical builds".into());
    }
    let options = EvalOptions { timing: None, seed: Some(42) };
    let ra = run_eval_with(&a, &ds.projection, &ds.queries, 10, 32, &options).map_err(|e| e.to_string())?;
    let rb = run_eval_with(&b, &ds.projection, &ds.queries, 10, 32, &options).map_err(|e| e.to_string())?;
    if ra.to_text(false) != rb.to_text(false) || ra.to_jsonl() != rb.to_jsonl() {
        return Err("eval metrics differ between runs".into());
    }
    Ok(format!("index files identical ({} bytes), eval summaries and records identical", bytes_a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("equivalence", equivalence),
        ("sphere-invariant", sphere_invariant),
        ("logit-recovery", logit_recovery),
        ("metric-lipschitz", metric_and_lipschitz),
        ("smoothing-consistency", smoothing_theorem),
        ("graph-quality", graph_quality),
        ("exactness-at-limit", exactness_at_limit),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
