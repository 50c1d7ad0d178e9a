use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fgd::bench::{load_queries, parse_queries, run_eval_with, save_queries, synth_dataset, EvalOptions, Timing};
use fgd::ippt::BoundMode;
use fgd::projection::{load_frequencies, load_projection, save_frequencies, save_projection, ProjectionFormat};
use fgd::smoothing::{smooth_topk, Epsilon, SmoothingMode};
use fgd::swvg::SwvgParams;
use fgd::{decode_topk, Error, FrequencyTable, Index, SearchMode, VocabularyProjection};

use crate::{BuildArgs, EvalArgs, Failure, ProjectionArgs, QueryArgs, SynthArgs};

type CmdResult = Result<(), Failure>;

fn load(args: &ProjectionArgs) -> Result<VocabularyProjection, Failure> {
    Ok(load_projection(&args.embeddings, args.format)?)
}

fn load_matching(index_path: &Path, projection: &ProjectionArgs) -> Result<(Index, VocabularyProjection), Failure> {
    let index = Index::load(index_path)?;
    let proj = load(projection)?;
    if index.vocab_size() != proj.vocab_size() || index.source_dim() != proj.dim() {
        return Err(Failure::Runtime(format!(
            "index {} covers {} words of dimension {}, but projection {} has {} words of dimension {}",
            index_path.display(),
            index.vocab_size(),
            index.source_dim(),
            projection.embeddings.display(),
            proj.vocab_size(),
            proj.dim()
        )));
    }
    Ok((index, proj))
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

pub(crate) fn build(args: BuildArgs) -> CmdResult {
    let m = args.m as usize;
    let params = SwvgParams {
        m0: args.m0.unwrap_or(2 * m),
        ef_construction: args.ef_construction as usize,
        seed: args.seed,
        ..SwvgParams::with_m(m)
    };
    params.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let bound = match args.bound {
        Some(u) => BoundMode::Explicit(u),
        None => BoundMode::MaxAugmentedRowNorm,
    };

    let proj = load(&args.projection)?;
    if let Some(path) = &args.freq {
        load_frequencies(path, &proj, args.floor)?;
    }
    let start = Instant::now();
    let index: Index = Index::build(&proj, bound, &params)?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    index.save(&args.out)?;

    let b = index.bound();
    let histogram: Vec<String> = index.graph().level_histogram().iter().map(usize::to_string).collect();
    let mut out = String::new();
    let _ = writeln!(out, "index={}", args.out.display());
    let _ = writeln!(out, "vocab_size={}", proj.vocab_size());
    let _ = writeln!(out, "dim={}", proj.dim());
    let _ = writeln!(out, "bias={}", u8::from(proj.has_bias()));
    let _ = writeln!(out, "U={}", b.u());
    let _ = writeln!(out, "max_row_norm={}", b.max_row_norm());
    let _ = writeln!(out, "bound_mode={}", if b.is_explicit() { "explicit" } else { "max_augmented_row_norm" });
    let _ = writeln!(out, "M={}", params.m);
    let _ = writeln!(out, "M0={}", params.m0);
    let _ = writeln!(out, "ef_construction={}", params.ef_construction);
    let _ = writeln!(out, "seed={}", params.seed);
    let _ = writeln!(out, "levels={}", histogram.join(","));
    let _ = writeln!(out, "build_ms={build_ms:.1}");
    print!("{out}");
    Ok(())
}

enum Smoothing {
    None,
    Mode(SmoothingMode, Option<FrequencyTable>),
}

fn smoothing_for(args: &QueryArgs, proj: &VocabularyProjection) -> Result<Smoothing, Failure> {
    if args.smooth == "none" {
        return Ok(Smoothing::None);
    }
    let mode: SmoothingMode = args.smooth.parse().map_err(Failure::Runtime)?;
    let freq = match (&args.freq, mode) {
        (Some(path), _) => Some(load_frequencies(path, proj, args.floor)?),
        (None, SmoothingMode::WinnersTakeAll) => None,
        (None, _) => return Err(Failure::Runtime(format!("frequency table required for {mode} smoothing (--freq)"))),
    };
    Ok(Smoothing::Mode(mode, freq))
}

pub(crate) fn query(args: QueryArgs) -> CmdResult {
    let k = args.k as usize;
    let ef = args.ef_search as usize;
    if args.mode == SearchMode::Graph && ef < k {
        return Err(Failure::Usage(format!("--ef-search {ef} must be at least --k {k}")));
    }
    let (index, proj) = load_matching(&args.index, &args.projection)?;
    let smoothing = smoothing_for(&args, &proj)?;
    let queries = match (&args.vector, &args.queries) {
        (Some(v), _) => parse_queries(v)?,
        (None, Some(path)) => load_queries(path)?,
        (None, None) => unreachable!("clap requires one of --vector / --queries"),
    };
    if queries.is_empty() {
        return Err(Failure::Runtime("no queries".into()));
    }

    let mut out = String::new();
    for (qi, h) in queries.iter().enumerate() {
        let wrap = |e: Error| Error::Query { index: qi, source: Box::new(e) };
        let result = decode_topk(&index, h, k, ef, args.mode).map_err(wrap)?;
        let smoothed = match &smoothing {
            Smoothing::None => None,
            Smoothing::Mode(mode, freq) => {
                let eps = args.epsilon.map_or(Epsilon::FractionOfMin(args.epsilon_frac), Epsilon::Fixed);
                Some(
                    smooth_topk(&result.ids, &result.probs, *mode, freq.as_ref(), proj.vocab_size(), eps)
                        .map_err(wrap)?,
                )
            }
        };
        if qi > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# query {qi}");
        match &smoothed {
            Some(_) => out.push_str("rank\ttoken\tlogit\tprob\tsmoothed_prob\tdist_evals\n"),
            None => out.push_str("rank\ttoken\tlogit\tprob\tdist_evals\n"),
        }
        for (rank, ((id, logit), prob)) in result.ids.iter().zip(&result.logits).zip(&result.probs).enumerate() {
            let _ = write!(out, "{}\t{}\t{logit}\t{prob}", rank + 1, proj.token(*id));
            if let Some(s) = &smoothed {
                let _ = write!(out, "\t{}", s.prob(*id));
            }
            let _ = writeln!(out, "\t{}", result.distance_evals);
        }
        if let Some(s) = &smoothed {
            let _ = writeln!(out, "# smoothing={} epsilon={} tail_mass={}", s.mode(), s.epsilon(), s.tail_mass());
        }
    }
    print!("{out}");
    Ok(())
}

pub(crate) fn eval(mut args: EvalArgs, sections: bool) -> CmdResult {
    let k = args.k as usize;
    if args.ef_search.is_empty() {
        args.ef_search = if sections { vec![16, 32, 64, 128, 256] } else { vec![128] };
    }
    for &ef in &args.ef_search {
        if (ef as usize) < k {
            return Err(Failure::Usage(format!("--ef-search {ef} must be at least --k {k}")));
        }
    }
    let (index, proj) = load_matching(&args.index, &args.projection)?;
    let queries = load_queries(&args.queries)?;
    if queries.is_empty() {
        return Err(Failure::Runtime("no queries".into()));
    }
    let options = EvalOptions { timing: (!args.no_latency).then(Timing::default), seed: args.seed };

    let sections = sections || args.ef_search.len() > 1;
    let mut summary = String::new();
    let mut records = String::new();
    for (i, &ef) in args.ef_search.iter().enumerate() {
        let report = run_eval_with(&index, &proj, &queries, k, ef as usize, &options)?;
        if sections {
            if i > 0 {
                summary.push('\n');
            }
            let _ = writeln!(summary, "# ef_search={ef}");
        }
        summary.push_str(&report.to_text(!args.no_latency));
        records.push_str(&report.to_jsonl());
    }
    if let Some(path) = &args.out {
        write_file(path, &records)?;
    }
    print!("{summary}");
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub(crate) fn synth(args: SynthArgs) -> CmdResult {
    let ds = synth_dataset(args.vocab as usize, args.dim as usize, args.dist, args.seed, args.queries);
    let proj_path = with_suffix(
        &args.out_prefix,
        match args.format {
            ProjectionFormat::Text => ".proj.txt",
            ProjectionFormat::Binary => ".proj.bin",
        },
    );
    let freq_path = with_suffix(&args.out_prefix, ".freq.txt");
    let query_path = with_suffix(&args.out_prefix, ".queries.txt");
    save_projection(&ds.projection, &proj_path, args.format)?;
    save_frequencies(&ds.frequencies, &ds.projection, &freq_path)?;
    save_queries(&ds.queries, &query_path)?;
    println!("projection={}", proj_path.display());
    println!("frequencies={}", freq_path.display());
    println!("queries={}", query_path.display());
    Ok(())
}
