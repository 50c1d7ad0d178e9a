use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgd")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value of `key=` in a key=value document.
fn field(doc: &str, key: &str) -> String {
    let prefix = format!("{key}=");
    doc.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("no {key} in\n{doc}")).to_string()
}

fn assert_single_line_error(o: &Output, code: i32) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    let err = stderr(o);
    assert_eq!(err.lines().count(), 1, "diagnostic should be one line: {err:?}");
    assert!(err.starts_with("error: "), "{err}");
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    /// The two-word, one-dimensional projection with biases.
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("p.txt"), "2 1 1\napple 1.0 0.0\nbanana -1.0 0.5\n").unwrap();
        fs::write(dir.path().join("f.txt"), "apple 3\nbanana 1\n").unwrap();
        let f = Fixture { dir };
        let o = fgd(&["build", "--embeddings", f.path("p.txt"), "--out", f.path("i.fgdi")]);
        assert!(o.status.success(), "{}", stderr(&o));
        f
    }

    fn path(&self, name: &str) -> &'static str {
        let p: PathBuf = self.dir.path().join(name);
        Box::leak(p.into_os_string().into_string().unwrap().into_boxed_str())
    }

    fn query(&self, extra: &[&str]) -> Output {
        let mut args = vec!["query", "--index", self.path("i.fgdi"), "--embeddings", self.path("p.txt")];
        args.extend_from_slice(extra);
        fgd(&args)
    }
}

/// Rows of the first TSV block as (token, logit, prob, smoothed?).
fn rows(out: &str) -> Vec<Vec<String>> {
    out.lines()
        .skip_while(|l| l.starts_with('#'))
        .skip(1)
        .take_while(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').map(String::from).collect())
        .collect()
}

#[test]
fn build_summary_and_determinism() {
    let f = Fixture::new();
    let o = fgd(&["build", "--embeddings", f.path("p.txt"), "--out", f.path("j.fgdi")]);
    assert!(o.status.success());
    let out = stdout(&o);
    let u: f64 = field(&out, "U").parse().unwrap();
    assert!((u - 1.118034).abs() < 1e-6);
    assert_eq!(field(&out, "vocab_size"), "2");
    assert_eq!(field(&out, "dim"), "1");
    assert!(field(&out, "levels").split(',').all(|c| c.parse::<usize>().is_ok()));
    assert_eq!(fs::read(f.path("i.fgdi")).unwrap(), fs::read(f.path("j.fgdi")).unwrap());
    fgd::Index::load(f.path("j.fgdi")).unwrap();
}

#[test]
fn build_missing_file_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.txt");
    let o = fgd(&["build", "--embeddings", s(&missing), "--out", s(&dir.path().join("x"))]);
    assert_single_line_error(&o, 1);
    assert!(stderr(&o).contains("nowhere.txt"));
}

#[test]
fn build_rejects_bad_params_as_usage() {
    let f = Fixture::new();
    let o = fgd(&["build", "--embeddings", f.path("p.txt"), "--out", f.path("x"), "--M", "1"]);
    assert_single_line_error(&o, 2);
    let o =
        fgd(&["build", "--embeddings", f.path("p.txt"), "--out", f.path("x"), "--M", "8", "--ef-construction", "4"]);
    assert_single_line_error(&o, 2);
    let o = fgd(&["build", "--embeddings", f.path("p.txt"), "--out", f.path("x"), "--bound", "0.5"]);
    assert_single_line_error(&o, 1);
}

#[test]
fn query_fixture_flat() {
    let f = Fixture::new();
    let o = f.query(&["--vector", "2", "--k", "2", "--mode", "flat"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("rank\ttoken\tlogit\tprob\tdist_evals\n"));
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    assert_eq!(r[0][1], "apple");
    assert_eq!(r[1][1], "banana");
    assert_eq!(r[0][2].parse::<f64>().unwrap(), 2.0);
    assert_eq!(r[1][2].parse::<f64>().unwrap(), -1.5);
    assert!((r[0][3].parse::<f64>().unwrap() - 0.970688).abs() < 1e-6);
    assert_eq!(r[0][4], "2");
}

#[test]
fn query_graph_mode_and_negative_vector() {
    let f = Fixture::new();
    let o = f.query(&["--vector", "-2", "--k", "1", "--ef-search", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r[0][1], "banana");
    assert_eq!(r[0][3], "1");
}

#[test]
fn query_usage_errors() {
    let f = Fixture::new();
    assert_single_line_error(&f.query(&["--vector", "2", "--k", "0"]), 2);
    assert_single_line_error(&f.query(&["--vector", "2", "--k", "2", "--ef-search", "1"]), 2);
    assert_single_line_error(&f.query(&["--vector", "2", "--mode", "sideways"]), 2);
    assert_single_line_error(&f.query(&["--k", "1"]), 2);
}

#[test]
fn query_runtime_errors() {
    let f = Fixture::new();
    let o = f.query(&["--vector", "2", "--k", "2", "--smooth", "consistent"]);
    assert_single_line_error(&o, 1);
    assert!(stderr(&o).contains("frequency table required"));

    let o = f.query(&["--vector", "2", "--k", "2", "--smooth", "kneser-ney"]);
    assert_single_line_error(&o, 1);
    assert!(stderr(&o).contains("unknown smoothing mode"));

    let o = f.query(&["--vector", "2,3", "--k", "2"]);
    assert_single_line_error(&o, 1);
    assert!(stderr(&o).contains("dimension mismatch"));

    let o =
        f.query(&["--vector", "2", "--k", "1", "--smooth", "consistent", "--freq", f.path("f.txt"), "--epsilon", "1"]);
    assert_single_line_error(&o, 1);
    assert!(stderr(&o).contains("epsilon bound violated"));

    let o = f.query(&["--vector", "2", "--k", "3"]);
    assert_single_line_error(&o, 1);
}

#[test]
fn query_with_smoothing_sums_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("z");
    assert!(fgd(&[
        "synth",
        "--vocab",
        "300",
        "--dim",
        "8",
        "--dist",
        "zipf",
        "--queries",
        "3",
        "--out-prefix",
        s(&prefix)
    ])
    .status
    .success());
    let proj = dir.path().join("z.proj.txt");
    let index = dir.path().join("z.fgdi");
    assert!(fgd(&["build", "--embeddings", s(&proj), "--out", s(&index), "--M", "6"]).status.success());
    for mode in ["consistent", "laplacian", "wta"] {
        let o = fgd(&[
            "query",
            "--index",
            s(&index),
            "--embeddings",
            s(&proj),
            "--queries",
            s(&dir.path().join("z.queries.txt")),
            "--k",
            "5",
            "--smooth",
            mode,
            "--freq",
            s(&dir.path().join("z.freq.txt")),
        ]);
        assert!(o.status.success(), "{mode}: {}", stderr(&o));
        let out = stdout(&o);
        assert!(out.contains("rank\ttoken\tlogit\tprob\tsmoothed_prob\tdist_evals\n"));
        assert_eq!(out.matches("# query").count(), 3);
        let r = rows(&out);
        assert_eq!(r.len(), 5);
        let tail: f64 = out.lines().find_map(|l| l.split("tail_mass=").nth(1)).unwrap().parse().unwrap();
        let kept: f64 = r.iter().map(|row| row[4].parse::<f64>().unwrap()).sum();
        if mode != "laplacian" {
            assert!((kept + tail - 1.0).abs() < 1e-10, "{mode}: {kept} + {tail}");
        }
        if mode != "laplacian" {
            let smoothed: Vec<f64> = r.iter().map(|row| row[4].parse().unwrap()).collect();
            assert!(smoothed.windows(2).all(|w| w[0] >= w[1]), "{mode}: order within top-K");
        }
    }
}

#[test]
fn synth_build_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("syn");
    let o = fgd(&["synth", "--vocab", "1000", "--dim", "32", "--queries", "40", "--out-prefix", s(&prefix)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let proj = dir.path().join("syn.proj.txt");
    let queries = dir.path().join("syn.queries.txt");
    let index = dir.path().join("syn.fgdi");
    let o =
        fgd(&["build", "--embeddings", s(&proj), "--freq", s(&dir.path().join("syn.freq.txt")), "--out", s(&index)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let records = dir.path().join("r.jsonl");
    let o = fgd(&[
        "eval",
        "--index",
        s(&index),
        "--embeddings",
        s(&proj),
        "--queries",
        s(&queries),
        "--k",
        "10",
        "--ef-search",
        "1000",
        "--out",
        s(&records),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "mean_precision_at_k"), "1");
    assert_eq!(field(&out, "queries"), "40");
    assert!(field(&out, "graph_latency_us_p50").parse::<f64>().unwrap() > 0.0);
    assert_eq!(fs::read_to_string(&records).unwrap().lines().count(), 40);
}

#[test]
fn eval_is_deterministic_without_latency() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("d");
    fgd(&["synth", "--vocab", "800", "--dim", "12", "--queries", "30", "--out-prefix", s(&prefix)]);
    let proj = dir.path().join("d.proj.txt");
    let index = dir.path().join("d.fgdi");
    fgd(&["build", "--embeddings", s(&proj), "--out", s(&index), "--M", "4"]);
    let run = || {
        let o = fgd(&[
            "eval",
            "--index",
            s(&index),
            "--embeddings",
            s(&proj),
            "--queries",
            s(&dir.path().join("d.queries.txt")),
            "--ef-search",
            "16",
            "--no-latency",
            "--seed",
            "42",
        ]);
        assert!(o.status.success());
        stdout(&o)
    };
    let a = run();
    assert_eq!(a, run());
    assert!(!a.contains("latency"));
    assert_eq!(field(&a, "seed"), "42");
}

#[test]
fn bench_sections_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("b");
    fgd(&["synth", "--vocab", "2000", "--dim", "16", "--queries", "60", "--seed", "3", "--out-prefix", s(&prefix)]);
    let proj = dir.path().join("b.proj.txt");
    let index = dir.path().join("b.fgdi");
    fgd(&["build", "--embeddings", s(&proj), "--out", s(&index), "--M", "4", "--ef-construction", "20"]);
    let o = fgd(&[
        "bench",
        "--index",
        s(&index),
        "--embeddings",
        s(&proj),
        "--queries",
        s(&dir.path().join("b.queries.txt")),
        "--k",
        "5",
        "--ef-search",
        "8,16,32",
        "--no-latency",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let sections: Vec<&str> = out.split("# ef_search=").skip(1).collect();
    assert_eq!(sections.len(), 3);
    let precisions: Vec<f64> = sections.iter().map(|sec| field(sec, "mean_precision_at_k").parse().unwrap()).collect();
    assert!(precisions.windows(2).all(|w| w[0] <= w[1]), "{precisions:?}");
}

#[test]
fn eval_errors() {
    let f = Fixture::new();
    fs::write(f.path("empty.txt"), "").unwrap();
    let o =
        fgd(&["eval", "--index", f.path("i.fgdi"), "--embeddings", f.path("p.txt"), "--queries", f.path("empty.txt")]);
    assert_single_line_error(&o, 1);
    assert!(stderr(&o).contains("no queries"));

    fs::write(f.path("two.txt"), "3 1 0\na 1\nb 2\nc 3\n").unwrap();
    fs::write(f.path("q.txt"), "1\n").unwrap();
    let o =
        fgd(&["eval", "--index", f.path("i.fgdi"), "--embeddings", f.path("two.txt"), "--queries", f.path("q.txt")]);
    assert_single_line_error(&o, 1);
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let o = fgd(&[
            "synth",
            "--vocab",
            "50",
            "--dim",
            "4",
            "--dist",
            "zipf",
            "--seed",
            "9",
            "--queries",
            "5",
            "--out-prefix",
            s(&dir.path().join(name)),
        ]);
        assert!(o.status.success());
    }
    for suffix in [".proj.txt", ".freq.txt", ".queries.txt"] {
        let a = fs::read(dir.path().join(format!("a{suffix}"))).unwrap();
        let b = fs::read(dir.path().join(format!("b{suffix}"))).unwrap();
        assert_eq!(a, b, "{suffix}");
    }
}

#[test]
fn binary_projection_format() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("bin");
    let o = fgd(&[
        "synth",
        "--vocab",
        "200",
        "--dim",
        "6",
        "--format",
        "bin",
        "--queries",
        "2",
        "--out-prefix",
        s(&prefix),
    ]);
    assert!(o.status.success());
    let proj = dir.path().join("bin.proj.bin");
    let index = dir.path().join("bin.fgdi");
    assert!(fgd(&["build", "--embeddings", s(&proj), "--format", "bin", "--out", s(&index)]).status.success());
    let o = fgd(&[
        "query",
        "--index",
        s(&index),
        "--embeddings",
        s(&proj),
        "--format",
        "bin",
        "--vector",
        "1,0,0,0,0,0",
        "--k",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(rows(&stdout(&o)).len(), 3);
}

#[test]
fn single_word_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("one");
    assert!(fgd(&["synth", "--vocab", "1", "--dim", "3", "--out-prefix", s(&prefix)]).status.success());
    let proj = dir.path().join("one.proj.txt");
    let index = dir.path().join("one.fgdi");
    assert!(fgd(&["build", "--embeddings", s(&proj), "--out", s(&index)]).status.success());
    let o = fgd(&["query", "--index", s(&index), "--embeddings", s(&proj), "--vector", "0.5,-1,2", "--k", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][3], "1");
}

#[test]
fn help_exits_zero() {
    let o = fgd(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("build"));
}
