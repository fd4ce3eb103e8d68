use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use specinfer::concept::{build_lattice, enumerate_grammar, LatticeOptions};
use specinfer::{reconstruction, ConceptLattice, DemoSet};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specinfer"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn line_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no `{key}` line in\n{text}"))
}

fn case_args(cmd: &mut Command) -> &mut Command {
    cmd.arg("--world")
        .arg(data("gridworld.txt"))
        .arg("--demos")
        .arg(data("demos.json"))
        .args(["--context", reconstruction::CONTEXT])
}

/// The case-study class, generated once into a shared cache.
fn case_class() -> &'static PathBuf {
    static CLASS: OnceLock<PathBuf> = OnceLock::new();
    CLASS.get_or_init(|| {
        let dir = scratch("case-class");
        let path = dir.join("class.json");
        let out = run(bin()
            .args(["gen-class", "--horizon", "15", "--no-cache", "--output"])
            .arg(&path));
        assert!(out.status.success());
        path
    })
}

#[test]
fn toy_grammar_class_sizes() {
    let dir = scratch("toy");
    let out = run(bin()
        .args(["gen-class", "--grammar", "literals-only", "--props", "a", "--horizon", "3"])
        .arg("--cache-dir")
        .arg(&dir));
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(line_value(&text, "syntactic"), "2");
    assert_eq!(line_value(&text, "non-false"), "2");
    assert_eq!(line_value(&text, "semantic classes"), "4 (with false and true)");
    assert_eq!(line_value(&text, "edges"), "4");
}

#[test]
fn warm_cache_skips_subset_checks() {
    let dir = scratch("warm");
    let gen = || {
        run(bin()
            .args(["gen-class", "--grammar", "full", "--props", "a,b", "--horizon", "4"])
            .arg("--cache-dir")
            .arg(&dir))
    };
    let cold = stdout(&gen());
    let warm = stdout(&gen());
    assert_ne!(line_value(&cold, "subset checks"), "0");
    assert!(line_value(&cold, "cache").starts_with("written"));
    assert_eq!(line_value(&warm, "subset checks"), "0");
    assert!(line_value(&warm, "cache").starts_with("hit"));
    assert_eq!(line_value(&cold, "semantic classes"), line_value(&warm, "semantic classes"));
    assert_eq!(line_value(&cold, "edges"), line_value(&warm, "edges"));
}

#[test]
fn class_file_round_trips_to_the_in_memory_lattice() {
    let dir = scratch("round-trip");
    let path = dir.join("class.json");
    let out = run(bin()
        .args(["gen-class", "--grammar", "full", "--props", "a,b", "--horizon", "4", "--no-cache", "--output"])
        .arg(&path));
    assert!(out.status.success());
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let alphabet = specinfer::Alphabet::new(["a", "b"]).unwrap();
    let loaded = ConceptLattice::from_json(&file["lattice"].to_string(), &alphabet).unwrap();

    let grammar = specinfer::GrammarConfig::full(alphabet.clone());
    let (specs, counts) = enumerate_grammar(&grammar);
    let (built, _) = build_lattice(&specs, &alphabet, 4, None, &LatticeOptions::default()).unwrap();
    assert_eq!(loaded, built);
    assert_eq!(file["counts"]["syntactic"], counts.syntactic);
}

#[test]
fn case_study_lattice_and_brute_force_agree() {
    let class = case_class();
    let dir = scratch("case-infer");
    let report = |algorithm: &str, name: &str| -> Value {
        let path = dir.join(name);
        let out = run(case_args(&mut bin().arg("infer"))
            .args(["--algorithm", algorithm, "--lattice"])
            .arg(class)
            .arg("--output")
            .arg(&path));
        assert!(out.status.success());
        assert!(stdout(&out).contains("winner: H((P(blue) & yellow) -> (!blue S brown))"));
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
    };
    let lattice = report("lattice", "lattice.json");
    let brute = report("brute", "brute.json");
    assert_eq!(lattice["result"]["best_spec"], brute["result"]["best_spec"]);
    assert_eq!(lattice["result"]["best_score"], brute["result"]["best_score"]);
    assert_eq!(brute["result"]["queries_issued"], brute["result"]["class_size"]);
    let queries = lattice["result"]["queries_issued"].as_u64().unwrap();
    let size = lattice["result"]["class_size"].as_u64().unwrap();
    assert!(4 * queries <= size, "{queries} queries of {size}");
    assert!(lattice["metadata"]["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reports_are_reproducible_apart_from_metadata() {
    let class = case_class();
    let dir = scratch("repro");
    let result = |workers: &str, name: &str| -> (Value, String) {
        let path = dir.join(name);
        let log = dir.join(format!("{name}.csv"));
        let out = run(case_args(&mut bin().arg("infer"))
            .args(["--audit", "--workers", workers, "--lattice"])
            .arg(class)
            .arg("--output")
            .arg(&path)
            .arg("--query-log")
            .arg(&log));
        assert!(out.status.success());
        let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        (report["result"].clone(), std::fs::read_to_string(&log).unwrap())
    };
    let (a, log) = result("1", "a.json");
    let (b, _) = result("1", "b.json");
    let (c, _) = result("3", "c.json");
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a, c);
    assert_eq!(a["audit"]["violations"], Value::Array(vec![]));
    assert_eq!(log.lines().next(), Some("formula,rand_rate,backend,seconds"));
    assert_eq!(log.lines().count() as u64, a["oracle_computations"].as_u64().unwrap() + 1);
}

fn score(formula: &str, extra: &[&str]) -> (Output, Value) {
    let out = run(bin()
        .arg("score")
        .arg("--world")
        .arg(data("gridworld.txt"))
        .arg("--demos")
        .arg(data("demos.json"))
        .args(["--formula", formula])
        .args(extra));
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out, json)
}

#[test]
fn score_constants_and_target() {
    let (out, t) = score("true", &[]);
    assert!(out.status.success());
    assert_eq!(t["scores"]["indicator"], 0.0);
    assert_eq!(t["n_sat"], 5);

    let (_, f) = score("false", &[]);
    assert_eq!(f["n_sat"], 0);
    assert_eq!(f["rand_rate"], 0.0);
    assert_eq!(f["scores"]["indicator"], 0.0);

    let (_, target) = score(reconstruction::TARGET, &["--context", reconstruction::CONTEXT]);
    assert_eq!(target["n_sat"], 5);
    assert_eq!(target["n_total"], 5);

    // no demonstration touches red, a random agent sometimes does
    let (_, bad) = score("P(red)", &[]);
    assert_eq!(bad["n_sat"], 0);
    assert_eq!(bad["scores"]["indicator"], "-inf");
    assert!(bad["scores"]["beta"].is_number());
}

#[test]
fn exit_codes_distinguish_failures() {
    let (parse_err, _) = score("H(purple)", &[]);
    assert_eq!(parse_err.status.code(), Some(3));

    // one Monte-Carlo sample almost surely misses the target, which the
    // demonstrations all satisfy
    let (inconsistent, record) = score(
        reconstruction::TARGET,
        &["--context", reconstruction::CONTEXT, "--backend", "monte-carlo", "--samples", "1"],
    );
    assert_eq!(inconsistent.status.code(), Some(4));
    assert_eq!(record["scores"]["indicator"], "+inf");

    let out = run(case_args(&mut bin().arg("infer"))
        .args(["--mode", "beta", "--grammar", "literals-only", "--no-cache"]));
    assert_eq!(out.status.code(), Some(3));

    let out = run(case_args(&mut bin().arg("infer"))
        .args(["--horizon", "9", "--grammar", "literals-only", "--no-cache"]));
    assert_eq!(out.status.code(), Some(3));

    let out = run(bin()
        .arg("score")
        .args(["--world", "/nonexistent/world.txt", "--demos", "/nonexistent/demos.json"])
        .args(["--formula", "true"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn beta_mode_runs_with_brute_force() {
    let out = run(case_args(&mut bin().arg("infer"))
        .args(["--algorithm", "brute", "--mode", "beta", "--alpha", "4", "--beta", "1"])
        .args(["--grammar", "literals-only", "--no-cache"]));
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("winner: "));
}

#[test]
fn sample_demos_from_moves_matches_shipped_file() {
    let mut cmd = bin();
    cmd.arg("sample-demos").arg("--world").arg(data("gridworld.txt"));
    for m in reconstruction::DEMO_MOVES {
        cmd.args(["--moves", m]);
    }
    let out = run(&mut cmd);
    assert!(out.status.success());
    let made = DemoSet::from_json(&stdout(&out)).unwrap();
    assert_eq!(made, reconstruction::demos());
}

#[test]
fn random_demos_are_seeded() {
    let sample = |seed: &str| {
        let out = run(bin()
            .arg("sample-demos")
            .arg("--world")
            .arg(data("gridworld.txt"))
            .args(["--slip", "0.25", "--horizon", "6", "--count", "4", "--seed", seed]));
        assert!(out.status.success());
        DemoSet::from_json(&stdout(&out)).unwrap()
    };
    let a = sample("7");
    assert_eq!(a, sample("7"));
    assert_ne!(a, sample("8"));
    assert_eq!(a.len(), 4);
    assert_eq!(a.horizon(), 6);
}

#[test]
fn hasse_export_writes_every_node_and_edge() {
    let dir = scratch("hasse");
    let path = dir.join("hasse.dot");
    let out = run(bin()
        .args(["hasse-export", "--grammar", "literals-only", "--props", "a,b", "--horizon", "3", "--no-cache"])
        .arg("--output")
        .arg(&path));
    assert!(out.status.success());
    let dot = std::fs::read_to_string(&path).unwrap();
    assert!(dot.starts_with("digraph hasse {"));
    // false, H a, H !a, H b, H !b, true
    assert_eq!(dot.matches("[label=").count(), 6);
    assert_eq!(dot.matches(" -> ").count(), 8);
    assert!(dot.contains("label=\"H(!a)\""));
}
