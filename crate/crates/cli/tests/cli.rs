use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosetlin"))
        .args(args)
        .env_remove("COSETLIN_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

const SAT: &str = "mod2 2\nvar x 0 0\nvar y 1 1\ncon eq x y\n";
const TWO_CYCLE: &str = "mod2 2\nvar x 1 1\nvar y 1 1\ncon eq x y\ncon neg x y\n";

#[test]
fn budget_zero_on_satisfiable_instance() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "sat.txt", SAT);
    let o = run(&["solve", f.to_str().unwrap(), "--budget", "0", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["answer"], "YES");
    assert_eq!(v["deletions"], serde_json::json!([]));
    assert_eq!(v["cardinality"], 0);
}

#[test]
fn exhaustive_on_unbalanced_two_cycle() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "c.txt", TWO_CYCLE);
    let path = f.to_str().unwrap();
    let o = run(&[
        "solve",
        path,
        "--mode",
        "exhaustive",
        "--budget",
        "1",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["deletions"].as_array().unwrap().len(), 1);
    assert_eq!(v["cardinality"], 1);

    let o = run(&["solve", path, "--mode", "exhaustive", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("NO"));
}

#[test]
fn lift_stats_on_forest() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "tree.txt",
        "mod2 3\nvar a 0 0\nvar b 0 0\nvar c 0 0\ncon eq a b\ncon dbl b c\n",
    );
    let o = run(&["lift", f.to_str().unwrap(), "--stats", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["rho"], 0);
    assert!(v.get("R").is_some());
    assert!(v.get("mu").is_some());
    assert!(v.get("exact_regime").is_some());
    assert!(v["edges"].is_number());

    let o = run(&["lift", f.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.contains("rho: 0"));
    assert!(text.contains("c0: a -- b"));
}

#[test]
fn parse_errors_exit_two_with_line() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "bad.txt", "mod2 2\nvar x 0 0\nanchor x 5\n");
    let o = run(&["solve", f.to_str().unwrap(), "--budget", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("out of range"), "{err}");

    let empty = write(dir.path(), "empty.txt", "");
    assert_eq!(
        run(&["stats", empty.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["solve", "--budget"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = run(&[
        "solve",
        f.to_str().unwrap(),
        "--budget",
        "1",
        "--strategy",
        "nope",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_same_json() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("g.txt");
    let gen = run(&[
        "gen",
        "--n",
        "8",
        "--m",
        "14",
        "--plant-k",
        "2",
        "--seed",
        "5",
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0));
    let solve = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_cosetlin"))
            .args([
                "solve",
                inst.to_str().unwrap(),
                "--budget",
                "2",
                "--reps",
                "50",
                "--json",
            ])
            .env("COSETLIN_SEED", seed)
            .output()
            .unwrap();
        let mut v = json(&o);
        v.as_object_mut().unwrap().remove("timings");
        (o.status.code(), v)
    };
    let (a, b) = (solve("9"), solve("9"));
    assert_eq!(a, b);
    assert_eq!(a.1["seed"], 9);
}

#[test]
fn gen_verify_and_oracle_agree() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("g.txt");
    let planted = dir.path().join("p.txt");
    let o = run(&[
        "gen",
        "--n",
        "6",
        "--m",
        "10",
        "--d",
        "2",
        "--plant-k",
        "2",
        "--seed",
        "17",
        "--out",
        inst.to_str().unwrap(),
        "--planted",
        planted.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let ip = inst.to_str().unwrap();
    let o = run(&["verify", ip, "--deletions", planted.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "VALID");

    let oracle = json(&run(&["oracle", ip, "--budget", "2", "--json"]));
    let record = run(&[
        "solve",
        ip,
        "--budget",
        "2",
        "--mode",
        "exhaustive",
        "--json",
    ]);
    let solved = json(&record);
    assert_eq!(oracle["best"]["cardinality"], solved["cardinality"]);

    // The record itself is accepted by `verify`.
    let rec = write(dir.path(), "r.json", &stdout(&record));
    assert_eq!(
        run(&["verify", ip, "--deletions", rec.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );

    let empty = write(dir.path(), "none.txt", "\n");
    let o = run(&["verify", ip, "--deletions", empty.to_str().unwrap()]);
    let expect = if solved["cardinality"] == 0 { 0 } else { 1 };
    assert_eq!(o.status.code(), Some(expect));
}

#[test]
fn stats_reports_kinds_and_regimes() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "c.txt", TWO_CYCLE);
    let v = json(&run(&["stats", f.to_str().unwrap(), "--json"]));
    assert_eq!(v["variables"], 2);
    assert_eq!(v["eq"], 1);
    assert_eq!(v["neg"], 1);
    assert_eq!(v["regimes"]["depth_at_most_two"], true);
}

#[test]
fn weighted_solve_reports_weight() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "w.txt",
        "mod2 2\nvar a 1 1\nvar b 1 1\nvar c 1 1\ncon neg a b 5\ncon eq a c 0.5\ncon eq c b 3/4\n",
    );
    let v = json(&run(&[
        "solve",
        f.to_str().unwrap(),
        "--budget",
        "2",
        "--weighted",
        "--json",
    ]));
    assert_eq!(v["deletions"], serde_json::json!([1]));
    assert_eq!(v["weight"], "1/2");
}
