use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlsenum"))
        .args(args)
        .env_remove("DLSENUM_THREADS")
        .output()
        .unwrap()
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_dlsenum"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn order_one_has_one_square() {
    for cs in ["ls", "dls"] {
        let out = run(&["count", "--order", "1", "--constraints", cs, "--format", "json"]);
        let v = json(&out);
        assert_eq!(v["normalized"], 1);
        assert_eq!(v["total"], 1);
    }
}

#[test]
fn count_reports_normalized_and_total() {
    let v = json(&run(&["count", "--order", "7", "--constraints", "dls", "--format", "json"]));
    assert_eq!(v["normalized"], 171_200);
    assert_eq!(v["total"], 171_200u64 * 5040);
    assert_eq!(v["multiplier"], 5040);
    assert_eq!(v["order"], 7);

    let text = stdout(&run(&["count", "--order", "7", "--constraints", "dls", "--threads", "2"]));
    assert!(text.contains("171200"), "{text}");

    let sym = json(&run(&[
        "count",
        "--order",
        "7",
        "--constraints",
        "dls",
        "--symmetry-breaking",
        "--format",
        "json",
    ]));
    assert_eq!(sym["normalized"], 171_200);

    let ls = json(&run(&["count", "--order", "5", "--constraints", "ls", "--format", "json"]));
    assert_eq!(ls["normalized"], 56);
}

#[test]
fn usage_errors_exit_with_two() {
    let cases: &[&[&str]] = &[
        &["count"],
        &["count", "--order", "0", "--constraints", "ls"],
        &["count", "--order", "17", "--constraints", "ls"],
        &["count", "--order", "3", "--constraints", "vsdls"],
        &["count", "--order", "5", "--constraints", "xyz"],
        &["count", "--order", "5", "--constraints", "ls", "--symmetry-breaking"],
        &["count", "--order", "5", "--constraints", "dls", "--lookahead", "90..95"],
        &["count", "--order", "5", "--constraints", "dls", "--bogus"],
        &["estimate", "--order", "6", "--constraints", "dls", "--depth", "3", "--samples", "10"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn failures_exit_with_one() {
    let out = run(&["workunits", "run", "--in", "/nonexistent/units.txt", "--out", "/nonexistent/r.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/units.txt"));

    let bad = run_stdin(&["validate", "--constraints", "dls"], "0 1 2 3\n3 2 1 0\n1 0 3 2\n2 3 1 0\n");
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn validate_reads_stdin() {
    let good = run_stdin(
        &["validate", "--constraints", "dls", "--format", "json"],
        "0 1 2 3\n3 2 1 0\n1 0 3 2\n2 3 0 1\n",
    );
    let v = json(&good);
    assert_eq!(v["valid"], true);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);

    let partial = run_stdin(&["validate", "--constraints", "ls", "--partial"], "0 1\n_ 0\n");
    assert_eq!(partial.status.code(), Some(0));
    let strict = run_stdin(&["validate", "--constraints", "ls"], "0 1\n_ 0\n");
    assert_eq!(strict.status.code(), Some(1));
    let garbage = run_stdin(&["validate", "--constraints", "ls"], "0 x\n1 0\n");
    assert_eq!(garbage.status.code(), Some(2));
}

#[test]
fn plan_json_round_trips() {
    let v = json(&run(&["plan", "--order", "6", "--constraints", "dls", "--format", "json"]));
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 30);
    assert_eq!(v["fingerprint"].as_str().unwrap().len(), 16);
    let again = json(&run(&["plan", "--order", "6", "--constraints", "dls", "--format", "json"]));
    assert_eq!(v, again);
    let grid = stdout(&run(&["plan", "--order", "6", "--constraints", "dls", "--grid"]));
    assert!(grid.lines().count() >= 6);
}

#[test]
fn estimate_json_is_seeded() {
    let args = [
        "estimate",
        "--order",
        "6",
        "--constraints",
        "dls",
        "--depth",
        "12",
        "--samples",
        "500",
        "--seed",
        "9",
        "--format",
        "json",
    ];
    let a = json(&run(&args));
    let b = json(&run(&args));
    assert_eq!(a["estimate"], b["estimate"]);
    assert_eq!(a["std_error"], b["std_error"]);
    assert_eq!(a["seed"], 9);
    assert_eq!(a["prefix_count"], "not computed");
    assert!(a["generator"].as_str().unwrap().contains("chacha8"));
}

#[test]
fn workunit_pipeline() {
    let dir = TempDir::new().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (units, ra, rb) = (p("u.txt"), p("a.txt"), p("b.txt"));
    let gen = run(&["workunits", "gen", "--order", "7", "--constraints", "dls", "--depth", "6", "--out", &units]);
    assert_eq!(gen.status.code(), Some(0));
    for (out, tag, engine) in [(&ra, "a", "plain"), (&rb, "b", "symmetric")] {
        let r = run(&["workunits", "run", "--in", &units, "--out", out, "--run-tag", tag, "--engine", engine]);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let m = json(&run(&["workunits", "merge", "--quorum", "2", "--units", &units, "--format", "json", &ra, &rb]));
    assert_eq!(m["total"], "171200");
    let withheld = run(&["workunits", "merge", "--quorum", "2", "--units", &units, &ra]);
    assert_eq!(withheld.status.code(), Some(1));
    let mismatch = run(&["workunits", "run", "--in", &units, "--out", &ra, "--run-tag", "other"]);
    assert_eq!(mismatch.status.code(), Some(1));
}

#[test]
fn oracle_subcommand_agrees() {
    for (cs, want) in [("ls", "56"), ("dls", "8")] {
        let out = run(&["oracle", "--order", "5", "--constraints", cs]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(stdout(&out).trim(), want);
    }
}
