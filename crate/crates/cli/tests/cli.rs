use std::path::Path;
use std::process::{Command, Output};

fn wittlab(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wittlab"))
        .args(args)
        .env("WITTLAB_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn wittpoly_gen_writes_then_reuses_cache() {
    let dir = tempfile::tempdir().unwrap();
    let first = wittlab(&["wittpoly-gen", "--p", "2", "--n", "4", "--kind", "sum"], dir.path());
    assert_eq!(first.status.code(), Some(0));
    assert!(stdout(&first).contains("ghost identity verified"));
    assert!(dir.path().join("witt-p2-n4-sum.json").exists());

    let again = wittlab(&["wittpoly-gen", "--p", "2", "--n", "4", "--kind", "sum"], dir.path());
    assert_eq!(again.status.code(), Some(0));
    assert!(stdout(&again).contains("present"));
}

#[test]
fn wittpoly_gen_budget_exceeded() {
    let dir = tempfile::tempdir().unwrap();
    let out = wittlab(&["wittpoly-gen", "--p", "5", "--n", "4", "--kind", "all"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn h1_dimension_and_basis() {
    let dir = tempfile::tempdir().unwrap();
    let out = wittlab(&["h1", "--p", "3", "--s", "2", "--basis"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "dim 2; basis 1, t·λ");

    let out = wittlab(&["h1", "--p", "2", "--s", "1", "--basis"], dir.path());
    assert_eq!(stdout(&out).trim(), "dim 1; basis 1");

    let out = wittlab(&["h1", "--p", "5", "--s", "3", "--oracle"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("dim 3\noracle 3"));
}

#[test]
fn h1_rejects_break_divisible_by_p() {
    let dir = tempfile::tempdir().unwrap();
    let out = wittlab(&["h1", "--p", "3", "--s", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = wittlab(&["verify", "--check", "lemma_sums", "--p", "7", "--s", "1"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("lemma_sums"));

    let unknown = wittlab(&["verify", "--check", "no_such_check", "--p", "2", "--s", "1"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));

    let fault = wittlab(
        &["verify", "--check", "ghost_identities", "--p", "2", "--s", "1", "--n", "3", "--inject-fault"],
        dir.path(),
    );
    assert_eq!(fault.status.code(), Some(1));
    assert!(stdout(&fault).contains("counterexample"));

    let low = wittlab(&["verify", "--check", "main_theorem", "--p", "2", "--s", "3", "--n", "2"], dir.path());
    assert_eq!(low.status.code(), Some(2));
}

#[test]
fn verify_writes_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_wittlab"))
        .args(["verify", "--check", "trace_consistency", "--p", "3", "--s", "2", "--samples", "10", "--format", "csv"])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("check,p,s,n,N,samples,seed,verdict,runtime_ms\ntrace_consistency,3,2,"));
}

#[test]
fn verify_json_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--check", "main_theorem", "--p", "2", "--s", "3", "--n", "3", "--samples", "20", "--seed", "7", "--format", "json"];
    let strip = |o: Output| -> serde_json::Value {
        assert_eq!(o.status.code(), Some(0));
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        for c in v["checks"].as_array_mut().unwrap() {
            c["runtime_ms"] = 0.into();
        }
        v
    };
    let a = strip(wittlab(&args, dir.path()));
    let b = strip(wittlab(&args, dir.path()));
    assert_eq!(a, b);
    assert_eq!(a["checks"][0]["verdict"], "pass");
    assert_eq!(a["checks"][0]["sampled"], true);
}
