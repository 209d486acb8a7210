use std::process::{Command, Output};

fn perfscore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfscore")).args(args).output().unwrap()
}

#[test]
fn csv_to_stdout() {
    let out = perfscore(&["sweep-binary", "--alphas", "0.5", "--pstar-step", "0.25"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("trial,env,alpha,p_star1,op_norm,inaccuracy"));
}

#[test]
fn json_output_parses() {
    let out = perfscore(&["design-exp-rule", "--lf", "0.5", "--eps", "0.1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
}

#[test]
fn writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let out = perfscore(&["max-curves", "--alphas", "0.4", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn invalid_arguments_exit_2() {
    for args in [
        vec!["sweep-binary", "--rule", "cubic"],
        vec!["sweep-binary", "--alphas", "1.5"],
        vec!["bound", "--env", "affine:p1=2,alpha=0.5"],
        vec!["many-outcome", "--jobs", "0"],
        vec!["regret", "--policy", "greedy"],
        vec!["sweep-binary", "--format", "xml"],
        vec!["no-such-command"],
    ] {
        let out = perfscore(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("x.csv");
    let out = perfscore(&["design-exp-rule", "--lf", "0.5", "--eps", "0.1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
}

#[test]
fn repeated_runs_are_identical() {
    let args = ["many-outcome", "--n", "4", "--trials", "20", "--seed", "4"];
    let a = perfscore(&args);
    let b = perfscore(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = perfscore(&["many-outcome", "--n", "4", "--trials", "20", "--seed", "5"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn help_exits_0() {
    assert_eq!(perfscore(&["--help"]).status.code(), Some(0));
}
