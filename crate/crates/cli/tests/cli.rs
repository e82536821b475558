use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qpos(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpos")).args(args).current_dir(dir).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn example(dir: &Path, name: &str, extra: &[&str]) -> String {
    let file = format!("{name}{}.json", extra.join("_"));
    let mut args = vec!["examples", name, "--out", &file];
    args.extend_from_slice(extra);
    let out = qpos(&args, dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    file
}

#[test]
fn examples_reload_through_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 5] = [
        ("schur-counterexample", &[]),
        ("phiu", &["--lambdas", "1,-1"]),
        ("state-map", &["--diag", "0.25,0.75"]),
        ("basischange-corner", &[]),
        ("identity-corner", &["--lambdas", "2,-1,-1"]),
    ];
    for (name, extra) in cases {
        let file = example(dir.path(), name, extra);
        let out = qpos(&["analyze", &file], dir.path());
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json_of(&out);
        assert_eq!(v["cp"]["verdict"], Value::Bool(true), "{name}");
        assert_eq!(v["q_positive"]["verdict"], Value::Bool(true), "{name}");
    }
}

#[test]
fn counterexample_is_cp_and_q_positive() {
    let dir = tempfile::tempdir().unwrap();
    let file = example(dir.path(), "schur-counterexample", &[]);
    let v = json_of(&qpos(&["analyze", &file], dir.path()));
    assert_eq!(v["cp"]["verdict"], Value::Bool(true));
    assert_eq!(v["q_positive"]["verdict"], Value::Bool(true));
    assert_eq!(v["unital"]["verdict"], Value::Bool(true));
}

#[test]
fn transpose_is_not_cp() {
    let dir = tempfile::tempdir().unwrap();
    // Transpose on M_2 in row-major vectorization: swaps the off-diagonal entries.
    let t = r#"{"dim_in":2,"dim_out":2,"repr":"superop","data":
        [[1,0,0,0],[0,0,1,0],[0,1,0,0],[0,0,0,1]]}"#;
    write(dir.path(), "t.json", t);
    let out = qpos(&["analyze", "t.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["cp"]["verdict"], Value::Bool(false));
    assert!(v["cp"]["min_eig"].as_f64().unwrap() < -0.9);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let file = example(dir.path(), "state-map", &["--diag", "0.6,0.4"]);
    let pure = example(dir.path(), "phiu", &["--lambdas", "1,-1"]);
    let runs: [&[&str]; 4] = [
        &["analyze", &file],
        &["classify", &file],
        &["corner", "--left", &file, "--right", &file, "--auto-max", "--seed", "7"],
        &["bwsim", "--map", &pure],
    ];
    for args in runs {
        let a = qpos(args, dir.path());
        let b = qpos(args, dir.path());
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn report_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let file = example(dir.path(), "state-map", &[]);
    let v = json_of(&qpos(&["analyze", &file, "--seed", "3", "--tol", "1e-9"], dir.path()));
    assert_eq!(v["seed"], 3);
    assert_eq!(v["tol"].as_f64(), Some(1e-9));
    assert!(v["input_digest"].as_str().unwrap().starts_with("sha256:"));
    assert_eq!(v["command"][0], "analyze");
}

#[test]
fn exit_code_for_assertion() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = example(dir.path(), "state-map", &["--diag", "0.5,0.5"]);
    let skew = example(dir.path(), "state-map", &["--diag", "0.9,0.1"]);
    let args = ["corner", "--left", &mixed, "--right", &skew, "--auto-max", "--assert-hypermaximal"];
    let out = qpos(&args, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert!(v["max_corner_norm"]["value"].as_f64().unwrap() < 1.0 - 1e-6);
    assert!(v["conclusion"].as_str().unwrap().contains("not cocycle conjugate"));

    let same = ["corner", "--left", &mixed, "--right", &mixed, "--auto-max", "--assert-hypermaximal"];
    assert_eq!(qpos(&same, dir.path()).status.code(), Some(0));
}

#[test]
fn exit_code_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let id = r#"{"dim_in":2,"dim_out":2,"repr":"kraus","data":[[[1,0],[0,1]]]}"#;
    write(dir.path(), "id.json", id);
    write(dir.path(), "c.json", "[[1.5]]");
    write(dir.path(), "junk.json", "{not json");
    let cases: [&[&str]; 4] = [
        &["corner", "--left", "id.json", "--right", "id.json", "--contraction", "c.json"],
        &["analyze", "missing.json"],
        &["analyze", "junk.json"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(qpos(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn contraction_corner() {
    let dir = tempfile::tempdir().unwrap();
    let id = r#"{"dim_in":2,"dim_out":2,"repr":"kraus","data":[[[1,0],[0,1]]]}"#;
    write(dir.path(), "id.json", id);
    write(dir.path(), "c.json", "[[1]]");
    let out = qpos(&["corner", "--left", "id.json", "--right", "id.json", "--contraction", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["corner"]["verdict"], Value::Bool(true));
    assert_eq!(v["q_corner"]["verdict"], Value::Bool(true));
}

#[test]
fn bwsim_tsv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let file = example(dir.path(), "state-map", &[]);
    let out = qpos(&["bwsim", "--map", &file, "--tsv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t\tnu_I\ts_t\tbound\tnorm"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split('\t').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 99);
    for r in &rows {
        assert!(r[4] <= r[3] + 1e-10, "{r:?}");
    }

    let out = qpos(&["bwsim", "--map", &file, "--decay", "--tsv"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("b\tnu_I\ts_t\tbound\tnorm\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn bwsim_rejects_non_unital() {
    let dir = tempfile::tempdir().unwrap();
    let half = r#"{"dim_in":1,"dim_out":1,"repr":"superop","data":[[0.5]]}"#;
    write(dir.path(), "half.json", half);
    assert_eq!(qpos(&["bwsim", "--map", "half.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn identity_map_is_all_true() {
    let dir = tempfile::tempdir().unwrap();
    let id = r#"{"dim_in":2,"dim_out":2,"repr":"kraus","data":[[[1,0],[0,1]]]}"#;
    write(dir.path(), "id.json", id);
    let out = qpos(&["analyze", "id.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    for key in ["unital", "self_adjoint", "cp", "q_positive"] {
        assert_eq!(v[key]["verdict"], Value::Bool(true), "{key}");
    }
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("cp: true"), "{stderr}");
    assert!(stderr.contains("wall time"), "{stderr}");
}

#[test]
fn mismatched_dimensions_are_not_cocycle_conjugate() {
    let dir = tempfile::tempdir().unwrap();
    let two = example(dir.path(), "state-map", &["--diag", "0.5,0.5"]);
    let third = (1.0f64 / 3.0).to_string();
    let three_diag = format!("{third},{third},{}", 1.0 - 2.0 * (1.0 / 3.0));
    let three = example(dir.path(), "state-map", &["--diag", &three_diag]);
    let out = qpos(&["corner", "--left", &two, "--right", &three, "--auto-max"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let value = v["max_corner_norm"]["value"].as_f64().unwrap();
    assert!((value - (2.0f64 / 3.0).sqrt()).abs() < 1e-6, "{value}");
    assert!(v["conclusion"].as_str().unwrap().contains("not cocycle conjugate"));
}

#[test]
fn unitary_corner_is_hypermaximal() {
    let dir = tempfile::tempdir().unwrap();
    let d = example(dir.path(), "state-map", &["--diag", "0.7,0.3"]);
    write(dir.path(), "u.json", "[[1,0],[0,[0,1]]]");
    let args = ["corner", "--left", &d, "--unitary", "u.json", "--assert-hypermaximal"];
    let out = qpos(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_of(&out)["hypermaximality"]["hypermaximal"], Value::Bool(true));
}

#[test]
fn classify_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let faithful = example(dir.path(), "state-map", &["--diag", "0.7,0.3"]);
    let phiu = example(dir.path(), "phiu", &["--lambdas", "1,-1"]);
    let pinch = r#"{"dim_in":2,"dim_out":2,"repr":"schur","data":[[1,0],[0,1]]}"#;
    write(dir.path(), "pinch.json", pinch);
    let cases = [(faithful.as_str(), true), (phiu.as_str(), true), ("pinch.json", false)];
    for (file, expected) in cases {
        let out = qpos(&["classify", file], dir.path());
        assert_eq!(out.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json_of(&out)["q_pure"], Value::Bool(expected), "{file}");
    }
}
