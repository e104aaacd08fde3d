use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hjsep::problem::{ProblemSpec, TransformSpec};

fn hjsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjsep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixtures() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let out = hjsep(&["example", "section6", "--dir", path(&root)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (dir, root)
}

#[test]
fn example_writes_five_files_that_reparse() {
    let (_guard, dir) = fixtures();
    let names = [
        "section6.json",
        "section6_transform.json",
        "section6_reference_K.txt",
        "section6_badsigma2.json",
        "section6_perturbed.json",
    ];
    for name in names {
        assert!(dir.join(name).is_file(), "{name} missing");
    }
    for name in ["section6.json", "section6_badsigma2.json", "section6_perturbed.json"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        let spec = ProblemSpec::from_json(&text).unwrap();
        assert_eq!(spec.to_json() + "\n", text);
    }
    let text = std::fs::read_to_string(dir.join("section6_transform.json")).unwrap();
    let t = TransformSpec::from_json(&text).unwrap();
    assert_eq!(t.n, 2);
    let k = std::fs::read_to_string(dir.join("section6_reference_K.txt")).unwrap();
    assert_eq!(t.reference_hamiltonian.as_deref(), Some(k.trim()));
}

#[test]
fn unknown_example_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjsep(&["example", "nonexistent", "--dir", path(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown fixture"));
}

#[test]
fn fixture_passes() {
    let (_guard, dir) = fixtures();
    let out = hjsep(&["check", path(&dir.join("section6.json"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("overall: pass"));
}

#[test]
fn constant_sigma2_fails_torsion() {
    let (_guard, dir) = fixtures();
    let out = hjsep(&["check", "--json", path(&dir.join("section6_badsigma2.json"))]);
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let torsion = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "torsion")
        .unwrap();
    assert_eq!(torsion["verdict"], "fail");
}

#[test]
fn perturbed_hamiltonian_fails() {
    let (_guard, dir) = fixtures();
    let out = hjsep(&["check", path(&dir.join("section6_perturbed.json"))]);
    assert_eq!(code(&out), 1);
}

#[test]
fn zero_samples_exits_2() {
    let (_guard, dir) = fixtures();
    let out = hjsep(&["check", "--samples", "0", path(&dir.join("section6.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&hjsep(&["check", path(&missing)])), 2);

    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{ \"n\": 2, ").unwrap();
    let out = hjsep(&["check", path(&bad_json)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let mut spec = hjsep::fixtures::example_problem(false, false);
    spec.hamiltonian = "p1^2 + * q1".into();
    let bad_expr = dir.path().join("expr.json");
    std::fs::write(&bad_expr, spec.to_json()).unwrap();
    let out = hjsep(&["check", path(&bad_expr)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("hamiltonian"));

    assert_eq!(code(&hjsep(&["check"])), 2);
    assert_eq!(code(&hjsep(&["frobnicate"])), 2);
}

#[test]
fn reports_are_byte_identical() {
    let (_guard, dir) = fixtures();
    let problem = dir.join("section6.json");
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    assert_eq!(code(&hjsep(&["check", path(&problem), "--report", path(&a)])), 0);
    assert_eq!(code(&hjsep(&["check", path(&problem), "--report", path(&b)])), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let stdout = hjsep(&["check", path(&problem), "--json"]).stdout;
    assert_eq!(stdout, std::fs::read(&a).unwrap());
}

#[test]
fn overrides_change_the_digest() {
    let (_guard, dir) = fixtures();
    let problem = dir.join("section6.json");
    let run = |extra: &[&str]| {
        let mut args = vec!["check", "--json", path(&problem)];
        args.extend_from_slice(extra);
        let v: serde_json::Value = serde_json::from_slice(&hjsep(&args).stdout).unwrap();
        v
    };
    let base = run(&[]);
    let seeded = run(&["--seed", "7", "--samples", "10"]);
    assert_ne!(base["input_digest"], seeded["input_digest"]);
    assert_eq!(seeded["samples"], 10);
    assert_eq!(seeded["seed"], 7);
    let fast = run(&["--fast"]);
    let cot = fast["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "integrability_cotangent")
        .unwrap()
        .clone();
    assert_eq!(cot["verdict"], "not_run");
    assert_eq!(fast["overall"], "pass");
}

#[test]
fn transform_then_check() {
    let (_guard, dir) = fixtures();
    let output = dir.join("k.json");
    let report = dir.join("transform_report.json");
    let out = hjsep(&[
        "transform",
        path(&dir.join("section6.json")),
        path(&dir.join("section6_transform.json")),
        "--output",
        path(&output),
        "--report",
        path(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["overall"], "pass");
    let spec = ProblemSpec::from_json(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert!(spec.transform.is_some());
    let out = hjsep(&["check", path(&output)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn transform_default_output_path() {
    let (_guard, dir) = fixtures();
    let out = hjsep(&[
        "transform",
        path(&dir.join("section6.json")),
        path(&dir.join("section6_transform.json")),
    ]);
    assert_eq!(code(&out), 0);
    assert!(dir.join("section6_transformed.json").is_file());
}

#[test]
fn corrupted_inverse_fails_roundtrip() {
    let (_guard, dir) = fixtures();
    let mut t = hjsep::fixtures::example_transform();
    t.inverse[0] = "(Q1 + Q2)/(2*t) + 0.01*Q2".into();
    let tpath = dir.join("corrupt.json");
    std::fs::write(&tpath, t.to_json()).unwrap();
    let out = hjsep(&[
        "transform",
        "--json",
        path(&dir.join("section6.json")),
        path(&tpath),
        "--output",
        path(&dir.join("out.json")),
    ]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let roundtrip = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "roundtrip")
        .unwrap()
        .clone();
    assert_eq!(roundtrip["verdict"], "fail");
}

#[test]
fn identity_transform_reports_off_diagonal_magnitude() {
    let (_guard, dir) = fixtures();
    let t = TransformSpec {
        n: 2,
        forward: vec!["q1".into(), "q2".into()],
        inverse: vec!["Q1".into(), "Q2".into()],
        reference_hamiltonian: None,
    };
    let tpath = dir.join("identity.json");
    std::fs::write(&tpath, t.to_json()).unwrap();
    let out = hjsep(&[
        "transform",
        "--json",
        path(&dir.join("section6.json")),
        path(&tpath),
        "--output",
        path(&dir.join("out.json")),
    ]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let diag = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "diagonality")
        .unwrap()
        .clone();
    assert_eq!(diag["verdict"], "fail");
    assert!(diag["max_residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn mismatched_transform_dimension_exits_2() {
    let (_guard, dir) = fixtures();
    let t = TransformSpec {
        n: 1,
        forward: vec!["q1".into()],
        inverse: vec!["Q1".into()],
        reference_hamiltonian: None,
    };
    let tpath = dir.join("t1.json");
    std::fs::write(&tpath, t.to_json()).unwrap();
    let out = hjsep(&["transform", path(&dir.join("section6.json")), path(&tpath)]);
    assert_eq!(code(&out), 2);
}
