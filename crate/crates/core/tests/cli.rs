use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn spec(name: &str, body: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_prodgeom")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (status, out) = run(args);
    assert_eq!(status, 0, "{out}");
    serde_json::from_str(&out).unwrap()
}

fn cd_half() -> String {
    spec("cd_half.json", r#"{"type":"cobb_douglas","gamma":1,"alpha":[0.5,0.5]}"#)
}

#[test]
fn curvature_of_cobb_douglas() {
    let v = json(&["curvature", "--fn", &cd_half(), "--at", "2,8"]);
    let r = &v["result"];
    assert_eq!(r["gauss_kronecker"].as_f64().unwrap().abs(), 0.0);
    // f = 4, f_1 = 1, f_2 = 1/4
    let w = (1.0f64 + 1.0 + 0.0625).sqrt();
    assert!((r["W"].as_f64().unwrap() - w).abs() < 1e-15);
}

#[test]
fn elasticity_of_acms_at_a_point() {
    let f = spec("acms_half.json", r#"{"type":"acms","gamma":1,"a":[1,1],"rho":0.5,"d":1}"#);
    let v = json(&["elasticity", "--fn", &f, "--at", "1,1", "--pair", "1,2"]);
    assert_eq!(v["result"]["pairs"][0]["value"].as_f64(), Some(2.0));
    let report = json(&["elasticity", "--fn", &f, "--samples", "20"]);
    assert_eq!(report["result"]["verdict"], "RegularCES");
    assert_eq!(report["result"]["samples"].as_array().unwrap().len(), 20);
}

#[test]
fn verify_flatness_three_inputs() {
    let f = spec(
        "cd3.json",
        r#"{"type":"cobb_douglas","gamma":1,"alpha":[0.3333333333333333,0.3333333333333333,0.3333333333333333]}"#,
    );
    let v = json(&["verify", "--fn", &f, "--theorem", "4.2", "--samples", "30"]);
    assert_eq!(v["result"]["verdict"], "Inconsistent");
    assert_eq!(v["result"]["per_point_data"].as_array().unwrap().len(), 30);
    assert_eq!(v["result"]["forward"]["holds"], false);
}

#[test]
fn classify_and_theorem_one_one() {
    let f = spec("ratio.json", r#"{"type":"ratio","outer":{"form":"affine","coefficient":1}}"#);
    let v = json(&["classify", "--fn", &f]);
    assert_eq!(v["result"]["case"], "RatioTwoInput");
    let v = json(&["verify", "--fn", &f, "--theorem", "1.1"]);
    assert_eq!(v["result"]["theorem"], "1.1");
    assert_eq!(v["result"]["case"], "RatioTwoInput");
}

#[test]
fn reports_carry_version_digest_and_tolerances() {
    let v = json(&["eval", "--fn", &cd_half(), "--at", "1,1"]);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["spec_digest"].as_str().unwrap().len(), 64);
    assert_eq!(v["tolerances"]["degeneracy"].as_f64(), Some(1e-9));
    assert_eq!(v["result"]["hessian"][0][1].as_f64(), Some(0.25));
}

#[test]
fn numbers_have_seventeen_significant_digits() {
    let (_, out) = run(&["eval", "--fn", &cd_half(), "--at", "1,1"]);
    assert!(out.contains("\"value\": 1.0000000000000000e0"), "{out}");
}

#[test]
fn scan_csv_layout() {
    let (status, out) = run(&["scan", "--fn", &cd_half(), "--samples", "16"]);
    assert_eq!(status, 0);
    let lines: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "x1,x2,f,W,G,flatness_residual,H12");
    assert_eq!(lines.len(), 1 + 16);
    assert!(out.starts_with("# tool,prodgeom\n# version,"));
    // lexicographic grid: first axis slowest
    let first: Vec<&str> = lines[1].split(',').collect();
    let second: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(first[0], second[0]);
    assert_eq!(first[6], "1.0000000000000000e0");
}

#[test]
fn flat_csv_output() {
    let (status, out) = run(&["curvature", "--fn", &cd_half(), "--at", "1,1", "--out", "csv"]);
    assert_eq!(status, 0);
    assert!(out.starts_with("path,value\n"));
    assert!(out.lines().any(|l| l.starts_with("result.gauss_kronecker,")));
}

#[test]
fn exit_codes() {
    let cd = cd_half();
    let status = |args: &[&str]| run(args).0;
    assert_eq!(status(&["eval", "--fn", "/nonexistent/spec.json", "--at", "1,1"]), 1);
    assert_eq!(status(&["eval", "--fn", &cd, "--at", "1,-1"]), 1);
    assert_eq!(status(&["eval", "--fn", &cd, "--at", "1,x"]), 1);
    assert_eq!(status(&["eval", "--fn", &cd, "--at", "1,1,1"]), 1);
    assert_eq!(status(&["eval", "--fn", &cd]), 1);
    assert_eq!(status(&["classify", "--fn", &cd, "--box", "2:1,1:2"]), 1);
    assert_eq!(status(&["verify", "--fn", &cd]), 1);
    assert_eq!(status(&["frobnicate", "--fn", &cd]), 1);
    let bad = spec("bad.json", r#"{"type":"acms","gamma":1,"a":[1,1],"rho":0}"#);
    assert_eq!(status(&["eval", "--fn", &bad, "--at", "1,1"]), 1);
    assert_eq!(status(&["--help"]), 0);
    assert_eq!(status(&["--version"]), 0);

    // sigma varies across the box: the hypothesis is not satisfiable
    let mixed = spec(
        "mixed.json",
        r#"{"type":"quasi_sum","outer":{"form":"affine","coefficient":1},
            "inner":[{"form":"power","coefficient":1,"exponent":2},{"form":"log","coefficient":1}]}"#,
    );
    let (code, out) = run(&["verify", "--fn", &mixed, "--theorem", "4.1"]);
    assert_eq!(code, 2);
    let record: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(record["error"]["kind"], "not_ces");
    assert_eq!(record["status"], 2);
}

#[test]
fn identical_config_identical_bytes() {
    let f = spec("acms3.json", r#"{"type":"acms","gamma":1.2,"a":[0.7,1.1,1.4],"rho":-0.6,"d":1.5}"#);
    for args in [
        vec!["verify", "--fn", &f, "--theorem", "4.1", "--samples", "50", "--seed", "3"],
        vec!["scan", "--fn", &f, "--samples", "1000"],
        vec!["elasticity", "--fn", &f, "--samples", "50", "--out", "csv"],
    ] {
        let first = run(&args);
        for jobs in ["1", "3"] {
            assert_eq!(run(&[args.as_slice(), &["--jobs", jobs]].concat()), first);
        }
        assert_eq!(run(&args), first);
    }
    // a different seed changes the sample
    let a = run(&["elasticity", "--fn", &f, "--samples", "5", "--seed", "1"]);
    let b = run(&["elasticity", "--fn", &f, "--samples", "5", "--seed", "2"]);
    assert_ne!(a, b);
}
