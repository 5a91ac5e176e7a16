use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn defectlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defectlab"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_absorbs_at_matching_rapidity() {
    let tmp = tempfile::tempdir().unwrap();
    let out = defectlab(&["simulate", "--theta", "1.0", "--eta", "1.0"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&tmp.path().join("manifest.json"));
    assert_eq!(m["summary"]["outcome"], "Absorb");
    assert_eq!(m["subcommand"], "simulate");
    assert_eq!(m["config"]["eta"][0], 1.0);
    for f in ["charges.csv", "tracks.csv", "outcome.json"] {
        assert!(m["outputs"].as_array().unwrap().iter().any(|v| v == f), "{f}");
    }
    let charges = std::fs::read_to_string(tmp.path().join("charges.csv")).unwrap();
    assert!(charges.starts_with("t,p0_bulk,p1_bulk,d0,d1,e_total,p_total,u0,v0,lambda\n"));
}

#[test]
fn analytic_scatter_sweep_has_a_row_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let out = defectlab(&["scatter", "--theta", "0.1:2.0:0.1", "--eta", "1.0", "--analytic"], tmp.path());
    assert!(out.status.success());
    let mut r = csv::Reader::from_path(tmp.path().join("scatter.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 20);
    assert_eq!(&rows[9][2], "Absorb");
    assert_eq!(&rows[4][2], "Pass");
    assert_eq!(&rows[14][2], "Flip");
}

#[test]
fn tmatrix_kinds_report_residuals() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in ["kl", "type2", "tz"] {
        let dir = tmp.path().join(kind);
        let out = defectlab(&["tmatrix", "--kind", kind, "--theta", "0.4", "--pairs", "4"], &dir);
        assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
        let r = json(&dir.join("residuals.json"));
        for (name, v) in r["residuals"].as_object().unwrap() {
            if name != "kappa" {
                assert!(v.as_f64().unwrap() < 1e-8, "{kind} {name} {v}");
            }
        }
    }
}

#[test]
fn verify_suites_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = defectlab(&["verify", "--suite", "all"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&tmp.path().join("verify_all.json"));
    let suites: Vec<&str> = v.as_array().unwrap().iter().map(|s| s["suite"].as_str().unwrap()).collect();
    assert_eq!(suites, ["borel", "serre", "intertwiner", "tzmatrix", "rho"]);
}

#[test]
fn config_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{ "subcommand": "scatter", "theta_sweep": "0.5,1.5", "analytic": true, "eta": [2.0] }"#).unwrap();
    let out = tmp.path().join("out");
    let o = defectlab(&["scatter", "--config", cfg.to_str().unwrap(), "--eta", "1.0"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["eta"], serde_json::json!([1.0]));
    assert_eq!(m["config"]["analytic"], true);
    assert_eq!(m["derived"]["thetas"], serde_json::json!([0.5, 1.5]));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| defectlab(args, tmp.path()).status.code().unwrap();
    assert_eq!(code(&["simulate", "--dx", "-1"]), 1);
    assert_eq!(code(&["simulate", "--bogus"]), 1);
    assert_eq!(code(&["tmatrix", "--kind", "tz", "--beta2", "6.283185307179586"]), 1);
    let help = Command::new(env!("CARGO_BIN_EXE_defectlab")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    // output directory under a regular file
    let file = tmp.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let o = defectlab(&["verify", "--suite", "borel"], &file.join("sub"));
    assert_eq!(o.status.code(), Some(2));
    let bad_cfg = tmp.path().join("bad.json");
    std::fs::write(&bad_cfg, r#"{ "thetaa": 1.0 }"#).unwrap();
    let o = defectlab(&["simulate", "--config", bad_cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("thetaa"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |tag: &str, threads: &str| {
        let dir = tmp.path().join(tag);
        let o = Command::new(env!("CARGO_BIN_EXE_defectlab"))
            .args(["scatter", "--theta", "1.3,1.6", "--eta", "1.0", "--output-dir"])
            .arg(&dir)
            .env("DEFECTLAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read(dir.join("scatter.csv")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a, run("b", "1"));
    assert_eq!(a, run("c", "3"));
}
