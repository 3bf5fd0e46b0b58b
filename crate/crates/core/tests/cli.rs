//! The `idp` binary: exit codes, reports and fixture files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn idp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idp"))
        .args(args)
        .current_dir(dir)
        .env_remove("IDP_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = idp(
        dir.path(),
        &[
            "verify",
            "fingerprint-lemma",
            "--f",
            "mean",
            "--n",
            "128",
            "--trials",
            "20000",
        ],
    );
    assert_eq!(ok.status.code(), Some(0));
    let r = json(&ok);
    for key in ["check", "parameters", "estimate", "half_width", "bound", "pass"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert!((r["estimate"].as_f64().unwrap() - 2.0 / 3.0).abs() < 0.05);

    let lap = idp(dir.path(), &["verify", "claim-lap"]);
    assert_eq!(lap.status.code(), Some(0));
    assert_eq!(json(&lap)["details"]["failures"], 0);

    let audit = idp(
        dir.path(),
        &[
            "verify", "dp-audit", "--mech", "m_corr", "--n", "1", "--alpha", "0.3", "--eps", "0.5",
        ],
    );
    assert_eq!(audit.status.code(), Some(1));
    assert_eq!(json(&audit)["pass"], false);

    assert_eq!(idp(dir.path(), &["verify", "no-such-check"]).status.code(), Some(2));
    assert_eq!(
        idp(dir.path(), &["verify", "fingerprint-lemma", "--f", "nope"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn gen_writes_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = idp(
        d,
        &[
            "gen", "packing", "--T", "64", "--t", "7", "--n", "1000", "--alpha", "0.1",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let vals: Vec<f64> = fs::read_to_string(d.join("packing.reals"))
        .unwrap()
        .lines()
        .map(|l| l.trim().parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 1000);
    // m = ⌈0.4·1000⌉ − 1 copies at each end
    assert_eq!(vals.iter().filter(|&&v| v == 1.0 / 64.0).count(), 399);
    assert_eq!(vals.iter().filter(|&&v| v == 1.0).count(), 399);

    assert_eq!(
        idp(d, &["gen", "fingerprint", "--n", "64", "--k", "16"]).status.code(),
        Some(0)
    );
    for f in ["x.strings", "p.json", "c.strings", "queries.json"] {
        assert!(d.join("fingerprint").join(f).exists(), "{f}");
    }
    let q = interactive_dp::queries::load_queries(d.join("fingerprint/queries.json")).unwrap();
    assert_eq!(q.len(), 16);

    idp(
        d,
        &["gen", "signbits", "--n", "100000", "--seed", "1", "--out", "a.bits"],
    );
    idp(
        d,
        &["gen", "signbits", "--n", "100000", "--seed", "1", "--out", "b.bits"],
    );
    assert_eq!(fs::read(d.join("a.bits")).unwrap(), fs::read(d.join("b.bits")).unwrap());
    assert_eq!(idp(d, &["gen", "unicorns"]).status.code(), Some(2));
}

#[test]
fn run_is_deterministic_and_validates_first() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("cfg.json"),
        r#"{"model": "adaptive", "mechanism": {"name": "m_corr", "alpha": 0.5},
            "adversary": {"name": "reconstruction", "alpha": 0.5},
            "dataset": {"kind": "signbits", "n": 1000000}, "k": 2, "trials": 3, "seed": 4,
            "output": "report.json"}"#,
    )
    .unwrap();
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_clock_seconds");
        v
    };
    let a = idp(d, &["run", "cfg.json", "--transcript", "t.jsonl"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = idp(d, &["--threads", "1", "run", "cfg.json"]);
    let (ra, rb) = (strip(json(&a)), strip(json(&b)));
    assert_eq!(ra, rb);
    for t in ra["trials"].as_array().unwrap() {
        assert_eq!(t["first_full_loss"], 2);
    }
    assert!(d.join("report.json").exists() && d.join("report.csv").exists());
    let lines: Vec<Value> = fs::read_to_string(d.join("t.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["loss"], 1.0);

    let csv = idp(d, &["--format", "csv", "run", "cfg.json"]);
    assert_eq!(String::from_utf8_lossy(&csv.stdout).lines().count(), 4);

    fs::write(
        d.join("bad.json"),
        r#"{"model": "offline", "mechanism": {"name": "m_corr", "alpha": 0.5},
            "adversary": {"name": "reconstruction", "alpha": 0.5},
            "dataset": {"kind": "signbits", "n": 10}, "k": 2, "trials": 1}"#,
    )
    .unwrap();
    assert_eq!(idp(d, &["run", "bad.json"]).status.code(), Some(2));
}

#[test]
fn suite_preset_subset() {
    let dir = tempfile::tempdir().unwrap();
    let out = idp(
        dir.path(),
        &["suite", "ac-primary", "--only", "AC-9", "--only", "AC-13"],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["criteria"].as_array().unwrap().len(), 2);
    assert_eq!(
        idp(dir.path(), &["suite", "ac-primary", "--only", "AC-99"])
            .status
            .code(),
        Some(2)
    );
}
