//! End-to-end tests of the command-line interface: artifact emission,
//! self-verification, exit codes, determinism, and the window cap.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meandim"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn meandim")
}

fn write_fib(dir: &Path, max_window: usize) -> String {
    let p = dir.join("fib.json");
    std::fs::write(
        &p,
        format!(
            "{{\"kind\":\"substitution\",\"alphabet\":[0,1],\"rule\":{{\"0\":\"01\",\"1\":\"0\"}},\"max_window\":{max_window}}}"
        ),
    )
    .unwrap();
    p.display().to_string()
}

#[test]
fn znset_example() {
    let out = run(&["lemmas", "znset", "--N", "6", "--y", "3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["A"], serde_json::json!([0, 1]));
    assert_eq!(v["size"], 2);
}

#[test]
fn znset_csv() {
    let out = run(&["lemmas", "znset", "--N", "6", "--y", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "element\n0\n1\n");
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["lemmas", "znset", "--N", "6"]); // missing --y
    assert_eq!(out.status.code(), Some(1));
    // malformed JSON input
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let out = run(&["verify", "--cert", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(msg.contains("line 1"), "parse errors must carry a location: {msg}");
}

#[test]
fn marker_roundtrip_and_tamper_detection() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_fib(dir.path(), 40);
    let cert = dir.path().join("cert.json");
    let out = run(&[
        "marker", "--system", &sys, "--N", "2", "--d", "0", "--out",
        cert.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // manifest exists and references the output hash
    let manifest: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("cert.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert!(manifest["outputs"][cert.to_str().unwrap()].is_string());

    let out = run(&["verify", "--cert", cert.to_str().unwrap()]);
    assert!(out.status.success());

    // tamper with the marker word: verification must fail with exit 2
    let text = std::fs::read_to_string(&cert).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let w = v["cert"]["w"]["cylinders"][0]["word"].as_str().unwrap().to_string();
    let flipped: String =
        w.chars().enumerate().map(|(i, c)| if i == 0 { '1' } else { c }).collect();
    v["cert"]["w"]["cylinders"][0]["word"] = serde_json::Value::String(flipped);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&v).unwrap()).unwrap();
    let out = run(&["verify", "--cert", tampered.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn rokhlin_and_periodic_artifacts_verify() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_fib(dir.path(), 60);
    let rok = dir.path().join("rok.json");
    let out =
        run(&["rokhlin", "--system", &sys, "--N", "3", "--out", rok.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run(&["verify", "--cert", rok.to_str().unwrap()]).status.success());

    let full = dir.path().join("full2.json");
    std::fs::write(&full, r#"{"kind":"full_shift","alphabet":[0,1],"max_window":16}"#).unwrap();
    let per = dir.path().join("per.json");
    let out = run(&[
        "periodic", "--system", full.to_str().unwrap(), "--m-max", "3", "--seed", "42",
        "--out", per.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(run(&["verify", "--cert", per.to_str().unwrap()]).status.success());
}

#[test]
fn mdim_report_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_fib(dir.path(), 40);
    let out = run(&["mdim", "--system", &sys, "--width", "2", "--n-max", "3", "--m-max", "3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mdim"].as_array().unwrap().len(), 3);
    // an aperiodic system has empty periodic-point sets
    assert_eq!(v["perdim"][0]["dim_pm"], -1);
    let out = run(&[
        "mdim", "--system", &sys, "--width", "2", "--n-max", "3", "--m-max", "3",
        "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("table,index,value,ratio,flag\n"));
    assert!(text.contains("perdim,2,-1,-1/2,true"));
}

#[test]
fn embed_verify_embedding_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_fib(dir.path(), 160);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out_path in [&a, &b] {
        let out = run(&[
            "embed", "--system", &sys, "--d", "1", "--epsilon", "1/8", "--seed", "7",
            "--out", out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    // identical command line ⇒ byte-identical artifact
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // and identical recorded output hashes in the manifests
    let ma: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("a.json.manifest.json")).unwrap(),
    )
    .unwrap();
    let mb: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("b.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(
        ma["outputs"][a.to_str().unwrap()],
        mb["outputs"][b.to_str().unwrap()]
    );

    assert!(run(&["verify", "--cert", a.to_str().unwrap()]).status.success());
    let out = run(&[
        "verify-embedding", "--cert", a.to_str().unwrap(), "--epsilon", "1/8",
        "--width", "6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ok"], true);
    let margin = report["margin"].as_str().unwrap();
    assert!(!margin.starts_with('-') && margin != "0");
}

#[test]
fn env_window_cap_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_fib(dir.path(), 160);
    // a cap far below what the construction needs forces a loud refusal
    let out = bin()
        .args(["marker", "--system", &sys, "--N", "3", "--d", "0"])
        .env("MEANDIM_MAX_WINDOW", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(msg.contains("window") || msg.contains("period"), "{msg}");
}
