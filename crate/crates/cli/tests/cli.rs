//! End-to-end CLI checks: exit-code contract, JSON round-trips, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hamshift")
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hamshift-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

const MU3: &str = r#"{"atoms":[{"loc":"-1","den":"1/4"},{"loc":"0","den":"1/4"},{"loc":"1","den":"1/2"}]}"#;

#[test]
fn analyze_reports_h_tilde_failure_with_exit_one() {
    let dir = tmpdir("analyze");
    write(&dir, "mu.json", MU3);
    let out = run(&["shift", "from-measure", "mu.json", "--horizon", "12"], &dir);
    assert!(out.status.success());
    let payload: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    write(
        &dir,
        "w.json",
        &serde_json::json!({ "weights_sq": payload["weights_sq"] }).to_string(),
    );
    let out = run(
        &[
            "shift", "analyze", "--weights", "w.json", "--max-n", "3", "--horizon", "12",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1), "subnormality fails -> exit 1");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["h_results"]["3"], true);
    assert_eq!(report["h_tilde_results"]["1"], false);
    assert_eq!(report["first_failure"]["n"], 1);
    assert_eq!(report["first_failure"]["k"], 1);
}

#[test]
fn convolve_point_masses_exit_zero() {
    let dir = tmpdir("convolve");
    write(&dir, "a.json", r#"{"atoms":[{"loc":"2","den":"1"}]}"#);
    write(&dir, "b.json", r#"{"atoms":[{"loc":"3","den":"1"}]}"#);
    let out = run(&["measure", "convolve", "a.json", "b.json"], &dir);
    assert_eq!(out.status.code(), Some(0));
    let c: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(c["atoms"][0]["loc"], "6");
}

#[test]
fn malformed_json_is_exit_two_with_location() {
    let dir = tmpdir("badjson");
    write(&dir, "bad.json", r#"{"atoms": [{"loc": }]}"#);
    let out = run(&["measure", "tmul", "bad.json"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line"), "diagnostic names the line: {err}");
}

#[test]
fn sqrtconv_none_is_exit_one_and_bound_is_exit_three() {
    let dir = tmpdir("sqrtconv");
    // rho = d_{-1}: no nonnegative square root exists in candidates {1}
    write(&dir, "rho.json", r#"{"atoms":[{"loc":"-1","den":"1"}]}"#);
    write(&dir, "c.json", r#"{"locations":["1"]}"#);
    let out = run(
        &["measure", "sqrtconv", "rho.json", "--candidates", "c.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));

    let many: Vec<String> = (1..=9).map(|i| format!("\"{i}\"")).collect();
    write(
        &dir,
        "big.json",
        &format!("{{\"locations\":[{}]}}", many.join(",")),
    );
    let out = run(
        &["measure", "sqrtconv", "rho.json", "--candidates", "big.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(3), "candidate bound exceeded");
}

#[test]
fn recover_round_trips_through_emitted_json() {
    let dir = tmpdir("recover");
    write(&dir, "mu.json", MU3);
    let out = run(
        &["shift", "from-measure", "mu.json", "--horizon", "8"],
        &dir,
    );
    let payload: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    write(
        &dir,
        "g.json",
        &serde_json::json!({ "gamma": payload["gamma"] }).to_string(),
    );
    let out = run(&["shift", "recover", "--moments", "g.json"], &dir);
    assert_eq!(out.status.code(), Some(0));
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let original: serde_json::Value = serde_json::from_str(MU3).unwrap();
    assert_eq!(rec["measure"]["atoms"], original["atoms"]);
    assert_eq!(rec["signed"], false);
}

#[test]
fn byte_identical_output_for_identical_invocations() {
    let dir = tmpdir("determinism");
    let a = run(
        &[
            "verify",
            "four-atoms",
            "--trials",
            "3",
            "--seed",
            "42",
            "--max-n",
            "3",
            "--horizon",
            "10",
        ],
        &dir,
    );
    let b = run(
        &[
            "verify",
            "four-atoms",
            "--trials",
            "3",
            "--seed",
            "42",
            "--max-n",
            "3",
            "--horizon",
            "10",
        ],
        &dir,
    );
    assert_eq!(a.stdout, b.stdout);
    let c = run(
        &[
            "verify",
            "four-atoms",
            "--trials",
            "3",
            "--seed",
            "43",
            "--max-n",
            "3",
            "--horizon",
            "10",
        ],
        &dir,
    );
    assert_ne!(a.stdout, c.stdout, "different seed, different instances");
}

#[test]
fn out_flag_duplicates_payload() {
    let dir = tmpdir("outflag");
    write(&dir, "m.json", r#"{"atoms":[{"loc":"1","den":"1"}]}"#);
    let out = run(
        &["--out", "copy.json", "measure", "moments", "m.json", "-n", "3"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let copied = fs::read_to_string(dir.join("copy.json")).unwrap();
    assert_eq!(copied.trim_end(), String::from_utf8_lossy(&out.stdout).trim_end());
}

#[test]
fn aluthge_emits_exact_radical_measure() {
    let dir = tmpdir("aluthge");
    write(&dir, "mu.json", MU3);
    let out = run(
        &["shift", "from-measure", "mu.json", "--horizon", "13"],
        &dir,
    );
    let payload: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    write(
        &dir,
        "w.json",
        &serde_json::json!({ "weights_sq": payload["weights_sq"] }).to_string(),
    );
    let out = run(
        &[
            "shift", "aluthge", "--weights", "w.json", "--max-n", "4", "--horizon", "12",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "transform is subnormal");
    let res: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(res["classification"]["subnormal_truncated"], true);
    // nu = (1 - sqrt(3)/2) d_0 + (sqrt(3)/2) d_1 serialized as radicals
    assert!(res["measure"]["atoms"][1]["den"]["radical"].is_array());
    // squared transform moments are 3/4 from index 1
    assert_eq!(res["moments_sq"][1], "3/4");
    assert_eq!(res["moments_sq"][7], "3/4");
}

#[test]
fn propagate_cli_round_trip() {
    let dir = tmpdir("propagate");
    write(&dir, "mu.json", MU3);
    let out = run(
        &["shift", "from-measure", "mu.json", "--horizon", "16"],
        &dir,
    );
    let payload: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    write(
        &dir,
        "g.json",
        &serde_json::json!({ "gamma": payload["gamma"] }).to_string(),
    );
    let out = run(
        &[
            "flatness",
            "propagate",
            "--moments",
            "g.json",
            "-k",
            "2",
            "--n0",
            "1",
            "--horizon",
            "16",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["parity_conclusion"], "hamburger-2-jumping");
    assert_eq!(report["inner_equalities_verified_from"], 1);
    // the recovered measure is mu itself (outer offset 0)
    let original: serde_json::Value = serde_json::from_str(MU3).unwrap();
    assert_eq!(report["recovered_measure"]["atoms"], original["atoms"]);
}
