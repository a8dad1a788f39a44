use std::path::{Path, PathBuf};

use motorprot_cli::main_with_args;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("motorprot").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

/// Shipped scenario A with `edit` applied, written into `dir`.
fn edited(dir: &Path, name: &str, edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let text = std::fs::read_to_string(scenario("scenario_A.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("run") && out.contains("compare") && out.contains("validate"));
    assert_eq!(cli(&["--version"]).0, 0);
}

#[test]
fn bad_usage_exits_one() {
    assert_eq!(cli(&["frobnicate"]).0, 1);
    assert_eq!(cli(&["run"]).0, 1);
}

#[test]
fn missing_file_exits_one() {
    let (code, _, err) = cli(&["run", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/scenario.json"));
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in ["scenario_A.json", "scenario_B.json"] {
        let path = scenario(name);
        let (code, out, _) = cli(&["validate", "--scenario", path.to_str().unwrap()]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("4904.84 kW"), "{out}");
    }
}

#[test]
fn validate_reports_zip_sum_and_sag_overlap_together() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited(dir.path(), "bad.json", |v| {
        v["buildings"]["zip"]["a_z"] = serde_json::json!(0.6);
        v["source"]["sags"] = serde_json::json!([
            {"start": 1.0, "end": 1.2, "voltage": 0.35},
            {"start": 1.1, "end": 1.3, "voltage": 0.5}
        ]);
    });
    let (code, out, _) = cli(&["validate", "--scenario", &path]);
    assert_eq!(code, 1);
    assert!(out.to_lowercase().contains("zip"), "{out}");
    assert!(out.contains("overlap"), "{out}");
}

#[test]
fn run_writes_csvs_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let path = scenario("scenario_A.json");
    let (code, out, err) = cli(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--duration",
        "2",
        "--plot",
        "--deterministic",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("2000 steps"), "{out}");
    for f in [
        "voltages.csv",
        "devices.csv",
        "events.csv",
        "metadata.json",
        "head_voltage.svg",
        "devices.svg",
    ] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let meta = std::fs::read_to_string(out_dir.join("metadata.json")).unwrap();
    assert!(!meta.contains("timestamp"));
    let header = std::fs::read_to_string(out_dir.join("voltages.csv")).unwrap();
    assert!(header.starts_with("time,head,"));
}

#[test]
fn solver_failure_exits_two_and_keeps_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    // enough iterations for the pre-fault state but not for the sag onset
    let path = edited(dir.path(), "starved.json", |v| {
        v["simulation"]["solver"] = serde_json::json!({"max_iterations": 6});
    });
    let out_dir = dir.path().join("out");
    let (code, _, err) = cli(&[
        "run",
        "--scenario",
        &path,
        "--out",
        out_dir.to_str().unwrap(),
        "--duration",
        "2",
    ]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("did not converge"), "{err}");
    assert!(out_dir.join("voltages.csv.partial").is_file());
    assert!(!out_dir.join("voltages.csv").exists());
    let meta = std::fs::read_to_string(out_dir.join("metadata.json.partial")).unwrap();
    assert!(meta.contains("\"completed\": false"), "{meta}");
}

#[test]
fn compare_prints_trip_table_and_writes_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (scenario("scenario_A.json"), scenario("scenario_B.json"));
    let out_dir = dir.path().join("cmp");
    let (code, out, err) = cli(&[
        "compare",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--duration",
        "3",
        "--deterministic",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("protection"), "{out}");
    assert!(out_dir.join("comparison.csv").is_file());
    assert!(out_dir.join("head_overlay.svg").is_file());
    let csv = std::fs::read_to_string(out_dir.join("comparison.csv")).unwrap();
    assert!(csv.starts_with("time,head_a,head_b,diff_head"));
}
