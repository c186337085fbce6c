use std::fs;
use std::path::Path;
use std::process::Command;

use resonant_cli::commands::{run_scenario, Context, ScanOutput, SolveReport};
use resonant_cli::error::CliError;
use resonant_cli::output::{csv_bytes, from_json, to_json, Envelope};
use resonant_cli::scenario::Scenario;

const SOLVE: &str = r#"
seed = 11
[nonlinearity]
p = 3
terms = { "3" = { c0 = 1.0 } }
[run]
kind = "solve"
deltas = [0.0]
"#;

fn ctx(dir: &Path) -> Context {
    Context {
        out: dir.to_path_buf(),
        seed: 11,
        precision: None,
    }
}

fn lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn tau_outside_range_is_rejected() {
    let text = SOLVE.replace("[run]", "[scheme]\ntau = 2.5\n[run]");
    let err = Scenario::from_toml(&text).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("scheme.tau") && msg.contains("(1, 2)"), "{msg}");
}

#[test]
fn solve_at_zero_writes_a_zero_range_report_that_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario::from_toml(SOLVE).unwrap();
    let out = run_scenario(&s, &ctx(dir.path())).unwrap();
    assert!(out.success);
    assert_eq!(out.artifacts.files.len(), 3);

    let bytes = fs::read(dir.path().join("solve.json")).unwrap();
    let env: Envelope<SolveReport> = from_json(&bytes).unwrap();
    assert_eq!(env.kind, "solve");
    let pt = &env.data.points[0];
    assert_eq!(pt.delta, 0.0);
    assert!(pt.accepted);
    assert_eq!(pt.w.max_abs(), 0.0);
    assert_eq!(to_json("solve", &env.data).unwrap(), bytes);
    assert_eq!(lines(&dir.path().join("branch.csv")), 2);
}

#[test]
fn rerun_is_byte_identical() {
    let s = Scenario::from_toml(SOLVE).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario(&s, &ctx(a.path())).unwrap();
    run_scenario(&s, &ctx(b.path())).unwrap();
    for name in ["solve.json", "branch.csv", "h_decay.dat"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn unknown_schema_major_is_rejected() {
    let bytes = to_json("probe", &vec![1.0, 2.0]).unwrap();
    let text = String::from_utf8(bytes).unwrap().replace("\"1.0\"", "\"2.0\"");
    match from_json::<Vec<f64>>(text.as_bytes()) {
        Err(CliError::SchemaVersion { found, expected }) => {
            assert_eq!(found, "2.0");
            assert_eq!(expected, 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_table_keeps_its_header() {
    let rows: Vec<(f64, f64)> = Vec::new();
    let bytes = csv_bytes(&["delta", "residual"], &rows).unwrap();
    assert_eq!(bytes, b"delta,residual\n");
}

#[test]
fn branch_table_has_one_row_per_delta() {
    let dir = tempfile::tempdir().unwrap();
    let text = SOLVE.replace("deltas = [0.0]", "deltas = [0.0, 0.01, 0.02]");
    let s = Scenario::from_toml(&text).unwrap();
    let out = run_scenario(&s, &ctx(dir.path())).unwrap();
    assert!(out.success, "{}", out.summary);
    assert_eq!(lines(&dir.path().join("branch.csv")), 1 + 3);
}

#[test]
fn scan_emits_tables_with_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let text = SOLVE.replace(
        "kind = \"solve\"\ndeltas = [0.0]",
        "kind = \"scan\"\neta = 0.05\nm_deltas = [0.02, 0.05]\n[run.scan]\ngrid_density = 64\nwindows = 4",
    );
    let s = Scenario::from_toml(&text).unwrap();
    run_scenario(&s, &ctx(dir.path())).unwrap();
    let env: Envelope<ScanOutput> = from_json(&fs::read(dir.path().join("scan.json")).unwrap()).unwrap();
    let fit = env.data.fit.expect("exponent fit");
    assert!(fit.exponent.is_finite());
    assert!(env.data.report.pairs.is_empty());
    assert_eq!(lines(&dir.path().join("windows.csv")), 1 + 4);
    assert!(lines(&dir.path().join("pairs.csv")) > 1);
    assert!(dir.path().join("density.dat").exists());
}

#[test]
fn binary_reports_schema_errors_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, SOLVE.replace("[run]", "[scheme]\ntau = 2.5\n[run]")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_resonant"))
        .args(["solve", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("scheme.tau"));
}

#[test]
fn binary_runs_eig() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eig.toml");
    let text = SOLVE.replace(
        "kind = \"solve\"\ndeltas = [0.0]",
        "kind = \"eig\"\nks = [0, 3]\nepsilon = 0.01\nj_max = 12\na0 = { c0 = 0.0, cos = [0.0, 1.0], sin = [0.5] }",
    );
    fs::write(&path, text).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_resonant"))
        .args(["eig", "--threads", "1", "--scenario"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // k = 0 has 12 modes, k = 3 drops j = 3
    assert_eq!(lines(&dir.path().join("eigenvalues.csv")), 1 + 12 + 11);
}
