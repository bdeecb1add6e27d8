//! End-to-end tests of the `seqauction` binary: golden outputs, exit
//! codes, format stability, and byte-determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqauction"))
        .args(args)
        .env_remove("SEQAUCTION_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

/// Fresh scratch directory unique to one test.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("seqauction-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("creating scratch dir");
    dir
}

#[test]
fn solve_prints_the_worked_example_table() {
    let output = run(&["solve", "--family", "example1"]);
    assert!(output.status.success());
    let text = stdout(&output);
    // Root row: utilities 10/0, both bids 5, price 5, tie.
    let root_row = text
        .lines()
        .find(|l| l.starts_with("(0,0)"))
        .expect("root row present");
    let cells: Vec<&str> = root_row.split_whitespace().collect();
    assert_eq!(cells, ["(0,0)", "10", "0", "5", "5", "5", "tie"]);
    assert!(text.contains("minimum equilibrium efficiency: 3/4 (~0.75)"));
}

#[test]
fn solve_json_carries_exact_and_approximate_fields() {
    let output = run(&["solve", "--family", "example1", "--format", "json"]);
    assert!(output.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).expect("valid JSON");
    assert_eq!(doc["T"], 2);
    let root = &doc["nodes"]["0,0"];
    assert_eq!(root["u1"], "10");
    assert_eq!(root["u1_approx"], "10.000000000000");
    assert_eq!(root["b1"], "5");
    assert_eq!(root["b2"], "5");
    assert_eq!(root["outcome"], "tie");
    let after_opponent_win = &doc["nodes"]["0,1"];
    assert_eq!(after_opponent_win["b1"], "10");
    assert_eq!(after_opponent_win["b2"], "0");
}

#[test]
fn paths_reports_both_endpoints_and_the_minimum() {
    let output = run(&["paths", "--family", "example1", "--format", "json"]);
    assert!(output.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).expect("valid JSON");
    assert_eq!(doc["endpoints"].as_array().unwrap().len(), 2);
    assert_eq!(doc["min_efficiency"], "3/4");
    assert_eq!(doc["policies"]["favor-buyer2"]["efficiency"], "3/4");
    assert_eq!(doc["policies"]["favor-buyer1"]["efficiency"], "1");
}

#[test]
fn verify_passes_on_generated_instances() {
    for family in [
        "example1",
        "tight-concave:T=6,k=2",
        "tight-general:T=5",
        "random-general:T=9,seed=13",
    ] {
        let output = run(&["verify", "--family", family]);
        assert!(
            output.status.success(),
            "family {family}: {}",
            stderr(&output)
        );
        assert!(stdout(&output).contains("all 9 checks passed"));
    }
}

#[test]
fn verify_rejects_invalid_instances_with_a_report() {
    let dir = scratch("invalid");
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"T":2,"v1":["-1",1],"v2":[1,1]}"#).unwrap();
    let output = run(&["verify", "--input", path.to_str().unwrap()]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("v(1) is negative"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn missing_input_file_is_an_error_with_the_path() {
    let output = run(&["solve", "--input", "/definitely/not/here.json"]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("/definitely/not/here.json"));
}

#[test]
fn generate_round_trips_through_solve() {
    let generated = run(&["generate", "--family", "tight-concave:T=5,k=2"]);
    assert!(generated.status.success());
    let dir = scratch("roundtrip");
    let path = dir.join("inst.json");
    std::fs::write(&path, stdout(&generated)).unwrap();
    let output = run(&[
        "paths",
        "--input",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(output.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).expect("valid JSON");
    // The extremal instance's worst endpoint attains the (T=5, k=2) bound.
    assert_eq!(doc["min_efficiency"], "103/150");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn generate_writes_under_the_output_dir_env_var() {
    let dir = scratch("outdir");
    let output = Command::new(env!("CARGO_BIN_EXE_seqauction"))
        .args([
            "generate",
            "--family",
            "tight-general:T=3",
            "--output",
            "nested/t3.json",
        ])
        .env("SEQAUCTION_OUTPUT_DIR", &dir)
        .output()
        .expect("binary runs");
    assert!(output.status.success(), "{}", stderr(&output));
    let written = dir.join("nested/t3.json");
    let text = std::fs::read_to_string(&written).expect("file written under env dir");
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["T"], 3);
    assert_eq!(doc["v2"][0], "1/3");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn bound_min_over_k_prints_decimal_and_exact() {
    let output = run(&["bound", "--T", "1000", "--class", "concave", "--min-over-k"]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("argmin k = 368"));
    assert!(text.contains("decimal ~ 0.632436382798"));
    // The exact value is printed as a single (enormous) fraction.
    assert!(text
        .lines()
        .any(|l| l.trim().starts_with("exact") && l.contains('/')));
}

#[test]
fn bound_rejects_contradictory_flags() {
    let output = run(&["bound", "--T", "5", "--k", "2", "--min-over-k"]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("mutually exclusive"));
    let output = run(&["bound", "--T", "5", "--class", "concave"]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("--k"));
}

#[test]
fn certify_shows_all_rows_tight_for_the_concave_certificate() {
    let output = run(&["certify", "--T", "4", "--k", "2", "--format", "json"]);
    assert!(output.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&output)).expect("valid JSON");
    assert_eq!(doc["objective"], "17/24");
    assert_eq!(doc["all_rows_tight"], true);
    assert_eq!(doc["feasible"], true);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn poa_table_csv_has_the_documented_schema_and_agreeing_routes() {
    let output = run(&["poa-table", "--max-items", "4", "--format", "csv"]);
    assert!(output.status.success());
    let text = stdout(&output);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "T,k,formula,lp_opt,dual_obj,tight_instance_eff,min_over_k,\
         formula_approx,lp_opt_approx,dual_obj_approx,tight_instance_eff_approx,min_over_k_approx"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 1 + 2 + 3 + 4);
    for row in &rows {
        // formula == lp_opt == dual_obj == tight_instance_eff, exactly.
        assert_eq!(row[2], row[3], "row {row:?}");
        assert_eq!(row[2], row[4], "row {row:?}");
        assert_eq!(row[2], row[5], "row {row:?}");
    }
    assert!(text.contains("3,1,13/18"));
}

#[test]
fn fuzz_reports_green_and_respects_exit_codes() {
    let output = run(&["fuzz", "--count", "24", "--max-items", "6", "--seed", "7"]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("all instances green"));
    assert!(text.contains("recurrences: 24 pass, 0 fail"));
}

#[test]
fn identical_argv_and_seed_give_byte_identical_output() {
    let cases: [&[&str]; 4] = [
        &[
            "solve",
            "--family",
            "random-general:T=8,seed=21",
            "--format",
            "json",
        ],
        &["fuzz", "--count", "20", "--seed", "3", "--format", "json"],
        &["poa-table", "--max-items", "5", "--format", "csv"],
        &[
            "paths",
            "--family",
            "random-concave:T=7,seed=2",
            "--format",
            "json",
        ],
    ];
    for args in cases {
        let first = run(args);
        let second = run(args);
        assert!(first.status.success(), "{args:?}");
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn jobs_flag_does_not_change_the_bytes() {
    let serial = run(&["fuzz", "--count", "18", "--seed", "9", "--jobs", "1"]);
    let parallel = run(&["fuzz", "--count", "18", "--seed", "9", "--jobs", "4"]);
    assert!(serial.status.success());
    assert_eq!(serial.stdout, parallel.stdout);

    let serial = run(&[
        "poa-table",
        "--max-items",
        "6",
        "--format",
        "csv",
        "--jobs",
        "1",
    ]);
    let parallel = run(&[
        "poa-table",
        "--max-items",
        "6",
        "--format",
        "csv",
        "--jobs",
        "3",
    ]);
    assert!(serial.status.success());
    assert_eq!(serial.stdout, parallel.stdout);
}

#[test]
fn stdin_input_works_via_dash() {
    use std::io::Write as _;
    let generated = run(&["generate", "--family", "example1"]);
    let mut child = Command::new(env!("CARGO_BIN_EXE_seqauction"))
        .args(["verify", "--input", "-"])
        .env_remove("SEQAUCTION_OUTPUT_DIR")
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .expect("binary runs");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(&generated.stdout)
        .unwrap();
    let output = child.wait_with_output().unwrap();
    assert!(output.status.success());
    assert!(stdout(&output).contains("all 9 checks passed"));
}
