use std::process::{Command, Output};

use serde_json::Value;

fn rus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = rus(&all);
    let code = out.status.code().expect("exit code");
    (code, serde_json::from_slice(&out.stdout).expect("valid JSON"))
}

/// Data rows of a CSV document, comment lines dropped, as column → cell maps.
fn csv_rows(text: &str) -> Vec<std::collections::BTreeMap<String, String>> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().unwrap().clone();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            headers
                .iter()
                .zip(r.iter())
                .map(|(h, c)| (h.to_string(), c.to_string()))
                .collect()
        })
        .collect()
}

#[test]
fn table1_flags_the_inconsistent_row() {
    let out = rus(&["table1"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 8);
    let row3 = rows
        .iter()
        .find(|r| r["source"] == "analytic" && r["p_s"] == "2/5")
        .unwrap();
    assert_eq!(row3["M"], "4");
    assert_eq!(row3["N_bond"], "83/2");
    assert!(row3["discrepancy"].contains("N_bond"));
    let clean = rows
        .iter()
        .filter(|r| r["source"] == "analytic" && r["discrepancy"].is_empty())
        .count();
    assert_eq!(clean, 3);
}

#[test]
fn cost_at_length_uses_the_line() {
    let out = rus(&["cost", "--ps", "1/5", "--pi", "0.2", "--pf", "3/5", "--L", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows[0]["N_L"], "17385");
    assert_eq!(rows[0]["slope"], "185");
    assert_eq!(rows[0]["intercept"], "-1115");
}

#[test]
fn invalid_probabilities_are_usage_errors() {
    for args in [
        &["cost", "--ps", "0.5", "--pi", "0.6", "--pf", "0.1"][..],
        &["cost", "--ps", "0.5", "--pi", "0.5"],
        &["cost", "--ps", "abc", "--pi", "0.5", "--pf", "0.5"],
        &["gate", "--eta", "0.5"],
        &["grow", "--policy", "sideways"],
    ] {
        let out = rus(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(rus(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn mub_check_reports_pass_and_fail() {
    let (code, doc) = json(&["mub-check"]);
    assert_eq!(code, 0);
    assert_eq!(doc["passed"], true);
    let (code, doc) = json(&["mub-check", "--mixing", "0,0"]);
    assert_eq!(code, 1);
    assert_eq!(doc["passed"], false);
}

#[test]
fn json_header_echoes_configuration() {
    let (code, doc) = json(&["cost", "--ps", "0.5", "--pi", "0", "--pf", "0.5", "--seed", "9"]);
    assert_eq!(code, 0);
    assert_eq!(doc["header"]["tool"], "rus");
    assert_eq!(doc["header"]["seed"], 9);
    assert_eq!(doc["header"]["config"]["ps"], "0.5");
    let again: Value = serde_json::from_str(&doc.to_string()).unwrap();
    assert_eq!(again, doc);
}

#[test]
fn output_repeats_across_runs_and_thread_counts() {
    let args = [
        "grow", "--ps", "0.5", "--pi", "0", "--pf", "0.5", "--trials", "300", "--L", "16",
    ];
    let first = rus(&args).stdout;
    let second = rus(&args).stdout;
    assert_eq!(first, second);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    assert_eq!(rus(&threaded).stdout, first);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"ps": "1/2", "pi": 0, "pf": 0.5, "L": 64, "seed": 3}"#).unwrap();
    let p = path.to_str().unwrap();
    let (code, doc) = json(&["cost", "--config", p]);
    assert_eq!(code, 0);
    assert_eq!(doc["header"]["seed"], 3);
    assert_eq!(doc["header"]["config"]["L"], 64);
    let (code, doc) = json(&["cost", "--config", p, "--seed", "5", "--L", "32"]);
    assert_eq!(code, 0);
    assert_eq!(doc["header"]["seed"], 5);
    assert_eq!(doc["header"]["config"]["L"], 32);

    std::fs::write(&path, r#"{"colour": "blue"}"#).unwrap();
    assert_eq!(rus(&["cost", "--config", p]).status.code(), Some(2));
}

#[test]
fn output_file_receives_the_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let out = rus(&["table1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("# tool: rus"));
}

#[test]
fn oracle_verify_passes_and_catches_faults() {
    let (code, doc) = json(&["oracle-verify", "--max-n", "4"]);
    assert_eq!(code, 0);
    assert_eq!(doc["passed"], true);
    let (code, doc) = json(&["oracle-verify", "--max-n", "4", "--inject-fault"]);
    assert_eq!(code, 1);
    assert_eq!(doc["passed"], false);
}

#[test]
fn bond_consumption_matches_expectation() {
    let out = rus(&[
        "bond", "--ps", "0.5", "--pi", "0", "--pf", "0.5", "--trials", "20000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    let mc = rows.iter().find(|r| r["source"] == "mc").unwrap();
    let consumed: f64 = mc["M"].parse().unwrap();
    assert!((consumed - 5.0).abs() <= 0.02 * 5.0, "consumed {consumed}");
    assert_eq!(mc["depletions"], "0");
    let short = rus(&[
        "bond",
        "--ps",
        "0.5",
        "--pi",
        "0",
        "--pf",
        "0.5",
        "--trials",
        "2000",
        "--chain-len",
        "4",
    ]);
    let rows = csv_rows(&stdout(&short));
    let depleted: usize = rows.iter().find(|r| r["source"] == "mc").unwrap()["depletions"]
        .parse()
        .unwrap();
    assert!(depleted > 0);
}

#[test]
fn lossy_multiport_gate_fails_at_expected_rate() {
    let (code, doc) = json(&[
        "gate",
        "--apparatus",
        "multiport",
        "--eta",
        "0.8",
        "--trials",
        "20000",
    ]);
    assert_eq!(code, 0);
    let failure = doc["result"]["failure_fraction"].as_f64().unwrap();
    let stderr = doc["result"]["failure_stderr"].as_f64().unwrap();
    assert!(
        (failure - 0.36).abs() <= 4.0 * stderr,
        "failure fraction {failure}"
    );
}

#[test]
fn multiport_map_classifies_every_pattern() {
    let (code, doc) = json(&["multiport-map"]);
    assert_eq!(code, 0);
    assert_eq!(doc["passed"], true);
}
