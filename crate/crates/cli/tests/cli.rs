use std::process::{Command, Output};

use lindqg::Rational;
use serde_json::Value;

fn lindqg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lindqg")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn gen_dual_eight() {
    let o = lindqg(&["gen-dual", "--i", "8"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "{\"1\":\"1/4\",\"3\":\"1/2\",\"8\":\"1\"}\n");
}

#[test]
fn gen_basis_rejects_nonpositive() {
    for i in ["0", "-3"] {
        let o = lindqg(&["gen-basis", "--i", i]);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains(">= 1"));
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(lindqg(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(lindqg(&["ucc"]).status.code(), Some(2));
    assert_eq!(lindqg(&["ucc", "--m", "21"]).status.code(), Some(2));
    assert_eq!(lindqg(&["dual-growth", "--n-max", "13"]).status.code(), Some(2));
    assert_eq!(
        lindqg(&["verify-theorem", "--trials", "1", "--max-index", "10001"]).status.code(),
        Some(2)
    );
    assert_eq!(lindqg(&["expand", "--coeffs", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn dual_growth_csv_on_stdout() {
    let o = lindqg(&["dual-growth", "--n-max", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows = text.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    assert_eq!(&header[..6], &["n", "M", "alt_norm", "witness_norm", "pairing", "lower_bound"]);
    assert!(header[6..].iter().all(|h| h.ends_with("_approx")));
    let lower: Vec<String> = rows.map(|r| r.split(',').nth(5).unwrap().to_string()).collect();
    assert_eq!(lower, ["1/2", "1", "3/2"]);
}

#[test]
fn dual_growth_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("growth.csv");
    let o = lindqg(&["dual-growth", "--n-max", "2", "--csv", path.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let recs = lines(&o);
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[1]["M"], 6);
    assert_eq!(recs[1]["lower_bound"], "1");
}

#[test]
fn verify_theorem_summary() {
    let o = lindqg(&["verify-theorem", "--trials", "1000", "--seed", "7", "--max-index", "40"]);
    assert!(o.status.success());
    let recs = lines(&o);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["certified"], 1000);
    assert_eq!(recs[0]["failures"], 0);
}

#[test]
fn trace_with_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let alpha = dir.path().join("alpha.json");
    std::fs::write(&alpha, r#"{"1":"1","3":"1"}"#).unwrap();
    let cert = dir.path().join("cert.json");
    let o = lindqg(&[
        "trace",
        "--s1",
        "1",
        "--s2",
        "3",
        "--alpha",
        alpha.to_str().unwrap(),
        "--emit-certificate",
        cert.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rec = &lines(&o)[0];
    assert_eq!(rec["k"], 1);
    assert_eq!(rec["main_lhs"], "9");
    assert_eq!(rec["main_rhs"], "2");
    let full: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(full["steps"][0]["b"], serde_json::json!([7, 8]));
}

#[test]
fn trace_rejects_bad_instance() {
    let dir = tempfile::tempdir().unwrap();
    let alpha = dir.path().join("alpha.json");
    // |alpha_3| > min over S1
    std::fs::write(&alpha, r#"{"1":"1/2","3":"1"}"#).unwrap();
    let o = lindqg(&["trace", "--s1", "1", "--s2", "3", "--alpha", alpha.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn greedy_all_selections_summary() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = dir.path().join("a.json");
    std::fs::write(&coeffs, r#"{"1":"1","3":"1","4":"1"}"#).unwrap();
    let o = lindqg(&["greedy", "--coeffs", coeffs.to_str().unwrap(), "--m", "1", "--all-selections"]);
    assert!(o.status.success());
    let recs = lines(&o);
    assert_eq!(recs.len(), 4);
    assert_eq!(recs.iter().filter(|r| r["canonical"] == true).count(), 1);
    let summary = &recs[3];
    assert_eq!(summary["records"], 3);
    assert_eq!(summary["max_ratio"], "1/2");
}

#[test]
fn emitted_rationals_parse_back() {
    let o = lindqg(&["conditionality", "--n", "5"]);
    let rec = &lines(&o)[0];
    for key in ["numerator", "denominator", "ratio"] {
        let s = rec[key].as_str().unwrap();
        let q: Rational = s.parse().unwrap();
        assert_eq!(q.to_string(), s);
    }
    assert_eq!(rec["ratio"], "5");
}

#[test]
fn ds_commands() {
    let dir = tempfile::tempdir().unwrap();
    let v = dir.path().join("v.json");
    std::fs::write(&v, r#"{"2":{"1":"1"},"3":{"3":"1"}}"#).unwrap();
    let o = lindqg(&["ds-norm", "--vec", v.to_str().unwrap()]);
    assert_eq!(lines(&o)[0]["norm"], "4");
    let o = lindqg(&["ds-greedy", "--vec", v.to_str().unwrap(), "--m", "1"]);
    assert!(o.status.success());
    let rec = &lines(&o)[0];
    assert_eq!(rec["result"], serde_json::json!({"2": {"1": "1"}}));
    assert_eq!(rec["ratio"], "1/2");

    std::fs::write(&v, r#"{"2":{"3":"1"}}"#).unwrap();
    assert_eq!(lindqg(&["ds-norm", "--vec", v.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let v = dir.path().join("v.json");
    std::fs::write(&v, r#"{"1":"1","7":"-1/4","8":"-1/4","9":"-1/4","10":"-1/4"}"#).unwrap();
    let o = lindqg(&["analyze", "--vec", v.to_str().unwrap(), "--n", "4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "{\"1\":\"1\",\"3\":\"1/2\",\"4\":\"1/2\"}\n");
}
