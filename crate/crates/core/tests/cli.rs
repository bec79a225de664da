//! End-to-end tests of the command-line front end.

use std::path::PathBuf;
use std::process::Command;

use rackregen::cli::{self, EXIT_CONFIG, EXIT_FAILURE, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE};
use rackregen::rational::int;
use rackregen::SystemConfig;

fn config(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "configs", name].iter().collect();
    path.to_str().unwrap().to_string()
}

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run(args: &[&str]) -> Run {
    let argv: Vec<String> = std::iter::once("rackregen").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(&argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<String> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].clone()).collect()
}

fn unit_tau_config(dir: &tempfile::TempDir) -> String {
    let cfg = SystemConfig::simple(4, 4, int(1), &[(3, 1), (3, 2)]).unwrap();
    let path = dir.path().join("unit_tau.json");
    std::fs::write(&path, serde_json::to_string(&cfg.to_document()).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn knee_table_has_exact_and_decimal_columns() {
    let r = run(&["curve", "--config", &config("two_rack_k4.json"), "--model", "rack"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let mut lines = r.out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "knee_index,L_i,beta_e,beta_e_dec,alpha,alpha_dec,gamma_1,gamma_1_dec,gamma_2,gamma_2_dec,cost_1,cost_1_dec,cost_2,cost_2_dec"
    );
    assert_eq!(lines.next().unwrap(), "0,2,1/8,0.125,1/4,0.25,5/8,0.625,3/4,0.75,5/8,0.625,3/4,0.75");
    let (header, rows) = csv_rows(&r.out);
    assert_eq!(column(&header, &rows, "beta_e"), ["1/8", "1/11", "1/13", "1/14"]);
    assert_eq!(column(&header, &rows, "beta_e_dec")[1], "0.0909090909091");
}

#[test]
fn segment_table_marks_the_plateau() {
    let r = run(&["curve", "--config", &config("two_rack_k4.json"), "--model", "rack", "--table", "segments"]);
    assert_eq!(r.code, EXIT_OK);
    let (header, rows) = csv_rows(&r.out);
    assert_eq!(header, ["segment_index", "i", "L_i", "g_i", "beta_lo", "beta_hi", "alpha_lo", "alpha_hi"]);
    assert_eq!(rows[0][5], "inf");
    assert_eq!(column(&header, &rows, "g_i"), ["0", "2", "5", "9"]);
}

#[test]
fn json_and_csv_carry_the_same_values() {
    let csv_out = run(&["curve", "--config", &config("repair_cost.json"), "--model", "rack"]).out;
    let json_out = run(&["curve", "--config", &config("repair_cost.json"), "--model", "rack", "--format", "json"]).out;
    let doc: serde_json::Value = serde_json::from_str(&json_out).unwrap();
    let (header, rows) = csv_rows(&csv_out);
    for field in ["beta_e", "alpha", "beta_e_dec", "alpha_dec"] {
        let from_json: Vec<String> =
            doc["knees"].as_array().unwrap().iter().map(|k| k[field].as_str().unwrap().to_string()).collect();
        assert_eq!(from_json, column(&header, &rows, field), "{field}");
    }
    assert_eq!(doc["model"], "rack");
}

#[test]
fn every_model_renders() {
    for model in ["rack", "static", "basic"] {
        let r = run(&["curve", "--config", &config("two_rack_k10.json"), "--model", model]);
        assert_eq!(r.code, EXIT_OK, "{model}: {}", r.err);
        assert!(r.out.lines().count() > 1);
    }
}

#[test]
fn output_is_byte_deterministic() {
    let args = ["verify", "--config", &config("two_rack_k3.json"), "--samples", "12", "--seed", "9"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.out, b.out);
    assert_eq!(a.code, b.code);
}

#[test]
fn out_flag_writes_the_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let r = run(&["curve", "--config", &config("two_rack_k4.json"), "--model", "rack", "--out", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.out.is_empty());
    let direct = run(&["curve", "--config", &config("two_rack_k4.json"), "--model", "rack"]).out;
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
}

#[test]
fn unwritable_out_path_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("curve.csv");
    let r = run(&["curve", "--config", &config("two_rack_k4.json"), "--model", "rack", "--out", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_FAILURE);
    assert!(r.err.contains("cannot write output"));
}

#[test]
fn points_lists_msr_then_mbr() {
    let r = run(&["points", "--config", &config("two_rack_k4.json")]);
    assert_eq!(r.code, EXIT_OK);
    let (header, rows) = csv_rows(&r.out);
    assert_eq!(column(&header, &rows, "point"), ["msr", "mbr"]);
    assert_eq!(column(&header, &rows, "beta_e"), ["1/8", "1/14"]);
}

#[test]
fn compare_reports_dominance_on_stderr() {
    let r = run(&["compare", "--config", &config("two_rack_k10.json"), "--models", "rack,static,basic"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.err.contains("dominance: rack beta_e <= static beta_e"));
    let (header, rows) = csv_rows(&r.out);
    assert_eq!(header[0], "model");
    let mut models = column(&header, &rows, "model");
    models.dedup();
    assert_eq!(models, ["rack", "static", "basic"]);
}

#[test]
fn sweep_prefixes_rows_with_tau() {
    let r = run(&["sweep", "--config", &config("two_rack_k10.json"), "--tau", "1,6/5,2"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let (header, rows) = csv_rows(&r.out);
    assert_eq!(header[0], "tau");
    let taus = column(&header, &rows, "tau");
    assert_eq!(taus.first().unwrap(), "1");
    assert_eq!(taus.last().unwrap(), "2");
    assert!(taus.contains(&"6/5".to_string()));
}

#[test]
fn sweep_rejects_tau_below_one() {
    let r = run(&["sweep", "--config", &config("two_rack_k10.json"), "--tau", "1/2"]);
    assert_eq!(r.code, EXIT_CONFIG);
    let r = run(&["sweep", "--config", &config("two_rack_k10.json"), "--tau", "two"]);
    assert_eq!(r.code, EXIT_USAGE);
}

#[test]
fn verify_passes_at_unit_tau_and_catches_an_inflated_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let path = unit_tau_config(&dir);
    let clean = run(&["verify", "--config", &path, "--samples", "8", "--seed", "1"]);
    assert_eq!(clean.code, EXIT_OK, "{}", clean.out);
    assert!(clean.out.contains("mismatches: 0\n"));
    let bad = run(&["verify", "--config", &path, "--samples", "8", "--seed", "1", "--inflate-coeff", "0"]);
    assert_eq!(bad.code, EXIT_MISMATCH);
    assert!(bad.out.contains("MISMATCH"));
    let out_of_range = run(&["verify", "--config", &path, "--samples", "8", "--inflate-coeff", "9"]);
    assert_eq!(out_of_range.code, EXIT_USAGE);
}

#[test]
fn verify_flags_the_interleaved_undercut() {
    let r = run(&["verify", "--config", &config("two_rack_k4.json"), "--samples", "4"]);
    assert_eq!(r.code, EXIT_MISMATCH);
    let (header, rows) = csv_rows(r.out.split_once("kind,").map(|(_, t)| format!("kind,{t}")).unwrap().as_str());
    let status = column(&header, &rows, "status");
    assert!(status.iter().any(|s| s == "MISMATCH"));
    // the all-orders minimum tracks the flow oracle exactly
    assert_eq!(column(&header, &rows, "all_orders"), column(&header, &rows, "oracle"));
}

#[test]
fn exhaustive_mode_guard_is_a_runtime_failure() {
    let r = run(&["verify", "--config", &config("two_rack_k10.json"), "--samples", "1", "--mode", "exhaustive"]);
    assert_eq!(r.code, EXIT_FAILURE);
    assert!(r.err.contains("enumeration too large"));
}

#[test]
fn bad_configs_exit_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("not json", "{"),
        ("k above d", r#"{"file_size":"1","k":5,"d":4,"tau":"2","cheap_cost":"1","expensive_cost":"1","racks":[{"nodes":3,"cheap_degree":1},{"nodes":3,"cheap_degree":2}]}"#),
        ("tau below one", r#"{"file_size":"1","k":4,"d":4,"tau":"1/2","cheap_cost":"1","expensive_cost":"1","racks":[{"nodes":3,"cheap_degree":1},{"nodes":3,"cheap_degree":2}]}"#),
    ];
    for (name, body) in cases {
        let path = dir.path().join("bad.json");
        std::fs::write(&path, body).unwrap();
        let r = run(&["curve", "--config", path.to_str().unwrap(), "--model", "rack"]);
        assert_eq!(r.code, EXIT_CONFIG, "{name}");
        assert!(r.err.starts_with("error:"), "{name}");
    }
    let r = run(&["curve", "--config", "/nonexistent/config.json", "--model", "rack"]);
    assert_eq!(r.code, EXIT_CONFIG);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["curve", "--config", &config("two_rack_k4.json")]).code, EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(run(&["curve", "--config", &config("two_rack_k4.json"), "--model", "fancy"]).code, EXIT_USAGE);
    assert_eq!(run(&["--help"]).code, EXIT_OK);
}

#[test]
fn binary_propagates_exit_statuses() {
    let bin = env!("CARGO_BIN_EXE_rackregen");
    let ok = Command::new(bin).args(["points", "--config", &config("two_rack_k3.json")]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8(ok.stdout).unwrap().starts_with("point,"));
    let usage = Command::new(bin).arg("points").output().unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_USAGE));
    let mismatch = Command::new(bin)
        .args(["verify", "--config", &config("two_rack_k4.json"), "--samples", "2"])
        .output()
        .unwrap();
    assert_eq!(mismatch.status.code(), Some(EXIT_MISMATCH));
}
