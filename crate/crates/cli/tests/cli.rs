use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dobinski"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    serde_json::from_str(&stdout(&full)).unwrap()
}

fn rows(v: &Value) -> &Vec<Value> {
    v["results"]["rows"].as_array().unwrap()
}

#[test]
fn one_third_has_unit_runs() {
    let v = json(&["expand", "--x", "periodic:;01", "--n", "8"]);
    let rows = rows(&v);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r["z"] == "1"));
    assert_eq!(v["results"]["summary"]["value"], "1/3");
}

#[test]
fn product_at_one_third_approaches_three() {
    let v = json(&["product", "--x", "periodic:;01", "--n", "20", "--precision", "20"]);
    let last = rows(&v).last().unwrap().clone();
    assert_eq!(last["n"], 20);
    // P_20(1/3) = 3^{1 - 2^-21}
    let expected = 3f64.powf(1.0 - 2f64.powi(-21));
    let partial: f64 = last["partial"].as_str().unwrap().parse().unwrap();
    assert!((partial - expected).abs() < 1e-12);
    let target: f64 = last["target"].as_str().unwrap().parse().unwrap();
    assert!((target - 3.0).abs() < 1e-15);
    let errors: Vec<f64> = rows(&v).iter().map(|r| r["error"].as_str().unwrap().parse().unwrap()).collect();
    assert!(errors.windows(2).skip(1).all(|w| w[1] < w[0]));
}

#[test]
fn quasi_independence_of_quarter_grids() {
    let v = json(&["quasi", "--omega", "1/4", "--nmax", "12"]);
    let pair = rows(&v).iter().find(|r| r["n"] == 1 && r["m"] == 2).unwrap();
    assert_eq!(pair["ratio"], "1");
    let max: Vec<i64> = v["results"]["summary"]["max_ratio"]
        .as_str()
        .unwrap()
        .split('/')
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(max[0] <= 2 * max.get(1).copied().unwrap_or(1));
}

#[test]
fn json_reports_carry_schema_and_config() {
    let v = json(&["bell", "--n", "6"]);
    assert_eq!(v["schema"], "dobinski.bell/1");
    assert_eq!(v["config"]["global"]["precision"], 30);
    assert_eq!(rows(&v)[6]["value"], "203");
    assert!(v.get("timings").is_none());
    let t = json(&["bell", "--n", "2", "--timings"]);
    assert!(t["timings"]["elapsed_ms"].is_number());
}

#[test]
fn willow_audit_is_deterministic() {
    let args = ["willow", "audit", "--depth", "2", "--probes", "300", "--seed", "7", "--format", "json"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema"], "dobinski.willow-audit/1");
    assert_eq!(v["results"]["summary"]["seed"], 7);
}

#[test]
fn csv_has_header_rows_and_summary() {
    let text = stdout(&["willow", "build"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,n_k,M_k,intervals,e_min,e_max"));
    assert_eq!(lines.next(), Some("1,3,2,32,12,15"));
    assert!(text.contains("\nkey,value\nmode,tamed(2)\n"));
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("dobinski-cli-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    assert!(stdout(&["bell", "--n", "3", "--out", p]).is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(written.starts_with("n,value,truncation\n"));
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code().unwrap();
    assert_eq!(code(&["expand", "--x", "bogus"]), 1);
    assert_eq!(code(&["--precision", "5", "bell", "--n", "2"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["bell", "--n", "5", "--mode", "series", "--terms", "2"]), 2);
    assert_eq!(code(&["cover", "--set", "dobinski:1", "--n", "30", "--exponent-cap", "2048"]), 3);
    assert_eq!(code(&["willow", "plan", "--mode", "true", "--generations", "3"]), 3);
    assert_eq!(code(&["--help"]), 0);
}
