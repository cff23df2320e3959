use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn uipt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uipt"))
        .args(args)
        .env_remove("UIPT_THREADS")
        .output()
        .expect("binary runs")
}

fn uipt_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uipt"))
        .args(args)
        .env(key, val)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn last_stderr_json(o: &Output) -> Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(err.lines().last().expect("a summary line")).expect("summary is JSON")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("uipt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn verify_passes_and_sabotage_fails() {
    let ok = uipt(&["verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let lines: Vec<Value> = stdout(&ok)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let checks = &lines[..lines.len() - 1];
    assert!(checks.len() >= 10);
    assert!(checks.iter().all(|c| c["status"] == "pass"));

    let bad = uipt(&["verify", "--orders", "8", "--sabotage", "fixed-point"]);
    assert_eq!(bad.status.code(), Some(1));
    let failed: Vec<Value> = stdout(&bad)
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v["status"] == "fail")
        .collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["check_id"], "fixed-point");

    assert_eq!(uipt(&["verify", "--orders", "8"]).status.code(), Some(0));
}

#[test]
fn exit_codes() {
    assert_eq!(uipt(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        uipt(&["count", "--n", "3", "--m", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(
        uipt(&["simulate", "--R", "5", "--m0", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        uipt_env(&["count", "--n", "2", "--m", "2"], "UIPT_THREADS", "zero")
            .status
            .code(),
        Some(2)
    );
    let unwritable = tmp("missing-dir").join("nested").join("out.json");
    let o = uipt(&[
        "count",
        "--n",
        "2",
        "--m",
        "2",
        "--out",
        unwritable.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(uipt(&["--version"]).status.code(), Some(0));
    assert!(stdout(&uipt(&["--version"])).starts_with("uipt v"));
}

#[test]
fn count_and_coefficients() {
    let v = json_out(&uipt(&["count", "--n", "12", "--m", "2"]));
    assert_eq!(v["count"], "13056");
    let o = uipt(&["coeffs", "--n-max", "4", "--m-max", "4"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,m,count,source"));
    assert!(csv.lines().any(|l| l.starts_with("4,2,4,")));
    assert!(csv.lines().any(|l| l.starts_with("1,3,1,")));
}

#[test]
fn moments_csv() {
    let o = uipt(&["moments", "--j-max", "1", "--R-list", "1,16"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(csv.lines().next(), Some("R,j,exact,float,scaled,asymptote"));
    assert_eq!(rows.len(), 4);
    let find = |r: &str, j: &str| {
        rows.iter()
            .find(|row| row[0] == r && row[1] == j)
            .unwrap()
            .clone()
    };
    assert_eq!(find("16", "0")[2], "1/1");
    // one layer from a 2-gon: E[m] = 35/4
    assert_eq!(find("1", "1")[2], "35/4");
}

#[test]
fn dist_row_sums_to_one_within_bound() {
    let summary = tmp("dist.json");
    let o = uipt(&[
        "dist",
        "--R",
        "2",
        "--kmax",
        "600",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let mut total = 0.0;
    let mut bound = 0.0;
    for line in csv.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cells[1] >= 0.0);
        total += cells[1];
        bound = cells[2];
    }
    assert!(
        (total - 1.0).abs() <= bound + 1e-12,
        "total {total}, bound {bound}"
    );
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(s["mean_bound"].as_f64().unwrap() < 1e-6);
    assert!(s["meta"]["config"]["command"]["dist"]["tolerance"].is_null());
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--R", "20", "--replicas", "64", "--seed", "42"];
    let a = uipt(&args);
    let b = uipt(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let one = uipt_env(&args, "UIPT_THREADS", "1");
    let four = uipt_env(&args, "UIPT_THREADS", "4");
    assert_eq!(a.stdout, one.stdout);
    assert_eq!(a.stdout, four.stdout);
    let other = uipt(&["simulate", "--R", "20", "--replicas", "64", "--seed", "43"]);
    assert_ne!(a.stdout, other.stdout);

    let csv = stdout(&a);
    assert_eq!(csv.lines().next(), Some("replica,step,boundary_length"));
    assert_eq!(csv.lines().count(), 1 + 64 * 21);
    let s = last_stderr_json(&a);
    assert_eq!(s["stats"]["n"], 64);
    assert_eq!(s["meta"]["seed"], 42);
}

#[test]
fn config_echo_round_trips() {
    let first = json_out(&uipt(&[
        "--seed", "5", "limits", "--n", "1", "--m0", "2", "--holes", "3",
    ]));
    let argv: Vec<String> = first["meta"]["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
    let again = json_out(&uipt(&argv));
    assert_eq!(first, again);
    let config = &first["meta"]["config"];
    assert_eq!(config["seed"], 5);
    assert_eq!(config["command"]["limits"]["holes"], serde_json::json!([3]));

    let d = uipt(&["dist", "--R", "1", "--kmax", "64", "--tolerance", "0.5"]);
    let s = last_stderr_json(&d);
    assert_eq!(s["meta"]["config"]["command"]["dist"]["tolerance"], 0.5);
}

#[test]
fn contour_reports_each_x() {
    let v = json_out(&uipt(&[
        "contour",
        "--r",
        "8",
        "--x-list",
        "1,2",
        "--mc-replicas",
        "20",
    ]));
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["n"], 64);
    assert_eq!(v["contour_bound"], 44.0);
    for r in results {
        assert!(r["exact"].as_f64().unwrap() >= 1.0);
        assert!(r["mc_mean"].as_f64().is_some());
    }
}

#[test]
fn json_format_for_tables() {
    let o = uipt(&[
        "--format", "json", "moments", "--j-max", "0", "--R-list", "3",
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["exact"], "1/1");
    assert_eq!(v[0]["R"], 3);
}
