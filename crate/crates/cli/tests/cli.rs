use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const ZERO_MODEL: &str = "\
discount: 0.9
values: reward
states: 1
actions: 2
observations: 1
T: * : 0 : 0 1.0
O: * : 0 : 0 1.0
R: * : * : * : * 0.0
";

fn hsvi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsvi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn gen_rocksample_reports_shape_and_reparses() {
    let dir = TempDir::new().unwrap();
    let out = path(dir.path(), "rs44.pomdp");
    let o = hsvi(&["gen-rocksample", "4", "4", "-o", &out]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "257 9 2");
    let model = hsvi::load_pomdp(&out).unwrap();
    assert_eq!(model.num_states(), 257);
}

#[test]
fn solve_zero_model_writes_zero_policy() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "zero.pomdp", ZERO_MODEL);
    let policy = path(dir.path(), "zero.policy");
    let o = hsvi(&["solve", &model, "--epsilon", "0.01", "--policy", &policy, "--jobs", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let file = hsvi::load_policy(std::io::BufReader::new(fs::File::open(&policy).unwrap())).unwrap();
    assert!(file.vectors.iter().all(|v| v.values.iter().all(|&x| x == 0.0)));

    let o = hsvi(&["evaluate", &model, &policy, "--episodes", "20", "--json"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["mean"].as_f64(), Some(0.0));
    assert_eq!(report["episodes"].as_u64(), Some(20));
}

#[test]
fn missing_model_exits_with_one() {
    let o = hsvi(&["solve", "/nonexistent/model.pomdp"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn policy_for_a_different_model_is_rejected() {
    let dir = TempDir::new().unwrap();
    let zero = write(dir.path(), "zero.pomdp", ZERO_MODEL);
    let policy = path(dir.path(), "zero.policy");
    assert!(hsvi(&["solve", &zero, "--policy", &policy]).status.success());
    let rs = path(dir.path(), "rs.pomdp");
    assert!(hsvi(&["gen-rocksample", "2", "1", "-o", &rs]).status.success());
    let o = hsvi(&["evaluate", &rs, &policy]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn anytime_trace_is_monotone() {
    let dir = TempDir::new().unwrap();
    let rs = path(dir.path(), "rs.pomdp");
    assert!(hsvi(&["gen-rocksample", "3", "2", "-o", &rs]).status.success());
    let trace = path(dir.path(), "trace.csv");
    let o = hsvi(&["anytime", &rs, "--max-trials", "30", "--trace", &trace]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("trial,wall_time_s,lower_b0,upper_b0,width"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() >= 2);
    for w in rows.windows(2) {
        assert!(w[1][2] >= w[0][2] && w[1][3] <= w[0][3] && w[1][4] <= w[0][4]);
    }
}

#[test]
fn anytime_without_budget_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let zero = write(dir.path(), "zero.pomdp", ZERO_MODEL);
    assert_eq!(hsvi(&["anytime", &zero]).status.code(), Some(1));
}

#[test]
fn empty_bench_suite_prints_header_only() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "empty.toml", "");
    let table = path(dir.path(), "table.csv");
    let out_dir = dir.path().to_str().unwrap();
    let o = hsvi(&["bench", &config, "--out-dir", out_dir, "--table", &table]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(&table).unwrap().trim(),
        "name,states,actions,observations,lower_b0,upper_b0,mean,ci95,vectors,wall_time_s,status"
    );
}

#[test]
fn bench_suite_runs_a_generated_model() {
    let dir = TempDir::new().unwrap();
    let config = write(
        dir.path(),
        "suite.toml",
        "[[run]]\nname = \"rs21\"\nrocksample = { n = 2, k = 1 }\nbudget_s = 5\nepsilon = 0.01\nepisodes = 20\n",
    );
    let table = path(dir.path(), "table.csv");
    let out_dir = dir.path().to_str().unwrap();
    let o = hsvi(&["bench", &config, "--out-dir", out_dir, "--table", &table]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&table).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("rs21,9,6,2,"), "{row}");
    assert!(dir.path().join("rs21.trace.csv").exists());
    assert!(dir.path().join("rs21.policy").exists());
}
