use std::fs;
use std::path::Path;

use rhcontract::first_best::LagrangianSolution;
use rhcontract::report::to_json_string;
use tempfile::TempDir;

use crate::config::FormatChoice;
use crate::{run, Common, Kind};

/// Exit status and error message of a command run in-process.
struct Outcome {
    code: u8,
    message: String,
}

fn run_in(kind: Kind, config: &str, dir: &Path, seed: Option<u64>, format: Option<FormatChoice>) -> Outcome {
    let cfg_path = dir.join("config.json");
    fs::write(&cfg_path, config).unwrap();
    let common = Common { config: cfg_path, seed, out: Some(dir.join("out")), format };
    match run(kind, &common) {
        Ok(line) => Outcome { code: 0, message: line },
        Err(e) => Outcome { code: e.code(), message: e.to_string() },
    }
}

fn solve(config: &str, dir: &Path) -> Outcome {
    run_in(Kind::Solve, config, dir, None, None)
}

fn simulate(config: &str, dir: &Path) -> Outcome {
    run_in(Kind::Simulate, config, dir, None, None)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, usize) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().collect::<Result<Vec<_>, _>>().unwrap().len();
    (header, rows)
}

#[test]
fn solve_reports_the_stopping_threshold() {
    let dir = TempDir::new().unwrap();
    let o = solve(r#"{"model": {"builtin": "euro_quadratic"}, "solver": {"beta": 0.25, "n_max": 32}}"#, dir.path());
    assert_eq!(o.code, 0, "{}", o.message);
    let summary = json(&dir.path().join("out/summary.json"));
    let s_star = summary["s_star"].as_f64().unwrap();
    assert!((s_star - (-2.0f64).exp()).abs() < 1e-12);
    assert!((s_star - 0.135335).abs() < 1e-6);
    let (header, rows) = csv_rows(&dir.path().join("out/value.csv"));
    assert_eq!(header, ["y", "v", "v_prime", "z_hat", "stop_flag"]);
    assert_eq!(rows, 400);
}

#[test]
fn discount_outside_the_smooth_fit_range_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = solve(r#"{"model": {"builtin": "euro_quadratic"}, "solver": {"beta": 0.7}}"#, dir.path());
    assert_eq!(o.code, 1);
    assert!(o.message.contains("(0, 1/2)"), "{}", o.message);
}

#[test]
fn misspelled_key_is_named() {
    let dir = TempDir::new().unwrap();
    let o = solve(r#"{"model": {"builtin": "euro_quadratic"}, "solver": {"betaa": 0.25}}"#, dir.path());
    assert_eq!(o.code, 1);
    assert!(o.message.contains("betaa"), "{}", o.message);
}

#[test]
fn missing_config_file_is_a_config_error() {
    let common = Common { config: "/nonexistent/run.json".into(), seed: None, out: None, format: None };
    assert_eq!(run(Kind::Solve, &common).unwrap_err().code(), 1);
}

#[test]
fn inner_iteration_cap_is_a_convergence_failure() {
    let dir = TempDir::new().unwrap();
    let o = solve(
        r#"{"model": {"builtin": "sannikov"},
            "solver": {"inner": {"psor": {"omega": 1.5, "tolerance": 1e-14, "max_iterations": 2}}}}"#,
        dir.path(),
    );
    assert_eq!(o.code, 2, "{}", o.message);
}

#[test]
fn grid_solve_writes_one_row_per_node() {
    let dir = TempDir::new().unwrap();
    let o = solve(r#"{"model": {"builtin": "american_sannikov"}, "solver": {"grid_points": 301}}"#, dir.path());
    assert_eq!(o.code, 0, "{}", o.message);
    assert_eq!(csv_rows(&dir.path().join("out/value.csv")).1, 301);
    assert_eq!(json(&dir.path().join("out/summary.json"))["points"].as_u64(), Some(301));
}

const CONSTANT_Z: &str = r#"{
    "model": {"builtin": "euro_quadratic"},
    "simulation": {
        "n_paths": 4000, "seed": 42, "paths_csv": 3,
        "contract": {"y0": 1.0, "z": 1.0, "termination": {"fixed": {"horizon": 1.0}}}
    }
}"#;

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let o = simulate(CONSTANT_Z, d.path());
        assert_eq!(o.code, 0, "{}", o.message);
    }
    for name in ["report.json", "payoffs.csv", "paths.csv"] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let (_, rows) = csv_rows(&a.path().join("out/payoffs.csv"));
    assert_eq!(rows, 4000);
    let (header, rows) = csv_rows(&a.path().join("out/paths.csv"));
    assert_eq!(header, ["path", "t", "x", "y", "discount", "flags"]);
    assert_eq!(rows, 3 * 1001);
}

#[test]
fn seed_flag_changes_the_sample() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(simulate(CONSTANT_Z, a.path()).code, 0);
    assert_eq!(run_in(Kind::Simulate, CONSTANT_Z, b.path(), Some(7), None).code, 0);
    let ra = json(&a.path().join("out/report.json"));
    let rb = json(&b.path().join("out/report.json"));
    assert_eq!(rb["agent"]["seed"].as_u64(), Some(7));
    assert_ne!(ra["agent"]["estimate"], rb["agent"]["estimate"]);
}

#[test]
fn format_flag_selects_files() {
    let dir = TempDir::new().unwrap();
    let o = run_in(Kind::Simulate, CONSTANT_Z, dir.path(), None, Some(FormatChoice::Json));
    assert_eq!(o.code, 0);
    assert!(dir.path().join("out/report.json").exists());
    assert!(!dir.path().join("out/payoffs.csv").exists());
}

#[test]
fn deviant_policy_fails_the_best_response_audit() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"model": {"builtin": "euro_quadratic"}, "simulation": {"n_paths": 4000, "deviant_policy": true}}"#;
    let o = simulate(cfg, dir.path());
    assert_eq!(o.code, 3);
    assert!(o.message.contains("best_response"), "{}", o.message);
    let report = json(&dir.path().join("out/report.json"));
    assert_eq!(report["best_response"]["passed"], false);
}

#[test]
fn end_to_end_agent_value_matches_the_promise() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"model": {"builtin": "euro_quadratic"}, "simulation": {"n_paths": 100000, "seed": 3}}"#;
    let o = run_in(Kind::Simulate, cfg, dir.path(), None, Some(FormatChoice::Json));
    assert_eq!(o.code, 0, "{}", o.message);
    let r = json(&dir.path().join("out/report.json"));
    let est = r["agent"]["estimate"].as_f64().unwrap();
    let se = r["agent"]["std_error"].as_f64().unwrap();
    assert!((est - 1.0).abs() <= 3.0 * se, "{est} +- {se}");
}

#[test]
fn firstbest_canonical_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"model": {"builtin": "first_best_canonical"}, "simulation": {"n_paths": 4000}}"#;
    let o = run_in(Kind::Firstbest, cfg, dir.path(), None, None);
    assert_eq!(o.code, 0, "{}", o.message);
    let text = fs::read_to_string(dir.path().join("out/firstbest.json")).unwrap();
    let sol: LagrangianSolution = serde_json::from_str(&text).unwrap();
    assert!((sol.lambda_hat - 1.0).abs() < 1e-8);
    assert_eq!(to_json_string(&sol).unwrap() + "\n", text);
    let equality = json(&dir.path().join("out/equality.json"));
    assert_eq!(equality["passed"], true);
    assert_eq!(csv_rows(&dir.path().join("out/contract.csv")).1, sol.times.len());
}

#[test]
fn unbracketed_multiplier_reports_the_endpoints() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        Kind::Firstbest,
        r#"{"model": {"builtin": "first_best_canonical", "participation": -50.0}}"#,
        dir.path(),
        None,
        None,
    );
    assert_eq!(o.code, 2);
    let msg = o.message;
    assert!(msg.contains("G(") && msg.matches('=').count() >= 2, "{msg}");
}
