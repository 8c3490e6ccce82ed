use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn iqcrate(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqcrate"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("IQCRATE_DELTA")
        .env_remove("IQCRATE_BISECT_TOL")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `(class, alpha_star)` pairs from a rate CSV.
fn rates(csv_path: &Path) -> Vec<(String, f64, Option<f64>)> {
    let mut r = csv::Reader::from_path(csv_path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[1].to_string(), rec[0].parse().unwrap(), rec[4].parse().ok())
        })
        .collect()
}

const LINEAR: &str = r#"{
  "plant": { "transfer_function": { "num": [-1], "den": [1, 2, 3] } },
  "field": { "m": 2, "l": 2 },
  "multiplier": { "nu_max": 1, "lambda_grid": [1] }
}"#;

#[test]
fn sector_with_m_above_l_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{ "plant": { "state_space": { "a": [[0]], "b": [[-1]], "c": [[1]] } }, "field": { "m": 3, "l": 2 } }"#,
    );
    let o = iqcrate(&["certify", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("m <= L"));
}

#[test]
fn field_and_graph_together_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "both.json",
        r#"{ "plant": { "state_space": { "a": [[0]], "b": [[-1]], "c": [[1]] } },
             "field": { "m": 1, "l": 2 },
             "graph": { "generator": "path", "nodes": 2, "informed": [1], "m_psi": 1, "l_psi": 1 } }"#,
    );
    let o = iqcrate(&["certify", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(iqcrate(&["certify", "--config", "/nonexistent.json"], dir.path()).status.code() == Some(2));
}

#[test]
fn no_informed_agent_reports_assumption() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "g.graph", "1 2\n2 3\n");
    let o = iqcrate(&["graph-bounds", "--graph", &g, "--m-psi", "1", "--l-psi", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Assumption path-to-informed violated"), "{}", stderr(&o));
    let o = iqcrate(&["graph-bounds", "--graph", &g, "--m-psi", "1", "--l-psi", "2", "--d-max", "2"], dir.path());
    assert!(stderr(&o).contains("Assumption path-to-informed violated"));
}

#[test]
fn path_graph_constants() {
    let dir = TempDir::new().unwrap();
    let cfg = scenarios().join("path_graph.json");
    let o = iqcrate(&["graph-bounds", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("m = 0.2679") && stdout(&o).contains("L = 4.5616"), "{}", stdout(&o));
    let mut r = csv::Reader::from_path(dir.path().join("graph_bounds.csv")).unwrap();
    let rec = r.records().next().unwrap().unwrap();
    let m: f64 = rec[4].parse().unwrap();
    assert!((m - (2.0 - 3f64.sqrt())).abs() < 1e-9);
}

#[test]
fn exactly_linear_loop_classes_agree() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "lin.json", LINEAR);
    let o = iqcrate(&["certify", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = rates(&dir.path().join("certify.csv"));
    assert_eq!(rows.len(), 4);
    let a: Vec<f64> = rows.iter().map(|r| r.2.unwrap()).collect();
    let spread = a.iter().cloned().fold(f64::MIN, f64::max) - a.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 5e-3, "{a:?}");
    // closed loop s^2 + 2s + 5: decay rate 1
    assert!((a[0] - 1.0).abs() < 5e-3, "{a:?}");
    for class in ["CC", "causal", "anticausal", "noncausal"] {
        assert!(dir.path().join(format!("certificate_{class}.txt")).exists());
    }
}

#[test]
fn non_minimum_phase_rows_per_class() {
    let dir = TempDir::new().unwrap();
    let cfg = scenarios().join("nmp.json");
    let o = iqcrate(&["certify", "--config", cfg.to_str().unwrap(), "--dump-sdpa"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = rates(&dir.path().join("certify.csv"));
    let get = |c: &str| rows.iter().find(|r| r.0 == c).unwrap().2.unwrap();
    assert!(get("CC") > 0.0);
    assert!(get("noncausal") >= get("CC") - 1e-3);
    assert!(get("noncausal") >= get("causal") - 1e-3 && get("noncausal") >= get("anticausal") - 1e-3);
    assert!(dir.path().join("noncausal.dat-s").exists());
}

#[test]
fn sweep_orders_classes_and_reduces_to_certify() {
    let dir = TempDir::new().unwrap();
    let cfg = scenarios().join("lpv.json");
    let o = iqcrate(&["sweep", "--config", cfg.to_str().unwrap(), "--jobs", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = rates(&dir.path().join("sweep.csv"));
    for l in [1.0, 2.0, 5.0] {
        let at = |c: &str| rows.iter().find(|r| r.0 == c && r.1 == l).unwrap().2.unwrap_or(0.0);
        assert!(at("CC") <= at("noncausal") + 1e-3, "L = {l}");
    }

    let one = write(
        dir.path(),
        "one.json",
        &fs::read_to_string(&cfg)
            .unwrap()
            .replace(r#""l_grid": [1, 2, 5]"#, r#""l_grid": [5]"#),
    );
    let sweep_dir = dir.path().join("one");
    assert_eq!(iqcrate(&["sweep", "--config", &one], &sweep_dir).status.code(), Some(0));
    assert_eq!(iqcrate(&["certify", "--config", &one], &sweep_dir).status.code(), Some(0));
    let a = rates(&sweep_dir.join("sweep.csv"));
    let b = rates(&sweep_dir.join("certify.csv"));
    assert_eq!(a, b);
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = scenarios().join("gradient_flow.json");
    let cfg = cfg.to_str().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = iqcrate(&["simulate", "--config", cfg, "--seed", seed], &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(out.join("trajectory.csv")).unwrap()
    };
    assert_eq!(run("5", "a"), run("5", "b"));
    assert_ne!(run("5", "a"), run("6", "c"));
    let summary = fs::read_to_string(dir.path().join("a/simulate.txt")).unwrap();
    assert!(summary.contains("converged = true"), "{summary}");
}

#[test]
fn flocking_scenarios() {
    let dir = TempDir::new().unwrap();
    let cfg = scenarios().join("flocking.json");
    let cfg = cfg.to_str().unwrap();
    let o = iqcrate(&["certify", "--config", cfg], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let cert = fs::read_to_string(dir.path().join("flocking_certificate.txt")).unwrap();
    assert!(cert.contains("status = Feasible"), "{cert}");
    let o = iqcrate(&["simulate", "--config", cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("converged = true"), "{}", stdout(&o));

    let stiff = write(
        dir.path(),
        "stiff.json",
        r#"{ "plant": { "flocking": { "k_p": 1, "k_d": 0.5, "lipschitz": 10 } },
             "field": { "quadratic": { "hessian": [[10]], "center": [1] } },
             "run": { "t_end": 40, "dt": 1e-3, "initial_state": [0.5] } }"#,
    );
    iqcrate(&["certify", "--config", &stiff], dir.path());
    let cert = fs::read_to_string(dir.path().join("flocking_certificate.txt")).unwrap();
    assert!(!cert.contains("status = Feasible"), "{cert}");
    let o = iqcrate(&["simulate", "--config", &stiff], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("empirical_rate = no-fit"), "{}", stdout(&o));
}

#[test]
fn diverging_simulation_exits_with_four() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "unstable.json",
        r#"{ "plant": { "state_space": { "a": [[5]], "b": [[1]], "c": [[1]] } },
             "field": { "m": 1, "l": 1 },
             "run": { "t_end": 400, "dt": 1e-2, "initial_state": [1] } }"#,
    );
    let o = iqcrate(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn audit_of_a_fresh_certificate_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "lin.json", &LINEAR.replace(r#""l": 2"#, r#""l": 4"#));
    assert_eq!(iqcrate(&["certify", "--config", &cfg], dir.path()).status.code(), Some(0));
    let cert = dir.path().join("certificate_noncausal.txt");
    let o = iqcrate(&["iqc-verify", "--config", &cfg, "--certificate", cert.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict = pass"), "{}", stdout(&o));
    let garbage = write(dir.path(), "garbage.txt", "format = nope\n");
    let o = iqcrate(&["iqc-verify", "--config", &cfg, "--certificate", &garbage], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
