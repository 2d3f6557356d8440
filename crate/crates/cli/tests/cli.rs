use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pmns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmns"))
        .args(args)
        .env_remove("PMNS_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// Value printed after `prefix` up to the next space.
fn value_after(text: &str, prefix: &str) -> f64 {
    let start = text.find(prefix).unwrap_or_else(|| panic!("{prefix:?} not in {text}")) + prefix.len();
    text[start..].split_whitespace().next().unwrap().parse().unwrap()
}

const BASE: &str = r#"
[grid]
n = 8
delta_xi = 0.5

[knots]
kind = "geometric"
t_min = 0.01
ratio = 2.0
t_max = 2.0

[data]
kind = "random"
seed = 3
pm2 = 0.03
envelope = { kind = "gaussian", width = 1.0 }
"#;

fn write_config(dir: &Path, extra: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, format!("{BASE}{extra}")).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn constants_table() {
    let o = pmns(&["constants"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(value_after(&s, "kappa = "), 1.0);
    assert!((value_after(&s, "pi^3 = ") - 31.00627668029982).abs() < 1e-12);
    let eta = std::f64::consts::PI.powi(3) / (2.0 * std::f64::consts::PI).powf(1.5);
    assert!((value_after(&s, "eta_effective = kappa pi^3 (2 pi)^(-3/2) = ") - eta).abs() < 1e-12);
    assert!((value_after(&s, "1/(4 eta_effective) = ") - 1.0 / (4.0 * eta)).abs() < 1e-12);
    assert!(s.contains("riesz convolution check"));
}

#[test]
fn b_of_c_and_inverse() {
    let o = pmns(&["bofc", "--c", "2"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    let b = value_after(&s, "b(2) = ");
    let pi = std::f64::consts::PI;
    let expected = 4.0 * pi * (8.0 + 8.0 * (1.0f64 / 3.0).ln() + 32.0 / 9.0);
    assert!((b - expected).abs() < 1e-12 * expected);
    let q = value_after(&s, "surface quadrature = ");
    assert!((q - b).abs() < 1e-8 * b);

    let o = pmns(&["cofb", "--b", &b.to_string()]);
    assert_eq!(code(&o), 0);
    assert!((value_after(&stdout(&o), "c = ") - 2.0).abs() < 1e-9);

    let o = pmns(&["bofc", "--c", "-2"]);
    assert_eq!(code(&o), 0);
    assert!((value_after(&stdout(&o), "b(-2) = ") + expected).abs() < 1e-12 * expected);

    let o = pmns(&["bofc", "--c", "0.5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn landau_verify_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lv");
    let o = pmns(&["landau-verify", "--c", "2", "--quad", "256", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("pointwise residual order"));
    assert!(out.join("report.json").exists() && out.join("manifest.json").exists());
}

#[test]
fn usage_and_parameter_errors() {
    let o = pmns(&["frobnicate"]);
    assert_eq!(code(&o), 64);
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(code(&pmns(&[])), 64);
    assert_eq!(code(&pmns(&["bofc"])), 2);
    assert_eq!(code(&pmns(&["bofc", "--c", "two"])), 2);
    assert_eq!(code(&pmns(&["--help"])), 0);

    let o = pmns(&["solve", "--config", "missing.cfg"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing.cfg"));

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "[grid]\nn = 8\n").unwrap();
    assert_eq!(code(&pmns(&["solve", "--config", p.to_str().unwrap()])), 2);
}

#[test]
fn solve_writes_a_consistent_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let o = pmns(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let id = manifest["run_id"].as_str().unwrap().to_string();
    assert_eq!(id.len(), 16);
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["config"]["grid"]["n"], 8);
    assert!(manifest["input_hashes"].as_object().unwrap().contains_key(&cfg));
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    // one field per knot: 0, 0.01, ..., 1.28
    assert_eq!(outputs.iter().filter(|o| o.starts_with("fields/")).count(), 9);
    for rel in &outputs {
        assert!(out.join(rel).exists(), "{rel}");
        if rel.starts_with("fields/") {
            assert!(rel.ends_with(&format!(".{id}.pmns")));
        }
    }
    let csv = fs::read_to_string(out.join("pm2_curve.csv")).unwrap();
    assert!(csv.starts_with(&format!("# run_id: {id}\nt,pm2,linear_pm2\n")));
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains(&format!("\"run_id\": \"{id}\"")));

    let o = pmns(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(out.join("report.json")).unwrap(), report);
}

#[test]
fn stationary_and_stability_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[force]
kind = "dirac"
amplitude = [0.05, 0.0, 0.0]

[stability]
perturbation = { kind = "random", seed = 9, pm2 = 0.01, envelope = { kind = "high_pass", xi_min = 1.0 } }

[output]
dir = "results"
fields = false
"#,
    );
    let o = pmns(&["stationary", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("results/report.json").exists());
    assert!(!dir.path().join("results/fields").exists());

    let out = dir.path().join("stab");
    let o = pmns(&["stability", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["manifest.json", "diff_pm2.csv", "linear_part.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let plain = write_config(dir.path(), "");
    assert_eq!(code(&pmns(&["stability", "--config", &plain, "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn regularize_outputs_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("reg");
    let o = pmns(&["regularize", "--config", &cfg, "--a", "2.5", "--q", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("weighted_norm.csv").exists() && out.join("lq_curve.csv").exists());
    assert_eq!(code(&pmns(&["regularize", "--config", &cfg, "--a", "2.5", "--q", "8"])), 2);
    assert_eq!(code(&pmns(&["regularize", "--config", &cfg, "--a", "3.5"])), 2);
}

#[test]
fn solver_failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let big = write_config(dir.path(), "[solver]\nepsilon = 0.01\n");
    let o = pmns(&["solve", "--config", &big, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("too large"));

    let slow = write_config(dir.path(), "[solver]\nmax_iter = 2\ntol = 1e-15\n");
    assert_eq!(code(&pmns(&["solve", "--config", &slow, "--out", out.to_str().unwrap()])), 3);

    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let ok = write_config(dir.path(), "");
    let bad_out = blocker.join("sub");
    assert_eq!(code(&pmns(&["solve", "--config", &ok, "--out", bad_out.to_str().unwrap()])), 3);
}

#[test]
fn scan_defaults_and_errors() {
    let o = pmns(&["scan", "--c", "2", "--eps", "0,0.01,50"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("predicted threshold"));
    assert_eq!(s.matches("converged after").count(), 2);
    assert_eq!(s.matches("failed after").count(), 1);
    assert_eq!(code(&pmns(&["scan", "--c", "2", "--eps", "0.2,0.1"])), 2);
}

#[test]
fn thread_count_from_environment() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_pmns"))
            .args(["scan", "--c", "2", "--eps", "0.01"])
            .env("PMNS_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("zero")), 2);
}
