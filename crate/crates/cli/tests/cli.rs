use std::path::Path;
use std::process::{Command, Output};

fn pfeller(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfeller"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn classify_hyperbolic_space() {
    let o = pfeller(&["classify", "--sigma", "sinh(t)", "--m", "3", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for line in ["hyperbolic: yes", "complete: yes", "feller: yes"] {
        assert!(out.contains(line), "{out}");
    }
}

#[test]
fn classify_euclidean_plane() {
    let o = pfeller(&["classify", "--family", "euclidean", "--m", "2", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for line in ["hyperbolic: no", "complete: yes", "feller: yes"] {
        assert!(out.contains(line), "{out}");
    }
}

#[test]
fn classify_json_has_verdict_fields() {
    let o = pfeller(&["classify", "--family", "cusp_cubic", "--m", "3", "--p", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for verdict in [&v["hyperbolic"], &v["stochastically_complete"], &v["feller"]["volume"]] {
        for key in ["status", "estimate", "error_bound", "windows"] {
            assert!(verdict.get(key).is_some(), "missing {key}: {verdict}");
        }
    }
    assert_eq!(v["hyperbolic"]["status"], "diverges");
    assert!(v["hyperbolic"]["estimate"].is_null());
    assert_eq!(v["feller"]["volume"]["status"], "converges");
    assert!(v["feller"]["volume"]["estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn invalid_warping_is_rejected() {
    let o = pfeller(&["classify", "--sigma", "t^2", "--m", "3", "--p", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sigma'(0)"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(pfeller(&["classify", "--m", "3", "--p", "2"]).status.code(), Some(1));
    assert_eq!(pfeller(&["classify", "--family", "euclidean", "--m", "3", "--p", "1"]).status.code(), Some(1));
    assert_eq!(
        pfeller(&["classify", "--family", "euclidean", "--sigma", "t", "--m", "3", "--p", "2"]).status.code(),
        Some(1)
    );
    assert_eq!(pfeller(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn euclidean_solution_matches_closed_form() {
    // Δh = h in R^3 has minimal solution e^{-(r-1)}/r with h(1) = 1.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let o = pfeller(&[
        "solve", "--family", "euclidean", "--m", "3", "--p", "2", "--lambda", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,u,flux"));
    let mut worst = 0.0f64;
    let mut rows = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let exact = (-(cols[0] - 1.0)).exp() / cols[0];
        worst = worst.max((cols[1] - exact).abs());
        rows += 1;
    }
    assert!(rows > 1000);
    assert!(worst <= 1e-4, "sup error {worst}");
}

#[test]
fn cusp_solution_warns_about_positive_limit() {
    let o = pfeller(&["solve", "--family", "cusp_cubic", "--m", "3", "--p", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning: PositiveLimit"), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["values"].as_array().unwrap().len() > 100);
}

#[test]
fn zero_inner_value_gives_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.json",
        r#"{"schema": 1, "family": "hyperbolic(-1)", "m": 3, "p": 3, "inner_value": 0, "solver": {"n": 256}}"#,
    );
    let o = pfeller(&["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for line in stdout(&o).lines().skip(1) {
        let u: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(u, 0.0);
    }
}

#[test]
fn non_convergence_exits_three_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "tight.json",
        r#"{"schema": 1, "family": "euclidean", "m": 3, "p": 3, "solver": {"max_iter": 1, "eps_min": 0.01}}"#,
    );
    let o = pfeller(&["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("did not converge"), "{err}");
    assert!(err.contains("\"residual\""), "{err}");
}

#[test]
fn config_schema_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "old.json", r#"{"family": "euclidean", "m": 3, "p": 2}"#);
    let o = pfeller(&["classify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("schema"), "{}", stderr(&o));
}

#[test]
fn identical_config_gives_identical_json() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"schema": 1, "sigma": "sinh(t)", "m": 3, "p": 1.5, "lambda": 2, "format": "json", "solver": {"n": 512}}"#,
    );
    for out in [&a, &b] {
        let o = pfeller(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!a.is_empty());
    assert!(a == b);
}

#[test]
fn export_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = pfeller(&[
        "export", "--family", "hyperbolic(-1)", "--m", "2", "--p", "2", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["solution.csv", "solution.json", "solution.svg", "analysis.json", "classification.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let svg = std::fs::read_to_string(out.join("solution.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn verify_without_fixtures_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.json", r#"{"schema": 1, "fixtures": []}"#);
    let o = pfeller(&["verify", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no fixtures"), "{}", stderr(&o));
}

const SMALL_SET: &str = r#"[
    {"family": "euclidean", "m": 3, "p": 2},
    {"family": "hyperbolic(-1)", "m": 2, "p": 3, "lambda": 0.5},
    {"sigma": "sinh(t)", "m": 3, "p": 1.5}
]"#;

#[test]
fn verify_small_list_passes_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "list.json", &format!(r#"{{"schema": 1, "fixtures": {SMALL_SET}}}"#));
    let out = dir.path().join("report.json");
    let o = pfeller(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["failed"], 0);
    let idx: Vec<u64> = v["rows"].as_array().unwrap().iter().map(|r| r["fixture"].as_u64().unwrap()).collect();
    assert!(idx.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(idx.last(), Some(&2));
}

#[test]
fn verify_detects_flipped_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "flip.json",
        &format!(r#"{{"schema": 1, "corrupt": "flip_lambda", "fixtures": {SMALL_SET}}}"#),
    );
    let o = pfeller(&["verify", "--config", &cfg, "--format", "json"]);
    assert_eq!(o.status.code(), Some(4));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    for r in rows {
        let comparison = r["check"] == "comparison" || r["check"] == "power_comparison";
        let failed = r["status"] == "FAIL";
        assert_eq!(failed, comparison, "{r}");
    }
}

/// The built-in set fails only where a cusp end is also Feller (p = 3): the
/// minimal solution there decays like a small negative power of r and cannot
/// be told apart from a positive limit on a finite window.
#[test]
fn verify_core_set_fails_only_on_slow_cusp_decay() {
    let o = pfeller(&["verify", "--format", "json"]);
    assert_eq!(o.status.code(), Some(4));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["fixtures"], 24);
    let failures: Vec<_> = v["rows"].as_array().unwrap().iter().filter(|r| r["status"] == "FAIL").collect();
    assert_eq!(failures.len(), 2, "{failures:?}");
    for r in failures {
        assert_eq!(r["manifold"], "cusp_cubic");
        assert_eq!(r["p"], 3.0);
        assert_eq!(r["check"], "decay");
        assert!(r["detail"].as_str().unwrap().contains("trend Decreasing"));
    }
}
