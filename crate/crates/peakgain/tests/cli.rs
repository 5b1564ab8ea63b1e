use std::path::PathBuf;
use std::process::{Command, Output};

fn system(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../systems")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peakgain"))
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

/// Value on the line starting with `key`.
fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(key)).then(|| it.next().unwrap().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exact_high_damping() {
    let o = run(&["exact", path_str(&system("high_damping"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!((field(&text, "value") - 0.3177).abs() < 1e-3);
    field(&text, "truncation_time");
    field(&text, "tail_bound");
}

#[test]
fn exact_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exact.json");
    let o = run(&["exact", path_str(&system("stiff")), "--out", path_str(&out)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((v["value"].as_f64().unwrap() - 2.876819).abs() < 1e-5);
}

#[test]
fn missing_key_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, "{\n  \"A\": [[0, 1], [-4, -4]],\n  \"B\": [0, 1]\n}\n").unwrap();
    let o = run(&["exact", path_str(&f)]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("`C`"), "{e}");
    assert!(e.contains("line"), "{e}");
}

#[test]
fn unstable_system_names_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("unstable.json");
    std::fs::write(&f, r#"{"A": [[0.5, 0], [0, -1]], "B": [1, 1], "C": [1, 1]}"#).unwrap();
    let o = run(&["exact", path_str(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("max real part of eig(A) is 0.5"));
}

#[test]
fn degree_two_needs_two_states() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("scalar.json");
    std::fs::write(&f, r#"{"A": [[-1]], "B": [1], "C": [1]}"#).unwrap();
    let o = run(&["star", path_str(&f), "--degree", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at least 2 states"));
    let o = run(&["star", path_str(&f), "--degree", "1"]);
    assert!(o.status.success());
    assert!((field(&stdout(&o), "star") - 1.0).abs() < 1e-4);
}

#[test]
fn star_high_damping_both_degrees() {
    let h = system("high_damping");
    let o = run(&["star", path_str(&h), "--degree", "1"]);
    assert!((field(&stdout(&o), "star") - 0.3536).abs() / 0.3536 < 1e-2);
    let o = run(&["star", path_str(&h), "--degree", "2"]);
    assert!((field(&stdout(&o), "star") - 0.3368).abs() / 0.3368 < 1e-2);
}

#[test]
fn star_verbose_prints_sweep_table() {
    let o = run(&[
        "star",
        path_str(&system("high_damping")),
        "--grid",
        "8",
        "--refine",
        "4",
        "--verbose",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("n_alpha"));
    assert!(text.lines().filter(|l| l.contains("optimal") || l.contains("max_iterations")).count() >= 8);
}

#[test]
fn worstcase_step_convergence_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("traj.csv");
    let h = system("high_damping");
    let a = run(&["worstcase", path_str(&h), "--out", path_str(&csv_path)]);
    assert!(a.status.success());
    let b = run(&["worstcase", path_str(&h), "--dt", "0.5e-3"]);
    let pa = field(&stdout(&a), "peak");
    let pb = field(&stdout(&b), "peak");
    assert!((pa - pb).abs() / pa < 1e-3);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,u,y"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5001);
    assert!(rows.iter().all(|r| r[3].abs() == 1.0));
}

#[test]
fn short_horizon_warns() {
    let o = run(&["worstcase", path_str(&system("high_damping")), "--horizon", "0.001"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("may not have been reached"));
}

#[test]
fn tailsplit_table_entries() {
    let lo = system("low_damping");
    let o = run(&["tailsplit", path_str(&lo), "--t0", "5", "--degree", "1"]);
    assert!((field(&stdout(&o), "total") - 4.4078).abs() / 4.4078 < 1e-2);
    let o = run(&["tailsplit", path_str(&lo), "--t0", "10", "--degree", "2"]);
    assert!((field(&stdout(&o), "total") - 4.3332).abs() / 4.3332 < 1e-2);
    let o = run(&["tailsplit", path_str(&lo), "--t0", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

fn boundary(name: &str, degree: &str) -> Vec<(f64, f64, f64)> {
    let o = run(&["reachset", path_str(&system(name)), "--degree", degree, "--samples", "360"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,x1,x2"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .collect()
}

#[test]
fn reachset_rows_and_nesting() {
    let d1 = boundary("high_damping", "1");
    assert_eq!(d1.len(), 360);
    let s1 = boundary("stiff", "1");
    let s2 = boundary("stiff", "2");
    let inside = s1
        .iter()
        .zip(&s2)
        .filter(|(a, b)| b.1.hypot(b.2) < a.1.hypot(a.2))
        .count();
    assert_eq!(inside, 360);
}

#[test]
fn report_rows_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "report",
        path_str(&system("low_damping")),
        "--t0",
        "10",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("ordering      ok"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["system_name"], "low_damping");
    assert_eq!(v["tail_split_rows"].as_array().unwrap().len(), 2);
    assert!(v["ordering_violations"].as_array().unwrap().is_empty());
    assert_eq!(v["settings"]["grid_points"], 64);
    let exact = v["exact"]["value"].as_f64().unwrap();
    let d1 = v["star_d1"].as_f64().unwrap();
    let d2 = v["star_d2"].as_f64().unwrap();
    let lb = v["lower_bound"].as_f64().unwrap();
    assert!(lb <= exact && exact <= d2 && d2 <= d1);
}

#[test]
fn commands_are_deterministic() {
    let h = system("high_damping");
    let a = run(&["star", path_str(&h), "--degree", "2", "--verbose"]);
    let b = run(&["star", path_str(&h), "--degree", "2", "--verbose"]);
    assert_eq!(stdout(&a), stdout(&b));
}
