use std::path::Path;
use std::process::{Command, Output};

use field_core::io::{read_field, read_jumps};
use tempfile::TempDir;

fn griffith(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_griffith")).args(args).output().expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn json(p: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn gen_writes_field_and_jumps() {
    let dir = TempDir::new().unwrap();
    let stem = path(dir.path(), "r");
    let out = griffith(&["gen", "rigid", "-m", "32", "--seed", "4", "--out", &stem]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let u = read_field(Path::new(&format!("{stem}.json"))).unwrap();
    assert_eq!(u.grid().cells_per_side, 32);
    let jumps = read_jumps(Path::new(&format!("{stem}.jumps.json")), *u.grid()).unwrap();
    assert!(jumps.is_empty());
}

#[test]
fn two_motion_crack_has_the_requested_measure() {
    let dir = TempDir::new().unwrap();
    let stem = path(dir.path(), "tm");
    for area in [0.01, 0.25] {
        let out = griffith(&["gen", "two-motion-crack", "-m", "64", "--area", &area.to_string(), "--out", &stem]);
        assert!(out.status.success());
        let u = read_field(Path::new(&format!("{stem}.json"))).unwrap();
        let jumps = read_jumps(Path::new(&format!("{stem}.jumps.json")), *u.grid()).unwrap();
        assert!((jumps.measure() - area).abs() <= u.grid().face_area(), "area {area}: {}", jumps.measure());
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let stem = path(dir.path(), "c");
    griffith(&["gen", "random-cracks", "-m", "64", "--seed", "9", "--count", "1", "--max-size", "2", "--out", &stem]);
    let runs: Vec<String> = (0..2).map(|k| path(dir.path(), &format!("run{k}"))).collect();
    for r in &runs {
        let out = griffith(&[
            "approx", "--field", &format!("{stem}.json"), "--jumps", &format!("{stem}.jumps.json"), "--eta", "1", "--out", r,
        ]);
        assert!(out.status.code().is_some_and(|c| c == 0 || c == 3));
    }
    for name in ["u_tilde.bin", "u_tilde.json", "new_jumps.json", "omega.json", "covering.json", "report.json"] {
        let a = std::fs::read(Path::new(&runs[0]).join(name)).unwrap();
        let b = std::fs::read(Path::new(&runs[1]).join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn rigid_field_approximates_to_itself() {
    let dir = TempDir::new().unwrap();
    let stem = path(dir.path(), "r");
    griffith(&["gen", "rigid", "-m", "64", "--seed", "2", "--out", &stem]);
    let out_dir = path(dir.path(), "a");
    let out = griffith(&["approx", "--field", &format!("{stem}.json"), "--eta", "1", "--out", &out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&path(Path::new(&out_dir), "report.json"));
    assert_eq!(report["pass"], true);
    assert_eq!(report["properties"]["p3_relative_excess"].as_f64().unwrap(), 0.0);
}

#[test]
fn large_jump_exits_with_regime_error() {
    let dir = TempDir::new().unwrap();
    let stem = path(dir.path(), "big");
    griffith(&["gen", "two-motion-crack", "-m", "64", "--area", "0.5", "--out", &stem]);
    let out = griffith(&[
        "verify", "--field", &format!("{stem}.json"), "--jumps", &format!("{stem}.jumps.json"), "--eta", "1", "--report",
        &path(dir.path(), "r.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("jump too large"));
}

#[test]
fn sweep_writes_one_row_per_scale() {
    let dir = TempDir::new().unwrap();
    let stem = path(dir.path(), "s");
    griffith(&["gen", "smooth-sinusoid", "-m", "128", "--out", &stem]);
    let out_dir = path(dir.path(), "sw");
    let out = griffith(&["approx", "--field", &format!("{stem}.json"), "--eta", "1", "--sweep", "3", "--out", &out_dir]);
    assert!(out.status.code().is_some_and(|c| c == 0 || c == 3));
    let csv = std::fs::read_to_string(Path::new(&out_dir).join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("P3,")));
}

#[test]
fn heavy_surface_weight_leaves_no_crack() {
    let dir = TempDir::new().unwrap();
    let out_dir = path(dir.path(), "o");
    let out = griffith(&["oracle", "exhaustive", "--seed", "3", "--beta", "1e6", "--radii", "1", "--out", &out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&path(Path::new(&out_dir), "summary.json"));
    let bits = s["search"]["best_bits"].as_str().unwrap();
    assert!(bits.chars().all(|c| c == '0'), "{bits}");
    assert_eq!(s["density"]["vacuous"], true);
}

#[test]
fn open_plane_has_positive_density() {
    let dir = TempDir::new().unwrap();
    let out_dir = path(dir.path(), "p");
    let out = griffith(&["oracle", "plane", "-m", "12", "--beta", "0.05", "--radii", "1,2", "--out", &out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let s = json(&path(Path::new(&out_dir), "summary.json"));
    assert!(s["density"]["theta0"].as_f64().unwrap() > 0.0);
    assert!(s["density"]["theta1"].as_f64().unwrap() >= 0.5);
    let csv = std::fs::read_to_string(Path::new(&out_dir).join("configs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + (1 << 12));
}

#[test]
fn shrinking_crack_harness_passes() {
    let dir = TempDir::new().unwrap();
    let out_dir = path(dir.path(), "h");
    let out = griffith(&["harness", "shrinking-crack", "--levels", "3", "--out", &out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let checks = std::fs::read_to_string(Path::new(&out_dir).join("checks.csv")).unwrap();
    assert!(checks.lines().any(|l| l.starts_with("semicontinuity,")));
    assert!(checks.lines().any(|l| l.starts_with("surface-decay,")));
}
