use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scalkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scalkit")).args(args).output().unwrap()
}

fn path(p: &Path) -> String {
    p.display().to_string()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn num(cell: &str) -> f64 {
    cell.parse().unwrap()
}

fn simulate(config: &str, scenario: &str) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = root().join("configs").join(config);
    let sc = root().join("scenarios").join(scenario);
    let out = scalkit(&["simulate", "--config", &path(&cfg), "--scenario", &path(&sc), "--out", &path(dir.path())]);
    (out, dir)
}

#[test]
fn trace_writes_requested_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = scalkit(&["trace", "--samples", "2", "--out", &path(dir.path())]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "s,xB,yB,xD,yD,xI,yI");
    let r = rows(&csv);
    assert_eq!(r.len(), 2);
    assert_eq!(num(&r[0][0]), 50.0);
    assert_eq!(num(&r[1][0]), 110.0);
    assert!(dir.path().join("trace.svg").exists());
}

#[test]
fn slot_aligned_trace_moves_d_down_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("beta0.json");
    std::fs::write(&cfg, r#"{"schema_version":1,"preset":"scal_r","linkage":{"beta":0,"branch_b":1}}"#).unwrap();
    let out = scalkit(&["trace", "--config", &path(&cfg), "--samples", "61", "--out", &path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&std::fs::read_to_string(dir.path().join("trace.csv")).unwrap());
    let (first, last) = (&r[0], &r[r.len() - 1]);
    assert!((num(&first[1]) - 12.0).abs() < 1e-4 && (num(&first[2]) - 58.7878).abs() < 1e-4);
    assert!(num(&last[3]) > num(&first[3]), "D moves outward");
    assert!(num(&last[4]) < num(&first[4]), "D moves downward");
}

#[test]
fn pinch_surface_maximum_is_at_shallow_angle_and_zero_offset() {
    let dir = tempfile::tempdir().unwrap();
    let out = scalkit(&["force", "pinch", "--out", &path(dir.path())]);
    assert!(out.status.success());
    let r = rows(&std::fs::read_to_string(dir.path().join("force.csv")).unwrap());
    assert_eq!(r.len(), 76 * 41);
    let best = r.iter().max_by(|a, b| num(&a[2]).total_cmp(&num(&b[2]))).unwrap();
    assert_eq!((num(&best[0]), num(&best[1])), (45.0, 0.0));
}

#[test]
fn envelope_surface_f2_is_25_at_zero_distal_angle() {
    let dir = tempfile::tempdir().unwrap();
    let out = scalkit(&["force", "envelope", "--grid=-30:60:10,-30:60:10", "--out", &path(dir.path())]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("force.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "theta2_deg,theta3_deg,F2_N,F3_N,singular");
    let zero: Vec<_> = rows(&csv).into_iter().filter(|r| num(&r[1]) == 0.0).collect();
    assert_eq!(zero.len(), 10);
    for r in zero {
        assert_eq!(num(&r[2]), 25.0);
        assert_eq!(num(&r[3]), 0.0);
        assert_eq!(r[4], "0");
    }
}

#[test]
fn single_cell_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = scalkit(&["force", "pinch", "--grid", "90:90:1,0:0:1", "--out", &path(dir.path())]);
    assert!(out.status.success());
    let r = rows(&std::fs::read_to_string(dir.path().join("force.csv")).unwrap());
    assert_eq!(r.len(), 1);
    assert!((num(&r[0][2]) - 1000.0 / 85.27).abs() < 1e-6);
}

#[test]
fn singular_cells_are_flagged_not_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let out = scalkit(&["force", "pinch", "--grid", "0:0:1,0:10:2", "--out", &path(dir.path())]);
    assert!(out.status.success());
    let r = rows(&std::fs::read_to_string(dir.path().join("force.csv")).unwrap());
    assert_eq!(r[0][2], "");
    assert_eq!(r[0][3], "1");
    assert_eq!(r[1][3], "0");
}

#[test]
fn invalid_grid_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    for grid in ["45:120:0,0:40:41", "120:45:5,0:40:41", "nonsense"] {
        let out = scalkit(&["force", "pinch", "--grid", grid, "--out", &path(dir.path())]);
        assert_eq!(out.status.code(), Some(2), "{grid}");
    }
}

#[test]
fn pinch_scenario_lifts_before_securing() {
    let (out, dir) = simulate("scal_r.json", "pinch_flat.json");
    assert_eq!(out.status.code(), Some(0));
    let log = std::fs::read_to_string(dir.path().join("events.log")).unwrap();
    let names: Vec<&str> = log.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    let pos = |n: &str| names.iter().position(|x| *x == n).unwrap();
    assert!(pos("FIRST_SUPPORT_CONTACT") < pos("OBJECT_CONTACT"));
    assert!(pos("OBJECT_CONTACT") < pos("LIFT_OFF"));
    assert!(pos("LIFT_OFF") < pos("SECURED"));
    let progress: Vec<f64> = log.lines().map(|l| num(l.split('\t').next().unwrap())).collect();
    assert!(progress.windows(2).all(|w| w[0] <= w[1]));
    for f in ["sim.csv", "sim.svg"] {
        assert!(dir.path().join(f).exists());
    }
}

#[test]
fn vertical_probe_on_flat_top_fails() {
    let (out, dir) = simulate("scal_l.json", "probe_rect_vertical.json");
    assert_eq!(out.status.code(), Some(3));
    let log = std::fs::read_to_string(dir.path().join("events.log")).unwrap();
    assert!(log.contains("OPENING_NOT_TRIGGERED"));
    assert!(log.trim_end().ends_with("FAILED"));
}

#[test]
fn empty_scenario_has_no_events() {
    let (out, dir) = simulate("scal_r.json", "empty.json");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(dir.path().join("events.log")).unwrap(), "");
    let csv = std::fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 901);
}

#[test]
fn mismatched_behavior_and_drive_is_an_input_error() {
    let (out, _dir) = simulate("scal_l.json", "envelope_disk.json");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_passes_presets() {
    for cfg in ["scal_r.json", "scal_l.json"] {
        let out = scalkit(&["validate", "--config", &path(&root().join("configs").join(cfg))]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.lines().all(|l| l.starts_with("PASS")));
    }
}

#[test]
fn validate_reports_broken_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"schema_version":1,"preset":"scal_r","linkage":{"s_max":130}}"#).unwrap();
    let out = scalkit(&["validate", "--config", &path(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().lines().any(|l| l.starts_with("FAIL")));
}

#[test]
fn malformed_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"schema_version":1,"preset":"scal_r","linkage":{"bogus":1}}"#,
        r#"{"schema_version":1,"preset":"scal_r","#,
        r#"{"schema_version":1,"preset":"scal_r","linkage":{"branch_b":2}}"#,
    ];
    for (k, text) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("c{k}.json"));
        std::fs::write(&cfg, text).unwrap();
        let out = scalkit(&["trace", "--config", &path(&cfg), "--out", &path(dir.path())]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(!out.stderr.is_empty());
    }
    let out = scalkit(&["trace", "--config", "/nonexistent/cfg.json", "--out", &path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_is_accepted_and_ignored() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(scalkit(&["--seed", "7", "force", "pinch", "--out", &path(a.path())]).status.success());
    assert!(scalkit(&["force", "pinch", "--seed", "99", "--out", &path(b.path())]).status.success());
    assert_eq!(std::fs::read(a.path().join("force.csv")).unwrap(), std::fs::read(b.path().join("force.csv")).unwrap());
}
