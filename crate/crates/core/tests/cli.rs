use std::fs;
use std::path::Path;
use std::process::Command;

use kirchhoff_obstacle::adapt::RefineMode;
use kirchhoff_obstacle::cli::{parse_config, read_history, run, RunConfig, HISTORY_HEADER};

fn plate_afem(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_plate-afem")).args(args).output().unwrap()
}

fn without_timing(history: &str) -> Vec<String> {
    history
        .lines()
        .map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default())
        .collect()
}

#[test]
fn uniform_run_writes_history_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = plate_afem(&[
        "--problem", "example2", "--degree", "2", "--mode", "uniform", "--max-dof", "5000", "--out", out,
        "--dump-mesh", "--dump-estimator",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(HISTORY_HEADER));
    let rows = read_history(&text).unwrap();
    assert!(rows.len() >= 3);
    assert!(rows.windows(2).all(|w| w[1].eta < w[0].eta));
    assert!(rows.windows(2).all(|w| w[1].ndof > w[0].ndof));
    // Reference-mode error: filled for every level but the finest.
    assert!(rows[..rows.len() - 1].iter().all(|r| r.err_h.is_some()));
    for r in &rows {
        assert!(dir.path().join(format!("mesh_level_{:03}.txt", r.level)).exists());
        let est = fs::read_to_string(dir.path().join(format!("estimator_level_{:03}.csv", r.level))).unwrap();
        assert_eq!(est.lines().next(), Some("entity_type,entity_id,term,value"));
    }
}

#[test]
fn repeated_runs_agree_except_for_timings() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let cfg = RunConfig {
            problem: "example3".into(),
            max_dof: 3000,
            out: dir.path().to_path_buf(),
            dump_mesh: true,
            dump_estimator: true,
            ..RunConfig::default()
        };
        run(&cfg).unwrap();
    }
    let read = |d: &Path, f: &str| fs::read_to_string(d.join(f)).unwrap();
    assert_eq!(without_timing(&read(a.path(), "history.csv")), without_timing(&read(b.path(), "history.csv")));
    let rows = read_history(&read(a.path(), "history.csv")).unwrap();
    for r in &rows {
        for f in [format!("mesh_level_{:03}.txt", r.level), format!("estimator_level_{:03}.csv", r.level)] {
            assert_eq!(read(a.path(), &f), read(b.path(), &f), "{f}");
        }
    }
}

#[test]
fn history_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        problem: "example1".into(),
        degree: 3,
        sigma: 18.0,
        max_dof: 4000,
        out: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let result = run(&cfg).unwrap();
    let back = read_history(&fs::read_to_string(dir.path().join("history.csv")).unwrap()).unwrap();
    assert_eq!(back, result.history);
}

#[test]
fn invalid_values_are_reported_together() {
    let res = plate_afem(&["--theta", "1.5", "--degree", "4", "--out", "/nonexistent/never"]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("theta"), "{err}");
    assert!(err.contains("degree"), "{err}");
}

#[test]
fn flags_override_file_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.conf");
    fs::write(&file, "sigma=18\nmode=uniform\nmax-dof=1234\n").unwrap();
    let path = file.to_str().unwrap();
    let cfg = parse_config(["plate-afem", "--config", path, "--sigma", "20"]).unwrap();
    assert_eq!(cfg.sigma, 20.0);
    assert_eq!(cfg.mode, RefineMode::Uniform);
    assert_eq!(cfg.max_dof, 1234);
    let defaults = parse_config(["plate-afem"]).unwrap();
    assert_eq!((defaults.problem.as_str(), defaults.degree, defaults.sigma, defaults.theta), ("example1", 2, 6.0, 0.5));
    assert_eq!(parse_config(["plate-afem", "--degree", "3"]).unwrap().sigma, 18.0);
    fs::write(&file, "colour=blue\n").unwrap();
    assert!(parse_config(["plate-afem", "--config", path]).is_err());
}
