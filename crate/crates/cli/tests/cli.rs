use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kuramoto-lab")).args(args).current_dir(cwd).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_defaults_to_runs_preset_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["run", "--preset", "twisted_wave", "--horizon", "2"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("runs/twisted_wave");
    for name in ["phases_sim.csv", "phases_analytic.csv", "order_param.csv", "modes_log10.csv", "report.json", "manifest.json"] {
        assert!(run.join(name).is_file(), "{name}");
    }
    assert!(stdout(&out).contains("final R_sim"));
}

#[test]
fn compare_reports_pass_and_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&["run", "--preset", "twisted_wave", "--horizon", "2", "--out", "tw"], dir.path())), 0);
    let pass = cli(&["compare", "tw"], dir.path());
    assert_eq!(code(&pass), 0);
    assert!(stdout(&pass).contains("PASS"));
    assert!(dir.path().join("tw/comparison.json").is_file());

    assert_eq!(code(&cli(&["run", "--preset", "repulsive", "--horizon", "5", "--out", "rep"], dir.path())), 0);
    let fail = cli(&["compare", "rep"], dir.path());
    assert_eq!(code(&fail), 4);
    assert!(stdout(&fail).contains("FAIL"));
    assert_eq!(code(&cli(&["compare", "rep", "--tolerance", "10"], dir.path())), 0);
}

#[test]
fn compare_rejects_mismatched_sizes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&["run", "--preset", "twisted_wave", "--horizon", "2", "--out", "a"], dir.path())), 0);
    assert_eq!(code(&cli(&["run", "--preset", "sync_complete", "--horizon", "2", "--out", "b"], dir.path())), 0);
    let out = cli(&["compare", "a", "--analytic", "b/phases_analytic.csv"], dir.path());
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("oscillators"));
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(&["run", "--preset", "nope"], dir.path())), 2);
    assert_eq!(code(&cli(&["run", "--preset", "sync_complete", "--dt", "-1"], dir.path())), 2);
    assert_eq!(code(&cli(&["run", "--bogus"], dir.path())), 2);
    std::fs::write(dir.path().join("bad.json"), r#"{"preset": "sync_complete", "epsilonn": 1.0}"#).unwrap();
    let out = cli(&["run", "--config", "bad.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilonn"));
    assert!(!dir.path().join("runs").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"preset": "custom", "n": 12, "coupling": "ring", "ring_k": 2, "phi": 0.4, "horizon": 1.0}"#)
        .unwrap();
    assert_eq!(code(&cli(&["run", "--config", "c.json", "--phi", "-0.3", "--out", "o"], dir.path())), 0);
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["n"], 12);
    assert_eq!(manifest["config"]["phi"], -0.3);
    assert_eq!(manifest["config"]["horizon"], 1.0);
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--preset", "twisted_perturbed", "--horizon", "4", "--kick-amplitude", "1.5", "--out", "a"];
    assert_eq!(code(&cli(&args, dir.path())), 0);
    assert_eq!(code(&cli(&["run", "--manifest", "a/manifest.json", "--out", "b"], dir.path())), 0);
    for name in ["phases_sim.csv", "phases_analytic.csv", "order_param.csv", "modes_log10.csv", "report.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name}");
    }
    let manifest = std::fs::read_to_string(dir.path().join("b/manifest.json")).unwrap();
    assert!(manifest.contains("\"amplitude\": 1.5"));
    assert_eq!(code(&cli(&["run", "--manifest", "a/manifest.json", "--preset", "repulsive"], dir.path())), 2);
}

#[test]
fn spectrum_writes_labelled_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["spectrum", "--preset", "chimera_130", "--phi", "0"], dir.path());
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("spectrum_chimera_130.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("mode_label,re_lambda,im_lambda,spatial_frequency"));
    assert_eq!(lines.count(), 225);
}

#[test]
fn every_preset_finishes_within_a_minute() {
    let dir = tempfile::tempdir().unwrap();
    for preset in ["sync_complete", "repulsive", "chimera_115", "chimera_130", "twisted_wave", "twisted_perturbed"] {
        let started = Instant::now();
        let out = cli(&["run", "--preset", preset, "--out", preset], dir.path());
        assert_eq!(code(&out), 0, "{preset}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(started.elapsed().as_secs_f64() < 60.0, "{preset}");
    }
}
