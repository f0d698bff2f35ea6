use std::path::Path;
use std::process::{Command, Output};

use resilient_cacc::sim::{run_scenario, ScenarioConfig};

fn cacc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cacc-sim")).args(args).current_dir(dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_trace_and_metrics_recompute_identically() {
    let dir = tempfile::tempdir().unwrap();
    let run = cacc(&["run", "--scenario", "noise-free", "--out", "trace.csv"], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = stdout(&run);
    assert!(text.contains("distance RMSE") && text.contains("collision         false"));
    let lines = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap().lines().count();
    assert_eq!(lines, 60_001 + 1);

    let metrics = cacc(&["metrics", "trace.csv"], dir.path());
    assert!(metrics.status.success());
    let from_file = stdout(&metrics);
    let in_run: Vec<&str> = text.lines().filter(|l| from_file.lines().any(|m| m == *l)).collect();
    assert_eq!(in_run.len(), from_file.lines().count(), "metrics output differs:\n{text}\n---\n{from_file}");

    let reference = run_scenario(ScenarioConfig::named("noise-free").unwrap()).unwrap();
    assert!(from_file.contains(&format!("{:.6}", reference.metrics.distance_rmse)));

    let plot = cacc(&["plot", "trace.csv", "--out", "trace.svg"], dir.path());
    assert!(plot.status.success());
    let svg = std::fs::read_to_string(dir.path().join("trace.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let o = cacc(
        &["run", "--scenario", "noisy", "--seed", "4", "--dt", "0.002", "--t-end", "3", "--baseline", "--out", "t.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(dir.path().join("t.csv")).unwrap().lines().count();
    assert_eq!(rows, 1501 + 1);
}

#[test]
fn verify_gains_reports_identity_residual() {
    let dir = tempfile::tempdir().unwrap();
    for set in ["noisy", "noise-free"] {
        let o = cacc(&["verify-gains", "--scenario", set], dir.path());
        assert!(o.status.success());
        let text = stdout(&o);
        let residual: f64 = text
            .lines()
            .find(|l| l.starts_with("T + NC - I"))
            .and_then(|l| l.split_whitespace().nth(5))
            .unwrap()
            .parse()
            .unwrap();
        assert!(residual <= 1e-6, "{set}: residual {residual}");
        assert!(text.contains("result            ok"));
    }
}

#[test]
fn synthesize_then_run_with_gain_file() {
    let dir = tempfile::tempdir().unwrap();
    let s = cacc(&["synthesize", "--scenario", "noisy", "--out", "gains.toml"], dir.path());
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let text = std::fs::read_to_string(dir.path().join("gains.toml")).unwrap();
    for key in ["L = ", "T = ", "N = ", "Q = ", "gamma = ", "scenario-id = "] {
        assert!(text.contains(key), "gain file lacks {key}");
    }
    assert!(cacc(&["verify-gains", "--gains", "gains.toml"], dir.path()).status.success());
    let r = cacc(
        &["run", "--scenario", "noisy", "--gains", "file:gains.toml", "--t-end", "2", "--out", "t.csv"],
        dir.path(),
    );
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn verify_gains_rejects_a_bad_gain_set() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "L = [[0.0], [1.0]]\nT = [[1.0, 0.0], [0.0, 0.5]]\nN = [[0.0], [0.2]]\nscenario-id = \"bad\"\n",
    )
    .unwrap();
    let o = cacc(&["verify-gains", "--gains", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(8));
}

#[test]
fn error_categories_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "name = 3\n").unwrap();
    let cases: [(&[&str], i32); 6] = [
        (&["run", "--scenario", "rainy"], 3),
        (&["run", "--config", "bad.toml"], 4),
        (&["run", "--config", "absent.toml"], 5),
        (&["metrics", "absent.csv"], 5),
        (&["run", "--scenario", "noisy", "--gains", "nonsense"], 2),
        (&["run"], 2),
    ];
    for (args, code) in cases {
        let o = cacc(args, dir.path());
        assert_eq!(o.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let help = stdout(&cacc(&["--help"], dir.path()));
    for code in ["3  unknown scenario", "4  malformed config", "5  missing input file"] {
        assert!(help.contains(code), "--help lacks `{code}`");
    }
}

#[test]
fn sweep_tabulates_each_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = cacc(&["sweep", "--scenario", "noisy", "--count", "3", "--t-end", "2", "--jobs", "2"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let seeds: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["1", "2", "3"]);
}

#[test]
fn shipped_template_reproduces_the_noisy_scenario() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/scenario-template.toml");
    let loaded = ScenarioConfig::load(&path).unwrap();
    assert_eq!(loaded, ScenarioConfig::named("noisy").unwrap());
}
