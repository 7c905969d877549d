use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
kind = "shortest-distance"
k = 2
replicas = 4
seed = 99
n_ladder = [32, 64, 128]
[system]
map = { type = "m-times-mod1", m = 3 }
metric = "torus-wrap"
"#;

fn orbitmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitmatch"))
        .args(args)
        .env_remove("ORBITMATCH_THREADS")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = orbitmatch(&["run", "--config", "no/such/file.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config file not found: no/such/file.toml"), "{err}");
}

#[test]
fn invalid_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, SMALL.replace("k = 2", "k = 1")).unwrap();
    let out = orbitmatch(&["run", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&cfg, format!("{SMALL}\nunknown_key = 3\n")).unwrap();
    assert_eq!(
        orbitmatch(&["run", "--config", path(&cfg)]).status.code(),
        Some(2)
    );
}

#[test]
fn list_systems_names_every_kind() {
    let out = orbitmatch(&["list-systems"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in [
        "shortest-distance",
        "lcs",
        "scrabble",
        "entropy",
        "dimension",
        "random-orbits",
    ] {
        assert!(text.contains(kind), "{kind}");
    }
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let run_a = orbitmatch(&["run", "--config", path(&cfg), "--out", path(&a), "--threads", "1"]);
    assert!(
        run_a.status.success(),
        "{}",
        String::from_utf8_lossy(&run_a.stderr)
    );
    let run_b = Command::new(env!("CARGO_BIN_EXE_orbitmatch"))
        .args(["run", "--config", path(&cfg), "--out", path(&b)])
        .env("ORBITMATCH_THREADS", "2")
        .output()
        .unwrap();
    assert!(run_b.status.success());
    for f in ["results.csv", "summary.json", "plot.svg"] {
        assert_eq!(
            std::fs::read_to_string(a.join(f)).unwrap(),
            std::fs::read_to_string(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let csv = std::fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    assert!(a.join("timing.json").is_file());

    let overridden = dir.path().join("c");
    let run_c = orbitmatch(&[
        "run",
        "--config",
        path(&cfg),
        "--out",
        path(&overridden),
        "--seed",
        "100",
        "--replicas",
        "2",
    ]);
    assert!(run_c.status.success());
    let csv_c = std::fs::read_to_string(overridden.join("results.csv")).unwrap();
    assert_eq!(csv_c.lines().count(), 1 + 3 * 2);
    assert_ne!(csv_c, csv);
}

#[test]
fn report_rerenders_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let run = dir.path().join("run");
    assert!(orbitmatch(&["run", "--config", path(&cfg), "--out", path(&run)])
        .status
        .success());
    let again = dir.path().join("again");
    let out = orbitmatch(&["report", "--input", path(&run), "--out", path(&again)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["results.csv", "summary.json", "plot.svg"] {
        assert_eq!(
            std::fs::read(run.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }
    let svg_only = dir.path().join("svg");
    assert!(orbitmatch(&[
        "report",
        "--input",
        path(&run),
        "--out",
        path(&svg_only),
        "--format",
        "svg"
    ])
    .status
    .success());
    assert!(svg_only.join("plot.svg").is_file() && !svg_only.join("results.csv").exists());
    assert_eq!(
        orbitmatch(&["report", "--input", path(&run), "--format", "pdf"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        orbitmatch(&["report", "--input", "missing-dir"]).status.code(),
        Some(2)
    );
}
