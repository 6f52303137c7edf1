use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[model]
kind = "reaction_diffusion"
n = 7
eps = [0.5]

[ensemble]
m = 4

[experiment]
name = "contraction_test"
t1 = 0.1
"#;

fn bogolab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bogolab"))
        .current_dir(dir)
        .env_remove("BOGOLAB_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SMALL).unwrap();
    dir
}

fn reports(dir: &Path, ext: &str) -> Vec<std::path::PathBuf> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map(|r| r.map(|e| e.unwrap().path()).collect())
        .unwrap_or_default();
    files.retain(|p| p.extension().is_some_and(|e| e == ext));
    files.sort();
    files
}

#[test]
fn small_contraction_run_succeeds_and_writes_both_reports() {
    let dir = setup();
    let out = bogolab(dir.path(), &["run", "--config", "run.toml", "--out", "a"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = reports(&dir.path().join("a"), "json");
    let csv = reports(&dir.path().join("a"), "csv");
    assert_eq!((json.len(), csv.len()), (1, 1));
    let name = json[0].file_name().unwrap().to_string_lossy().into_owned();
    assert!(name.starts_with("contraction_test-"), "{name}");
    let body = std::fs::read_to_string(&csv[0]).unwrap();
    assert_eq!(body.lines().next(), Some("table,row,column,value"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = setup();
    for (out, workers) in [("a", "1"), ("b", "3")] {
        let o = bogolab(
            dir.path(),
            &["contraction", "--config", "run.toml", "--out", out, "--workers", workers],
        );
        assert_eq!(o.status.code(), Some(0));
    }
    let a = reports(&dir.path().join("a"), "json");
    let b = reports(&dir.path().join("b"), "json");
    assert_eq!(a[0].file_name(), b[0].file_name());
    assert_eq!(std::fs::read(&a[0]).unwrap(), std::fs::read(&b[0]).unwrap());
}

#[test]
fn unknown_experiment_is_rejected_with_the_valid_names() {
    let dir = setup();
    let out = bogolab(
        dir.path(),
        &["run", "--config", "run.toml", "--set", "experiment.name=frobnicate"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in bogolab::cli::EXPERIMENTS {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = setup();
    let out = bogolab(dir.path(), &["run", "--config", "run.toml", "--set", "model.colour=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn environment_output_directory_wins_over_the_flag() {
    let dir = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_bogolab"))
        .current_dir(dir.path())
        .env("BOGOLAB_OUT", "from_env")
        .args(["run", "--config", "run.toml", "--out", "from_flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(reports(&dir.path().join("from_env"), "json").len(), 1);
    assert!(!dir.path().join("from_flag").exists());
}

#[test]
fn overrides_change_the_fingerprint_but_workers_do_not() {
    let dir = setup();
    let runs = [
        ("a", vec!["--workers", "1"]),
        ("b", vec!["--workers", "2"]),
        ("c", vec!["--set", "experiment.t1=0.2"]),
    ];
    for (out, extra) in &runs {
        let mut args = vec!["run", "--config", "run.toml", "--out", out];
        args.extend(extra);
        assert_eq!(bogolab(dir.path(), &args).status.code(), Some(0));
    }
    let name = |d: &str| reports(&dir.path().join(d), "json")[0].file_name().unwrap().to_owned();
    assert_eq!(name("a"), name("b"));
    assert_ne!(name("a"), name("c"));
}

#[test]
fn failed_verdict_exits_with_one() {
    // one path gives a zero-width bootstrap band, which no nonzero error fits in
    let dir = setup();
    let out = bogolab(
        dir.path(),
        &[
            "bogolyubov1",
            "--config",
            "run.toml",
            "--set",
            "ensemble.m=1",
            "--set",
            "experiment.horizon=0.2",
            "--set",
            "model.eps=[0.5,0.25]",
        ],
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{stdout}");
    assert!(stdout.contains("FAIL"));
}
