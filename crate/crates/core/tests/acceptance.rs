//! Acceptance battery: one pass/fail line per criterion AC1–AC10.
//!
//! AC1–AC9 run in process with eight workers; AC10 reruns the whole battery
//! through the binary with a single worker and requires byte-identical JSON.

use bogolab::suite::{run_criterion, CRITERIA, DEFAULT_SEED};
use std::process::Command;

#[test]
fn acceptance_criteria() {
    let mut failures = Vec::new();
    let mut json = Vec::new();
    for (i, name) in CRITERIA.iter().enumerate() {
        let label = format!("AC{}", i + 1);
        match run_criterion(i, DEFAULT_SEED, 8) {
            Ok(report) => {
                let pass = report.all_pass();
                println!(
                    "{label} {} {name} ({:.1} s)",
                    if pass { "PASS" } else { "FAIL" },
                    report.wall_time.as_secs_f64()
                );
                for v in report.verdicts.iter().filter(|v| !v.pass) {
                    println!("    failed: {} (margin {:e})", v.check, v.margin);
                }
                if !pass {
                    failures.push(label);
                }
                let file = format!("{}-{}.json", report.experiment, report.fingerprint);
                json.push((file, report.to_json().unwrap()));
            }
            Err(e) => {
                println!("AC{} FAIL {name}: {e}", i + 1);
                failures.push(label);
            }
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bogolab"))
        .env_remove("BOGOLAB_OUT")
        .args(["suite", "--workers", "1", "--out"])
        .arg(dir.path())
        .output()
        .expect("binary runs");
    let mismatched: Vec<&str> = json
        .iter()
        .filter(|(file, body)| {
            std::fs::read_to_string(dir.path().join(file)).ok().as_deref() != Some(body.as_str())
        })
        .map(|(file, _)| file.as_str())
        .collect();
    let ac10 = out.status.code().is_some_and(|c| c <= 1)
        && json.len() == CRITERIA.len()
        && mismatched.is_empty();
    println!(
        "AC10 {} reproducibility across worker counts ({} reports compared)",
        if ac10 { "PASS" } else { "FAIL" },
        json.len()
    );
    if !mismatched.is_empty() {
        println!("    differing: {mismatched:?}");
    }
    if !ac10 {
        failures.push("AC10".into());
    }

    assert!(failures.is_empty(), "failing criteria: {failures:?}");
}
