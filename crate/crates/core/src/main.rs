//! `bogolab` command-line driver.
//!
//! Exit status: 0 when every verdict passes, 1 when a verdict fails, 2 on
//! configuration or runtime errors.

use anyhow::{Context, Result};
use bogolab::cli::RunConfig;
use bogolab::experiments::ExperimentReport;
use bogolab::suite::{run_suite, CRITERIA};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "bogolab", version, about = "Averaging experiments for monotone SPDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a config value, `section.key=value`; applied left to right.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Report directory (the BOGOLAB_OUT environment variable takes precedence).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Pullback construction of the L²-bounded solution.
    Pullback,
    /// Square-mean contraction of coupled solutions.
    Contraction,
    /// Moment, energy and tightness diagnostics.
    Diagnostics,
    /// Finite-window comparison with the averaged equation.
    Bogolyubov1,
    /// Periodicity and convergence of the bounded solutions.
    Bogolyubov2,
    /// Semi-distance from the attractor surrogates to the averaged law.
    Attractor,
    /// The acceptance battery AC1–AC9.
    Suite,
    /// The experiment named in the configuration.
    Run,
}

impl Command {
    fn experiment(&self) -> Option<&'static str> {
        Some(match self {
            Command::Pullback => "pullback_bounded_solution",
            Command::Contraction => "contraction_test",
            Command::Diagnostics => "apriori_diagnostics",
            Command::Bogolyubov1 => "first_bogolyubov",
            Command::Bogolyubov2 => "second_bogolyubov",
            Command::Attractor => "attractor_distance",
            Command::Suite | Command::Run => return None,
        })
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let text = match &cli.common.config {
        Some(p) => Some(
            std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?,
        ),
        None => None,
    };
    let mut overrides = cli.common.set.clone();
    if let Some(name) = cli.command.experiment() {
        overrides.push(format!("experiment.name=\"{name}\""));
    }
    let mut config = RunConfig::load(text.as_deref(), &overrides)?;
    if let Some(w) = cli.common.workers {
        config.ensemble.workers = w;
    }
    if let Some(s) = cli.common.seed {
        config.ensemble.seed = s;
    }
    if let Some(out) = &cli.common.out {
        config.output.dir = out.clone();
    }
    if let Some(out) = std::env::var_os("BOGOLAB_OUT") {
        config.output.dir = out.into();
    }
    Ok(config)
}

fn emit(report: &ExperimentReport, dir: &Path) -> Result<()> {
    let status = if report.all_pass() { "PASS" } else { "FAIL" };
    println!(
        "{} [{}] {status} ({:.1} s)",
        report.experiment,
        report.fingerprint,
        report.wall_time.as_secs_f64()
    );
    for v in &report.verdicts {
        let mark = if v.pass { "pass" } else { "FAIL" };
        println!("  {mark} {} {} (margin {:e})", v.claim, v.check, v.margin);
    }
    let (json, csv) = report
        .write(dir)
        .with_context(|| format!("cannot write reports to {}", dir.display()))?;
    println!("  wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let config = load_config(cli)?;
    let dir = config.output.dir.clone();
    if let Command::Suite = cli.command {
        let workers = config.ensemble.workers.max(1);
        let mut written = Ok(());
        let reports = run_suite(config.ensemble.seed, workers, |r| {
            if written.is_ok() {
                written = emit(r, &dir);
            }
        })?;
        written?;
        debug_assert_eq!(reports.len(), CRITERIA.len());
        return Ok(reports.iter().all(ExperimentReport::all_pass));
    }
    let report = config.run()?;
    emit(&report, &dir)?;
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = run(&cli);
    println!("wall time: {:.1} s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
