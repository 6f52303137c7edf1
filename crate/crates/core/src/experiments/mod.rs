//! Verification experiments and their reports.

mod attractor;
mod bogolyubov;
mod contraction;
mod diagnostics;
mod pullback;

pub use attractor::{attractor_distance, evolve_measure, AttractorParams};
pub use bogolyubov::{
    first_bogolyubov, second_bogolyubov, FirstBogolyubovParams, SecondBogolyubovParams,
};
pub use contraction::{contraction_test, ContractionParams, ContractionOutcome};
pub use diagnostics::{apriori_diagnostics, fit_envelope, DiagnosticsParams, Envelope};
pub use pullback::{pullback_bounded_solution, PullbackOutcome, PullbackParams};

use crate::coefficients::ModelSpec;
use crate::error::{Error, Result};
use crate::integrator::{coupled_dt, IntegratorConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Duration;

/// Shape of a fitted rate law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `y ≈ C e^{−κ x}`; `exponent` holds κ.
    Exponential,
    /// `y ≈ C x^α`; `exponent` holds α.
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub kind: FitKind,
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
    pub exponent: f64,
    pub log_intercept: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    /// Points dropped because their ordinate was not positive.
    pub excluded: usize,
    /// Theoretical bound at each abscissa, if one applies.
    pub bound: Vec<f64>,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

fn fit(kind: FitKind, x: &[f64], y: &[f64]) -> Result<RateFit> {
    if x.len() != y.len() {
        return Err(Error::invalid("fit needs as many ordinates as abscissae"));
    }
    let keep: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **b > 0.0 && b.is_finite() && (kind == FitKind::Exponential || **a > 0.0))
        .map(|(a, b)| (*a, *b))
        .collect();
    if keep.len() < 2 {
        return Err(Error::invalid("fit needs at least two positive ordinates"));
    }
    let lx: Vec<f64> = keep
        .iter()
        .map(|(a, _)| if kind == FitKind::Power { a.ln() } else { *a })
        .collect();
    let ly: Vec<f64> = keep.iter().map(|(_, b)| b.ln()).collect();
    let (slope, intercept, residual) = least_squares(&lx, &ly);
    Ok(RateFit {
        kind,
        abscissae: x.to_vec(),
        ordinates: y.to_vec(),
        exponent: if kind == FitKind::Exponential { -slope } else { slope },
        log_intercept: intercept,
        residual,
        excluded: x.len() - keep.len(),
        bound: Vec::new(),
    })
}

/// Fit `y ≈ C e^{−κ t}` on the positive ordinates.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> Result<RateFit> {
    fit(FitKind::Exponential, t, y)
}

/// Fit `y ≈ C x^α` on the positive ordinates.
pub fn fit_power(x: &[f64], y: &[f64]) -> Result<RateFit> {
    fit(FitKind::Power, x, y)
}

/// A rectangular table of numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Pass/fail outcome of one check against an acceptance claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    /// Acceptance claim id, `AC1` … `AC10`.
    pub claim: String,
    pub check: String,
    pub pass: bool,
    /// Signed slack: non-negative when the check passes.
    pub margin: f64,
}

impl Verdict {
    /// `value ≤ limit`, margin `limit − value`.
    pub fn at_most(claim: &str, check: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            claim: claim.to_string(),
            check: check.into(),
            pass: value <= limit,
            margin: limit - value,
        }
    }

    /// `lo ≤ value ≤ hi`, margin the distance to the nearer end.
    pub fn within(claim: &str, check: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            claim: claim.to_string(),
            check: check.into(),
            pass: value >= lo && value <= hi,
            margin: (value - lo).min(hi - value),
        }
    }

    pub fn flag(claim: &str, check: impl Into<String>, pass: bool, margin: f64) -> Self {
        Self {
            claim: claim.to_string(),
            check: check.into(),
            pass,
            margin,
        }
    }
}

/// Strict decrease beyond bands: `v[k+1] + b[k+1] < v[k] − b[k]` for all k.
/// Returns the smallest gap `v[k] − b[k] − v[k+1] − b[k+1]`.
pub fn decrease_gap(values: &[f64], bands: &[f64]) -> f64 {
    values
        .windows(2)
        .zip(bands.windows(2))
        .map(|(v, b)| (v[0] - b[0]) - (v[1] + b[1]))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub fingerprint: String,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    /// Excluded from serialization so reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            fingerprint: String::new(),
            tables: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Long-format CSV: `table,row,column,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,row,column,value\n");
        for t in &self.tables {
            for (i, row) in t.rows.iter().enumerate() {
                for (c, v) in t.columns.iter().zip(row) {
                    out.push_str(&format!("{},{},{},{:e}\n", t.name, i, c, v));
                }
            }
        }
        out
    }

    /// Write `<experiment>-<fingerprint>.{json,csv}` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let stem = format!("{}-{}", self.experiment, self.fingerprint);
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&json, self.to_json()?)?;
        std::fs::write(&csv, self.to_csv())?;
        Ok((json, csv))
    }
}

/// Integrator settings shared by an ε-sweep: one step size, fine enough
/// for the smallest ε and commensurate with every fast period τε.
pub fn sweep_config(
    model: &ModelSpec,
    eps: &[f64],
    base: &IntegratorConfig,
    dt_base: f64,
) -> IntegratorConfig {
    let eps_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let base_freq = model.period().map(|tau| 2.0 * PI / tau);
    IntegratorConfig {
        dt: coupled_dt(
            dt_base,
            eps_min.min(1.0),
            base_freq,
            model.max_frequency(),
            base.fast_resolution,
        ),
        ..*base
    }
}

/// Nearest point of the step lattice: ε-sweeps fix dt by the fast
/// periods, so user-facing times are rounded onto it.
pub fn snap_to_lattice(t: f64, dt: f64) -> f64 {
    (t / dt).round() * dt
}

/// First 16 hex digits of the SHA-256 of `canonical`.
pub fn fingerprint(canonical: &[u8]) -> String {
    Sha256::digest(canonical)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Mean and standard error of a sample.
pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
