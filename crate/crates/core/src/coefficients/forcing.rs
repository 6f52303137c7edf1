//! Recurrent scalar time-coefficients and their Bohr averages.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const FREQ_TOL: f64 = 1e-9;
// Largest denominator tried when looking for a rational frequency ratio.
const MAX_DENOMINATOR: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    Periodic,
    QuasiPeriodic,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingTerm {
    pub amplitude: f64,
    /// Angular frequency, 1/time.
    pub frequency: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    pub terms: Vec<ForcingTerm>,
    pub offset: f64,
}

impl ForcingSpec {
    pub fn constant(offset: f64) -> Self {
        Self {
            kind: ForcingKind::Constant,
            terms: Vec::new(),
            offset,
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `offset + Σ a sin(ν t + θ)` with all ν integer multiples of a base frequency.
    pub fn periodic(offset: f64, terms: &[(f64, f64, f64)]) -> Self {
        Self::with_terms(ForcingKind::Periodic, offset, terms)
    }

    pub fn quasi_periodic(offset: f64, terms: &[(f64, f64, f64)]) -> Self {
        Self::with_terms(ForcingKind::QuasiPeriodic, offset, terms)
    }

    fn with_terms(kind: ForcingKind, offset: f64, terms: &[(f64, f64, f64)]) -> Self {
        Self {
            kind,
            offset,
            terms: terms
                .iter()
                .map(|&(amplitude, frequency, phase)| ForcingTerm {
                    amplitude,
                    frequency,
                    phase,
                })
                .collect(),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.offset == 0.0 && self.terms.iter().all(|t| t.amplitude == 0.0)
    }
}

/// Evaluable coefficient `φ(t) = offset + Σ aᵢ sin(νᵢ t + θᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Forcing {
    spec: ForcingSpec,
}

fn rational_ratio(x: f64) -> Option<(u64, u64)> {
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        ((x * q as f64 - p).abs() <= FREQ_TOL * q as f64 && p > 0.0).then_some((p as u64, q))
    })
}

/// Validate `spec` and return the time-function handle.
pub fn make_forcing(spec: ForcingSpec) -> Result<Forcing> {
    if !spec.offset.is_finite() {
        return Err(Error::invalid("forcing offset must be finite"));
    }
    for (i, t) in spec.terms.iter().enumerate() {
        if !(t.amplitude.is_finite() && t.phase.is_finite()) {
            return Err(Error::invalid(format!("forcing term {i} has a non-finite value")));
        }
        if !(t.frequency > 0.0 && t.frequency.is_finite()) {
            return Err(Error::invalid(format!(
                "forcing term {i} needs a positive finite frequency, got {}",
                t.frequency
            )));
        }
    }
    match spec.kind {
        ForcingKind::Constant => {
            if !spec.terms.is_empty() {
                return Err(Error::invalid("a constant forcing takes no oscillating terms"));
            }
        }
        ForcingKind::Periodic => {
            if spec.terms.is_empty() {
                return Err(Error::invalid("a periodic forcing needs at least one term"));
            }
            let base = spec
                .terms
                .iter()
                .map(|t| t.frequency)
                .fold(f64::INFINITY, f64::min);
            for (i, t) in spec.terms.iter().enumerate() {
                let m = t.frequency / base;
                if (m - m.round()).abs() > FREQ_TOL {
                    return Err(Error::invalid(format!(
                        "periodic forcing: frequency {} (term {i}) is not an integer multiple of \
                         the base frequency {base}",
                        t.frequency
                    )));
                }
            }
        }
        ForcingKind::QuasiPeriodic => {
            if spec.terms.len() < 2 {
                return Err(Error::invalid(
                    "a quasi-periodic forcing needs at least two rationally independent frequencies",
                ));
            }
            for i in 0..spec.terms.len() {
                for j in i + 1..spec.terms.len() {
                    let (a, b) = (spec.terms[i].frequency, spec.terms[j].frequency);
                    if let Some((p, q)) = rational_ratio(a / b) {
                        return Err(Error::invalid(format!(
                            "quasi-periodic forcing: frequencies {a} (term {i}) and {b} (term {j}) \
                             have the rational ratio {p}/{q}"
                        )));
                    }
                }
            }
        }
    }
    Ok(Forcing { spec })
}

impl Forcing {
    pub fn spec(&self) -> &ForcingSpec {
        &self.spec
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.spec.offset
            + self
                .spec
                .terms
                .iter()
                .map(|term| term.amplitude * (term.frequency * t + term.phase).sin())
                .sum::<f64>()
    }

    pub fn is_autonomous(&self) -> bool {
        self.spec.terms.iter().all(|t| t.amplitude == 0.0)
    }

    pub fn max_frequency(&self) -> Option<f64> {
        self.spec
            .terms
            .iter()
            .filter(|t| t.amplitude != 0.0)
            .map(|t| t.frequency)
            .reduce(f64::max)
    }

    /// Period of a periodic forcing, `2π / base frequency`.
    pub fn period(&self) -> Option<f64> {
        match self.spec.kind {
            ForcingKind::Periodic => self
                .spec
                .terms
                .iter()
                .filter(|t| t.amplitude != 0.0)
                .map(|t| t.frequency)
                .reduce(f64::min)
                .map(|nu| 2.0 * PI / nu),
            _ => None,
        }
    }

    /// `|offset| + Σ|aᵢ|`.
    pub fn analytic_sup_abs(&self) -> f64 {
        self.spec.offset.abs() + self.spec.terms.iter().map(|t| t.amplitude.abs()).sum::<f64>()
    }

    fn probe_max(&self, f: impl Fn(f64) -> f64) -> f64 {
        if self.is_autonomous() {
            return f(self.spec.offset);
        }
        (0..SUP_PROBES)
            .map(|i| f(self.eval(i as f64 * SUP_SPAN / SUP_PROBES as f64)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `|φ⁺|_∞`: the smaller of the probe-grid maximum and the analytic bound.
    pub fn sup_positive_part(&self) -> f64 {
        let analytic = (self.spec.offset
            + self.spec.terms.iter().map(|t| t.amplitude.abs()).sum::<f64>())
        .max(0.0);
        self.probe_max(|v| v.max(0.0)).min(analytic)
    }

    /// `|φ|_∞`: the smaller of the probe-grid maximum and the analytic bound.
    pub fn sup_abs(&self) -> f64 {
        self.probe_max(f64::abs).min(self.analytic_sup_abs())
    }
}

const SUP_PROBES: usize = 100_000;
const SUP_SPAN: f64 = 1000.0;
const BOHR_PROBES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BohrAverage {
    pub mean: f64,
    /// Largest deviation of a window mean from `mean` over the probe starts;
    /// a lower estimate of the uniform residual ω₁(T).
    pub residual: f64,
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = if panels % 2 == 0 { panels } else { panels + 1 };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Window means `(1/T)∫_t^{t+T} φ` over 16 probe starts `t = jT/16`; the mean is
/// their average and the residual their largest deviation from it. Periodic
/// forcings round T up to a whole number of periods.
pub fn bohr_average(forcing: &Forcing, t_avg: f64, n_samples: usize) -> Result<BohrAverage> {
    if !(t_avg > 0.0 && t_avg.is_finite()) {
        return Err(Error::invalid(format!("averaging window must be positive, got {t_avg}")));
    }
    if n_samples < 2 {
        return Err(Error::invalid("averaging needs at least two quadrature panels"));
    }
    if forcing.is_autonomous() {
        return Ok(BohrAverage {
            mean: forcing.spec.offset,
            residual: 0.0,
        });
    }
    // whole periods make the window mean exact up to quadrature error
    let t_avg = match forcing.period() {
        Some(tau) => tau * (t_avg / tau).ceil(),
        None => t_avg,
    };
    let windows: Vec<f64> = (0..BOHR_PROBES)
        .map(|j| {
            let start = j as f64 * t_avg / BOHR_PROBES as f64;
            simpson(|s| forcing.eval(s), start, start + t_avg, n_samples) / t_avg
        })
        .collect();
    let mean = windows.iter().sum::<f64>() / windows.len() as f64;
    let residual = windows
        .iter()
        .map(|w| (w - mean).abs())
        .fold(0.0, f64::max);
    Ok(BohrAverage { mean, residual })
}
