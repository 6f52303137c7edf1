//! Square-mean contraction of coupled solutions.

use super::{fit_exponential, fit_power, ExperimentReport, RateFit, Table, Verdict};
use crate::coefficients::ModelSpec;
use crate::error::{Error, Result};
use crate::integrator::{simulate_ensemble_with, IntegratorConfig, InitialLaw, RecordPolicy};

#[derive(Debug, Clone)]
pub struct ContractionParams {
    pub law_x: InitialLaw,
    pub law_y: InitialLaw,
    pub t0: f64,
    pub t1: f64,
    pub m: usize,
    /// Record every this many steps.
    pub record_every: usize,
    /// Fit window in elapsed time `t − t0`.
    pub fit_window: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct ContractionOutcome {
    pub report: ExperimentReport,
    /// Elapsed times `t − t0`.
    pub times: Vec<f64>,
    pub mean_square: Vec<f64>,
    pub fit: Option<RateFit>,
}

/// Mean-square distance of two coupled ensembles over time, with the decay
/// law of the ledger's branch fitted and compared.
pub fn contraction_test(
    model: &ModelSpec,
    config: &IntegratorConfig,
    params: &ContractionParams,
    seed: u64,
    workers: usize,
) -> Result<ContractionOutcome> {
    if params.fit_window.0 >= params.fit_window.1 {
        return Err(Error::invalid("fit window must be a non-empty interval"));
    }
    // a noiseless model with deterministic starts needs a single path
    let deterministic =
        !model.has_noise() && params.law_x.is_deterministic() && params.law_y.is_deterministic();
    let m = if deterministic { 1 } else { params.m };
    let record = RecordPolicy::Every(params.record_every.max(1));
    let run = |law: &InitialLaw| {
        simulate_ensemble_with(model, config, law, params.t0, params.t1, m, seed, record, workers)
    };
    let ex = run(&params.law_x)?;
    let ey = run(&params.law_y)?;
    let times: Vec<f64> = ex.times().iter().map(|t| t - params.t0).collect();
    let mean_square: Vec<f64> = (0..times.len())
        .map(|i| {
            ex.paths
                .iter()
                .zip(&ey.paths)
                .map(|(p, q)| {
                    let d: Vec<f64> = p.states[i]
                        .values
                        .iter()
                        .zip(&q.states[i].values)
                        .map(|(a, b)| a - b)
                        .collect();
                    model.h_norm_nodal(&d).powi(2)
                })
                .sum::<f64>()
                / m as f64
        })
        .collect();

    let ledger = model.ledger();
    let (lo, hi) = params.fit_window;
    let window: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= lo - 1e-12 && times[i] <= hi + 1e-12)
        .collect();
    let wt: Vec<f64> = window.iter().map(|&i| times[i]).collect();
    let wy: Vec<f64> = window.iter().map(|&i| mean_square[i]).collect();
    let polynomial = ledger.lambda_prime > 0.0;
    let bound: Vec<f64> = times
        .iter()
        .map(|&t| {
            if polynomial {
                ledger.polynomial_bound(t)
            } else {
                mean_square[0] * (-ledger.stability_margin() * t).exp()
            }
        })
        .collect();

    let mut report = ExperimentReport::new("contraction_test");
    let mut table = Table::new("contraction", &["time", "mean_square_distance", "bound"]);
    for i in 0..times.len() {
        table.push(vec![times[i], mean_square[i], bound[i]]);
    }
    report.tables.push(table);

    let fit = if polynomial {
        fit_power(&wt, &wy).ok()
    } else {
        fit_exponential(&wt, &wy).ok()
    };
    let fit = fit.map(|mut f| {
        f.bound = window.iter().map(|&i| bound[i]).collect();
        f
    });
    match &fit {
        Some(f) => {
            let mut ft = Table::new("fit", &["exponent", "log_intercept", "residual", "excluded"]);
            ft.push(vec![f.exponent, f.log_intercept, f.residual, f.excluded as f64]);
            report.tables.push(ft);
            if f.excluded > 0 {
                report.note(format!(
                    "{} non-positive distances (merged paths) excluded from the fit",
                    f.excluded
                ));
            }
        }
        None => report.note("distances vanish in the fit window: nothing to fit"),
    }

    if polynomial {
        let slack = window
            .iter()
            .map(|&i| bound[i] - mean_square[i])
            .fold(f64::INFINITY, f64::min);
        report.verdicts.push(Verdict::flag(
            "AC4",
            "mean-square distance below the polynomial bound",
            slack >= 0.0,
            slack,
        ));
        let target = -2.0 / (ledger.r - 2.0);
        // with linear damping (λ > 0) the decay is eventually exponential and
        // the power law is only an upper envelope
        if let (Some(f), true) = (&fit, ledger.lambda == 0.0) {
            report.verdicts.push(Verdict::within(
                "AC4",
                format!("log-log exponent near {target}"),
                f.exponent,
                target - 0.1,
                target + 0.1,
            ));
        } else if let Some(f) = &fit {
            report.note(format!(
                "log-log exponent {:.4} vs power law {target} (descriptive: λ > 0)",
                f.exponent
            ));
        }
    } else if ledger.stability_margin() > 0.0 {
        if let Some(f) = &fit {
            let predicted = ledger.stability_margin();
            report.verdicts.push(Verdict::at_most(
                "AC3",
                format!("fitted rate at least 95% of 2λ−2λ_F−L_G² = {predicted}"),
                0.95 * predicted,
                f.exponent,
            ));
        }
    } else {
        report.note("model is not attracting: no decay rate is asserted");
    }
    Ok(ContractionOutcome {
        report,
        times,
        mean_square,
        fit,
    })
}
