//! Strongly monotone implicit Euler–Maruyama integration.
//!
//! All times live on the global lattice `t = k·dt` (k ∈ ℤ) and the Wiener
//! increment of step k is addressed by (path seed, k). Two runs that share a
//! seed and a lattice therefore see the same noise on their common steps,
//! whatever their start times: pullback horizons, ε-sweeps and the averaged
//! equation are coupled without any bookkeeping.

mod ensemble;
mod step;

pub use ensemble::{simulate_ensemble, simulate_ensemble_with, InitialLaw, PathEnsemble};
pub(crate) use ensemble::par_map;

use crate::coefficients::ModelSpec;
use crate::error::{Error, Result};
use crate::rng::{fill_normals, Domain};
use crate::spatial::{Representation, StateVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use step::Stepper;

const LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    /// Relative Newton tolerance: the residual H-norm must reach `newton_tol·(1+‖x‖_H)`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Minimum number of steps per fast period `2πε/ν_max`.
    pub fast_resolution: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            fast_resolution: 20,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    /// Check the step against the fastest time-coefficient of `model`.
    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 || self.fast_resolution == 0 {
            return Err(Error::invalid(
                "newton_tol, newton_max_iter and fast_resolution must be positive",
            ));
        }
        if let Some(nu) = model.max_frequency() {
            let limit = model.eps() * 2.0 * PI / nu / self.fast_resolution as f64;
            if self.dt > limit * (1.0 + 1e-9) {
                return Err(Error::invalid(format!(
                    "dt–ε coupling violation: dt = {} exceeds ε·(2π/ν_max)/fast_resolution = {limit:.6e} \
                     (ε = {}, ν_max = {nu}, fast_resolution = {}); lower dt or enable auto_refine",
                    self.dt,
                    model.eps(),
                    self.fast_resolution
                )));
            }
        }
        Ok(())
    }
}

/// Step size shared by an ε-sweep: `dt = τ ε_min / N` with N the smallest step
/// count per fast period that resolves the fastest frequency with
/// `fast_resolution` steps and does not exceed `dt_base`. Because τε_min is a
/// whole number of steps, so is τε for every ε that is an integer multiple of
/// ε_min, which keeps periodicity checks on the mesh.
pub fn coupled_dt(
    dt_base: f64,
    eps_min: f64,
    base_frequency: Option<f64>,
    max_frequency: Option<f64>,
    fast_resolution: usize,
) -> f64 {
    let Some(nu_max) = max_frequency else {
        return dt_base;
    };
    let nu_base = base_frequency.unwrap_or(nu_max);
    let fast_period = 2.0 * PI / nu_base * eps_min;
    let by_resolution = (fast_resolution as f64 * nu_max / nu_base - 1e-9).ceil();
    let by_base = (fast_period / dt_base - 1e-9).ceil();
    fast_period / by_resolution.max(by_base).max(1.0)
}

/// Lattice index of time `t`, or an error when `t` is off the `dt` mesh.
pub fn lattice_index(t: f64, dt: f64) -> Result<i64> {
    let q = t / dt;
    let k = q.round();
    if (q - k).abs() > LATTICE_TOL * q.abs().max(1.0) {
        return Err(Error::invalid(format!(
            "time {t} is not a multiple of dt = {dt}; choose times on the step lattice"
        )));
    }
    Ok(k as i64)
}

/// `N(0, dt)` increments for step `step` of path `seed`, addressed without
/// sequential state.
pub fn wiener_increments(seed: u64, step: i64, dt: f64, rank: usize) -> Vec<f64> {
    let mut out = vec![0.0; rank];
    write_increments(seed, step, dt, &mut out);
    out
}

#[inline]
fn write_increments(seed: u64, step: i64, dt: f64, out: &mut [f64]) {
    if dt == 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    fill_normals(seed, step as u64, Domain::Wiener, out);
    let s = dt.sqrt();
    out.iter_mut().for_each(|v| *v *= s);
}

/// One implicit step from time `t` with increment `dw`.
pub fn implicit_step(
    model: &ModelSpec,
    config: &IntegratorConfig,
    state: &StateVector,
    t: f64,
    dw: &[f64],
) -> Result<StateVector> {
    if dw.len() != model.noise_rank() {
        return Err(Error::invalid(format!(
            "noise increment has {} components, the model has rank {}",
            dw.len(),
            model.noise_rank()
        )));
    }
    let mut u = model.grid().transform(state, Representation::Nodal)?.values;
    Stepper::new(model, config).step(&mut u, t, dw)?;
    Ok(StateVector::nodal(u))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordPolicy {
    All,
    /// Every k-th step counted from the start, plus the final state.
    Every(usize),
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub seed: u64,
}

impl Path {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("paths hold at least one state")
    }

    /// State recorded at time `t` (matched to the mesh within dt/2).
    pub fn state_at(&self, t: f64) -> Option<&StateVector> {
        let i = self.times.partition_point(|&s| s < t - 1e-9 * t.abs().max(1.0));
        let dt_half = if self.times.len() > 1 {
            0.5 * (self.times[1] - self.times[0])
        } else {
            f64::INFINITY
        };
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter(|&j| j < self.times.len())
            .min_by(|&a, &b| (self.times[a] - t).abs().total_cmp(&(self.times[b] - t).abs()))
            .filter(|&j| (self.times[j] - t).abs() <= dt_half.max(1e-12))
            .map(|j| &self.states[j])
    }
}

/// Integrate from `t0` to `t1` and call `observe(k, t_k, state)` at the start
/// and after every step. Returns the final nodal state.
pub fn simulate_path_with(
    model: &ModelSpec,
    config: &IntegratorConfig,
    x0: &[f64],
    t0: f64,
    t1: f64,
    seed: u64,
    mut observe: impl FnMut(i64, f64, &[f64]),
) -> Result<Vec<f64>> {
    config.validate(model)?;
    if x0.len() != model.grid().n_interior() {
        return Err(Error::invalid("initial state dimension does not match the grid"));
    }
    if !(t1 > t0) {
        return Err(Error::invalid(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    let dt = config.dt;
    let k0 = lattice_index(t0, dt)?;
    let k1 = lattice_index(t1, dt)?;
    let mut stepper = Stepper::new(model, config);
    let noisy = stepper.needs_noise();
    let mut dw = vec![0.0; model.noise_rank()];
    let mut u = x0.to_vec();
    observe(k0, k0 as f64 * dt, &u);
    for k in k0..k1 {
        if noisy {
            write_increments(seed, k, dt, &mut dw);
        }
        stepper.step(&mut u, k as f64 * dt, &dw).map_err(|e| match e {
            Error::Convergence {
                residual,
                iterations,
                path,
                ..
            } => Error::Convergence {
                residual,
                iterations,
                step: Some(k),
                path,
            },
            other => other,
        })?;
        observe(k + 1, (k + 1) as f64 * dt, &u);
    }
    Ok(u)
}

/// Integrate with a recording policy.
pub fn simulate_path_recorded(
    model: &ModelSpec,
    config: &IntegratorConfig,
    x0: &StateVector,
    t0: f64,
    t1: f64,
    seed: u64,
    record: RecordPolicy,
) -> Result<Path> {
    let x0 = model.grid().transform(x0, Representation::Nodal)?.values;
    let k0 = lattice_index(t0, config.dt)?;
    let k1 = lattice_index(t1, config.dt)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    simulate_path_with(model, config, &x0, t0, t1, seed, |k, t, u| {
        let keep = match record {
            RecordPolicy::All => true,
            RecordPolicy::Every(e) => (k - k0) % e.max(1) as i64 == 0 || k == k1,
            RecordPolicy::Final => k == k1,
        };
        if keep {
            times.push(t);
            states.push(StateVector::nodal(u.to_vec()));
        }
    })?;
    Ok(Path { times, states, seed })
}

/// Integrate from `t0` to `t1`, recording every step.
pub fn simulate_path(
    model: &ModelSpec,
    config: &IntegratorConfig,
    x0: &StateVector,
    t0: f64,
    t1: f64,
    seed: u64,
) -> Result<Path> {
    simulate_path_recorded(model, config, x0, t0, t1, seed, RecordPolicy::All)
}
