//! Run configuration for the command-line driver: schema with defaults,
//! `section.key=value` overrides, canonical fingerprints and dispatch of a
//! configured experiment.
//!
//! The file format is TOML with the sections `[model]`, `[integrator]`,
//! `[ensemble]`, `[experiment]` and `[output]`. Every key is optional and
//! unknown keys are rejected.

use crate::coefficients::{build_model, scalar_grid, DriftKind, ForcingKind, ForcingSpec, ModelSpec};
use crate::error::{Error, Result};
use crate::experiments::{
    apriori_diagnostics, attractor_distance, contraction_test, fingerprint, first_bogolyubov,
    pullback_bounded_solution, second_bogolyubov, snap_to_lattice, sweep_config, AttractorParams,
    ContractionParams, DiagnosticsParams, ExperimentReport, FirstBogolyubovParams, PullbackParams,
    SecondBogolyubovParams,
};
use crate::integrator::{IntegratorConfig, InitialLaw};
use crate::spatial::{build_grid, StateVector};
use crate::suite::DEFAULT_SEED;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

/// Experiment names accepted in `experiment.name`.
pub const EXPERIMENTS: [&str; 6] = [
    "pullback_bounded_solution",
    "contraction_test",
    "apriori_diagnostics",
    "first_bogolyubov",
    "second_bogolyubov",
    "attractor_distance",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ReactionDiffusion,
    PorousMedia,
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kind: ModelKind,
    /// Interior grid nodes (ignored by scalar models).
    pub n: usize,
    pub length: f64,
    pub p: f64,
    pub a: f64,
    /// Multiplicative noise coefficient (reaction-diffusion and scalar).
    pub kappa: f64,
    /// Linear damping c of the scalar model.
    pub linear: f64,
    /// Additive noise of the scalar model.
    pub sigma: f64,
    pub noise_rank: usize,
    pub noise_decay: f64,
    pub phi_kind: ForcingKind,
    pub phi_offset: f64,
    /// `[amplitude, angular frequency, phase]` triples.
    pub phi_terms: Vec<[f64; 3]>,
    /// Additive forcing amplitude; porous-media models have none and
    /// ignore the g keys.
    pub g_kind: ForcingKind,
    pub g_offset: f64,
    pub g_terms: Vec<[f64; 3]>,
    /// Time scales; single-ε experiments use the first entry.
    pub eps: Vec<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: ModelKind::ReactionDiffusion,
            n: 31,
            length: 1.0,
            p: 4.0,
            a: 1.0,
            kappa: 0.1,
            linear: 1.0,
            sigma: 1.0,
            noise_rank: 4,
            noise_decay: 0.5,
            phi_kind: ForcingKind::Periodic,
            phi_offset: -1.0,
            phi_terms: vec![[0.5, 1.0, 0.0]],
            g_kind: ForcingKind::Periodic,
            g_offset: 0.0,
            g_terms: vec![[1.0, 1.0, FRAC_PI_2]],
            eps: vec![0.5, 0.25, 0.125],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub dt_base: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub fast_resolution: usize,
    /// Refine `dt_base` to satisfy the dt–ε coupling; when false a
    /// violating step is an error.
    pub auto_refine: bool,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            dt_base: d.dt,
            newton_tol: d.newton_tol,
            newton_max_iter: d.newton_max_iter,
            fast_resolution: d.fast_resolution,
            auto_refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub m: usize,
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            m: 64,
            seed: DEFAULT_SEED,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub name: String,
    pub t0: f64,
    pub t1: f64,
    /// Pullback horizons n (runs start at `t_obs − n`).
    pub horizons: Vec<f64>,
    pub t_obs: f64,
    /// Initial law: `init_amplitude·e₁` plus independent normal
    /// coefficients of standard deviation `init_std` on `init_modes` modes.
    pub init_amplitude: f64,
    pub init_std: f64,
    pub init_modes: usize,
    /// Amplitude of the second law in `contraction_test`.
    pub pair_amplitude: f64,
    pub record_every: usize,
    pub fit_start: f64,
    /// End of the fit window in elapsed time; defaults to `t1 − t0`.
    pub fit_end: Option<f64>,
    pub p_moment: f64,
    /// Start time of the first Bogolyubov comparison.
    pub s: f64,
    /// Window length (first Bogolyubov) or pullback horizon (second
    /// Bogolyubov, attractor distance).
    pub horizon: f64,
    /// Checkpoints as fractions of the fast period τε.
    pub checkpoints: Vec<f64>,
    pub window_offsets: usize,
    pub resamples: usize,
    pub band_factor: f64,
    pub radius: f64,
    pub transient: f64,
    pub phases: usize,
    /// Probe laws as `[amplitude of e₁, per-mode std]` pairs.
    pub probes: Vec<[f64; 2]>,
    pub probe_modes: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            name: "contraction_test".into(),
            t0: 0.0,
            t1: 0.5,
            horizons: vec![1.0, 2.0, 4.0, 8.0],
            t_obs: 0.0,
            init_amplitude: 1.0,
            init_std: 0.0,
            init_modes: 4,
            pair_amplitude: 0.0,
            record_every: 10,
            fit_start: 0.0,
            fit_end: None,
            p_moment: 1.0,
            s: 0.0,
            horizon: 3.0,
            checkpoints: vec![0.0, 0.5],
            window_offsets: 5,
            resamples: 200,
            band_factor: 3.0,
            radius: 5.0,
            transient: 3.0,
            phases: 8,
            probes: vec![[0.0, 0.0], [4.5, 0.0], [0.0, 2.0]],
            probe_modes: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("reports"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub integrator: IntegratorSection,
    pub ensemble: EnsembleSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

/// Split `section.key=value`; the value is read as a TOML value and falls
/// back to a bare string.
pub fn parse_override(text: &str) -> Result<(String, String, toml::Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{text}` is not of the form section.key=value")))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .filter(|(s, f)| !s.is_empty() && !f.is_empty() && !f.contains('.'))
        .ok_or_else(|| Error::Config(format!("override key `{key}` must be section.key")))?;
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((section.to_string(), field.to_string(), value))
}

impl RunConfig {
    /// Parse `text` (None means an empty file), then apply `overrides` left
    /// to right.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = match text {
            Some(t) => toml::from_str(t).map_err(|e| Error::Config(one_line(&e.to_string())))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            let (section, field, value) = parse_override(o)?;
            let entry = table
                .entry(section.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => {
                    t.insert(field, value);
                }
                _ => return Err(Error::Config(format!("`{section}` is not a section"))),
            }
        }
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(one_line(&e.to_string())))?;
        config.check()?;
        Ok(config)
    }

    /// Schema checks beyond what deserialization enforces.
    pub fn check(&self) -> Result<()> {
        if !EXPERIMENTS.contains(&self.experiment.name.as_str()) {
            return Err(Error::Config(format!(
                "unknown experiment \"{}\"; valid names: {}",
                self.experiment.name,
                EXPERIMENTS.join(", ")
            )));
        }
        if self.model.eps.is_empty() {
            return Err(Error::Config("model.eps must list at least one time scale".into()));
        }
        if self.ensemble.m == 0 {
            return Err(Error::Config("ensemble.m must be at least 1".into()));
        }
        Ok(())
    }

    /// Sorted-key JSON of every field that can change the results; the
    /// worker count and output directory are excluded.
    pub fn canonical(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output");
            if let Some(ens) = obj.get_mut("ensemble").and_then(|e| e.as_object_mut()) {
                ens.remove("workers");
            }
        }
        v.to_string()
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(self.canonical().as_bytes())
    }

    /// The configured model at time scale `eps`.
    pub fn build_model(&self, eps: f64) -> Result<ModelSpec> {
        let m = &self.model;
        let forcing = |kind: ForcingKind, offset: f64, terms: &[[f64; 3]]| {
            let t: Vec<(f64, f64, f64)> = terms.iter().map(|x| (x[0], x[1], x[2])).collect();
            match kind {
                ForcingKind::Constant if terms.is_empty() => Ok(ForcingSpec::constant(offset)),
                ForcingKind::Constant => {
                    Err(Error::Config("a constant forcing takes no terms; set its terms to []".into()))
                }
                ForcingKind::Periodic => Ok(ForcingSpec::periodic(offset, &t)),
                ForcingKind::QuasiPeriodic => Ok(ForcingSpec::quasi_periodic(offset, &t)),
            }
        };
        let phi = forcing(m.phi_kind, m.phi_offset, &m.phi_terms)?;
        let g = match m.kind {
            ModelKind::PorousMedia => ForcingSpec::zero(),
            _ => forcing(m.g_kind, m.g_offset, &m.g_terms)?,
        };
        let (drift, grid) = match m.kind {
            ModelKind::ReactionDiffusion => (
                DriftKind::ReactionDiffusion {
                    p: m.p,
                    a: m.a,
                    kappa: m.kappa,
                },
                Arc::new(build_grid(m.n, m.length)?),
            ),
            ModelKind::PorousMedia => (
                DriftKind::PorousMedia {
                    p: m.p,
                    a: m.a,
                    noise_rank: m.noise_rank,
                    noise_decay: m.noise_decay,
                },
                Arc::new(build_grid(m.n, m.length)?),
            ),
            ModelKind::Scalar => (
                DriftKind::Scalar {
                    linear: m.linear,
                    a: m.a,
                    p: m.p,
                    sigma: m.sigma,
                    kappa: m.kappa,
                },
                scalar_grid(),
            ),
        };
        build_model(drift, grid, phi, g, eps)
    }

    fn base_integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.integrator.dt_base,
            newton_tol: self.integrator.newton_tol,
            newton_max_iter: self.integrator.newton_max_iter,
            fast_resolution: self.integrator.fast_resolution,
        }
    }

    /// Step for a run over the time scales `eps` of `model`.
    fn integrator_for(&self, model: &ModelSpec, eps: &[f64]) -> Result<IntegratorConfig> {
        let base = self.base_integrator();
        if !self.integrator.auto_refine {
            let eps_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
            base.validate(&model.with_eps(eps_min)?)?;
            return Ok(base);
        }
        let cfg = sweep_config(model, eps, &base, self.integrator.dt_base);
        cfg.validate(model)?;
        Ok(cfg)
    }

    fn law(&self, model: &ModelSpec, amplitude: f64, std: f64, modes: usize) -> InitialLaw {
        let grid = model.grid();
        let mean = StateVector::nodal(grid.eigenvector(0).iter().map(|v| amplitude * v).collect());
        if std == 0.0 {
            InitialLaw::Dirac(mean)
        } else {
            InitialLaw::Gaussian {
                mean,
                mode_std: vec![std; modes.min(grid.n_interior())],
            }
        }
    }

    /// Run the configured experiment; the report carries the config
    /// fingerprint and its wall time.
    pub fn run(&self) -> Result<ExperimentReport> {
        self.check()?;
        let start = Instant::now();
        let x = &self.experiment;
        let seed = self.ensemble.seed;
        let workers = self.ensemble.workers.max(1);
        let m = self.ensemble.m;
        let eps = &self.model.eps;
        let model = self.build_model(eps[0])?;
        let law = self.law(&model, x.init_amplitude, x.init_std, x.init_modes);
        let mut report = match x.name.as_str() {
            "contraction_test" => {
                let cfg = self.integrator_for(&model, &eps[..1])?;
                let (t0, t1) = (snap_to_lattice(x.t0, cfg.dt), snap_to_lattice(x.t1, cfg.dt));
                let params = ContractionParams {
                    law_x: law,
                    law_y: self.law(&model, x.pair_amplitude, x.init_std, x.init_modes),
                    t0,
                    t1,
                    m,
                    record_every: x.record_every,
                    fit_window: (x.fit_start, x.fit_end.unwrap_or(t1 - t0)),
                };
                contraction_test(&model, &cfg, &params, seed, workers)?.report
            }
            "pullback_bounded_solution" => {
                let cfg = self.integrator_for(&model, &eps[..1])?;
                let params = PullbackParams {
                    horizons: x.horizons.iter().map(|&n| snap_to_lattice(n, cfg.dt)).collect(),
                    t_obs: snap_to_lattice(x.t_obs, cfg.dt),
                    m,
                    law,
                };
                pullback_bounded_solution(&model, &cfg, &params, seed, workers)?.report
            }
            "apriori_diagnostics" => {
                let cfg = self.integrator_for(&model, &eps[..1])?;
                let params = DiagnosticsParams {
                    law,
                    t0: snap_to_lattice(x.t0, cfg.dt),
                    t1: snap_to_lattice(x.t1, cfg.dt),
                    p_moment: x.p_moment,
                    m,
                    record_every: x.record_every,
                };
                apriori_diagnostics(&model, &cfg, &params, seed, workers)?
            }
            "first_bogolyubov" => {
                let cfg = self.integrator_for(&model, eps)?;
                let params = FirstBogolyubovParams {
                    eps: eps.clone(),
                    law,
                    s: x.s,
                    horizon: x.horizon,
                    m,
                    resamples: x.resamples,
                    band_factor: x.band_factor,
                    dt_base: cfg.dt,
                };
                first_bogolyubov(&model, &cfg, &params, seed, workers)?
            }
            "second_bogolyubov" => {
                let cfg = self.integrator_for(&model, eps)?;
                let params = SecondBogolyubovParams {
                    eps: eps.clone(),
                    horizon: x.horizon,
                    checkpoints: x.checkpoints.clone(),
                    window_offsets: x.window_offsets,
                    m,
                    resamples: x.resamples,
                    band_factor: x.band_factor,
                    dt_base: cfg.dt,
                };
                second_bogolyubov(&model, &cfg, &params, seed, workers)?
            }
            "attractor_distance" => {
                let cfg = self.integrator_for(&model, eps)?;
                let params = AttractorParams {
                    eps: eps.clone(),
                    radius: x.radius,
                    probes: x
                        .probes
                        .iter()
                        .map(|p| self.law(&model, p[0], p[1], x.probe_modes))
                        .collect(),
                    transient: x.transient,
                    phases: x.phases,
                    horizon: x.horizon,
                    m,
                    resamples: x.resamples,
                    band_factor: x.band_factor,
                    dt_base: cfg.dt,
                };
                attractor_distance(&model, &cfg, &params, seed, workers)?
            }
            other => unreachable!("experiment {other} passed the schema check"),
        };
        if self.model.kind == ModelKind::PorousMedia {
            report.note("porous-media model: the g forcing keys are ignored");
        }
        report.fingerprint = self.fingerprint();
        report.wall_time = start.elapsed();
        Ok(report)
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}
