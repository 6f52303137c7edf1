//! The acceptance battery: one report per criterion AC1–AC9, each with fixed
//! built-in models and tolerances. Reports depend only on the master seed.

use crate::coefficients::{
    build_model, monotonicity_witness, scalar_grid, DriftKind, ForcingSpec, ModelSpec,
};
use crate::error::Result;
use crate::experiments::{
    apriori_diagnostics, attractor_distance, contraction_test, fingerprint, first_bogolyubov,
    fit_power, pullback_bounded_solution, second_bogolyubov, AttractorParams, ContractionParams,
    DiagnosticsParams, ExperimentReport, FirstBogolyubovParams, PullbackParams,
    SecondBogolyubovParams, Table, Verdict,
};
use crate::integrator::{IntegratorConfig, InitialLaw};
use crate::measures::{bl_distance, dirac_bl, EmpiricalMeasure};
use crate::rng::{derive_seed, CounterRng};
use crate::spatial::{build_grid, SpaceTag, StateVector};
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;
use std::time::Instant;

pub const DEFAULT_SEED: u64 = 20_240_611;

/// Report names of the criteria, in order AC1 … AC9.
pub const CRITERIA: [&str; 9] = [
    "ac1_bl_metric",
    "ac2_monotonicity",
    "ac3_exponential_contraction",
    "ac4_polynomial_contraction",
    "ac5_pullback",
    "ac6_moment_envelope",
    "ac7_first_bogolyubov",
    "ac8_second_bogolyubov",
    "ac9_global_averaging",
];

/// Run criterion `index` (0-based) and stamp the report.
pub fn run_criterion(index: usize, seed: u64, workers: usize) -> Result<ExperimentReport> {
    let start = Instant::now();
    let s = derive_seed(seed, index as u64);
    let mut report = match index {
        0 => ac1(s)?,
        1 => ac2(s)?,
        2 => ac3(s, workers)?,
        3 => ac4(s, workers)?,
        4 => ac5(s, workers)?,
        5 => ac6(s, workers)?,
        6 => ac7(s, workers)?,
        7 => ac8(s, workers)?,
        8 => ac9(s, workers)?,
        _ => return Err(crate::Error::invalid(format!("no criterion with index {index}"))),
    };
    report.experiment = CRITERIA[index].to_string();
    report.fingerprint = fingerprint(format!("suite/{}/seed={seed}", CRITERIA[index]).as_bytes());
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Every criterion in order; `progress` sees each report as it completes.
pub fn run_suite(
    seed: u64,
    workers: usize,
    mut progress: impl FnMut(&ExperimentReport),
) -> Result<Vec<ExperimentReport>> {
    (0..CRITERIA.len())
        .map(|i| {
            let r = run_criterion(i, seed, workers)?;
            progress(&r);
            Ok(r)
        })
        .collect()
}

fn scalar(linear: f64, a: f64, p: f64, sigma: f64, g: ForcingSpec) -> Result<ModelSpec> {
    build_model(
        DriftKind::Scalar {
            linear,
            a,
            p,
            sigma,
            kappa: 0.0,
        },
        scalar_grid(),
        ForcingSpec::zero(),
        g,
        1.0,
    )
}

fn sin_forcing() -> ForcingSpec {
    ForcingSpec::periodic(0.0, &[(1.0, 1.0, 0.0)])
}

/// Reaction-diffusion with φ(t) = −1 + 0.5 sin t, g(t) = cos t, κ = 0.1,
/// a = 1, p = 4 on 31 nodes.
fn rd_periodic() -> Result<ModelSpec> {
    rd_with(
        ForcingSpec::periodic(-1.0, &[(0.5, 1.0, 0.0)]),
        ForcingSpec::periodic(0.0, &[(1.0, 1.0, FRAC_PI_2)]),
    )
}

fn rd_with(phi: ForcingSpec, g: ForcingSpec) -> Result<ModelSpec> {
    build_model(
        DriftKind::ReactionDiffusion {
            p: 4.0,
            a: 1.0,
            kappa: 0.1,
        },
        Arc::new(build_grid(31, 1.0)?),
        phi,
        g,
        1.0,
    )
}

fn gaussian(n: usize, modes: usize, std: f64) -> InitialLaw {
    InitialLaw::Gaussian {
        mean: StateVector::zeros(n),
        mode_std: vec![std; modes],
    }
}

fn ac1(seed: u64) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("");
    let mut rng = CounterRng::new(seed, 1);
    let grid = scalar_grid();
    let mut worst: f64 = 0.0;
    let mut dirac = Table::new("dirac", &["d", "d_bl", "closed_form"]);
    for _ in 0..50 {
        let d = 100.0 * (1.0 - rng.uniform());
        let a = EmpiricalMeasure::dirac(grid.clone(), StateVector::nodal(vec![0.0]), SpaceTag::L2)?;
        let b = EmpiricalMeasure::dirac(grid.clone(), StateVector::nodal(vec![d]), SpaceTag::L2)?;
        let v = bl_distance(&a, &b)?.value;
        worst = worst.max((v - dirac_bl(d)).abs());
        dirac.push(vec![d, v, dirac_bl(d)]);
    }
    report.verdicts.push(Verdict::at_most(
        "AC1",
        "Dirac pairs match 2d/(2+d)",
        worst,
        1e-8,
    ));
    let grid7 = Arc::new(build_grid(7, 1.0)?);
    let random_measure = |rng: &mut CounterRng| -> Result<EmpiricalMeasure> {
        let k = 1 + rng.below(32);
        let scale = (4.0 * rng.uniform() - 2.0).exp();
        let support: Vec<StateVector> = (0..k)
            .map(|_| StateVector::nodal((0..7).map(|_| scale * rng.normal()).collect()))
            .collect();
        let mut w: Vec<f64> = (0..k).map(|_| 0.05 + rng.uniform()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        EmpiricalMeasure::new(grid7.clone(), support, w, SpaceTag::L2)
    };
    let (mut identity, mut symmetry, mut triangle, mut negative) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let mu = random_measure(&mut rng)?;
        let nu = random_measure(&mut rng)?;
        let rho = random_measure(&mut rng)?;
        let d = |a: &EmpiricalMeasure, b: &EmpiricalMeasure| bl_distance(a, b).map(|r| r.value);
        let (mn, nm) = (d(&mu, &nu)?, d(&nu, &mu)?);
        let (nr, mr) = (d(&nu, &rho)?, d(&mu, &rho)?);
        identity = identity.max(d(&mu, &mu)?);
        symmetry = symmetry.max((mn - nm).abs());
        triangle = triangle.max(mr - mn - nr);
        negative = negative.max(-mn.min(nr).min(mr));
    }
    let mut axioms = Table::new("axioms", &["identity", "symmetry", "triangle_excess", "negativity"]);
    axioms.push(vec![identity, symmetry, triangle, negative]);
    for (name, v) in [
        ("d(μ,μ) = 0", identity),
        ("symmetry", symmetry),
        ("triangle inequality", triangle),
        ("non-negativity", negative),
    ] {
        report
            .verdicts
            .push(Verdict::at_most("AC1", format!("metric axiom: {name}"), v, 1e-8));
    }
    report.tables.push(dirac);
    report.tables.push(axioms);
    Ok(report)
}

fn ac2(seed: u64) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("");
    let mut table = Table::new("witness", &["model", "n", "pairs", "max_margin", "max_ratio"]);
    for n in [7usize, 31, 127] {
        let grid = Arc::new(build_grid(n, 1.0)?);
        let models = [
            (
                "reaction_diffusion",
                DriftKind::ReactionDiffusion {
                    p: 4.0,
                    a: 1.0,
                    kappa: 0.1,
                },
            ),
            (
                "porous_media",
                DriftKind::PorousMedia {
                    p: 4.0,
                    a: 1.0,
                    noise_rank: n.min(16),
                    noise_decay: 0.5,
                },
            ),
        ];
        for (k, (name, drift)) in models.into_iter().enumerate() {
            let model = build_model(
                drift,
                grid.clone(),
                ForcingSpec::constant(-1.0),
                ForcingSpec::zero(),
                1.0,
            )?;
            let w = monotonicity_witness(&model, 1000, derive_seed(seed, n as u64));
            table.push(vec![k as f64, n as f64, w.n_pairs as f64, w.max_margin, w.max_ratio]);
            report.verdicts.push(Verdict::at_most(
                "AC2",
                format!("{name}, n = {n}: monotonicity margin ≤ 1e−8·scale"),
                w.max_ratio,
                1e-8,
            ));
        }
    }
    report.tables.push(table);
    report.note("model column: 0 = reaction_diffusion, 1 = porous_media");
    Ok(report)
}

fn ac3(seed: u64, workers: usize) -> Result<ExperimentReport> {
    let grid = Arc::new(build_grid(31, 1.0)?);
    let heat = build_model(
        DriftKind::ReactionDiffusion {
            p: 2.0,
            a: 0.0,
            kappa: 0.0,
        },
        grid.clone(),
        ForcingSpec::zero(),
        ForcingSpec::zero(),
        1.0,
    )?;
    let e1 = StateVector::nodal(grid.eigenvector(0).to_vec());
    let params = ContractionParams {
        law_x: InitialLaw::Dirac(StateVector::zeros(31)),
        law_y: InitialLaw::Dirac(e1),
        t0: 0.0,
        t1: 1.0,
        m: 1,
        record_every: 10,
        fit_window: (0.0, 1.0),
    };
    let out = contraction_test(&heat, &IntegratorConfig::with_dt(1e-3), &params, seed, workers)?;
    let mut report = out.report;
    let target = 2.0 * grid.first_eigenvalue();
    let rate = out.fit.as_ref().map_or(f64::NAN, |f| f.exponent);
    report.verdicts.push(Verdict::within(
        "AC3",
        format!("fitted rate within 5% of 2λ₁ = {target:.6}"),
        rate / target,
        0.95,
        1.05,
    ));
    Ok(report)
}

/// Step size for the polynomial check: the implicit scheme lags the ODE at
/// large separations and the bound 2/t is attained asymptotically, so the
/// step must be small enough for the t = 1 value to stay below 2.
pub const AC4_DT: f64 = 2e-8;

fn ac4(seed: u64, workers: usize) -> Result<ExperimentReport> {
    let cubic = scalar(0.0, 1.0, 4.0, 0.0, ForcingSpec::zero())?;
    let cfg = IntegratorConfig::with_dt(AC4_DT);
    let mut report = ExperimentReport::new("");
    let mut table = Table::new("separations", &["separation", "distance_sq_at_1", "exponent"]);
    let every = (0.01 / AC4_DT).round() as usize;
    for x0 in [1.0, 10.0, 100.0, 1000.0] {
        let params = ContractionParams {
            law_x: InitialLaw::Dirac(StateVector::nodal(vec![x0])),
            law_y: InitialLaw::Dirac(StateVector::nodal(vec![-x0])),
            t0: 0.0,
            t1: 1.0,
            m: 1,
            record_every: every,
            fit_window: (0.05, 1.0),
        };
        let out = contraction_test(&cubic, &cfg, &params, seed, workers)?;
        let at1 = *out.mean_square.last().expect("recorded final state");
        let exponent = out.fit.as_ref().map_or(f64::NAN, |f| f.exponent);
        table.push(vec![2.0 * x0, at1, exponent]);
        report.verdicts.push(Verdict::at_most(
            "AC4",
            format!("separation {}: squared distance at t = 1 ≤ 2", 2.0 * x0),
            at1,
            2.0,
        ));
        // the 2/t law is asymptotic; it governs the fit once 2x₀²t ≫ 1
        if x0 >= 100.0 {
            report.verdicts.push(Verdict::within(
                "AC4",
                format!("separation {}: log-log exponent −1 ± 0.1", 2.0 * x0),
                exponent,
                -1.1,
                -0.9,
            ));
        }
    }
    report.tables.push(table);
    report.note(format!("dt = {AC4_DT:e}; fit window t ∈ [0.05, 1]"));
    Ok(report)
}

fn ac5(seed: u64, workers: usize) -> Result<ExperimentReport> {
    let ou = scalar(1.0, 0.0, 2.0, 1.0, ForcingSpec::zero())?;
    let dt = 1e-3;
    let params = PullbackParams::from_zero(&ou, vec![1.0, 2.0, 4.0, 8.0], 4096);
    let out = pullback_bounded_solution(&ou, &IntegratorConfig::with_dt(dt), &params, seed, workers)?;
    let mut report = out.report;
    let mut table = Table::new(
        "oracle",
        &["horizon", "second_moment", "exact", "discrete", "tolerance"],
    );
    for (k, &n) in params.horizons.iter().enumerate() {
        let exact = (1.0 - (-2.0 * n).exp()) / 2.0;
        let steps = (n / dt).round();
        let q = (1.0 + dt) * (1.0 + dt);
        let discrete = dt * (1.0 - q.powf(-steps)) / (q - 1.0);
        let tol = 3.0 * (out.moment_se[k] + (discrete - exact).abs());
        table.push(vec![n, out.moments[k], exact, discrete, tol]);
        report.verdicts.push(Verdict::at_most(
            "AC5",
            format!("n = {n}: E‖X(0,−n,0)‖² within 3·(MC + dt) of (1−e^{{−2n}})/2"),
            (out.moments[k] - exact).abs(),
            tol,
        ));
    }
    report.tables.push(table);
    Ok(report)
}

fn ac6(seed: u64, workers: usize) -> Result<ExperimentReport> {
    let ou = scalar(1.0, 0.0, 2.0, 1.0, ForcingSpec::zero())?;
    let mut report = ExperimentReport::new("");
    let params = DiagnosticsParams {
        law: gaussian(1, 1, 2.0),
        t0: 0.0,
        t1: 3.0,
        p_moment: 1.0,
        m: 4096,
        record_every: 10,
    };
    let diag = apriori_diagnostics(&ou, &IntegratorConfig::with_dt(1e-3), &params, seed, workers)?;
    let moments = diag.table("moments").expect("moments table");
    let t = moments.column("time").unwrap_or_default();
    let m = moments.column("moment").unwrap_or_default();
    let se = moments.column("moment_se").unwrap_or_default();
    let slack = (0..t.len())
        .map(|j| (-2.0 * t[j]).exp() * m[0] + 0.5 + 3.0 * se[j] - m[j])
        .fold(f64::INFINITY, f64::min);
    report.verdicts.push(Verdict::flag(
        "AC6",
        "OU p = 1: envelope with κ = 2, M₁ = 1/2 holds within 3 standard errors",
        slack >= 0.0,
        slack,
    ));
    let mut ou_table = moments.clone();
    ou_table.name = "ou_moments".into();
    report.tables.push(ou_table);

    let rd = rd_periodic()?;
    let mut m1 = Vec::new();
    let mut env = Table::new("rd_envelope", &["paths", "kappa", "m1"]);
    for paths in [512usize, 1024] {
        let params = DiagnosticsParams {
            law: gaussian(31, 4, 1.0),
            t0: 0.0,
            t1: 3.0,
            p_moment: 1.0,
            m: paths,
            record_every: 10,
        };
        let diag = apriori_diagnostics(&rd, &IntegratorConfig::with_dt(1e-3), &params, seed, workers)?;
        let row = diag.table("envelope").expect("envelope table").rows[0].clone();
        env.push(vec![paths as f64, row[0], row[1]]);
        m1.push(row[1]);
    }
    let rel = (m1[0] - m1[1]).abs() / m1[1];
    report.verdicts.push(Verdict::at_most(
        "AC6",
        "reaction-diffusion: fitted M̂₁ stable within 10% from M = 512 to 1024",
        rel,
        0.1,
    ));
    report.tables.push(env);
    Ok(report)
}

fn ac7(seed: u64, workers: usize) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("");
    let lin = scalar(1.0, 0.0, 2.0, 0.0, sin_forcing())?;
    let cfg = IntegratorConfig {
        fast_resolution: 1000,
        ..IntegratorConfig::default()
    };
    let eps = vec![0.2, 0.1, 0.05];
    let params = FirstBogolyubovParams {
        eps: eps.clone(),
        law: InitialLaw::Dirac(StateVector::nodal(vec![1.0])),
        s: 0.0,
        horizon: 5.0,
        m: 1,
        resamples: 200,
        band_factor: 5.0,
        dt_base: 1e-3,
    };
    let scalar_run = first_bogolyubov(&lin, &cfg, &params, seed, workers)?;
    let rms = scalar_run.table("error").and_then(|t| t.column("rms")).unwrap_or_default();
    for k in 0..rms.len() - 1 {
        report.verdicts.push(Verdict::within(
            "AC7",
            format!("scalar: sup-error ratio ε = {} → {} is 2 ± 20%", eps[k], eps[k + 1]),
            rms[k] / rms[k + 1],
            1.6,
            2.4,
        ));
    }
    let mut t = scalar_run.table("error").cloned().expect("error table");
    t.name = "scalar_error".into();
    report.tables.push(t);

    let rd = rd_with(
        ForcingSpec::periodic(-1.0, &[(0.5, 1.0, 0.0)]),
        sin_forcing(),
    )?;
    let params = FirstBogolyubovParams {
        eps: vec![0.5, 0.1, 0.02],
        law: gaussian(31, 4, 0.5),
        s: 0.0,
        horizon: 5.0,
        m: 256,
        resamples: 200,
        band_factor: 5.0,
        dt_base: 0.01,
    };
    let pde = first_bogolyubov(&rd, &IntegratorConfig::default(), &params, seed, workers)?;
    report.verdicts.extend(pde.verdicts.iter().map(|v| Verdict {
        check: format!("reaction-diffusion: {}", v.check),
        ..v.clone()
    }));
    let mut t = pde.table("error").cloned().expect("error table");
    t.name = "pde_error".into();
    report.tables.push(t);
    report.notes.extend(pde.notes);
    Ok(report)
}

fn ac8(seed: u64, workers: usize) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("");
    let eps = vec![0.5, 0.1, 0.02];
    let lin = scalar(1.0, 0.0, 2.0, 0.0, sin_forcing())?;
    let cfg = IntegratorConfig {
        fast_resolution: 1000,
        ..IntegratorConfig::default()
    };
    let params = SecondBogolyubovParams {
        eps: eps.clone(),
        horizon: 15.0,
        checkpoints: vec![0.0, 0.5],
        window_offsets: 5,
        m: 1,
        resamples: 200,
        band_factor: 3.0,
        dt_base: 1e-3,
    };
    let sc = second_bogolyubov(&lin, &cfg, &params, seed, workers)?;
    let d0 = sc
        .table("convergence")
        .and_then(|t| t.column("d_bl_at_zero"))
        .unwrap_or_default();
    let mut oracle = Table::new("scalar_oracle", &["eps", "d_bl", "closed_form"]);
    for (e, v) in eps.iter().zip(&d0) {
        let d = e / (1.0 + e * e);
        oracle.push(vec![*e, *v, dirac_bl(d)]);
        report.verdicts.push(Verdict::at_most(
            "AC8",
            format!("scalar ε = {e}: d_BL matches 2d/(2+d), d = ε/(1+ε²)"),
            (v - dirac_bl(d)).abs(),
            1e-3,
        ));
    }
    report.tables.push(oracle);

    let rd = rd_periodic()?;
    let params = SecondBogolyubovParams {
        eps,
        horizon: 3.0,
        checkpoints: vec![0.0, 0.5],
        window_offsets: 5,
        m: 256,
        resamples: 200,
        band_factor: 3.0,
        dt_base: 0.01,
    };
    let pde = second_bogolyubov(&rd, &IntegratorConfig::default(), &params, seed, workers)?;
    report.verdicts.extend(pde.verdicts.iter().map(|v| Verdict {
        check: format!("reaction-diffusion: {}", v.check),
        ..v.clone()
    }));
    for t in pde.tables {
        report.tables.push(Table {
            name: format!("pde_{}", t.name),
            ..t
        });
    }
    report.notes.extend(pde.notes);
    report.note("periodicity band: mean permutation-null distance of the pooled samples");
    Ok(report)
}

fn ac9(seed: u64, workers: usize) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("");
    let grid_n = 31;
    let rd = rd_periodic()?;
    let e1 = StateVector::nodal(rd.grid().eigenvector(0).iter().map(|v| 4.5 * v).collect());
    let params = AttractorParams {
        eps: vec![0.5, 0.1, 0.02],
        radius: 5.0,
        probes: vec![
            InitialLaw::Dirac(StateVector::zeros(grid_n)),
            InitialLaw::Dirac(e1),
            gaussian(grid_n, 5, 2.0),
        ],
        transient: 3.0,
        phases: 8,
        horizon: 3.0,
        m: 256,
        resamples: 200,
        band_factor: 3.0,
        dt_base: 0.01,
    };
    let control = rd_with(ForcingSpec::constant(-1.0), ForcingSpec::constant(1.0))?;
    for (label, model) in [("control", &control), ("periodic", &rd)] {
        let r = attractor_distance(model, &IntegratorConfig::default(), &params, seed, workers)?;
        report.verdicts.extend(r.verdicts.iter().map(|v| Verdict {
            check: format!("{label}: {}", v.check),
            ..v.clone()
        }));
        for t in r.tables {
            report.tables.push(Table {
                name: format!("{label}_{}", t.name),
                ..t
            });
        }
    }
    let semi = report
        .table("periodic_semi_distance")
        .and_then(|t| t.column("semi_distance"))
        .unwrap_or_default();
    if let Ok(f) = fit_power(&params.eps, &semi) {
        report.note(format!("observed semi-distance slope in ε: {:.3} (descriptive)", f.exponent));
    }
    Ok(report)
}
