use bogolab::coefficients::{build_model, scalar_grid, DriftKind, ForcingSpec, ModelSpec};
use bogolab::experiments::{
    apriori_diagnostics, contraction_test, evolve_measure, first_bogolyubov,
    pullback_bounded_solution, second_bogolyubov, ContractionParams, DiagnosticsParams,
    FirstBogolyubovParams, PullbackParams, SecondBogolyubovParams,
};
use bogolab::integrator::{simulate_path, IntegratorConfig, InitialLaw};
use bogolab::rng::derive_seed;
use bogolab::spatial::{build_grid, StateVector};
use std::sync::Arc;

fn rd(kappa: f64, phi: ForcingSpec, g: ForcingSpec) -> ModelSpec {
    build_model(
        DriftKind::ReactionDiffusion { p: 4.0, a: 1.0, kappa },
        Arc::new(build_grid(15, 1.0).unwrap()),
        phi,
        g,
        1.0,
    )
    .unwrap()
}

fn gaussian(n: usize, std: f64) -> InitialLaw {
    InitialLaw::Gaussian {
        mean: StateVector::zeros(n),
        mode_std: vec![std; 4],
    }
}

#[test]
fn cocycle_flow_property_is_bit_exact() {
    let model = rd(
        0.2,
        ForcingSpec::periodic(-1.0, &[(0.5, 1.0, 0.0)]),
        ForcingSpec::periodic(0.0, &[(1.0, 1.0, 0.0)]),
    )
    .with_eps(0.5)
    .unwrap();
    let cfg = IntegratorConfig::with_dt(1e-3);
    let atoms: Vec<Vec<f64>> = (0..6)
        .map(|i| gaussian(15, 1.0).sample(model.grid(), derive_seed(1, i)).unwrap())
        .collect();
    let direct = evolve_measure(&model, &cfg, &atoms, -0.3, 0.4, 9, 1).unwrap();
    let half = evolve_measure(&model, &cfg, &atoms, -0.3, 0.1, 9, 1).unwrap();
    let composed = evolve_measure(&model, &cfg, &half, 0.1, 0.4, 9, 4).unwrap();
    assert_eq!(direct, composed);
}

#[test]
fn zero_is_a_pullback_fixed_point_without_noise_or_forcing() {
    let model = rd(0.0, ForcingSpec::constant(-1.0), ForcingSpec::zero());
    let cfg = IntegratorConfig::with_dt(1e-2);
    let params = PullbackParams::from_zero(&model, vec![1.0, 2.0, 4.0], 4);
    let out = pullback_bounded_solution(&model, &cfg, &params, 3, 1).unwrap();
    assert!(out.moments.iter().all(|&m| m == 0.0));
    assert!(out.increments.iter().all(|&d| d == 0.0));
    assert!(out.states.iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn porous_media_pullback_respects_the_polynomial_bound_from_any_start() {
    let model = build_model(
        DriftKind::PorousMedia {
            p: 4.0,
            a: 0.0,
            noise_rank: 1,
            noise_decay: 0.0,
        },
        Arc::new(build_grid(15, 1.0).unwrap()),
        ForcingSpec::zero(),
        ForcingSpec::zero(),
        1.0,
    )
    .unwrap();
    let ledger = *model.ledger();
    let cfg = IntegratorConfig::with_dt(1e-3);
    let e1 = model.grid().eigenvector(0);
    for amp in [0.1, 10.0, 1000.0] {
        let params = PullbackParams {
            horizons: vec![1.0, 2.0, 4.0],
            t_obs: 0.0,
            m: 1,
            law: InitialLaw::Dirac(StateVector::nodal(e1.iter().map(|v| amp * v).collect())),
        };
        let out = pullback_bounded_solution(&model, &cfg, &params, 5, 1).unwrap();
        for (n, m) in params.horizons.iter().zip(&out.moments) {
            let bound = ledger.polynomial_bound(*n);
            assert!(*m <= bound, "start {amp}, n = {n}: {m} > {bound}");
        }
        assert!(out.report.all_pass(), "{:?}", out.report.verdicts);
    }
}

#[test]
fn scalar_cubic_follows_its_closed_form() {
    let model = build_model(
        DriftKind::Scalar {
            linear: 0.0,
            a: 1.0,
            p: 4.0,
            sigma: 0.0,
            kappa: 0.0,
        },
        scalar_grid(),
        ForcingSpec::zero(),
        ForcingSpec::zero(),
        1.0,
    )
    .unwrap();
    let dt = 1e-4;
    let x0 = 3.0;
    let path = simulate_path(
        &model,
        &IntegratorConfig::with_dt(dt),
        &StateVector::nodal(vec![x0]),
        0.0,
        1.0,
        0,
    )
    .unwrap();
    for (t, s) in path.times.iter().zip(&path.states).step_by(1000).skip(1) {
        let exact = x0 / (1.0 + 2.0 * x0 * x0 * t).sqrt();
        let x = s.values[0];
        // the implicit scheme is first order and decays slightly slower
        assert!(x >= exact && x - exact <= 5.0 * x0.powi(3) * dt, "t = {t}: {x} vs {exact}");
        assert!(x * x <= model.ledger().polynomial_bound(*t));
    }
}

#[test]
fn identical_initial_laws_stay_at_distance_zero() {
    let model = rd(
        0.3,
        ForcingSpec::periodic(-1.0, &[(0.5, 1.0, 0.0)]),
        ForcingSpec::constant(1.0),
    );
    let params = ContractionParams {
        law_x: gaussian(15, 1.0),
        law_y: gaussian(15, 1.0),
        t0: 0.0,
        t1: 0.5,
        m: 8,
        record_every: 50,
        fit_window: (0.0, 0.5),
    };
    let out = contraction_test(&model, &IntegratorConfig::with_dt(1e-3), &params, 2, 1).unwrap();
    assert!(out.mean_square.iter().all(|&d| d == 0.0));
    assert!(out.fit.is_none());
}

#[test]
fn noiseless_zero_data_has_zero_moments() {
    let model = rd(0.0, ForcingSpec::constant(-1.0), ForcingSpec::zero());
    let params = DiagnosticsParams {
        law: InitialLaw::Dirac(StateVector::zeros(15)),
        t0: 0.0,
        t1: 1.0,
        p_moment: 2.0,
        m: 4,
        record_every: 100,
    };
    let report = apriori_diagnostics(&model, &IntegratorConfig::with_dt(1e-2), &params, 1, 1).unwrap();
    let t = report.table("moments").unwrap();
    for col in ["moment", "sup_energy", "energy_integral", "s_norm_second_moment"] {
        assert!(t.column(col).unwrap().iter().all(|&v| v == 0.0), "{col}");
    }
}

fn autonomous() -> ModelSpec {
    rd(0.2, ForcingSpec::constant(-1.0), ForcingSpec::constant(0.5))
}

#[test]
fn autonomous_first_bogolyubov_error_vanishes() {
    let model = autonomous();
    let params = FirstBogolyubovParams {
        eps: vec![0.5, 0.25],
        law: gaussian(15, 1.0),
        s: 0.0,
        horizon: 0.5,
        m: 8,
        resamples: 20,
        band_factor: 3.0,
        dt_base: 1e-3,
    };
    let report =
        first_bogolyubov(&model, &IntegratorConfig::default(), &params, 4, 1).unwrap();
    let errors = report.table("error").unwrap().column("mean_sup_sq_error").unwrap();
    assert!(errors.iter().all(|&e| e == 0.0), "{errors:?}");
    assert!(report.all_pass(), "{:?}", report.verdicts);
}

#[test]
fn autonomous_second_bogolyubov_distance_vanishes() {
    let model = autonomous();
    let params = SecondBogolyubovParams {
        eps: vec![0.5, 0.25],
        horizon: 1.0,
        checkpoints: vec![0.0, 0.5],
        window_offsets: 2,
        m: 16,
        resamples: 20,
        band_factor: 3.0,
        dt_base: 1e-2,
    };
    let report =
        second_bogolyubov(&model, &IntegratorConfig::default(), &params, 4, 1).unwrap();
    let d0 = report.table("convergence").unwrap().column("d_bl_at_zero").unwrap();
    assert!(d0.iter().all(|&d| d == 0.0), "{d0:?}");
}

#[test]
fn reports_are_reproducible_and_worker_independent() {
    let model = rd(
        0.3,
        ForcingSpec::periodic(-1.0, &[(0.5, 1.0, 0.0)]),
        ForcingSpec::periodic(0.0, &[(1.0, 1.0, 0.0)]),
    );
    let params = PullbackParams {
        horizons: vec![0.5, 1.0],
        t_obs: 0.0,
        m: 16,
        law: gaussian(15, 1.0),
    };
    let cfg = IntegratorConfig::with_dt(1e-3);
    let run = |w| {
        pullback_bounded_solution(&model, &cfg, &params, 8, w)
            .unwrap()
            .report
            .to_json()
            .unwrap()
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(8));
}
