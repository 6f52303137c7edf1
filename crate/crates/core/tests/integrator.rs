use bogolab::coefficients::{build_model, scalar_grid, DriftKind, ForcingSpec, ModelSpec};
use bogolab::integrator::{
    implicit_step, simulate_ensemble, simulate_ensemble_with, simulate_path, wiener_increments,
    IntegratorConfig, InitialLaw, RecordPolicy,
};
use bogolab::measures::mean_square_distance;
use bogolab::spatial::{build_grid, StateVector};
use proptest::prelude::*;
use std::sync::Arc;

fn ou(sigma: f64) -> ModelSpec {
    build_model(
        DriftKind::Scalar {
            linear: 1.0,
            a: 0.0,
            p: 2.0,
            sigma,
            kappa: 0.0,
        },
        scalar_grid(),
        ForcingSpec::zero(),
        ForcingSpec::zero(),
        1.0,
    )
    .unwrap()
}

fn reaction_diffusion(n: usize, phi: ForcingSpec, g: ForcingSpec, eps: f64) -> ModelSpec {
    build_model(
        DriftKind::ReactionDiffusion {
            p: 4.0,
            a: 1.0,
            kappa: 0.3,
        },
        Arc::new(build_grid(n, 1.0).unwrap()),
        phi,
        g,
        eps,
    )
    .unwrap()
}

fn porous_media(n: usize) -> ModelSpec {
    build_model(
        DriftKind::PorousMedia {
            p: 3.0,
            a: 0.5,
            noise_rank: 3,
            noise_decay: 0.5,
        },
        Arc::new(build_grid(n, 1.0).unwrap()),
        ForcingSpec::periodic(-1.0, &[(0.5, 1.0, 0.0)]),
        ForcingSpec::zero(),
        1.0,
    )
    .unwrap()
}

#[test]
fn increments_vanish_at_zero_step() {
    assert!(wiener_increments(9, 123, 0.0, 5).iter().all(|&x| x == 0.0));
    assert_eq!(wiener_increments(9, -4, 0.1, 3), wiener_increments(9, -4, 0.1, 3));
}

#[test]
fn ou_ensemble_variance_follows_the_implicit_recursion() {
    let model = ou(1.0);
    let dt = 1e-3;
    let cfg = IntegratorConfig::with_dt(dt);
    let m = 4096;
    let law = InitialLaw::Dirac(StateVector::zeros(1));
    let ens = simulate_ensemble_with(&model, &cfg, &law, 0.0, 1.0, m, 17, RecordPolicy::Final, 1)
        .unwrap();
    let sq: Vec<f64> = ens.final_states().iter().map(|s| s.values[0].powi(2)).collect();
    let mean = sq.iter().sum::<f64>() / m as f64;
    // X⁺ = (X + dW)/(1 + dt) ⇒ V⁺ = (V + dt)/(1 + dt)²
    let mut v = 0.0;
    for _ in 0..1000 {
        v = (v + dt) / (1.0 + dt).powi(2);
    }
    let se = (2.0f64).sqrt() * v / (m as f64).sqrt();
    assert!((mean - v).abs() <= 4.0 * se, "{mean} vs {v} ± {se}");
    let continuous = (1.0 - (-2.0f64).exp()) / 2.0;
    assert!((v - continuous).abs() <= dt, "{v} vs {continuous}");
}

#[test]
fn ensembles_do_not_depend_on_the_worker_count() {
    let model = reaction_diffusion(
        15,
        ForcingSpec::periodic(-1.0, &[(0.5, 1.0, 0.0)]),
        ForcingSpec::periodic(0.0, &[(1.0, 1.0, 0.0)]),
        0.5,
    );
    let cfg = IntegratorConfig::with_dt(2e-3);
    let law = InitialLaw::Gaussian {
        mean: StateVector::zeros(15),
        mode_std: vec![1.0; 4],
    };
    let run = |w| {
        simulate_ensemble_with(&model, &cfg, &law, -0.5, 0.5, 24, 5, RecordPolicy::Every(50), w)
            .unwrap()
    };
    assert_eq!(run(1), run(8));
}

#[test]
fn fast_time_is_a_rescaling_of_the_forcing_frequency() {
    let eps = 0.25;
    let slow = reaction_diffusion(
        9,
        ForcingSpec::periodic(-1.0, &[(0.5, 1.0, 0.3)]),
        ForcingSpec::periodic(0.0, &[(1.0, 2.0, 0.0)]),
        eps,
    );
    let fast = reaction_diffusion(
        9,
        ForcingSpec::periodic(-1.0, &[(0.5, 1.0 / eps, 0.3)]),
        ForcingSpec::periodic(0.0, &[(1.0, 2.0 / eps, 0.0)]),
        1.0,
    );
    let cfg = IntegratorConfig::with_dt(1e-3);
    let x0 = StateVector::nodal(slow.grid().eigenvector(0).to_vec());
    let a = simulate_path(&slow, &cfg, &x0, 0.0, 0.5, 3).unwrap();
    let b = simulate_path(&fast, &cfg, &x0, 0.0, 0.5, 3).unwrap();
    for (u, v) in a.states.iter().zip(&b.states) {
        for (x, y) in u.values.iter().zip(&v.values) {
            assert!((x - y).abs() <= 1e-11, "{x} vs {y}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn implicit_step_is_non_expansive_in_h(
        u in prop::collection::vec(-3.0..3.0f64, 9),
        v in prop::collection::vec(-3.0..3.0f64, 9),
        t in -5.0..5.0f64,
        dt in 1e-4..0.1f64,
    ) {
        let cfg = IntegratorConfig::with_dt(dt);
        let zero = ForcingSpec::zero();
        let rd = reaction_diffusion(9, ForcingSpec::constant(-0.5), zero, 1.0);
        let pm = porous_media(9);
        for model in [&rd, &pm] {
            let dw = vec![0.0; model.noise_rank()];
            let su = implicit_step(model, &cfg, &StateVector::nodal(u.clone()), t, &dw).unwrap();
            let sv = implicit_step(model, &cfg, &StateVector::nodal(v.clone()), t, &dw).unwrap();
            let before: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            let after: Vec<f64> = su.values.iter().zip(&sv.values).map(|(a, b)| a - b).collect();
            let (n0, n1) = (model.h_norm_nodal(&before), model.h_norm_nodal(&after));
            prop_assert!(n1 <= n0 * (1.0 + 1e-9) + 1e-9, "{n1} > {n0}");
        }
    }
}

#[test]
fn coupled_ou_pair_contracts_like_the_discrete_resolvent() {
    let model = ou(1.0);
    let dt = 1e-3;
    let cfg = IntegratorConfig::with_dt(dt);
    let start = |x: f64| InitialLaw::Dirac(StateVector::nodal(vec![x]));
    let a = simulate_ensemble(&model, &cfg, &start(0.0), 0.0, 1.0, 8, 21).unwrap();
    let b = simulate_ensemble(&model, &cfg, &start(1.0), 0.0, 1.0, 8, 21).unwrap();
    let h = |d: &[f64]| model.h_norm_nodal(d);
    for t in [0.25, 0.5, 1.0] {
        let msd = mean_square_distance(&a, &b, t, h).unwrap();
        let steps = (t / dt).round() as i32;
        let discrete = (1.0 + dt).powi(-2 * steps);
        assert!((msd - discrete).abs() <= 1e-12, "{msd} vs {discrete}");
        assert!((msd - (-2.0 * t).exp()).abs() <= 2.0 * t * dt);
    }
    assert_eq!(mean_square_distance(&a, &a, 1.0, h).unwrap(), 0.0);
    let c = simulate_ensemble(&model, &cfg, &start(1.0), 0.0, 1.0, 8, 22).unwrap();
    assert!(mean_square_distance(&a, &c, 1.0, h).is_err());
}
