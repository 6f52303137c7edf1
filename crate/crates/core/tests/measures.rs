use approx::assert_relative_eq;
use bogolab::measures::{
    bl_distance, dirac_bl, permutation_band, verify_certificate, EmpiricalMeasure,
};
use bogolab::rng::CounterRng;
use bogolab::spatial::{build_grid, SpaceTag, SpatialGrid, StateVector};
use proptest::prelude::*;
use std::sync::Arc;

const DIM: usize = 3;

fn grid() -> Arc<SpatialGrid> {
    Arc::new(build_grid(DIM, 1.0).unwrap())
}

/// Random weighted measure with 1..=max atoms.
fn measure(max: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1..=max).prop_flat_map(|k| {
        (
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, DIM), k),
            prop::collection::vec(0.05..1.0f64, k),
        )
    })
}

fn build((support, weights): &(Vec<Vec<f64>>, Vec<f64>)) -> EmpiricalMeasure {
    let total: f64 = weights.iter().sum();
    EmpiricalMeasure::new(
        grid(),
        support.iter().map(|s| StateVector::nodal(s.clone())).collect(),
        weights.iter().map(|w| w / total).collect(),
        SpaceTag::L2,
    )
    .unwrap()
}

fn dirac(x: Vec<f64>) -> EmpiricalMeasure {
    EmpiricalMeasure::dirac(grid(), StateVector::nodal(x), SpaceTag::L2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bl_metric_axioms(a in measure(32), b in measure(32), c in measure(32)) {
        let (mu, nu, rho) = (build(&a), build(&b), build(&c));
        let d_mn = bl_distance(&mu, &nu).unwrap().value;
        let d_nm = bl_distance(&nu, &mu).unwrap().value;
        let d_nr = bl_distance(&nu, &rho).unwrap().value;
        let d_mr = bl_distance(&mu, &rho).unwrap().value;
        prop_assert!(bl_distance(&mu, &mu).unwrap().value.abs() <= 1e-12);
        prop_assert!((d_mn - d_nm).abs() <= 1e-9, "{d_mn} vs {d_nm}");
        prop_assert!(d_mr <= d_mn + d_nr + 1e-8, "{d_mr} > {d_mn} + {d_nr}");
        for d in [d_mn, d_nr, d_mr] {
            prop_assert!((0.0..=2.0).contains(&d));
        }
    }

    #[test]
    fn certificates_are_feasible_and_tight(a in measure(24), b in measure(24)) {
        let (mu, nu) = (build(&a), build(&b));
        let report = bl_distance(&mu, &nu).unwrap();
        let check = verify_certificate(&report, &mu, &nu);
        prop_assert!(check.max_violation <= 1e-9, "violation {}", check.max_violation);
        prop_assert!((check.objective - report.value).abs() <= 1e-9);
    }

    #[test]
    fn dirac_pairs_obey_both_caps(
        x in prop::collection::vec(-50.0..50.0f64, DIM),
        y in prop::collection::vec(-50.0..50.0f64, DIM),
    ) {
        let g = grid();
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let dist = g.l2_norm_nodal(&diff);
        let d = bl_distance(&dirac(x), &dirac(y)).unwrap().value;
        prop_assert!(d <= 2.0);
        prop_assert!(d <= dist + 1e-12);
        prop_assert!((d - dirac_bl(dist)).abs() <= 1e-8);
    }
}

/// Diracs at nodal points whose L² distance is exactly `d` on the 3-node grid.
fn dirac_pair(d: f64) -> (EmpiricalMeasure, EmpiricalMeasure) {
    let g = grid();
    let e1: Vec<f64> = g.eigenvector(0).iter().map(|v| v * d).collect();
    (dirac(vec![0.0; DIM]), dirac(e1))
}

#[test]
fn two_point_closed_form() {
    let (a, b) = dirac_pair(0.5);
    assert_relative_eq!(bl_distance(&a, &b).unwrap().value, 0.4, epsilon = 1e-8);
    let (a, b) = dirac_pair(1e6);
    let far = bl_distance(&a, &b).unwrap().value;
    assert!(far <= 2.0 && far > 2.0 - 1e-5, "{far}");
}

#[test]
fn independent_samples_of_one_law_sit_inside_the_null_band() {
    let g = Arc::new(build_grid(5, 1.0).unwrap());
    let mut rng = CounterRng::new(11, 0);
    let mut sample = |m: usize| -> EmpiricalMeasure {
        let support = (0..m)
            .map(|_| StateVector::nodal((0..5).map(|_| rng.normal()).collect()))
            .collect();
        EmpiricalMeasure::uniform(g.clone(), support, SpaceTag::L2).unwrap()
    };
    let (a, b) = (sample(512), sample(512));
    let d = bl_distance(&a, &b).unwrap().value;
    let null = permutation_band(&a, &b, 30, 3, 1).unwrap();
    assert!(d <= 3.0 * null.mean, "d = {d}, resampling prediction {}", null.mean);
}
