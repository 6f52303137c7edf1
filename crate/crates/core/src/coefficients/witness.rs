//! Numerical falsification attempts for the strong monotonicity inequality
//! `⟨A(u)−A(v), u−v⟩_H ≤ −λ‖u−v‖²_H − λ′‖u−v‖^r_H`.

use super::model::ModelSpec;
use crate::rng::CounterRng;
use serde::Serialize;

/// Relative margin a correct ledger must respect.
pub const WITNESS_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairMargin {
    /// `⟨A(u)−A(v), u−v⟩_H + λ‖w‖² + λ′‖w‖^r`; ≤ 0 when the inequality holds.
    pub margin: f64,
    /// `|pairing| + λ‖w‖² + λ′‖w‖^r`, the magnitude the margin is judged against.
    pub scale: f64,
}

impl PairMargin {
    pub fn ratio(&self) -> f64 {
        if self.scale > 0.0 {
            self.margin / self.scale
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub n_pairs: usize,
    pub max_margin: f64,
    /// Largest `margin / scale` seen.
    pub max_ratio: f64,
    pub pass: bool,
}

pub fn pair_margin(model: &ModelSpec, u: &[f64], v: &[f64]) -> PairMargin {
    let n = u.len();
    let (mut au, mut av) = (vec![0.0; n], vec![0.0; n]);
    model.a_part_into(u, &mut au);
    model.a_part_into(v, &mut av);
    let w: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let dw: Vec<f64> = au.iter().zip(&av).map(|(a, b)| a - b).collect();
    let pairing = model.h_inner_nodal(&dw, &w);
    let norm = model.h_norm_nodal(&w);
    let l = model.ledger();
    let bound = l.lambda * norm * norm
        + if l.lambda_prime > 0.0 {
            l.lambda_prime * norm.powf(l.r)
        } else {
            0.0
        };
    PairMargin {
        margin: pairing + bound,
        scale: pairing.abs() + bound,
    }
}

fn random_state(rng: &mut CounterRng, n: usize, amp: f64, smooth: bool) -> Vec<f64> {
    if smooth {
        // low-mode sine series, values O(amp)
        let mut u = vec![0.0; n];
        for k in 1..=n.min(8) {
            let c = rng.normal() * amp / k as f64;
            for (i, ui) in u.iter_mut().enumerate() {
                let x = (i + 1) as f64 / (n + 1) as f64;
                *ui += c * (k as f64 * std::f64::consts::PI * x).sin();
            }
        }
        u
    } else {
        (0..n).map(|_| amp * rng.normal()).collect()
    }
}

/// Sample `n_pairs` pairs (random, near-collinear, large-amplitude and smooth
/// states, in rotation) and report the worst monotonicity margin.
pub fn monotonicity_witness(model: &ModelSpec, n_pairs: usize, seed: u64) -> WitnessReport {
    let n = model.grid().n_interior();
    let mut rng = CounterRng::new(seed, 0x5717);
    let mut max_margin = f64::NEG_INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    for i in 0..n_pairs {
        let amp = (rng.uniform() * 6.0 - 3.0).exp();
        let (u, v) = match i % 4 {
            0 => (
                random_state(&mut rng, n, amp, false),
                random_state(&mut rng, n, amp, false),
            ),
            1 => {
                let u = random_state(&mut rng, n, amp, false);
                let delta = 0.2 * rng.uniform() - 0.1;
                let v = u
                    .iter()
                    .map(|x| (1.0 + delta) * x + 1e-3 * amp * rng.normal())
                    .collect();
                (u, v)
            }
            2 => (
                random_state(&mut rng, n, 100.0 * amp, false),
                random_state(&mut rng, n, 100.0 * amp, false),
            ),
            _ => (
                random_state(&mut rng, n, amp, true),
                random_state(&mut rng, n, amp, true),
            ),
        };
        let m = pair_margin(model, &u, &v);
        max_margin = max_margin.max(m.margin);
        max_ratio = max_ratio.max(m.ratio());
    }
    WitnessReport {
        n_pairs,
        max_margin,
        max_ratio,
        pass: max_ratio <= WITNESS_REL_TOL,
    }
}

/// `2λ − 2λ_F − L_G²`; the polynomial branch constant λ′ is on the ledger.
pub fn dissipativity_margin(model: &ModelSpec) -> f64 {
    model.ledger().stability_margin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{build_model, scalar_grid, DriftKind, ForcingSpec};
    use crate::spatial::build_grid;
    use std::sync::Arc;

    #[test]
    fn cubic_pair_is_sharp() {
        let m = build_model(
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
        let pm = pair_margin(&m, &[1.0], &[-1.0]);
        assert!(pm.margin.abs() < 1e-12);
        assert!((pm.scale - 8.0).abs() < 1e-12);
    }

    #[test]
    fn heat_margin_nonpositive_and_sharp_on_e1() {
        let grid = Arc::new(build_grid(15, 1.0).unwrap());
        let m = build_model(
            DriftKind::ReactionDiffusion {
                p: 2.0,
                a: 0.0,
                kappa: 0.0,
            },
            grid.clone(),
            ForcingSpec::zero(),
            ForcingSpec::zero(),
            1.0,
        )
        .unwrap();
        let r = monotonicity_witness(&m, 400, 3);
        assert!(r.pass, "{r:?}");
        let e1 = grid.eigenvector(0).to_vec();
        let pm = pair_margin(&m, &e1, &vec![0.0; 15]);
        assert!(pm.ratio().abs() < 1e-12);
    }

    #[test]
    fn porous_media_pairs() {
        let grid = Arc::new(build_grid(31, 1.0).unwrap());
        let m = build_model(
            DriftKind::PorousMedia {
                p: 3.0,
                a: 0.5,
                noise_rank: 16,
                noise_decay: 0.5,
            },
            grid,
            ForcingSpec::constant(-1.0),
            ForcingSpec::zero(),
            1.0,
        )
        .unwrap();
        let r = monotonicity_witness(&m, 500, 7);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn dissipativity_examples() {
        let grid = Arc::new(build_grid(3, 1.0).unwrap());
        let l1 = grid.first_eigenvalue();
        let rd = |kappa: f64| {
            build_model(
                DriftKind::ReactionDiffusion { p: 4.0, a: 1.0, kappa },
                grid.clone(),
                ForcingSpec::constant(-1.0),
                ForcingSpec::zero(),
                1.0,
            )
            .unwrap()
        };
        assert!((dissipativity_margin(&rd(0.1)) - 18.7352).abs() < 1e-4);
        let critical = (2.0 * l1).sqrt();
        assert!(dissipativity_margin(&rd(critical)).abs() < 1e-12);
        let pm = build_model(
            DriftKind::PorousMedia {
                p: 3.0,
                a: 0.5,
                noise_rank: 2,
                noise_decay: 0.5,
            },
            grid.clone(),
            ForcingSpec::constant(-1.0),
            ForcingSpec::zero(),
            1.0,
        )
        .unwrap();
        assert!((dissipativity_margin(&pm) - 1.0).abs() < 1e-15);
        assert_eq!(pm.ledger().lambda_prime, 0.5);
    }
}
