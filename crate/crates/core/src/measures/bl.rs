//! Exact bounded-Lipschitz distance between finitely supported measures.
//!
//! For a fixed split s ∈ [0, 1] between the Lipschitz and sup budgets, the
//! dual program `max Σφ(μ−ν)` over `Lip φ ≤ s`, `|φ| ≤ 1−s` is the optimal
//! transport cost for the truncated metric `c_s = min(s·d, 2(1−s))`. That cost
//! is concave in s, so the outer maximization is a one-dimensional concave
//! search driven by supergradients of the optimal plans.

use super::transport::{solve_transport, solve_uniform_assignment, TransportSolution};
use super::{EmpiricalMeasure, FeatureTag};
use crate::error::{Error, Result};
use crate::integrator::par_map;
use crate::rng::CounterRng;
use serde::Serialize;

pub const DEFAULT_SUPPORT_CAP: usize = 4096;
const MAX_SEARCH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    LpExact,
    /// Exact on a leading-mode projection, hence a lower bound in full H.
    ProjectedLowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub value: f64,
    pub method: DistanceMethod,
    /// Lipschitz share of the unit BL budget at the optimum.
    pub s: f64,
    /// Optimal test-function values on the pooled support: μ atoms, then ν atoms.
    pub certificate: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    /// Largest violation of `|φ_i − φ_j| ≤ s‖x_i − x_j‖` or `|φ_i| ≤ 1 − s`.
    pub max_violation: f64,
    /// `Σ φ (μ − ν)` evaluated from the certificate.
    pub objective: f64,
}

/// Closed form for two Dirac masses at distance d.
pub fn dirac_bl(d: f64) -> f64 {
    2.0 * d / (2.0 + d)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise distances among `points` (rows of the pooled support).
struct Pooled {
    n: usize,
    d: Vec<f64>,
}

impl Pooled {
    fn new(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Self {
        let n = mu.len() + nu.len();
        let mut d = vec![0.0; n * n];
        match (mu.features(), nu.features()) {
            (Some(fa), Some(fb)) => {
                let pts: Vec<&Vec<f64>> = fa.iter().chain(fb.iter()).collect();
                for i in 0..n {
                    for j in i + 1..n {
                        let v = euclid(pts[i], pts[j]);
                        d[i * n + j] = v;
                        d[j * n + i] = v;
                    }
                }
            }
            _ => {
                let pts: Vec<&[f64]> = mu
                    .support()
                    .iter()
                    .chain(nu.support())
                    .map(|s| s.values.as_slice())
                    .collect();
                for i in 0..n {
                    for j in i + 1..n {
                        let v = mu.point_distance(pts[i], pts[j]);
                        d[i * n + j] = v;
                        d[j * n + i] = v;
                    }
                }
            }
        }
        Self { n, d }
    }

    fn cross(&self, rows: &[usize], cols: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            let r = &self.d[i * self.n..(i + 1) * self.n];
            out.extend(cols.iter().map(|&j| r[j]));
        }
        out
    }
}

struct CoreSolution {
    value: f64,
    s: f64,
    b: Vec<f64>,
}

/// `h_γ(s) = Σ γ_ij min(s d_ij, 2 − 2s)` with its one-sided derivatives.
fn plan_curve(plan: &[(usize, usize, f64)], d: &[f64], nb: usize, s: f64) -> (f64, f64, f64) {
    let (mut value, mut left, mut right) = (0.0, 0.0, 0.0);
    for &(i, j, w) in plan {
        let dij = d[i * nb + j];
        if dij == 0.0 {
            continue;
        }
        let kink = 2.0 / (2.0 + dij);
        value += w * (s * dij).min(2.0 - 2.0 * s);
        if s < kink {
            left += w * dij;
            right += w * dij;
        } else if s > kink {
            left -= 2.0 * w;
            right -= 2.0 * w;
        } else {
            left += w * dij;
            right -= 2.0 * w;
        }
    }
    (value, left, right)
}

/// Maximizer and maximum on [lo, hi] of `min_k h_k`, a concave function, by
/// golden-section search.
fn envelope_argmax(
    plans: &[&[(usize, usize, f64)]],
    d: &[f64],
    nb: usize,
    lo: f64,
    hi: f64,
) -> (f64, f64) {
    let g = |s: f64| {
        plans
            .iter()
            .map(|p| plan_curve(p, d, nb, s).0)
            .fold(f64::INFINITY, f64::min)
    };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..120 {
        if b - a <= 1e-16 {
            break;
        }
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = g(x1);
        }
    }
    let mut best = (x1, g1);
    for x in [x2, lo, hi] {
        let v = g(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

fn solve_at(
    s: f64,
    mu_w: &[f64],
    nu_w: &[f64],
    d: &[f64],
    uniform: bool,
    warm: Option<&[f64]>,
) -> TransportSolution {
    let cost: Vec<f64> = d.iter().map(|&x| (s * x).min(2.0 - 2.0 * s)).collect();
    if uniform {
        solve_uniform_assignment(mu_w.len(), &cost, warm)
    } else {
        solve_transport(mu_w, nu_w, &cost)
    }
}

/// Maximize the concave `s ↦ W_{c_s}(μ, ν)`; `d` is the `|μ| × |ν|` distance matrix.
fn bl_core(mu_w: &[f64], nu_w: &[f64], d: &[f64]) -> CoreSolution {
    let nb = nu_w.len();
    let uniform = mu_w.len() == nb
        && mu_w.iter().chain(nu_w).all(|&w| (w - 1.0 / nb as f64).abs() <= 1e-15);
    let (dmin, dmax) = d
        .iter()
        .filter(|&&x| x > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    if dmax == 0.0 {
        return CoreSolution {
            value: 0.0,
            s: 0.5,
            b: vec![0.0; nb],
        };
    }
    let (mut lo, mut hi) = (2.0 / (2.0 + dmax), 2.0 / (2.0 + dmin));
    let mean_d: f64 = d.iter().sum::<f64>() / d.len() as f64;
    let mut s = (2.0 / (2.0 + mean_d)).clamp(lo, hi);
    let mut best = CoreSolution {
        value: f64::NEG_INFINITY,
        s,
        b: vec![0.0; nb],
    };
    let mut plans: Vec<Vec<(usize, usize, f64)>> = Vec::new();
    let mut previous: Option<(f64, Vec<f64>)> = None;
    let mut last = f64::NAN;
    for _ in 0..MAX_SEARCH {
        // potentials of the last solve, rescaled: costs below their kink scale with s
        let warm: Option<Vec<f64>> = previous
            .as_ref()
            .map(|(s0, b): &(f64, Vec<f64>)| b.iter().map(|x| x * s / s0).collect());
        let sol = solve_at(s, mu_w, nu_w, d, uniform, warm.as_deref());
        previous = Some((s, sol.b.clone()));
        if sol.cost > best.value {
            best = CoreSolution {
                value: sol.cost,
                s,
                b: sol.b.clone(),
            };
        }
        let (_, left, right) = plan_curve(&sol.plan, d, nb, s);
        if left >= 0.0 && right <= 0.0 {
            break;
        }
        if right > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        plans.push(sol.plan);
        if hi - lo <= 1e-15 {
            break;
        }
        // every optimal plan's curve lies above f, so the lower envelope of
        // all plans seen so far bounds the maximum and proposes the next split
        let refs: Vec<&[(usize, usize, f64)]> = plans.iter().map(Vec::as_slice).collect();
        let (cand, upper) = envelope_argmax(&refs, d, nb, lo, hi);
        if upper - best.value <= 1e-13 * (1.0 + best.value) {
            break;
        }
        let stalled = cand <= lo || cand >= hi || cand == last;
        last = s;
        s = if stalled { 0.5 * (lo + hi) } else { cand };
    }
    best
}

fn check_cap(size: usize, cap: usize, seed_hint: u64) -> Result<()> {
    if size > cap {
        return Err(Error::SupportCap {
            size,
            cap,
            seed_hint,
        });
    }
    Ok(())
}

/// Exact d_BL with the default support cap.
pub fn bl_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<DistanceReport> {
    bl_distance_capped(mu, nu, DEFAULT_SUPPORT_CAP, 0)
}

/// Exact d_BL; `seed_hint` is quoted in the error when the pooled support
/// exceeds `cap`.
pub fn bl_distance_capped(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    cap: usize,
    seed_hint: u64,
) -> Result<DistanceReport> {
    mu.same_space(nu)?;
    check_cap(mu.len() + nu.len(), cap, seed_hint)?;
    let (na, nb) = (mu.len(), nu.len());
    let pooled = Pooled::new(mu, nu);
    let rows: Vec<usize> = (0..na).collect();
    let cols: Vec<usize> = (na..na + nb).collect();
    let d = pooled.cross(&rows, &cols);
    let core = bl_core(mu.weights(), nu.weights(), &d);
    let s = core.s;
    // c-transform of the target potentials, then centred into [−(1−s), 1−s]
    let mut phi: Vec<f64> = (0..na + nb)
        .map(|z| {
            (0..nb)
                .map(|j| (s * pooled.d[z * pooled.n + na + j]).min(2.0 - 2.0 * s) - core.b[j])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let (lo, hi) = phi
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let centre = 0.5 * (lo + hi);
    phi.iter_mut().for_each(|x| *x -= centre);
    Ok(DistanceReport {
        value: core.value.clamp(0.0, 2.0),
        method: match mu.feature_tag() {
            FeatureTag::FullH => DistanceMethod::LpExact,
            FeatureTag::LeadingModes(_) => DistanceMethod::ProjectedLowerBound,
        },
        s,
        certificate: phi,
    })
}

/// Check the certificate of `report` against every BL constraint.
pub fn verify_certificate(
    report: &DistanceReport,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
) -> CertificateCheck {
    let pooled = Pooled::new(mu, nu);
    let phi = &report.certificate;
    let s = report.s;
    let mut worst: f64 = 0.0;
    for i in 0..pooled.n {
        worst = worst.max(phi[i].abs() - (1.0 - s));
        for j in i + 1..pooled.n {
            worst = worst.max((phi[i] - phi[j]).abs() - s * pooled.d[i * pooled.n + j]);
        }
    }
    let na = mu.len();
    let objective = mu.weights().iter().zip(phi).map(|(w, p)| w * p).sum::<f64>()
        - nu.weights().iter().zip(&phi[na..]).map(|(w, p)| w * p).sum::<f64>();
    CertificateCheck {
        max_violation: worst,
        objective,
    }
}

/// Summary of a resampled distance distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub mean: f64,
    pub std: f64,
    pub resamples: usize,
}

fn summarize(values: &[f64]) -> Band {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Band {
        mean,
        std: var.sqrt(),
        resamples: values.len(),
    }
}

/// Permutation null: pool both samples, split at random into groups of the
/// original sizes and record d_BL. The mean is the distance two samples of
/// one law typically show at these sizes.
pub fn permutation_band(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    resamples: usize,
    seed: u64,
    workers: usize,
) -> Result<Band> {
    mu.same_space(nu)?;
    check_cap(mu.len() + nu.len(), DEFAULT_SUPPORT_CAP, seed)?;
    if !(mu.is_uniform() && nu.is_uniform()) || resamples == 0 {
        return Err(Error::invalid(
            "permutation bands need uniformly weighted samples and at least one resample",
        ));
    }
    let pooled = Pooled::new(mu, nu);
    let (na, nb) = (mu.len(), nu.len());
    let wa = vec![1.0 / na as f64; na];
    let wb = vec![1.0 / nb as f64; nb];
    let values = par_map(workers, resamples, |r| {
        let mut rng = CounterRng::new(seed, r as u32);
        let mut idx: Vec<usize> = (0..na + nb).collect();
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.below(i + 1));
        }
        let d = pooled.cross(&idx[..na], &idx[na..]);
        Ok(bl_core(&wa, &wb, &d).value)
    })?;
    Ok(summarize(&values))
}

/// Bootstrap: resample each measure with replacement (by its weights) and
/// record d_BL; the standard deviation estimates the estimator's noise.
pub fn bootstrap_band(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    resamples: usize,
    seed: u64,
    workers: usize,
) -> Result<Band> {
    mu.same_space(nu)?;
    check_cap(mu.len() + nu.len(), DEFAULT_SUPPORT_CAP, seed)?;
    if resamples == 0 {
        return Err(Error::invalid("bootstrap bands need at least one resample"));
    }
    let pooled = Pooled::new(mu, nu);
    let (na, nb) = (mu.len(), nu.len());
    let wa = vec![1.0 / na as f64; na];
    let wb = vec![1.0 / nb as f64; nb];
    let values = par_map(workers, resamples, |r| {
        let mut rng = CounterRng::new(seed, 0x8000_0000 | r as u32);
        let rows: Vec<usize> = (0..na).map(|_| mu.index_at_cumulative(rng.uniform())).collect();
        let cols: Vec<usize> = (0..nb)
            .map(|_| na + nu.index_at_cumulative(rng.uniform()))
            .collect();
        let d = pooled.cross(&rows, &cols);
        Ok(bl_core(&wa, &wb, &d).value)
    })?;
    Ok(summarize(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::scalar_grid;
    use crate::spatial::{SpaceTag, StateVector};

    fn points(xs: &[f64]) -> Vec<StateVector> {
        xs.iter().map(|&x| StateVector::nodal(vec![x])).collect()
    }

    fn measure(xs: &[f64], ws: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::new(scalar_grid(), points(xs), ws.to_vec(), SpaceTag::L2).unwrap()
    }

    #[test]
    fn two_point_closed_form() {
        for d in [1e-6, 0.5, 1.0, 3.7, 1e6] {
            let r = bl_distance(&measure(&[0.0], &[1.0]), &measure(&[d], &[1.0])).unwrap();
            assert!((r.value - dirac_bl(d)).abs() < 1e-12, "{d}: {}", r.value);
            assert!(r.value <= 2.0);
        }
        assert!((dirac_bl(0.5) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn two_point_matches_grid_search() {
        // brute force over (s, φ): φ(x) = −φ(y) = min(s d/2, 1 − s)
        let d = 0.5;
        let best = (0..=100_000)
            .map(|k| {
                let s = k as f64 / 100_000.0;
                2.0 * (s * d / 2.0).min(1.0 - s)
            })
            .fold(0.0, f64::max);
        let r = bl_distance(&measure(&[1.0], &[1.0]), &measure(&[1.0 + d], &[1.0])).unwrap();
        assert!((r.value - best).abs() < 1e-5);
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let mu = measure(&[0.0, 1.0, 2.5], &[0.2, 0.3, 0.5]);
        assert_eq!(bl_distance(&mu, &mu).unwrap().value, 0.0);
    }

    #[test]
    fn weighted_certificate_is_feasible_and_tight() {
        let mu = measure(&[0.0, 1.0, 4.0, 0.3], &[0.1, 0.2, 0.3, 0.4]);
        let nu = measure(&[0.5, 3.0, -1.0], &[0.5, 0.25, 0.25]);
        let r = bl_distance(&mu, &nu).unwrap();
        let c = verify_certificate(&r, &mu, &nu);
        assert!(c.max_violation <= 1e-9, "{c:?}");
        assert!((c.objective - r.value).abs() <= 1e-9, "{c:?} {}", r.value);
    }

    #[test]
    fn uniform_path_agrees_with_general_path() {
        let mut rng = CounterRng::new(8, 0);
        let xs: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
        let ys: Vec<f64> = (0..12).map(|_| 0.4 + rng.normal()).collect();
        let w = vec![1.0 / 12.0; 12];
        let mu = measure(&xs, &w);
        let nu = measure(&ys, &w);
        let pooled = Pooled::new(&mu, &nu);
        let d = pooled.cross(&(0..12).collect::<Vec<_>>(), &(12..24).collect::<Vec<_>>());
        let fast = bl_core(&w, &w, &d).value;
        // perturb weights below the uniformity threshold is not possible, so
        // force the general solver through a 13-atom split of the same law
        let general = {
            let mut w2 = w.clone();
            w2[0] *= 0.5;
            let mut xs2 = xs.clone();
            xs2.push(xs[0]);
            w2.push(w[0] * 0.5);
            bl_core(&w2, &w, &Pooled::new(&measure(&xs2, &w2), &nu).cross(
                &(0..13).collect::<Vec<_>>(),
                &(13..25).collect::<Vec<_>>(),
            ))
            .value
        };
        assert!((fast - general).abs() < 1e-12, "{fast} {general}");
    }

    #[test]
    fn support_cap_is_enforced() {
        let w = vec![0.25; 4];
        let mu = measure(&[0.0, 1.0, 2.0, 3.0], &w);
        let err = bl_distance_capped(&mu, &mu, 7, 99).unwrap_err();
        assert!(err.to_string().contains("subsample"));
        assert!(err.to_string().contains("99"));
    }

    #[test]
    fn bands_are_deterministic() {
        let mut rng = CounterRng::new(2, 0);
        let w = vec![1.0 / 20.0; 20];
        let mu = measure(&(0..20).map(|_| rng.normal()).collect::<Vec<_>>(), &w);
        let nu = measure(&(0..20).map(|_| rng.normal()).collect::<Vec<_>>(), &w);
        let a = permutation_band(&mu, &nu, 30, 5, 1).unwrap();
        let b = permutation_band(&mu, &nu, 30, 5, 3).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_band(&mu, &nu, 30, 5, 1).unwrap();
        assert!(c.std > 0.0 && a.mean > 0.0);
    }
}
