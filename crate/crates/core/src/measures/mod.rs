//! Empirical measures on H, the bounded-Lipschitz metric, mean-square
//! distances and moment diagnostics.

mod bl;
mod transport;

pub use bl::{
    bl_distance, bl_distance_capped, bootstrap_band, dirac_bl, permutation_band, verify_certificate,
    Band, CertificateCheck, DistanceMethod, DistanceReport, DEFAULT_SUPPORT_CAP,
};

use crate::error::{Error, Result};
use crate::integrator::PathEnsemble;
use crate::rng::CounterRng;
use crate::spatial::{Representation, SpaceTag, SpatialGrid, StateVector};
use std::io::{BufRead, Write};
use std::sync::Arc;

/// Which coordinates of the support points the metric sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureTag {
    FullH,
    /// Only the first k spectral modes; distances then bound d_BL from below.
    LeadingModes(usize),
}

/// Weighted support points in H.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    grid: Arc<SpatialGrid>,
    support: Vec<StateVector>,
    weights: Vec<f64>,
    space: SpaceTag,
    features: FeatureTag,
}

impl EmpiricalMeasure {
    pub fn new(
        grid: Arc<SpatialGrid>,
        support: Vec<StateVector>,
        weights: Vec<f64>,
        space: SpaceTag,
    ) -> Result<Self> {
        space.validate()?;
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::invalid(
                "a measure needs a non-empty support with one weight per point",
            ));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights must sum to 1, got {total}")));
        }
        let support = support
            .iter()
            .map(|s| grid.transform(s, Representation::Nodal))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            support,
            weights,
            space,
            features: FeatureTag::FullH,
        })
    }

    pub fn uniform(grid: Arc<SpatialGrid>, support: Vec<StateVector>, space: SpaceTag) -> Result<Self> {
        let n = support.len().max(1);
        Self::new(grid, support, vec![1.0 / n as f64; n], space)
    }

    pub fn dirac(grid: Arc<SpatialGrid>, x: StateVector, space: SpaceTag) -> Result<Self> {
        Self::new(grid, vec![x], vec![1.0], space)
    }

    /// Same measure, metrized through the first `k` spectral modes only.
    pub fn project_modes(mut self, k: usize) -> Result<Self> {
        if k == 0 || k > self.grid.n_interior() {
            return Err(Error::invalid("projection needs 1 ≤ k ≤ grid size"));
        }
        self.features = FeatureTag::LeadingModes(k);
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn support(&self) -> &[StateVector] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn space(&self) -> SpaceTag {
        self.space
    }

    pub fn feature_tag(&self) -> FeatureTag {
        self.features
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|&x| (x - w).abs() <= 1e-15)
    }

    /// Index of the atom whose cumulative weight first exceeds `u ∈ [0, 1)`.
    pub fn index_at_cumulative(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.len() - 1
    }

    pub(crate) fn same_space(&self, other: &Self) -> Result<()> {
        if self.grid.n_interior() != other.grid.n_interior()
            || self.grid.length() != other.grid.length()
            || self.space != other.space
            || self.features != other.features
        {
            return Err(Error::invalid(
                "measures live on different grids, spaces or feature projections",
            ));
        }
        Ok(())
    }

    /// Coordinates in which the Euclidean distance is the metric of `space`,
    /// or `None` for L^p spaces (p ≠ 2), which are handled pointwise.
    pub(crate) fn features(&self) -> Option<Vec<Vec<f64>>> {
        let k = match self.features {
            FeatureTag::FullH => self.grid.n_interior(),
            FeatureTag::LeadingModes(k) => k,
        };
        let lambda = self.grid.eigenvalues();
        let sqrt_h = self.grid.spacing().sqrt();
        let spectral = |v: &[f64]| self.grid.to_spectral_values(v);
        let map: Box<dyn Fn(&StateVector) -> Vec<f64>> = match (self.space, self.features) {
            (SpaceTag::L2, FeatureTag::FullH) => {
                Box::new(move |s| s.values.iter().map(|x| x * sqrt_h).collect())
            }
            (SpaceTag::L2, _) | (SpaceTag::Lp(_), FeatureTag::LeadingModes(_)) => {
                Box::new(move |s| spectral(&s.values)[..k].to_vec())
            }
            (SpaceTag::H10, _) => Box::new(move |s| {
                spectral(&s.values)[..k]
                    .iter()
                    .zip(lambda)
                    .map(|(c, l)| c * l.sqrt())
                    .collect()
            }),
            (SpaceTag::Hminus1, _) => Box::new(move |s| {
                spectral(&s.values)[..k]
                    .iter()
                    .zip(lambda)
                    .map(|(c, l)| c / l.sqrt())
                    .collect()
            }),
            (SpaceTag::Lp(_), FeatureTag::FullH) => return None,
        };
        Some(self.support.iter().map(map).collect())
    }

    /// Distance between two nodal states in this measure's metric.
    pub(crate) fn point_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let k = match self.features {
            FeatureTag::FullH => None,
            FeatureTag::LeadingModes(k) => Some(k),
        };
        match (self.space, k) {
            (SpaceTag::Lp(p), None) => self.grid.lp_norm_nodal(&diff, p),
            (SpaceTag::L2, None) => self.grid.l2_norm_nodal(&diff),
            _ => {
                let c = self.grid.to_spectral_values(&diff);
                let lambda = self.grid.eigenvalues();
                let k = k.unwrap_or(c.len());
                c[..k]
                    .iter()
                    .zip(lambda)
                    .map(|(c, l)| match self.space {
                        SpaceTag::H10 => c * c * l,
                        SpaceTag::Hminus1 => c * c / l,
                        _ => c * c,
                    })
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }
}

/// Weighted second moment `∫‖x‖²_H dμ` in the measure's own metric.
pub fn second_moment(mu: &EmpiricalMeasure) -> f64 {
    let zero = vec![0.0; mu.grid.n_interior()];
    mu.support
        .iter()
        .zip(&mu.weights)
        .map(|(s, w)| w * mu.point_distance(&s.values, &zero).powi(2))
        .sum()
}

/// Weighted second moment `∫‖x‖²_S dμ` in the tightness space S
/// (H¹₀ for reaction-diffusion, L² for porous media).
pub fn s_norm_bound(mu: &EmpiricalMeasure, s_space: SpaceTag) -> Result<f64> {
    s_space.validate()?;
    mu.support
        .iter()
        .zip(&mu.weights)
        .map(|(s, w)| Ok(w * mu.grid.norm(s, s_space)?.powi(2)))
        .sum()
}

/// Deterministic seeded reservoir selection of `k` atoms; the selected
/// weights are renormalized.
pub fn subsample(mu: &EmpiricalMeasure, k: usize, seed: u64) -> Result<EmpiricalMeasure> {
    if k == 0 {
        return Err(Error::invalid("subsample size must be positive"));
    }
    if k >= mu.len() {
        return Ok(mu.clone());
    }
    let mut rng = CounterRng::new(seed, 0x5ab5);
    let mut reservoir: Vec<usize> = (0..k).collect();
    for i in k..mu.len() {
        let j = rng.below(i + 1);
        if j < k {
            reservoir[j] = i;
        }
    }
    reservoir.sort_unstable();
    let total: f64 = reservoir.iter().map(|&i| mu.weights[i]).sum();
    let (support, weights) = if total > 0.0 {
        (
            reservoir.iter().map(|&i| mu.support[i].clone()).collect(),
            reservoir.iter().map(|&i| mu.weights[i] / total).collect(),
        )
    } else {
        (
            reservoir.iter().map(|&i| mu.support[i].clone()).collect(),
            vec![1.0 / k as f64; k],
        )
    };
    let mut out = EmpiricalMeasure::new(mu.grid.clone(), support, weights, mu.space)?;
    out.features = mu.features;
    Ok(out)
}

/// `(1/M) Σ ‖X_m(t) − Y_m(t)‖²` with `norm` the H-norm of nodal differences.
/// The ensembles must be coupled: same path seeds in the same order.
pub fn mean_square_distance(
    a: &PathEnsemble,
    b: &PathEnsemble,
    t: f64,
    norm: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    if a.len() != b.len()
        || a.paths.iter().zip(&b.paths).any(|(p, q)| p.seed != q.seed)
    {
        return Err(Error::invalid(
            "ensembles are not coupled: path counts or seeds differ",
        ));
    }
    let xs = a.states_at(t)?;
    let ys = b.states_at(t)?;
    let total: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let d: Vec<f64> = x.values.iter().zip(&y.values).map(|(u, v)| u - v).collect();
            norm(&d).powi(2)
        })
        .sum();
    Ok(total / a.len() as f64)
}

/// CSV dump: header `weight,v0,v1,…`, then one row per support point.
pub fn write_measure_csv(mu: &EmpiricalMeasure, mut out: impl Write) -> Result<()> {
    let n = mu.grid.n_interior();
    let header: Vec<String> = std::iter::once("weight".to_string())
        .chain((0..n).map(|i| format!("v{i}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (s, w) in mu.support.iter().zip(&mu.weights) {
        let row: Vec<String> = std::iter::once(format!("{w:e}"))
            .chain(s.values.iter().map(|v| format!("{v:e}")))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_measure_csv(
    grid: Arc<SpatialGrid>,
    space: SpaceTag,
    input: impl BufRead,
) -> Result<EmpiricalMeasure> {
    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::invalid(format!("measure CSV line {}: {e}", i + 1)))?;
        if vals.len() != grid.n_interior() + 1 {
            return Err(Error::invalid(format!(
                "measure CSV line {} has {} fields, expected {}",
                i + 1,
                vals.len(),
                grid.n_interior() + 1
            )));
        }
        weights.push(vals[0]);
        support.push(StateVector::nodal(vals[1..].to_vec()));
    }
    EmpiricalMeasure::new(grid, support, weights, space)
}
