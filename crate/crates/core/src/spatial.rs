//! Finite-difference discretization of the triple V ⊂ H ⊂ V* on an interval
//! (0, L) with homogeneous Dirichlet boundary.
//!
//! States live on the `n` interior nodes. The 3-point Laplacian has the
//! closed-form eigenpairs
//!
//! ```text
//! λ_k = (4/h²) sin²(kπh / 2L),   e_k(x_i) = √(2/L) sin(kπ x_i / L),   k = 1..n
//! ```
//!
//! and the eigenvectors are orthonormal in the discrete inner product
//! `h Σ u_i v_i`. Every norm used by the estimates (L², H¹₀, H⁻¹, Lᵖ) is
//! computed from these.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Nodal,
    Spectral,
}

/// Function space in which a norm is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceTag {
    L2,
    H10,
    Hminus1,
    Lp(f64),
}

impl SpaceTag {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SpaceTag::Lp(p) if !(p > 1.0 && p.is_finite()) => {
                Err(Error::invalid(format!("Lp norm needs a finite exponent p > 1, got {p}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub values: Vec<f64>,
    pub repr: Representation,
}

impl StateVector {
    pub fn nodal(values: Vec<f64>) -> Self {
        Self {
            values,
            repr: Representation::Nodal,
        }
    }

    pub fn spectral(values: Vec<f64>) -> Self {
        Self {
            values,
            repr: Representation::Spectral,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::nodal(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            repr: self.repr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    n_interior: usize,
    length: f64,
    spacing: f64,
    eigenvalues: Vec<f64>,
    // row k holds the nodal values of e_{k+1}
    eigenvectors: Vec<f64>,
}

/// Build the grid and the eigensystem of the 3-point Dirichlet Laplacian.
pub fn build_grid(n_interior: usize, length: f64) -> Result<SpatialGrid> {
    if n_interior == 0 {
        return Err(Error::invalid("grid needs at least one interior node"));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::invalid(format!("domain length must be positive, got {length}")));
    }
    let n = n_interior;
    let h = length / (n as f64 + 1.0);
    let eigenvalues = (1..=n)
        .map(|k| {
            let s = (k as f64 * PI * h / (2.0 * length)).sin();
            4.0 / (h * h) * s * s
        })
        .collect();
    let amp = (2.0 / length).sqrt();
    let mut eigenvectors = vec![0.0; n * n];
    for k in 1..=n {
        for i in 1..=n {
            eigenvectors[(k - 1) * n + (i - 1)] =
                amp * (k as f64 * i as f64 * PI / (n as f64 + 1.0)).sin();
        }
    }
    Ok(SpatialGrid {
        n_interior,
        length,
        spacing: h,
        eigenvalues,
        eigenvectors,
    })
}

impl SpatialGrid {
    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// λ₁, the first eigenvalue of the discrete −Δ.
    pub fn first_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Nodal values of the k-th eigenvector, `k` zero-based.
    pub fn eigenvector(&self, k: usize) -> &[f64] {
        let n = self.n_interior;
        &self.eigenvectors[k * n..(k + 1) * n]
    }

    /// Coordinates of the interior nodes.
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n_interior)
            .map(|i| i as f64 * self.spacing)
            .collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> StateVector {
        StateVector::nodal(self.nodes().into_iter().map(f).collect())
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n_interior {
            return Err(Error::invalid(format!(
                "state has dimension {len} but the grid has {} interior nodes",
                self.n_interior
            )));
        }
        Ok(())
    }

    pub fn to_spectral_values(&self, nodal: &[f64]) -> Vec<f64> {
        let n = self.n_interior;
        (0..n)
            .map(|k| {
                let row = self.eigenvector(k);
                self.spacing * row.iter().zip(nodal).map(|(e, u)| e * u).sum::<f64>()
            })
            .collect()
    }

    pub fn to_nodal_values(&self, spectral: &[f64]) -> Vec<f64> {
        let n = self.n_interior;
        let mut out = vec![0.0; n];
        for (k, c) in spectral.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(self.eigenvector(k)) {
                *o += c * e;
            }
        }
        out
    }

    /// Change of basis; a no-op when the state is already in `target`.
    pub fn transform(&self, state: &StateVector, target: Representation) -> Result<StateVector> {
        self.check_dim(state.dim())?;
        Ok(match (state.repr, target) {
            (a, b) if a == b => state.clone(),
            (Representation::Nodal, Representation::Spectral) => {
                StateVector::spectral(self.to_spectral_values(&state.values))
            }
            _ => StateVector::nodal(self.to_nodal_values(&state.values)),
        })
    }

    pub fn norm(&self, state: &StateVector, space: SpaceTag) -> Result<f64> {
        self.check_dim(state.dim())?;
        space.validate()?;
        let v = &state.values;
        Ok(match (space, state.repr) {
            (SpaceTag::L2, Representation::Nodal) => self.l2_norm_nodal(v),
            (SpaceTag::L2, Representation::Spectral) => v.iter().map(|c| c * c).sum::<f64>().sqrt(),
            (SpaceTag::Lp(p), Representation::Nodal) => self.lp_norm_nodal(v, p),
            (SpaceTag::Lp(p), Representation::Spectral) => {
                self.lp_norm_nodal(&self.to_nodal_values(v), p)
            }
            (SpaceTag::H10 | SpaceTag::Hminus1, repr) => {
                let spec = match repr {
                    Representation::Spectral => v.clone(),
                    Representation::Nodal => self.to_spectral_values(v),
                };
                let positive = matches!(space, SpaceTag::H10);
                spec.iter()
                    .zip(&self.eigenvalues)
                    .map(|(c, l)| if positive { l * c * c } else { c * c / l })
                    .sum::<f64>()
                    .sqrt()
            }
        })
    }

    pub fn l2_norm_nodal(&self, v: &[f64]) -> f64 {
        (self.spacing * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    pub fn lp_norm_nodal(&self, v: &[f64], p: f64) -> f64 {
        (self.spacing * v.iter().map(|x| x.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }

    /// Discrete inner product `h Σ u_i v_i`.
    pub fn l2_inner_nodal(&self, a: &[f64], b: &[f64]) -> f64 {
        self.spacing * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// H⁻¹ inner product `Σ â_k b̂_k / λ_k` of two nodal vectors.
    pub fn hminus1_inner_nodal(&self, a: &[f64], b: &[f64]) -> f64 {
        let sa = self.to_spectral_values(a);
        let sb = self.to_spectral_values(b);
        sa.iter()
            .zip(&sb)
            .zip(&self.eigenvalues)
            .map(|((x, y), l)| x * y / l)
            .sum()
    }

    /// Stencil Laplacian with zero Dirichlet data, written into `out`.
    pub fn apply_laplacian(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        for i in 0..n {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            out[i] = (left - 2.0 * u[i] + right) * inv_h2;
        }
    }

    pub fn laplacian(&self, state: &StateVector) -> Result<StateVector> {
        let nodal = self.transform(state, Representation::Nodal)?;
        let mut out = vec![0.0; self.n_interior];
        self.apply_laplacian(&nodal.values, &mut out);
        Ok(StateVector::nodal(out))
    }

    /// (−Δ)⁻¹ by spectral division. The result keeps the input representation.
    pub fn inv_laplacian(&self, state: &StateVector) -> Result<StateVector> {
        let spec = self.transform(state, Representation::Spectral)?;
        let divided = StateVector::spectral(
            spec.values
                .iter()
                .zip(&self.eigenvalues)
                .map(|(c, l)| c / l)
                .collect(),
        );
        self.transform(&divided, state.repr)
    }

    /// (−Δ)⁻¹ on nodal values by a tridiagonal solve.
    pub fn solve_neg_laplacian_nodal(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        let diag = vec![2.0 * inv_h2; n];
        let off = vec![-inv_h2; n.saturating_sub(1)];
        let mut x = rhs.to_vec();
        solve_tridiagonal(&off, &diag, &off, &mut x);
        x
    }

    /// ‖v‖_{H⁻¹} for nodal `v`, via the tridiagonal solve.
    pub fn hminus1_norm_nodal(&self, v: &[f64]) -> f64 {
        let w = self.solve_neg_laplacian_nodal(v);
        self.l2_inner_nodal(v, &w).max(0.0).sqrt()
    }
}

/// Thomas algorithm. `lower[i]` couples row i+1 to column i, `upper[i]` row i
/// to column i+1. The solution overwrites `rhs`.
pub(crate) fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i - 1] * c[i];
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i + 1] * rhs[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_grid(0, 1.0).is_err());
        assert!(build_grid(3, 0.0).is_err());
        assert!(build_grid(3, -1.0).is_err());
        assert!(SpaceTag::Lp(1.0).validate().is_err());
        let g = build_grid(3, 1.0).unwrap();
        assert!(g.transform(&StateVector::zeros(4), Representation::Spectral).is_err());
    }

    #[test]
    fn spacing_and_first_eigenvalue() {
        let g = build_grid(3, 1.0).unwrap();
        assert_eq!(g.spacing(), 0.25);
        let expected = 64.0 * (PI / 8.0).sin().powi(2);
        assert_relative_eq!(g.first_eigenvalue(), expected, max_relative = 1e-14);
        assert_relative_eq!(g.first_eigenvalue(), 9.3726, epsilon = 1e-4);
    }

    #[test]
    fn eigenvalues_increase_and_approach_pi_squared_from_below() {
        let mut prev = 0.0;
        for n in [3usize, 7, 15, 31, 63, 127] {
            let g = build_grid(n, 1.0).unwrap();
            let ev = g.eigenvalues();
            assert!(ev.windows(2).all(|w| w[0] > 0.0 && w[1] > w[0]));
            assert!(g.first_eigenvalue() < PI * PI);
            assert!(g.first_eigenvalue() > prev);
            prev = g.first_eigenvalue();
        }
    }

    #[test]
    fn eigenvector_maps_to_unit_coefficient() {
        let g = build_grid(8, 1.0).unwrap();
        for k in 0..8 {
            let e = StateVector::nodal(g.eigenvector(k).to_vec());
            let s = g.transform(&e, Representation::Spectral).unwrap();
            for (j, c) in s.values.iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((c - want).abs() < 1e-12, "k={k} j={j} c={c}");
            }
        }
    }

    #[test]
    fn transform_is_idempotent_on_target() {
        let g = build_grid(5, 2.0).unwrap();
        let s = StateVector::spectral(vec![1.0, 0.0, -2.0, 0.5, 0.0]);
        assert_eq!(g.transform(&s, Representation::Spectral).unwrap(), s);
    }

    #[test]
    fn zero_state_has_zero_norms() {
        let g = build_grid(6, 1.0).unwrap();
        let z = StateVector::zeros(6);
        for space in [SpaceTag::L2, SpaceTag::H10, SpaceTag::Hminus1, SpaceTag::Lp(3.0)] {
            assert_eq!(g.norm(&z, space).unwrap(), 0.0);
        }
        assert_eq!(g.inv_laplacian(&z).unwrap().values, vec![0.0; 6]);
    }

    #[test]
    fn inv_laplacian_of_first_eigenvector() {
        let g = build_grid(9, 1.0).unwrap();
        let e1 = StateVector::nodal(g.eigenvector(0).to_vec());
        let out = g.inv_laplacian(&e1).unwrap();
        for (o, e) in out.values.iter().zip(&e1.values) {
            assert_relative_eq!(*o, e / g.first_eigenvalue(), epsilon = 1e-13);
        }
    }

    #[test]
    fn tridiagonal_inverse_matches_spectral_inverse() {
        let g = build_grid(12, 1.5).unwrap();
        let v: Vec<f64> = (0..12).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let a = g.solve_neg_laplacian_nodal(&v);
        let b = g.inv_laplacian(&StateVector::nodal(v.clone())).unwrap();
        for (x, y) in a.iter().zip(&b.values) {
            assert_relative_eq!(*x, *y, epsilon = 1e-12);
        }
        let n1 = g.hminus1_norm_nodal(&v);
        let n2 = g.norm(&StateVector::nodal(v), SpaceTag::Hminus1).unwrap();
        assert_relative_eq!(n1, n2, max_relative = 1e-12);
    }
}
