//! Model instances, constants ledgers and averaged models.

use super::forcing::{bohr_average, make_forcing, Forcing, ForcingSpec};
use crate::error::{Error, Result};
use crate::spatial::{build_grid, SpaceTag, SpatialGrid, StateVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Drift family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftKind {
    /// `du = (Δu − a u|u|^{p−2} + φ(t/ε)u + g(t/ε)g₀)dt + κu dW` on H = L².
    ReactionDiffusion { p: f64, a: f64, kappa: f64 },
    /// `du = (Δ(|u|^{p−2}u + a u) + φ(t/ε)u)dt + G dW` on H = H⁻¹, with G
    /// diagonal in the eigenbasis, `σ_k = noise_decay^k` for `k = 1..=noise_rank`.
    PorousMedia {
        p: f64,
        a: f64,
        noise_rank: usize,
        noise_decay: f64,
    },
    /// One-node test equation without Laplacian:
    /// `dX = (−c X − a X|X|^{p−2} + φ(t/ε)X + g(t/ε))dt + (σ + κX) dW`.
    Scalar {
        linear: f64,
        a: f64,
        p: f64,
        sigma: f64,
        kappa: f64,
    },
}

/// Constants of the monotonicity, coercivity and Lipschitz conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub lambda: f64,
    pub lambda_prime: f64,
    pub r: f64,
    pub lambda_f: f64,
    pub l_f: f64,
    pub l_g: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub m0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c2_prime: f64,
}

impl ConstantsLedger {
    /// `2λ − 2λ_F − L_G²`.
    pub fn stability_margin(&self) -> f64 {
        2.0 * self.lambda - 2.0 * self.lambda_f - self.l_g * self.l_g
    }

    /// True when either decay branch of the square-mean estimate applies.
    pub fn is_attracting(&self) -> bool {
        self.lambda_prime > 0.0 || self.stability_margin() > 0.0
    }

    /// `{λ′(r−2)t}^{−2/(r−2)}`, or +∞ when λ′ = 0.
    pub fn polynomial_bound(&self, t: f64) -> f64 {
        if self.lambda_prime <= 0.0 || t <= 0.0 {
            return f64::INFINITY;
        }
        (self.lambda_prime * (self.r - 2.0) * t).powf(-2.0 / (self.r - 2.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    #[serde(skip)]
    grid: Arc<SpatialGrid>,
    drift: DriftKind,
    phi: Forcing,
    g: Forcing,
    #[serde(skip)]
    g_profile: Vec<f64>,
    #[serde(skip)]
    noise_modes: Vec<Vec<f64>>,
    ledger: ConstantsLedger,
    eps: f64,
}

/// Grid used by the scalar test equations: one node with `h = 1`.
pub fn scalar_grid() -> Arc<SpatialGrid> {
    Arc::new(build_grid(1, 2.0).expect("valid grid"))
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite")))
    }
}

/// Build a model and fill its constants ledger.
pub fn build_model(
    drift: DriftKind,
    grid: Arc<SpatialGrid>,
    phi: ForcingSpec,
    g: ForcingSpec,
    eps: f64,
) -> Result<ModelSpec> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("time scale ε must lie in (0, 1], got {eps}")));
    }
    let phi = make_forcing(phi)?;
    let g = make_forcing(g)?;
    let n = grid.n_interior();
    let lambda_f = phi.sup_positive_part();
    let l_f = phi.sup_abs();
    let (ledger, g_profile, noise_modes) = match drift {
        DriftKind::ReactionDiffusion { p, a, kappa } => {
            if !(p >= 2.0) || !p.is_finite() {
                return Err(Error::invalid(format!("reaction-diffusion needs p ≥ 2, got {p}")));
            }
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::invalid(format!("reaction coefficient a must be ≥ 0, got {a}")));
            }
            finite("κ", kappa)?;
            let l1 = grid.first_eigenvalue();
            // first eigenfunction normalized in H¹₀
            let g0: Vec<f64> = grid.eigenvector(0).iter().map(|e| e / l1.sqrt()).collect();
            let g0_norm = grid.l2_norm_nodal(&g0);
            let ledger = ConstantsLedger {
                lambda: l1,
                lambda_prime: 0.0,
                r: if p > 2.0 { p } else { 4.0 },
                lambda_f,
                l_f,
                l_g: kappa.abs(),
                alpha1: 2.0,
                alpha2: p,
                m0: (g.sup_abs() * g0_norm).max(1.0),
                c1: 1.0,
                c2: 1.0,
                c2_prime: a,
            };
            (ledger, g0, Vec::new())
        }
        DriftKind::PorousMedia {
            p,
            a,
            noise_rank,
            noise_decay,
        } => {
            if !(p > 2.0) || !p.is_finite() {
                return Err(Error::invalid(format!("porous media needs p > 2, got {p}")));
            }
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::invalid(format!("porous media needs a ≥ 0, got {a}")));
            }
            if noise_rank == 0 || noise_rank > n {
                return Err(Error::invalid(format!(
                    "noise rank must lie in 1..={n} for this grid, got {noise_rank}"
                )));
            }
            if !(noise_decay >= 0.0) || !noise_decay.is_finite() {
                return Err(Error::invalid("noise decay must be finite and ≥ 0"));
            }
            if !g.spec().is_identically_zero() {
                return Err(Error::invalid(
                    "the additive g forcing applies to reaction-diffusion and scalar models only",
                ));
            }
            let modes: Vec<Vec<f64>> = (0..noise_rank)
                .map(|k| {
                    let sigma = noise_decay.powi(k as i32 + 1);
                    grid.eigenvector(k).iter().map(|e| sigma * e).collect()
                })
                .collect();
            let hs_norm = (0..noise_rank)
                .map(|k| noise_decay.powi(2 * (k as i32 + 1)) / grid.eigenvalues()[k])
                .sum::<f64>()
                .sqrt();
            let ledger = ConstantsLedger {
                lambda: a,
                lambda_prime: 2f64.powf(2.0 - p),
                r: p,
                lambda_f,
                l_f,
                l_g: 0.0,
                alpha1: p,
                alpha2: p,
                m0: hs_norm.max(1.0),
                c1: 0.0,
                c2: 1.0,
                c2_prime: 1.0,
            };
            (ledger, vec![0.0; n], modes)
        }
        DriftKind::Scalar {
            linear,
            a,
            p,
            sigma,
            kappa,
        } => {
            if n != 1 {
                return Err(Error::invalid("scalar models live on a one-node grid"));
            }
            if !(p >= 2.0) || !p.is_finite() {
                return Err(Error::invalid(format!("scalar nonlinearity needs p ≥ 2, got {p}")));
            }
            if !(a >= 0.0 && linear >= 0.0) {
                return Err(Error::invalid("scalar drift coefficients must be ≥ 0"));
            }
            finite("σ", sigma)?;
            finite("κ", kappa)?;
            let (lambda, lambda_prime, r) = if p > 2.0 {
                (linear, a * 2f64.powf(2.0 - p), p)
            } else {
                (linear + a, 0.0, 4.0)
            };
            let ledger = ConstantsLedger {
                lambda,
                lambda_prime,
                r,
                lambda_f,
                l_f,
                l_g: kappa.abs(),
                alpha1: 2.0,
                alpha2: p,
                m0: (g.sup_abs() + sigma.abs()).max(1.0),
                c1: 0.0,
                c2: linear,
                c2_prime: a,
            };
            (ledger, vec![1.0], Vec::new())
        }
    };
    Ok(ModelSpec {
        grid,
        drift,
        phi,
        g,
        g_profile,
        noise_modes,
        ledger,
        eps,
    })
}

#[inline]
pub(crate) fn power_term(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        u
    } else if p == 3.0 {
        u * u.abs()
    } else if p == 4.0 {
        u * u * u
    } else {
        u * u.abs().powf(p - 2.0)
    }
}

/// Derivative of `u ↦ u|u|^{p−2}`.
#[inline]
pub(crate) fn power_term_derivative(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if p == 3.0 {
        2.0 * u.abs()
    } else if p == 4.0 {
        3.0 * u * u
    } else {
        (p - 1.0) * u.abs().powf(p - 2.0)
    }
}

impl ModelSpec {
    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    pub fn drift(&self) -> &DriftKind {
        &self.drift
    }

    pub fn ledger(&self) -> &ConstantsLedger {
        &self.ledger
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn phi(&self) -> &Forcing {
        &self.phi
    }

    pub fn g(&self) -> &Forcing {
        &self.g
    }

    pub fn g_profile(&self) -> &[f64] {
        &self.g_profile
    }

    /// Same model at another time scale; the ledger is ε-independent.
    pub fn with_eps(&self, eps: f64) -> Result<ModelSpec> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::invalid(format!("time scale ε must lie in (0, 1], got {eps}")));
        }
        Ok(ModelSpec {
            eps,
            ..self.clone()
        })
    }

    /// Replace the spatial profile g₀ of the additive forcing.
    pub fn with_g_profile(mut self, profile: Vec<f64>) -> Result<ModelSpec> {
        if profile.len() != self.grid.n_interior() {
            return Err(Error::invalid("g profile dimension does not match the grid"));
        }
        if matches!(self.drift, DriftKind::PorousMedia { .. }) {
            return Err(Error::invalid("porous media models take no g forcing"));
        }
        self.g_profile = profile;
        Ok(self)
    }

    /// The space H in which the model is monotone.
    pub fn h_space(&self) -> SpaceTag {
        match self.drift {
            DriftKind::PorousMedia { .. } => SpaceTag::Hminus1,
            _ => SpaceTag::L2,
        }
    }

    /// The space S of the tightness diagnostic.
    pub fn s_space(&self) -> SpaceTag {
        match self.drift {
            DriftKind::ReactionDiffusion { .. } => SpaceTag::H10,
            _ => SpaceTag::L2,
        }
    }

    pub fn h_norm_nodal(&self, v: &[f64]) -> f64 {
        match self.drift {
            DriftKind::PorousMedia { .. } => self.grid.hminus1_norm_nodal(v),
            _ => self.grid.l2_norm_nodal(v),
        }
    }

    pub fn h_inner_nodal(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.drift {
            DriftKind::PorousMedia { .. } => self.grid.hminus1_inner_nodal(a, b),
            _ => self.grid.l2_inner_nodal(a, b),
        }
    }

    pub fn noise_rank(&self) -> usize {
        match self.drift {
            DriftKind::PorousMedia { noise_rank, .. } => noise_rank,
            _ => 1,
        }
    }

    pub fn is_autonomous(&self) -> bool {
        self.phi.is_autonomous() && self.g.is_autonomous()
    }

    /// False when the noise coefficient vanishes identically.
    pub fn has_noise(&self) -> bool {
        match self.drift {
            DriftKind::ReactionDiffusion { kappa, .. } => kappa != 0.0,
            DriftKind::PorousMedia { noise_decay, .. } => noise_decay != 0.0,
            DriftKind::Scalar { sigma, kappa, .. } => sigma != 0.0 || kappa != 0.0,
        }
    }

    /// Largest angular frequency of the fast coefficients in unscaled time.
    pub fn max_frequency(&self) -> Option<f64> {
        match (self.phi.max_frequency(), self.g.max_frequency()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    /// Common period τ of φ and g in unscaled time, if both are periodic or constant.
    pub fn period(&self) -> Option<f64> {
        let pa = self.phi.period();
        let pb = self.g.period();
        match (pa, pb, self.phi.is_autonomous(), self.g.is_autonomous()) {
            (Some(a), None, _, true) => Some(a),
            (None, Some(b), true, _) => Some(b),
            (Some(a), Some(b), _, _) => {
                let m = a.max(b) / a.min(b);
                ((m - m.round()).abs() < 1e-9).then_some(a.max(b))
            }
            _ => None,
        }
    }

    #[inline]
    pub fn phi_at(&self, t: f64) -> f64 {
        self.phi.eval(t / self.eps)
    }

    #[inline]
    pub fn g_at(&self, t: f64) -> f64 {
        self.g.eval(t / self.eps)
    }

    /// The monotone part A(u) (without F), nodal in and out.
    pub fn a_part_into(&self, u: &[f64], out: &mut [f64]) {
        match self.drift {
            DriftKind::ReactionDiffusion { p, a, .. } => {
                self.grid.apply_laplacian(u, out);
                if a != 0.0 {
                    for (o, &x) in out.iter_mut().zip(u) {
                        *o -= a * power_term(x, p);
                    }
                }
            }
            DriftKind::PorousMedia { p, a, .. } => {
                let psi: Vec<f64> = u.iter().map(|&x| power_term(x, p) + a * x).collect();
                self.grid.apply_laplacian(&psi, out);
            }
            DriftKind::Scalar { linear, a, p, .. } => {
                for (o, &x) in out.iter_mut().zip(u) {
                    *o = -linear * x - a * power_term(x, p);
                }
            }
        }
    }

    /// Full drift A(u) + φ(t/ε)u + g(t/ε)g₀.
    pub fn drift_into(&self, t: f64, u: &[f64], out: &mut [f64]) {
        self.a_part_into(u, out);
        let phi = self.phi_at(t);
        let g = self.g_at(t);
        for ((o, &x), g0) in out.iter_mut().zip(u).zip(&self.g_profile) {
            *o += phi * x + g * g0;
        }
    }

    /// Noise increment G(u) dW written into `out`.
    pub fn noise_into(&self, u: &[f64], dw: &[f64], out: &mut [f64]) {
        match self.drift {
            DriftKind::ReactionDiffusion { kappa, .. } => {
                for (o, &x) in out.iter_mut().zip(u) {
                    *o = kappa * x * dw[0];
                }
            }
            DriftKind::PorousMedia { .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (mode, &w) in self.noise_modes.iter().zip(dw) {
                    for (o, m) in out.iter_mut().zip(mode) {
                        *o += m * w;
                    }
                }
            }
            DriftKind::Scalar { sigma, kappa, .. } => {
                out[0] = (sigma + kappa * u[0]) * dw[0];
            }
        }
    }
}

/// Drift of `model` at time `t`, as a nodal V* representative.
pub fn eval_drift(model: &ModelSpec, t: f64, u: &StateVector) -> Result<StateVector> {
    let nodal = model
        .grid
        .transform(u, crate::spatial::Representation::Nodal)?;
    let mut out = vec![0.0; nodal.dim()];
    model.drift_into(t, &nodal.values, &mut out);
    Ok(StateVector::nodal(out))
}

/// A model with its time-dependent coefficients replaced by their Bohr averages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedModel {
    pub model: ModelSpec,
    pub t_avg: f64,
    pub phi_mean: f64,
    pub g_mean: f64,
    /// Residual of the F average, scaled as in `(1/T)|∫(F−F̄)| ≤ ω₁(T)(1+‖x‖)`.
    pub omega1: f64,
    /// Residual of the G average; zero for the built-in time-independent noise.
    pub omega2: f64,
}

pub const DEFAULT_AVERAGING_WINDOW: f64 = 1000.0;
pub const DEFAULT_AVERAGING_PANELS: usize = 20_000;

/// Bohr-average φ and g; the noise is time-independent so Ḡ = G.
pub fn build_averaged(model: &ModelSpec, t_avg: f64, n_samples: usize) -> Result<AveragedModel> {
    let phi_avg = bohr_average(&model.phi, t_avg, n_samples)?;
    let g_avg = bohr_average(&model.g, t_avg, n_samples)?;
    let g0_norm = model.h_norm_nodal(&model.g_profile);
    let mut averaged = model.clone();
    averaged.phi = make_forcing(ForcingSpec::constant(phi_avg.mean))?;
    averaged.g = make_forcing(ForcingSpec::constant(g_avg.mean))?;
    Ok(AveragedModel {
        model: averaged,
        t_avg,
        phi_mean: phi_avg.mean,
        g_mean: g_avg.mean,
        omega1: phi_avg.residual.max(g_avg.residual * g0_norm),
        omega2: 0.0,
    })
}
