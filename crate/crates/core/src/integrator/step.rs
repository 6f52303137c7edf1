//! The implicit resolvent solve of one Euler–Maruyama step.

use super::IntegratorConfig;
use crate::coefficients::{power_term, power_term_derivative, DriftKind, ModelSpec};
use crate::error::{Error, Result};
use crate::spatial::solve_tridiagonal;

const MAX_HALVINGS: usize = 30;
const MAX_SWEEPS: usize = 200_000;

/// Reusable scratch space for stepping one model.
pub(crate) struct Stepper<'a> {
    model: &'a ModelSpec,
    cfg: &'a IntegratorConfig,
    noisy: bool,
    rhs: Vec<f64>,
    res: Vec<f64>,
    trial: Vec<f64>,
    trial_res: Vec<f64>,
    work: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    noise: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(model: &'a ModelSpec, cfg: &'a IntegratorConfig) -> Self {
        let n = model.grid().n_interior();
        Self {
            model,
            cfg,
            noisy: model.has_noise(),
            rhs: vec![0.0; n],
            res: vec![0.0; n],
            trial: vec![0.0; n],
            trial_res: vec![0.0; n],
            work: vec![0.0; n],
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
            noise: vec![0.0; n],
        }
    }

    /// Whether the model's noise coefficient is identically zero, in which
    /// case increments need not be drawn.
    pub(crate) fn needs_noise(&self) -> bool {
        self.noisy
    }

    /// Advance `u` in place from time `t` with increment `dw`.
    pub(crate) fn step(&mut self, u: &mut [f64], t: f64, dw: &[f64]) -> Result<()> {
        let dt = self.cfg.dt;
        let phi = self.model.phi_at(t);
        let g = self.model.g_at(t);
        let gp = self.model.g_profile();
        if self.noisy {
            self.model.noise_into(u, dw, &mut self.noise);
            for i in 0..u.len() {
                self.rhs[i] = u[i] + dt * g * gp[i] + self.noise[i];
            }
        } else {
            for i in 0..u.len() {
                self.rhs[i] = u[i] + dt * g * gp[i];
            }
        }
        if let DriftKind::Scalar { linear, a, p, .. } = *self.model.drift() {
            u[0] = self.scalar_solve(u[0], linear, a, p, phi)?;
            return Ok(());
        }
        self.newton(u, phi)
    }

    fn tol(&self, x: &[f64]) -> f64 {
        self.cfg.newton_tol * (1.0 + self.model.h_norm_nodal(x))
    }

    /// `R(x) = x − dt(A(x) + φx) − rhs`.
    fn residual(&mut self, x: &[f64], phi: f64, out: &mut [f64]) {
        let dt = self.cfg.dt;
        self.model.a_part_into(x, &mut self.work);
        for i in 0..x.len() {
            out[i] = x[i] - dt * (self.work[i] + phi * x[i]) - self.rhs[i];
        }
    }

    fn jacobian(&mut self, x: &[f64], phi: f64) {
        let dt = self.cfg.dt;
        let h = self.model.grid().spacing();
        let c = dt / (h * h);
        let n = x.len();
        match *self.model.drift() {
            DriftKind::ReactionDiffusion { p, a, .. } => {
                for i in 0..n {
                    self.diag[i] = 1.0 - dt * phi + 2.0 * c + dt * a * power_term_derivative(x[i], p);
                }
                self.lower.iter_mut().for_each(|v| *v = -c);
                self.upper.iter_mut().for_each(|v| *v = -c);
            }
            DriftKind::PorousMedia { p, a, .. } => {
                for i in 0..n {
                    self.work[i] = power_term_derivative(x[i], p) + a;
                    self.diag[i] = 1.0 - dt * phi + 2.0 * c * self.work[i];
                }
                for i in 0..n.saturating_sub(1) {
                    self.lower[i] = -c * self.work[i];
                    self.upper[i] = -c * self.work[i + 1];
                }
            }
            DriftKind::Scalar { .. } => unreachable!("scalar models use the scalar solve"),
        }
    }

    fn newton(&mut self, u: &mut [f64], phi: f64) -> Result<()> {
        let n = u.len();
        let mut x = u.to_vec();
        let mut res = std::mem::take(&mut self.res);
        let mut trial = std::mem::take(&mut self.trial);
        let mut trial_res = std::mem::take(&mut self.trial_res);
        self.residual(&x, phi, &mut res);
        let mut rn = self.model.h_norm_nodal(&res);
        let mut iterations = 0;
        let outcome = loop {
            if iterations > 0 && rn <= self.tol(&x) {
                break Ok(());
            }
            if iterations >= self.cfg.newton_max_iter {
                break Err(Error::Convergence {
                    residual: rn,
                    iterations,
                    step: None,
                    path: None,
                });
            }
            iterations += 1;
            self.jacobian(&x, phi);
            let mut delta: Vec<f64> = res.iter().map(|r| -r).collect();
            solve_tridiagonal(&self.lower, &self.diag, &self.upper, &mut delta);
            let mut theta = 1.0;
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                for i in 0..n {
                    trial[i] = x[i] + theta * delta[i];
                }
                self.residual(&trial, phi, &mut trial_res);
                let tn = self.model.h_norm_nodal(&trial_res);
                if tn.is_finite() && (tn < rn || tn <= self.tol(&trial)) {
                    std::mem::swap(&mut x, &mut trial);
                    std::mem::swap(&mut res, &mut trial_res);
                    rn = tn;
                    accepted = true;
                    break;
                }
                theta *= 0.5;
            }
            if !accepted {
                break self.gauss_seidel(&mut x, phi, iterations);
            }
        };
        self.res = res;
        self.trial = trial;
        self.trial_res = trial_res;
        outcome?;
        u.copy_from_slice(&x);
        Ok(())
    }

    /// Nonlinear Gauss–Seidel with nodewise bisection; each nodal equation is
    /// monotone in its own unknown for both grid models.
    fn gauss_seidel(&mut self, x: &mut [f64], phi: f64, newton_iterations: usize) -> Result<()> {
        let dt = self.cfg.dt;
        let h = self.model.grid().spacing();
        let c = dt / (h * h);
        let n = x.len();
        let mut res = vec![0.0; n];
        for sweep in 0..MAX_SWEEPS {
            for i in 0..n {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                let rhs = self.rhs[i];
                x[i] = match *self.model.drift() {
                    DriftKind::ReactionDiffusion { p, a, .. } => {
                        let lin = 1.0 - dt * phi + 2.0 * c;
                        let target = rhs + c * (left + right);
                        bisect_monotone(|y| lin * y + dt * a * power_term(y, p) - target, x[i])
                    }
                    DriftKind::PorousMedia { p, a, .. } => {
                        let psi = |y: f64| power_term(y, p) + a * y;
                        let target = rhs - c * (psi(left) + psi(right));
                        bisect_monotone(
                            |y| (1.0 - dt * phi) * y + 2.0 * c * psi(y) - target,
                            x[i],
                        )
                    }
                    DriftKind::Scalar { .. } => unreachable!(),
                };
            }
            if sweep % 16 == 15 {
                self.residual(x, phi, &mut res);
                let rn = self.model.h_norm_nodal(&res);
                if rn <= self.tol(x) {
                    return Ok(());
                }
                if sweep + 1 == MAX_SWEEPS || !rn.is_finite() {
                    return Err(Error::Convergence {
                        residual: rn,
                        iterations: newton_iterations + sweep + 1,
                        step: None,
                        path: None,
                    });
                }
            }
        }
        unreachable!("sweep loop returns")
    }

    fn scalar_solve(&self, x0: f64, linear: f64, a: f64, p: f64, phi: f64) -> Result<f64> {
        let dt = self.cfg.dt;
        let rhs = self.rhs[0];
        let f = |x: f64| x + dt * (linear * x + a * power_term(x, p) - phi * x) - rhs;
        let tol = |x: f64| self.cfg.newton_tol * (1.0 + x.abs());
        let mut x = x0;
        let mut r = f(x);
        for iterations in 1..=self.cfg.newton_max_iter {
            let d = 1.0 + dt * (linear + a * power_term_derivative(x, p) - phi);
            let delta = -r / d;
            let mut theta = 1.0;
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                let xt = x + theta * delta;
                let rt = f(xt);
                if rt.abs() < r.abs() || rt.abs() <= tol(xt) {
                    x = xt;
                    r = rt;
                    accepted = true;
                    break;
                }
                theta *= 0.5;
            }
            if !accepted {
                x = bisect_monotone(f, x);
                r = f(x);
            }
            if r.abs() <= tol(x) {
                // one polishing step: scalar runs can take 10⁸ steps and a
                // biased stopping error would accumulate
                let d = 1.0 + dt * (linear + a * power_term_derivative(x, p) - phi);
                let xp = x - r / d;
                if f(xp).abs() <= r.abs() {
                    x = xp;
                }
                return Ok(x);
            }
            if !accepted {
                return Err(Error::Convergence {
                    residual: r.abs(),
                    iterations,
                    step: None,
                    path: None,
                });
            }
        }
        Err(Error::Convergence {
            residual: r.abs(),
            iterations: self.cfg.newton_max_iter,
            step: None,
            path: None,
        })
    }
}

/// Root of an increasing scalar function, bracketed outward from `guess`.
fn bisect_monotone(f: impl Fn(f64) -> f64, guess: f64) -> f64 {
    let f0 = f(guess);
    if f0 == 0.0 {
        return guess;
    }
    let mut width = 1.0 + guess.abs();
    let (mut lo, mut hi) = if f0 > 0.0 { (guess - width, guess) } else { (guess, guess + width) };
    for _ in 0..200 {
        if f0 > 0.0 && f(lo) > 0.0 {
            hi = lo;
            width *= 2.0;
            lo -= width;
        } else if f0 < 0.0 && f(hi) < 0.0 {
            lo = hi;
            width *= 2.0;
            hi += width;
        } else {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
