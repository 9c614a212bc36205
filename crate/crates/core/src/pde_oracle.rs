//! Direct integration of `v_t = -u v_x + lambda v^2 + I(t)`, `v = u_x`,
//! `u(0, t) = 0`, `I = -(lambda + 1) int v^2`, for comparison with the
//! representation formula at short times.
//!
//! Dirichlet data use fourth-order finite differences (one-sided near the
//! walls) and an endpoint-corrected trapezoid for `u = int_0^x v` and for
//! `I`. Periodic data use FFT derivatives and antiderivatives. Time stepping
//! is classical RK4.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_solution::{ExactSolution, SolutionFrame};
use crate::profiles::{Boundary, InitialProfile};

/// `max |v|` beyond which integration stops.
pub const BLOWUP_GUARD: f64 = 1e5;
/// Courant number used by [`mol_solve`].
pub const CFL: f64 = 0.4;
/// Smallest admissible `J(active)` for residual checks.
pub const RESIDUAL_MIN_EPS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MolState {
    pub boundary: Boundary,
    /// Node positions: `j/N`, `j = 0..N` (Dirichlet) or `j = 0..N-1` (periodic).
    pub grid: Vec<f64>,
    /// `u_x` at the nodes.
    pub v: Vec<f64>,
    pub t: f64,
    /// Nonlocal term at `t`.
    pub i_term: f64,
}

impl MolState {
    /// Samples `u0'` on `n` cells; `n` must be a power of two, at least 256.
    pub fn new(profile: &InitialProfile, lambda: f64, n: usize) -> Result<Self> {
        if n < 256 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!("grid size {n} must be a power of two >= 256")));
        }
        let nodes = match profile.boundary {
            Boundary::Dirichlet => n + 1,
            Boundary::Periodic => n,
        };
        let grid: Vec<f64> = (0..nodes).map(|j| j as f64 / n as f64).collect();
        let v = grid.iter().map(|&x| profile.eval_u0p(x)).collect::<Result<Vec<_>>>()?;
        let mut s = Self {
            boundary: profile.boundary,
            grid,
            v,
            t: 0.0,
            i_term: 0.0,
        };
        s.i_term = Ops::new(s.boundary, n).nonlocal(&s.v, lambda);
        Ok(s)
    }

    pub fn cells(&self) -> usize {
        match self.boundary {
            Boundary::Dirichlet => self.grid.len() - 1,
            Boundary::Periodic => self.grid.len(),
        }
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    /// `u = int_0^x v` at the nodes.
    pub fn u(&self) -> Vec<f64> {
        Ops::new(self.boundary, self.cells()).antiderivative(&self.v)
    }

    /// `int_0^1 v dx`.
    pub fn mean(&self) -> f64 {
        Ops::new(self.boundary, self.cells()).integral(&self.v)
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest stable step for the current state.
    pub fn cfl_limit(&self) -> f64 {
        let umax = self.u().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        CFL * self.dx() / umax.max(1.0)
    }
}

/// Discrete operators on one grid.
struct Ops {
    boundary: Boundary,
    h: f64,
}

impl Ops {
    fn new(boundary: Boundary, n: usize) -> Self {
        Self {
            boundary,
            h: 1.0 / n as f64,
        }
    }

    fn derivative(&self, f: &[f64]) -> Vec<f64> {
        match self.boundary {
            Boundary::Dirichlet => fd_derivative(f, self.h),
            Boundary::Periodic => spectral(f, |k| Complex::new(0.0, 2.0 * std::f64::consts::PI * k)),
        }
    }

    fn antiderivative(&self, f: &[f64]) -> Vec<f64> {
        match self.boundary {
            Boundary::Dirichlet => {
                let d = fd_derivative(f, self.h);
                let h = self.h;
                let mut out = vec![0.0; f.len()];
                let mut trap = 0.0;
                for j in 1..f.len() {
                    trap += 0.5 * h * (f[j - 1] + f[j]);
                    out[j] = trap - h * h / 12.0 * (d[j] - d[0]);
                }
                out
            }
            Boundary::Periodic => {
                let mut u = spectral(f, |k| {
                    if k == 0.0 {
                        Complex::new(0.0, 0.0)
                    } else {
                        Complex::new(0.0, -1.0 / (2.0 * std::f64::consts::PI * k))
                    }
                });
                let mean = self.integral(f);
                let u0 = u[0];
                for (x, uj) in u.iter_mut().enumerate() {
                    // The zero mode of v integrates to a linear term.
                    *uj += -u0 + mean * x as f64 * self.h;
                }
                u
            }
        }
    }

    fn integral(&self, f: &[f64]) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => {
                let d = fd_derivative(f, self.h);
                let n = f.len() - 1;
                let trap: f64 = self.h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n]));
                trap - self.h * self.h / 12.0 * (d[n] - d[0])
            }
            Boundary::Periodic => f.iter().sum::<f64>() * self.h,
        }
    }

    fn nonlocal(&self, v: &[f64], lambda: f64) -> f64 {
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        -(lambda + 1.0) * self.integral(&sq)
    }

    fn rhs(&self, v: &[f64], lambda: f64) -> Vec<f64> {
        let u = self.antiderivative(v);
        let vx = self.derivative(v);
        let i = self.nonlocal(v, lambda);
        (0..v.len()).map(|j| -u[j] * vx[j] + lambda * v[j] * v[j] + i).collect()
    }
}

/// Fourth-order first derivative with one-sided stencils at both ends.
fn fd_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let c = 1.0 / (12.0 * h);
    let mut d = vec![0.0; n];
    d[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    d[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for j in 2..n - 2 {
        d[j] = c * (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]);
    }
    let m = n - 1;
    d[m] = -c * (-25.0 * f[m] + 48.0 * f[m - 1] - 36.0 * f[m - 2] + 16.0 * f[m - 3] - 3.0 * f[m - 4]);
    d[m - 1] = -c * (-3.0 * f[m] - 10.0 * f[m - 1] + 18.0 * f[m - 2] - 6.0 * f[m - 3] + f[m - 4]);
    d
}

/// Applies the Fourier multiplier `mult(k)` (integer wavenumber `k`) to
/// periodic samples; the Nyquist mode is dropped.
fn spectral(f: &[f64], mult: impl Fn(f64) -> Complex<f64>) -> Vec<f64> {
    let n = f.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = f.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fwd.process(&mut buf);
    for (i, c) in buf.iter_mut().enumerate() {
        let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        *c = if 2 * i == n { Complex::new(0.0, 0.0) } else { *c * mult(k) };
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// One RK4 step of size `dt`.
pub fn mol_step(state: &MolState, lambda: f64, dt: f64) -> Result<MolState> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("time step {dt} must be positive")));
    }
    if state.max_abs() > BLOWUP_GUARD {
        return Err(Error::BlowupGuard { t: state.t });
    }
    let limit = state.cfl_limit();
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let ops = Ops::new(state.boundary, state.cells());
    let v = &state.v;
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { v.iter().zip(k).map(|(x, y)| x + a * y).collect() };
    let k1 = ops.rhs(v, lambda);
    let k2 = ops.rhs(&axpy(0.5 * dt, &k1), lambda);
    let k3 = ops.rhs(&axpy(0.5 * dt, &k2), lambda);
    let k4 = ops.rhs(&axpy(dt, &k3), lambda);
    let next: Vec<f64> = (0..v.len())
        .map(|j| v[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
        .collect();
    let t = state.t + dt;
    if next.iter().any(|x| !x.is_finite() || x.abs() > BLOWUP_GUARD) {
        return Err(Error::BlowupGuard { t });
    }
    Ok(MolState {
        i_term: ops.nonlocal(&next, lambda),
        v: next,
        t,
        boundary: state.boundary,
        grid: state.grid.clone(),
    })
}

/// Integrates from `t = 0` to `t_end` on `n` cells with steps at the CFL
/// limit (capped at `max_dt`).
pub fn mol_solve(profile: &InitialProfile, lambda: f64, n: usize, t_end: f64, max_dt: f64) -> Result<MolState> {
    mol_advance(MolState::new(profile, lambda, n)?, lambda, t_end, max_dt)
}

/// Advances `state` to `t_end` with steps at the CFL limit (capped at `max_dt`).
pub fn mol_advance(mut s: MolState, lambda: f64, t_end: f64, max_dt: f64) -> Result<MolState> {
    if !(t_end >= s.t) || !(max_dt > 0.0) {
        return Err(Error::Parameter(format!(
            "need t_end >= t = {} and max_dt > 0 (got {t_end}, {max_dt})",
            s.t
        )));
    }
    while s.t < t_end {
        let remaining = t_end - s.t;
        let mut dt = s.cfl_limit().min(max_dt);
        // Avoid a sliver step at the end.
        if remaining <= dt {
            dt = remaining;
        } else if remaining < 2.0 * dt {
            dt = 0.5 * remaining;
        }
        s = mol_step(&s, lambda, dt)?;
        if remaining == dt {
            s.t = t_end;
        }
    }
    Ok(s)
}

/// Clock value with `t(eta) = t`, by safeguarded Newton on `dt/deta = K0^(2 lambda)`.
pub fn eta_at_time(sol: &ExactSolution, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t = {t} must be non-negative")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let es = sol.eta_star();
    let (mut lo, mut hi) = (0.0, es);
    let mut eta = t.min(0.5 * es);
    for _ in 0..100 {
        let eps = sol.eps_of_eta(eta);
        let r = sol.time_of_eta(eta)? - t;
        if r.abs() <= 1e-14 * t.max(1.0) {
            return Ok(eta);
        }
        if r > 0.0 {
            hi = eta;
        } else {
            lo = eta;
        }
        let slope = sol.kbar0_eps(eps)?.powf(2.0 * sol.lambda());
        let next = eta - r / slope;
        eta = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * es {
            return Ok(eta);
        }
    }
    Err(Error::NonConvergence { terms: 100 })
}

/// Node-wise comparison of a method-of-lines state with the representation
/// formula at the same time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleComparison {
    pub t: f64,
    pub eta: f64,
    pub max_error: f64,
    pub max_abs_ux: f64,
    /// `I(t)` from the grid and `-(lambda + 1) E` from the formula.
    pub nonlocal_mol: f64,
    pub nonlocal_exact: f64,
}

pub fn compare_with_formula(state: &MolState, profile: &Arc<InitialProfile>, lambda: f64) -> Result<OracleComparison> {
    let sol = ExactSolution::new(profile.clone(), lambda)?;
    let eta = eta_at_time(&sol, state.t)?;
    let frame = sol.frame(eta)?;
    let mut max_error = 0.0f64;
    let mut max_abs = 0.0f64;
    for (x, v) in state.grid.iter().zip(&state.v) {
        let a = frame.inverse_characteristic(*x)?;
        let ux = frame.ux(a);
        max_error = max_error.max((ux - v).abs());
        max_abs = max_abs.max(ux.abs());
    }
    let energy = crate::diagnostics::energy(&frame)?;
    Ok(OracleComparison {
        t: state.t,
        eta,
        max_error,
        max_abs_ux: max_abs,
        nonlocal_mol: state.i_term,
        nonlocal_exact: -(lambda + 1.0) * energy,
    })
}

/// `u_x` for the inviscid Burgers equation (`lambda = -1`) by characteristics:
/// `x = alpha + t u0(alpha)`, `u_x = u0'(alpha) / (1 + t u0'(alpha))`.
pub fn burgers_ux(profile: &InitialProfile, x: f64, t: f64) -> Result<f64> {
    // The foot alpha(x) is increasing in x while 1 + t u0' > 0.
    let g = |a: f64| a + t * profile.u0(a) - x;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return Err(Error::Domain(format!("x = {x} is not reached at t = {t}")));
    }
    let mut a = x;
    for _ in 0..200 {
        let r = g(a);
        if r.abs() < 1e-15 || hi - lo < 1e-16 {
            break;
        }
        if r > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        let d = 1.0 + t * profile.u0p(a);
        if d <= 0.0 {
            return Err(Error::Domain(format!("characteristics have crossed before t = {t}")));
        }
        let next = a - r / d;
        a = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    let d = profile.u0p(a);
    Ok(d / (1.0 + t * d))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub eta: f64,
    pub max_residual: f64,
    /// `max(1, max u_x^2)` over the sampled points.
    pub scale: f64,
}

/// `max |u_xt + u u_xx - lambda u_x^2 - I|` at the Eulerian images of
/// `alphas`, with `u_xt` and `u = gamma_t` from three frames spaced by
/// `h_eta` in the clock.
pub fn residual(frame: &SolutionFrame, alphas: &[f64], h_eta: f64) -> Result<ResidualReport> {
    let sol = frame.solution();
    let es = sol.eta_star();
    let eta = frame.eta;
    if !(h_eta > 1e-10 * es) {
        return Err(Error::FrameSpacing(format!("clock step {h_eta} is too small")));
    }
    if frame.eps < RESIDUAL_MIN_EPS {
        return Err(Error::FrameSpacing(format!(
            "J(active) = {} is below {RESIDUAL_MIN_EPS}: too close to eta*",
            frame.eps
        )));
    }
    let etas = if eta - h_eta >= 0.0 {
        [eta - h_eta, eta, eta + h_eta]
    } else {
        [eta, eta + h_eta, eta + 2.0 * h_eta]
    };
    if sol.eps_of_eta(etas[2]) < RESIDUAL_MIN_EPS {
        return Err(Error::FrameSpacing(format!("clock step {h_eta} reaches too close to eta*")));
    }
    let frames = etas
        .iter()
        .map(|&e| if e == eta { Ok(None) } else { sol.frame(e).map(Some) })
        .collect::<Result<Vec<_>>>()?;
    let get = |i: usize| frames[i].as_ref().unwrap_or(frame);
    let mut times = [0.0; 3];
    for (i, t) in times.iter_mut().enumerate() {
        if etas[i] > 0.0 {
            *t = get(i).time()?;
        }
    }
    let centre = etas.iter().position(|&e| e == eta).unwrap();
    let w = lagrange_derivative_weights(&times, centre);
    let lambda = frame.lambda();
    let i_term = -(lambda + 1.0) * crate::diagnostics::energy(frame)?;
    let mut max_residual = 0.0f64;
    let mut scale = 1.0f64;
    for &a in alphas {
        let x = frame.characteristic(a)?;
        let mut ux_t = 0.0;
        let mut u = 0.0;
        for i in 0..3 {
            let f = get(i);
            let ux = if i == centre { frame.ux(a) } else { f.ux(f.inverse_characteristic(x)?) };
            ux_t += w[i] * ux;
            u += w[i] * f.characteristic(a)?;
        }
        let ux = frame.ux(a);
        let r = ux_t + u * frame.uxx(a) - lambda * ux * ux - i_term;
        max_residual = max_residual.max(r.abs());
        scale = scale.max(ux * ux);
    }
    Ok(ResidualReport {
        eta,
        max_residual,
        scale,
    })
}

/// [`residual`] at each of `steps`, keeping per point the smallest value.
///
/// The time difference carries truncation error that grows with the step
/// and roundoff that grows as it shrinks; where characteristics compress the
/// best step differs from point to point by orders of magnitude.
pub fn residual_refined(frame: &SolutionFrame, alphas: &[f64], steps: &[f64]) -> Result<ResidualReport> {
    if steps.is_empty() {
        return Err(Error::Parameter("need at least one clock step".into()));
    }
    let mut max_residual = 0.0f64;
    let mut scale = 1.0f64;
    for &a in alphas {
        let mut best = f64::INFINITY;
        for &h in steps {
            let r = residual(frame, &[a], h)?;
            best = best.min(r.max_residual);
            scale = scale.max(r.scale);
        }
        max_residual = max_residual.max(best);
    }
    Ok(ResidualReport {
        eta: frame.eta,
        max_residual,
        scale,
    })
}

/// Weights `w` with `f'(t[c]) ~ sum w_i f(t_i)` for three distinct nodes.
fn lagrange_derivative_weights(t: &[f64; 3], c: usize) -> [f64; 3] {
    let mut w = [0.0; 3];
    for i in 0..3 {
        if i == c {
            w[i] = (0..3).filter(|&j| j != i).map(|j| 1.0 / (t[i] - t[j])).sum();
        } else {
            let others: f64 = (0..3).filter(|&j| j != i).map(|j| t[i] - t[j]).product();
            let num: f64 = (0..3).filter(|&j| j != i && j != c).map(|j| t[c] - t[j]).product();
            w[i] = num / others;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::builtin;

    #[test]
    fn zero_state_is_fixed() {
        let s = MolState {
            boundary: Boundary::Periodic,
            grid: (0..256).map(|j| j as f64 / 256.0).collect(),
            v: vec![0.0; 256],
            t: 0.0,
            i_term: 0.0,
        };
        let next = mol_step(&s, 2.0, 1e-3).unwrap();
        assert!(next.v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn derivative_weights_match_central_difference() {
        let w = lagrange_derivative_weights(&[0.0, 1.0, 2.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = lagrange_derivative_weights(&[0.0, 1.0, 2.0], 0);
        assert!((w[0] + 1.5).abs() < 1e-15 && (w[1] - 2.0).abs() < 1e-15 && (w[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn operators_are_fourth_order_on_polynomials() {
        let n = 256;
        let ops = Ops::new(Boundary::Dirichlet, n);
        let x: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        let f: Vec<f64> = x.iter().map(|x| x.powi(3)).collect();
        let d = ops.derivative(&f);
        let u = ops.antiderivative(&f);
        for j in 0..=n {
            assert!((d[j] - 3.0 * x[j] * x[j]).abs() < 1e-11);
            assert!((u[j] - x[j].powi(4) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_antiderivative_of_cosine() {
        let n = 256;
        let ops = Ops::new(Boundary::Periodic, n);
        let tau = 2.0 * std::f64::consts::PI;
        let f: Vec<f64> = (0..n).map(|j| (tau * j as f64 / n as f64).cos()).collect();
        let u = ops.antiderivative(&f);
        for (j, uj) in u.iter().enumerate() {
            assert!((uj - (tau * j as f64 / n as f64).sin() / tau).abs() < 1e-13);
        }
    }

    #[test]
    fn agrees_with_formula_on_polynomial_data() {
        let p = Arc::new(builtin("ex6_linear").unwrap());
        let s = mol_solve(&p, 1.0, 256, 0.05, 1.0).unwrap();
        let c = compare_with_formula(&s, &p, 1.0).unwrap();
        assert!(c.max_error < 1e-9, "{c:?}");
        assert!((c.nonlocal_mol - c.nonlocal_exact).abs() < 1e-8);
        assert!(s.mean().abs() < 1e-10);
    }

    #[test]
    fn burgers_by_characteristics() {
        let p = builtin("ex5_mixed").unwrap();
        let s = mol_solve(&p, -1.0, 512, 0.1, 1.0).unwrap();
        for (x, v) in s.grid.iter().zip(&s.v) {
            assert!((burgers_ux(&p, *x, 0.1).unwrap() - v).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_is_small_for_exact_frames() {
        let p = Arc::new(builtin("ex6_linear").unwrap());
        let sol = ExactSolution::new(p, 1.0).unwrap();
        let alphas: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
        for eta in [0.0, 1.0] {
            let r = residual(&sol.frame(eta).unwrap(), &alphas, 1e-4).unwrap();
            assert!(r.max_residual < 1e-6 * r.scale, "{r:?}");
        }
        let f = sol.frame(1.9999).unwrap();
        assert!(matches!(residual(&f, &alphas, 1e-4), Err(Error::FrameSpacing(_))));
    }

    #[test]
    fn cfl_violation_is_reported() {
        let p = builtin("ex6_linear").unwrap();
        let s = MolState::new(&p, 1.0, 256).unwrap();
        assert!(matches!(mol_step(&s, 1.0, 1.0), Err(Error::Cfl { .. })));
    }
}
