//! Representation-formula solution along characteristics.
//!
//! Everything is driven by the kernel `J(alpha) = 1 - lambda eta u0'(alpha)`.
//! Frames are parametrized by `eps = J(active extremum) = 1 - eta/eta*`, and
//! `J` is rebuilt as `eps + c * gap(alpha)` from the profile's
//! cancellation-free gaps, with `c = (1 - eps)/|active extreme|`. That keeps `J`
//! accurate to full relative precision even when `eps` is far below machine
//! epsilon relative to 1.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::profiles::{ExtremumKind, InitialProfile};
use crate::quadrature::{integrate, QuadratureSpec};

/// Growth factor between consecutive graded breakpoints near an extremum.
const GRADING: f64 = 4.0;
/// Frames with `eta` at or below this use the regular form of `u_x` even
/// when the singular-prefactor form is requested.
pub const SMALL_ETA: f64 = 1e-8;

/// A point of the Lagrangian domain with everything the integrands need.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub alpha: f64,
    pub u0p: f64,
    pub j: f64,
}

#[derive(Clone, Copy)]
struct Kernel<'a> {
    profile: &'a InitialProfile,
    positive: bool,
    eps: f64,
    c: f64,
    lam_eta: f64,
}

impl<'a> Kernel<'a> {
    fn new(profile: &'a InitialProfile, lambda: f64, eps: f64) -> Self {
        let active = profile.active_value(lambda);
        Self {
            profile,
            positive: lambda > 0.0,
            eps,
            c: (1.0 - eps) / active.abs(),
            lam_eta: (1.0 - eps) / active,
        }
    }

    fn j(&self, alpha: f64) -> f64 {
        let gap = if self.positive {
            self.profile.gap_below_max(alpha)
        } else {
            self.profile.gap_above_min(alpha)
        };
        self.eps + self.c * gap
    }

    fn point(&self, alpha: f64) -> Point {
        Point {
            alpha,
            u0p: self.profile.u0p(alpha),
            j: self.j(alpha),
        }
    }

    fn anchored(&self, idx: usize, h: f64, active: bool) -> Point {
        let e = self.profile.extrema[idx];
        let gap = self.profile.gap_at(idx, h);
        let u0p = match e.kind {
            ExtremumKind::Max => self.profile.m0_max - gap,
            ExtremumKind::Min => self.profile.m0_min + gap,
        };
        let j = if active {
            self.eps + self.c * gap
        } else {
            1.0 - self.lam_eta * u0p
        };
        Point {
            alpha: (e.location + h).clamp(0.0, 1.0),
            u0p,
            j,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum SegMap {
    Plain,
    /// `alpha = anchor + dir * len * v^m` for `v` in `[0, 1]`.
    Anchored {
        idx: usize,
        anchor: f64,
        dir: f64,
        len: f64,
        m: f64,
        active: bool,
    },
}

#[derive(Debug, Clone)]
struct Segment {
    lo: f64,
    hi: f64,
    map: SegMap,
    /// Panel edges in the segment variable, from 0 to 1.
    nodes: Vec<f64>,
}

impl Segment {
    /// Segment variable for a given `alpha` inside the segment.
    fn var_of(&self, alpha: f64) -> f64 {
        match self.map {
            SegMap::Plain => ((alpha - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0),
            SegMap::Anchored {
                anchor, len, m, ..
            } => ((alpha - anchor).abs() / len).min(1.0).powf(1.0 / m),
        }
    }

    fn reversed(&self) -> bool {
        matches!(self.map, SegMap::Anchored { dir, .. } if dir < 0.0)
    }
}

/// Panel layout for integrals over `[0, 1]` at one value of `eps`.
#[derive(Debug, Clone)]
struct Plan {
    segments: Vec<Segment>,
}

impl Plan {
    fn new(profile: &InitialProfile, lambda: f64, eps: f64, split_points: &[f64]) -> Self {
        let mut cuts: Vec<f64> = vec![0.0, 1.0];
        cuts.extend(profile.extrema.iter().map(|e| e.location));
        cuts.extend(split_points.iter().copied().filter(|&p| p > 0.0 && p < 1.0));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let kernel = Kernel::new(profile, lambda, eps);
        let active_kind = if lambda > 0.0 {
            ExtremumKind::Max
        } else {
            ExtremumKind::Min
        };
        let anchor_at = |x: f64| profile.extrema.iter().position(|e| e.location == x);

        let mut segments = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            for (lo, hi, end, dir) in [(a, mid, a, 1.0), (mid, b, b, -1.0)] {
                let map = match anchor_at(end) {
                    Some(idx) => {
                        let e = profile.extrema[idx];
                        SegMap::Anchored {
                            idx,
                            anchor: end,
                            dir,
                            len: hi - lo,
                            m: if e.q < 2.0 { 2.0 / e.q } else { 1.0 },
                            active: e.kind == active_kind,
                        }
                    }
                    None => SegMap::Plain,
                };
                let nodes = match map {
                    SegMap::Anchored {
                        idx,
                        len,
                        m,
                        active: true,
                        ..
                    } => graded_nodes(&kernel, idx, len, m),
                    _ => vec![0.0, 1.0],
                };
                segments.push(Segment { lo, hi, map, nodes });
            }
        }
        Plan { segments }
    }
}

/// Panel edges in `v` that resolve the peak of width
/// `(eps/(c |C|))^(1/q)` next to an active extremum.
fn graded_nodes(kernel: &Kernel<'_>, idx: usize, len: f64, m: f64) -> Vec<f64> {
    let e = kernel.profile.extrema[idx];
    let inner = if kernel.eps > 0.0 {
        let width = (kernel.eps / (kernel.c * e.coeff.abs())).powf(1.0 / e.q);
        (width / len).powf(1.0 / m) / (GRADING * GRADING)
    } else {
        GRADING.powi(-30)
    };
    let mut nodes = vec![1.0];
    let mut v = 1.0 / GRADING;
    while v > inner.max(1e-300) {
        nodes.push(v);
        v /= GRADING;
    }
    nodes.push(0.0);
    nodes.reverse();
    nodes
}

/// Integrals of point functions over a [`Plan`].
struct Integrator<'a> {
    kernel: Kernel<'a>,
    plan: &'a Plan,
    spec: &'a QuadratureSpec,
}

impl<'a> Integrator<'a> {
    fn panel<F: Fn(&Point) -> f64>(&self, seg: &Segment, f: &F, w0: f64, w1: f64) -> Result<f64> {
        if w0 == w1 {
            return Ok(0.0);
        }
        let spec = self.spec;
        let k = &self.kernel;
        let est = match seg.map {
            SegMap::Plain => {
                let width = seg.hi - seg.lo;
                integrate(|s| f(&k.point(seg.lo + width * s)) * width, w0, w1, spec)?
            }
            SegMap::Anchored {
                idx,
                dir,
                len,
                m,
                active,
                ..
            } => integrate(
                |v| {
                    let h = len * v.powf(m);
                    let jac = if m == 1.0 { len } else { len * m * v.powf(m - 1.0) };
                    if jac == 0.0 {
                        return 0.0;
                    }
                    f(&k.anchored(idx, dir * h, active)) * jac
                },
                w0,
                w1,
                spec,
            )?,
        };
        Ok(est.value)
    }

    /// Integral over each panel of every segment.
    fn panels<F: Fn(&Point) -> f64>(&self, f: &F) -> Result<Vec<Vec<f64>>> {
        self.plan
            .segments
            .iter()
            .map(|seg| {
                seg.nodes
                    .windows(2)
                    .map(|w| self.panel(seg, f, w[0], w[1]))
                    .collect()
            })
            .collect()
    }

    fn total<F: Fn(&Point) -> f64>(&self, f: &F) -> Result<f64> {
        let mut sum = 0.0;
        for seg in &self.plan.segments {
            for w in seg.nodes.windows(2) {
                sum += self.panel(seg, f, w[0], w[1])?;
            }
        }
        Ok(sum)
    }
}

/// Cumulative integrals of one weight at every panel edge.
#[derive(Debug, Clone)]
struct CumulativeTable {
    /// Per segment: integral over `[0, node_k]` in the segment variable.
    inner: Vec<Vec<f64>>,
    /// Integral over `[0, seg.lo]` in alpha.
    before: Vec<f64>,
    total: f64,
}

impl CumulativeTable {
    fn new(panels: Vec<Vec<f64>>) -> Self {
        let mut inner = Vec::with_capacity(panels.len());
        let mut before = Vec::with_capacity(panels.len());
        let mut acc = 0.0;
        for p in panels {
            let mut c = Vec::with_capacity(p.len() + 1);
            let mut s = 0.0;
            c.push(0.0);
            for v in &p {
                s += v;
                c.push(s);
            }
            before.push(acc);
            acc += s;
            inner.push(c);
        }
        Self {
            inner,
            before,
            total: acc,
        }
    }
}

/// The representation-formula solution for a profile and a value of lambda.
#[derive(Clone)]
pub struct ExactSolution {
    profile: Arc<InitialProfile>,
    lambda: f64,
    eta_star: f64,
    spec: QuadratureSpec,
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSolution")
            .field("profile", &self.profile.name)
            .field("lambda", &self.lambda)
            .field("eta_star", &self.eta_star)
            .finish()
    }
}

impl ExactSolution {
    pub fn new(profile: Arc<InitialProfile>, lambda: f64) -> Result<Self> {
        if lambda == 0.0 {
            return Err(Error::Domain(
                "lambda = 0 has no representation formula in this form".into(),
            ));
        }
        let eta_star = profile.eta_star(lambda)?;
        Ok(Self {
            profile,
            lambda,
            eta_star,
            spec: QuadratureSpec::default(),
        })
    }

    pub fn with_spec(mut self, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        self.spec = spec;
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta_star(&self) -> f64 {
        self.eta_star
    }

    pub fn profile(&self) -> &Arc<InitialProfile> {
        &self.profile
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    pub fn eps_of_eta(&self, eta: f64) -> f64 {
        1.0 - eta / self.eta_star
    }

    pub fn eta_of_eps(&self, eps: f64) -> f64 {
        self.eta_star * (1.0 - eps)
    }

    fn plan(&self, eps: f64) -> Plan {
        Plan::new(&self.profile, self.lambda, eps, &self.spec.split_points)
    }

    fn check_eps(&self, eps: f64) -> Result<()> {
        if !(eps <= 1.0) || eps.is_nan() {
            return Err(Error::Domain(format!(
                "eta = {} is negative",
                self.eta_of_eps(eps)
            )));
        }
        if eps < self.spec.singularity_guard {
            return Err(Error::OutOfRange(format!(
                "J at the active extremum would be {eps:e}, below the guard {:e} (eta* = {})",
                self.spec.singularity_guard, self.eta_star
            )));
        }
        Ok(())
    }

    /// `int_0^1 f(point) dalpha` at the given `eps`.
    pub fn integrate_points<F: Fn(&Point) -> f64>(&self, eps: f64, f: F) -> Result<f64> {
        let plan = self.plan(eps);
        Integrator {
            kernel: Kernel::new(&self.profile, self.lambda, eps),
            plan: &plan,
            spec: &self.spec,
        }
        .total(&f)
    }

    /// `int_0^1 J^-b` at `eps = J(active)`; `eps = 0` is accepted when the
    /// integral converges there.
    pub fn jpow_eps(&self, eps: f64, b: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Domain(format!("eps = {eps} outside [0, 1]")));
        }
        if b == 0.0 || eps == 1.0 {
            return Ok(1.0);
        }
        if eps == 0.0 && b > 0.0 {
            if let Some(e) = self
                .profile
                .active_extrema(self.lambda)
                .iter()
                .find(|e| b * e.q >= 1.0)
            {
                return Err(Error::Divergent(format!(
                    "int J^-{b} at eta* (q = {} at alpha = {})",
                    e.q, e.location
                )));
            }
        }
        self.integrate_points(eps, |p| p.j.powf(-b))
    }

    /// `int_0^1 J^-b` at clock value `eta`, allowed up to and including
    /// `eta*` when the integral converges there.
    pub fn integrate_jpow(&self, eta: f64, b: f64) -> Result<f64> {
        if !(eta >= 0.0) || eta > self.eta_star {
            return Err(Error::Domain(format!(
                "eta = {eta} outside [0, eta* = {}]",
                self.eta_star
            )));
        }
        let eps = if eta == self.eta_star {
            0.0
        } else {
            self.eps_of_eta(eta)
        };
        if eps > 0.0 && eps < self.spec.singularity_guard {
            return Err(Error::OutOfRange(format!(
                "eta = {eta} is within the singularity guard of eta*"
            )));
        }
        self.jpow_eps(eps, b)
    }

    /// `K0 = int J^(-1/lambda)` at `eps`.
    pub fn kbar0_eps(&self, eps: f64) -> Result<f64> {
        self.jpow_eps(eps, 1.0 / self.lambda)
    }

    pub fn frame(&self, eta: f64) -> Result<SolutionFrame> {
        if !(eta >= 0.0) {
            return Err(Error::Domain(format!("eta = {eta} must be non-negative")));
        }
        if eta >= self.eta_star {
            return Err(Error::OutOfRange(format!(
                "eta = {eta} is not below eta* = {}",
                self.eta_star
            )));
        }
        self.frame_at_eps(self.eps_of_eta(eta))
    }

    /// Frame at `J(active) = eps`.
    pub fn frame_at_eps(&self, eps: f64) -> Result<SolutionFrame> {
        self.check_eps(eps)?;
        SolutionFrame::build(self.clone(), eps)
    }

    /// Physical time `t(eta) = int_0^eta K0(mu)^(2 lambda) dmu`.
    pub fn time_of_eta(&self, eta: f64) -> Result<f64> {
        if !(eta >= 0.0) || eta >= self.eta_star {
            return Err(Error::OutOfRange(format!(
                "eta = {eta} outside [0, eta* = {})",
                self.eta_star
            )));
        }
        self.time_of_eps(self.eps_of_eta(eta))
    }

    /// `t` at `J(active) = eps`.
    pub fn time_of_eps(&self, eps: f64) -> Result<f64> {
        self.check_eps(eps)?;
        self.time_between_eps(1.0, eps)
    }

    /// `int K0^(2 lambda) deta` between the clock values with
    /// `J(active) = eps_hi` and `eps_lo` (`eps_hi >= eps_lo`).
    ///
    /// Above `eps = 1/2` the integral runs in `eta`; below, in
    /// `y = -ln eps`, which turns the approach to `eta*` into a half-line of
    /// slowly varying integrand.
    pub fn time_between_eps(&self, eps_hi: f64, eps_lo: f64) -> Result<f64> {
        if !(eps_hi >= eps_lo) || !(eps_lo > 0.0) || eps_hi > 1.0 {
            return Err(Error::Domain(format!(
                "bad clock interval eps in [{eps_lo}, {eps_hi}]"
            )));
        }
        let spec = self.outer_spec();
        let two_lambda = 2.0 * self.lambda;
        let es = self.eta_star;
        let mut total = 0.0;
        let split = 0.5;
        if eps_hi > split {
            let lo = eps_lo.max(split);
            let integrand = |eps: f64| match self.kbar0_eps(eps) {
                Ok(k) => k.powf(two_lambda),
                Err(_) => f64::NAN,
            };
            total += es * integrate(integrand, lo, eps_hi, &spec)?.value;
        }
        if eps_lo < split {
            let y0 = -(eps_hi.min(split)).ln();
            let y1 = -eps_lo.ln();
            let mut pts = Vec::new();
            let mut y = y0.ceil();
            while y < y1 {
                if y > y0 {
                    pts.push(y);
                }
                y += 1.0;
            }
            let integrand = |y: f64| {
                let eps = (-y).exp();
                match self.kbar0_eps(eps) {
                    Ok(k) => eps * k.powf(two_lambda),
                    Err(_) => f64::NAN,
                }
            };
            total += es * integrate(integrand, y0, y1, &spec.with_split_points(pts))?.value;
        }
        Ok(total)
    }

    /// Tolerances for integrals whose integrand is itself a quadrature.
    fn outer_spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: self.spec.abs_tol * 10.0,
            rel_tol: self.spec.rel_tol * 10.0,
            split_points: Vec::new(),
            ..self.spec.clone()
        }
    }

    /// Table of `(eta, t)` with knots geometrically refined toward `eta*`.
    pub fn eta_time_map(&self, knots: usize, eps_min: f64, t_star: Option<f64>) -> Result<EtaTimeMap> {
        EtaTimeMap::build(self.clone(), knots, eps_min, t_star)
    }
}

/// Solution data at one value of the clock `eta`.
pub struct SolutionFrame {
    solution: ExactSolution,
    pub eta: f64,
    /// `J` at the active extremum, `1 - eta/eta*`.
    pub eps: f64,
    pub kbar0: f64,
    pub kbar1: f64,
    /// `int u0' J^(-1 - 1/lambda)`.
    pub flux: f64,
    plan: Plan,
    gamma_table: CumulativeTable,
    time: OnceLock<f64>,
}

impl std::fmt::Debug for SolutionFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolutionFrame")
            .field("lambda", &self.solution.lambda)
            .field("eta", &self.eta)
            .field("eps", &self.eps)
            .field("kbar0", &self.kbar0)
            .field("kbar1", &self.kbar1)
            .finish()
    }
}

impl SolutionFrame {
    fn build(solution: ExactSolution, eps: f64) -> Result<Self> {
        let plan = solution.plan(eps);
        let lambda = solution.lambda;
        let inv = 1.0 / lambda;
        let (table, kbar1, flux) = {
            let integ = Integrator {
                kernel: Kernel::new(&solution.profile, lambda, eps),
                plan: &plan,
                spec: &solution.spec,
            };
            let table = CumulativeTable::new(integ.panels(&|p: &Point| p.j.powf(-inv))?);
            let kbar1 = integ.total(&|p: &Point| p.j.powf(-1.0 - inv))?;
            let flux = integ.total(&|p: &Point| p.u0p * p.j.powf(-1.0 - inv))?;
            (table, kbar1, flux)
        };
        Ok(Self {
            eta: solution.eta_of_eps(eps),
            eps,
            kbar0: table.total,
            kbar1,
            flux,
            plan,
            gamma_table: table,
            time: OnceLock::new(),
            solution,
        })
    }

    pub fn solution(&self) -> &ExactSolution {
        &self.solution
    }

    pub fn lambda(&self) -> f64 {
        self.solution.lambda
    }

    pub fn profile(&self) -> &InitialProfile {
        &self.solution.profile
    }

    fn kernel(&self) -> Kernel<'_> {
        Kernel::new(&self.solution.profile, self.solution.lambda, self.eps)
    }

    fn integrator(&self) -> Integrator<'_> {
        Integrator {
            kernel: self.kernel(),
            plan: &self.plan,
            spec: &self.solution.spec,
        }
    }

    /// `lambda * eta`, formed without cancellation.
    pub fn lambda_eta(&self) -> f64 {
        (1.0 - self.eps) / self.solution.profile.active_value(self.solution.lambda)
    }

    /// Physical time of the frame (computed on first use).
    pub fn time(&self) -> Result<f64> {
        if let Some(t) = self.time.get() {
            return Ok(*t);
        }
        let t = self.solution.time_between_eps(1.0, self.eps)?;
        Ok(*self.time.get_or_init(|| t))
    }

    /// Records a time computed elsewhere (e.g. by an [`EtaTimeMap`]).
    pub fn set_time(&self, t: f64) {
        let _ = self.time.set(t);
    }

    /// `J(alpha) = 1 - lambda eta u0'(alpha)`.
    pub fn jac_j(&self, alpha: f64) -> f64 {
        self.kernel().j(alpha)
    }

    pub fn point(&self, alpha: f64) -> Point {
        self.kernel().point(alpha)
    }

    /// `int_0^1 f(point) dalpha` on this frame's panel layout.
    pub fn integrate<F: Fn(&Point) -> f64>(&self, f: F) -> Result<f64> {
        self.integrator().total(&f)
    }

    /// `K_i = int J^-(i + 1/lambda)`.
    pub fn kbar(&self, i: u32) -> Result<f64> {
        match i {
            0 => Ok(self.kbar0),
            1 => Ok(self.kbar1),
            _ => {
                let b = i as f64 + 1.0 / self.lambda();
                self.integrate(|p| p.j.powf(-b))
            }
        }
    }

    /// `u_x` along the characteristic from `alpha`:
    /// `K0^(-2 lambda) (u0'/J - F/K0)` with `F = int u0' J^(-1 - 1/lambda)`.
    pub fn ux(&self, alpha: f64) -> f64 {
        self.ux_at(&self.point(alpha))
    }

    pub fn ux_at(&self, p: &Point) -> f64 {
        (p.u0p / p.j - self.flux / self.kbar0) * self.kbar0.powf(-2.0 * self.lambda())
    }

    /// `u_x` in the form `(1/J - K1/K0) / (lambda eta K0^(2 lambda))`, which
    /// has a removable singularity at `eta = 0`; below [`SMALL_ETA`] the
    /// regular form is returned instead.
    pub fn ux_main(&self, alpha: f64) -> f64 {
        if self.eta <= SMALL_ETA {
            return self.ux(alpha);
        }
        let j = self.jac_j(alpha);
        (1.0 / j - self.kbar1 / self.kbar0) / (self.lambda_eta() * self.kbar0.powf(2.0 * self.lambda()))
    }

    /// `u_xx = u0'' J^-(2 - 1/lambda) K0^(1 - 2 lambda)`.
    pub fn uxx(&self, alpha: f64) -> f64 {
        let l = self.lambda();
        let u2 = self.profile().u0pp(alpha);
        if u2 == 0.0 {
            return 0.0;
        }
        u2 * self.jac_j(alpha).powf(1.0 / l - 2.0) * self.kbar0.powf(1.0 - 2.0 * l)
    }

    /// Jacobian of the flow map, `J^(-1/lambda)/K0`.
    pub fn gamma_alpha(&self, alpha: f64) -> f64 {
        self.gamma_alpha_at(&self.point(alpha))
    }

    pub fn gamma_alpha_at(&self, p: &Point) -> f64 {
        p.j.powf(-1.0 / self.lambda()) / self.kbar0
    }

    fn segment_of(&self, alpha: f64) -> usize {
        let segs = &self.plan.segments;
        segs.iter()
            .position(|s| alpha <= s.hi)
            .unwrap_or(segs.len() - 1)
    }

    /// Integral of the Jacobian weight over `[seg.lo, alpha]`, unnormalized.
    fn partial_in_segment(&self, k: usize, alpha: f64) -> Result<f64> {
        let seg = &self.plan.segments[k];
        let w = seg.var_of(alpha);
        let q = self.cumulative_var(k, w)?;
        let total = *self.gamma_table.inner[k].last().unwrap();
        Ok(if seg.reversed() { total - q } else { q })
    }

    /// Integral of the Jacobian weight over `[0, w]` in the segment variable.
    fn cumulative_var(&self, k: usize, w: f64) -> Result<f64> {
        let seg = &self.plan.segments[k];
        let j = match seg.nodes.iter().rposition(|&n| n <= w) {
            Some(j) => j.min(seg.nodes.len() - 2),
            None => 0,
        };
        let inv = 1.0 / self.lambda();
        let rest = self
            .integrator()
            .panel(seg, &|p: &Point| p.j.powf(-inv), seg.nodes[j], w)?;
        Ok(self.gamma_table.inner[k][j] + rest)
    }

    /// Eulerian position `gamma(alpha) = int_0^alpha J^(-1/lambda) / K0`.
    pub fn characteristic(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} outside [0, 1]")));
        }
        if alpha == 0.0 {
            return Ok(0.0);
        }
        if alpha == 1.0 {
            return Ok(1.0);
        }
        let k = self.segment_of(alpha);
        let part = self.partial_in_segment(k, alpha)?;
        Ok(((self.gamma_table.before[k] + part) / self.gamma_table.total).clamp(0.0, 1.0))
    }

    /// Eulerian positions of the segment edges (every extremal location is
    /// one of them), exactly as accumulated by the panel sums.
    pub fn characteristic_of_extremum(&self, location: f64) -> Option<f64> {
        let segs = &self.plan.segments;
        if location == 1.0 {
            return Some(1.0);
        }
        segs.iter()
            .position(|s| s.lo == location)
            .map(|k| self.gamma_table.before[k] / self.gamma_table.total)
    }

    /// Lagrangian label of the Eulerian point `x`.
    pub fn inverse_characteristic(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        if x == 0.0 || x == 1.0 {
            return Ok(x);
        }
        let table = &self.gamma_table;
        let target = x * table.total;
        let k = (0..table.before.len())
            .rev()
            .find(|&k| table.before[k] <= target)
            .unwrap_or(0);
        let seg = &self.plan.segments[k];
        let seg_total = *table.inner[k].last().unwrap();
        let local = (target - table.before[k]).clamp(0.0, seg_total);
        // Target for the cumulative integral in the segment variable.
        let goal = if seg.reversed() { seg_total - local } else { local };
        let nodes = &seg.nodes;
        let cum = &table.inner[k];
        let j = (0..nodes.len() - 1)
            .rev()
            .find(|&j| cum[j] <= goal)
            .unwrap_or(0);
        let (mut lo, mut hi) = (nodes[j], nodes[j + 1]);
        let inv = 1.0 / self.lambda();
        let integ = self.integrator();
        let weight = |w: f64| -> f64 {
            let kernel = integ.kernel;
            match seg.map {
                SegMap::Plain => {
                    let width = seg.hi - seg.lo;
                    kernel.point(seg.lo + width * w).j.powf(-inv) * width
                }
                SegMap::Anchored {
                    idx,
                    dir,
                    len,
                    m,
                    active,
                    ..
                } => {
                    let jac = if m == 1.0 { len } else { len * m * w.powf(m - 1.0) };
                    kernel.anchored(idx, dir * len * w.powf(m), active).j.powf(-inv) * jac
                }
            }
        };
        let span = cum[j + 1] - cum[j];
        let mut w = if span > 0.0 {
            lo + (hi - lo) * ((goal - cum[j]) / span).clamp(0.0, 1.0)
        } else {
            0.5 * (lo + hi)
        };
        let tol = 1e-14 * table.total;
        for _ in 0..100 {
            let val = cum[j] + integ.panel(seg, &|p: &Point| p.j.powf(-inv), nodes[j], w)?;
            let r = val - goal;
            if r.abs() <= tol {
                break;
            }
            if r > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            let d = weight(w);
            let newton = w - r / d;
            w = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1e-300) {
                break;
            }
        }
        Ok(match seg.map {
            SegMap::Plain => seg.lo + (seg.hi - seg.lo) * w,
            SegMap::Anchored {
                anchor, dir, len, m, ..
            } => (anchor + dir * len * w.powf(m)).clamp(0.0, 1.0),
        })
    }

    /// `(M, m)`: `u_x` at a declared maximum and minimum, checked against a
    /// 1000-point grid.
    pub fn extrema(&self) -> Result<(f64, f64)> {
        let p = self.profile();
        let at = |loc: &[f64]| -> Result<f64> {
            loc.first()
                .map(|&a| self.ux(a))
                .ok_or_else(|| Error::Consistency(format!("{} declares no such extremum", p.name)))
        };
        let big = at(&p.maxima)?;
        let small = at(&p.minima)?;
        let n = 1000;
        for i in 0..=n {
            let v = self.ux(i as f64 / n as f64);
            if v > big + 1e-6 * big.abs().max(1e-12) || v < small - 1e-6 * small.abs().max(1e-12) {
                return Err(Error::Consistency(format!(
                    "grid value {v} at alpha = {} escapes [m, M] = [{small}, {big}]",
                    i as f64 / n as f64
                )));
            }
        }
        Ok((big, small))
    }
}

/// Tabulated `t(eta)` with monotone cubic interpolation.
#[derive(Debug, Clone)]
pub struct EtaTimeMap {
    solution: ExactSolution,
    /// `-ln eps` at the knots (0 at `eta = 0`).
    xs: Vec<f64>,
    etas: Vec<f64>,
    times: Vec<f64>,
    slopes: Vec<f64>,
    /// `None` when `t*` is infinite.
    pub t_star: Option<f64>,
}

impl EtaTimeMap {
    fn build(solution: ExactSolution, knots: usize, eps_min: f64, t_star: Option<f64>) -> Result<Self> {
        if knots < 3 {
            return Err(Error::Parameter("need at least 3 knots".into()));
        }
        if !(eps_min > 0.0 && eps_min < 1.0) {
            return Err(Error::Parameter(format!("eps_min = {eps_min} must lie in (0, 1)")));
        }
        solution.check_eps(eps_min)?;
        let ln_min = -eps_min.ln();
        let xs: Vec<f64> = (0..knots)
            .map(|k| ln_min * k as f64 / (knots - 1) as f64)
            .collect();
        let eps: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
        let pieces: Vec<f64> = {
            use rayon::prelude::*;
            (1..knots)
                .into_par_iter()
                .map(|k| solution.time_between_eps(eps[k - 1], eps[k]))
                .collect::<Result<_>>()?
        };
        let mut times = Vec::with_capacity(knots);
        times.push(0.0);
        for p in &pieces {
            let last = *times.last().unwrap();
            times.push(last + p);
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Consistency("t(eta) is not strictly increasing".into()));
        }
        // dt/dx = eta* eps K0^(2 lambda).
        let derivs: Vec<f64> = eps
            .iter()
            .map(|&e| Ok(solution.eta_star * e * solution.kbar0_eps(e)?.powf(2.0 * solution.lambda)))
            .collect::<Result<_>>()?;
        let slopes = pchip_slopes(&xs, &times, &derivs);
        let etas = eps.iter().map(|&e| solution.eta_of_eps(e)).collect();
        Ok(Self {
            solution,
            xs,
            etas,
            times,
            slopes,
            t_star,
        })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.etas.iter().copied().zip(self.times.iter().copied())
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Interpolated `t` at `eta` (no refinement).
    pub fn interpolate_time(&self, eta: f64) -> f64 {
        let eps = self.solution.eps_of_eta(eta).max(1e-300);
        let x = -eps.ln();
        let k = match self.xs.iter().rposition(|&v| v <= x) {
            Some(k) => k.min(self.xs.len() - 2),
            None => 0,
        };
        hermite(&self.xs, &self.times, &self.slopes, k, x)
    }

    /// `t(eta)`, exact up to quadrature error.
    pub fn time_of_eta(&self, eta: f64) -> Result<f64> {
        self.time_of_eps(self.solution.eps_of_eta(eta))
    }

    fn time_of_eps(&self, eps: f64) -> Result<f64> {
        self.solution.check_eps(eps)?;
        let x = -eps.ln();
        let k = match self.xs.iter().rposition(|&v| v <= x) {
            Some(k) => k,
            None => 0,
        };
        let e_k = (-self.xs[k]).exp();
        Ok(self.times[k] + self.solution.time_between_eps(e_k, eps)?)
    }

    /// Inverse map: the clock value with `|t(eta) - t| <= 1e-9 max(1, t)`.
    pub fn eta_of_time(&self, t: f64) -> Result<f64> {
        Ok(self.solution.eta_of_eps(self.eps_of_time(t)?))
    }

    /// Inverse map in terms of `eps = 1 - eta/eta*`.
    pub fn eps_of_time(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("t = {t} must be non-negative")));
        }
        if let Some(ts) = self.t_star {
            if t >= ts {
                return Err(Error::OutOfRange(format!("t = {t} is not below t* = {ts}")));
            }
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        let tol = 1e-9 * t.max(1.0);
        let n = self.xs.len();
        let (mut lo, mut hi, mut x);
        if t <= self.last_time() {
            let k = self.times.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
            lo = self.xs[k];
            hi = self.xs[k + 1];
            // Invert the monotone interpolant by bisection for a start value.
            let (mut a, mut b) = (lo, hi);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if hermite(&self.xs, &self.times, &self.slopes, k, m) < t {
                    a = m;
                } else {
                    b = m;
                }
            }
            x = 0.5 * (a + b);
        } else {
            lo = *self.xs.last().unwrap();
            let guard = -self.solution.spec.singularity_guard.ln();
            if !(guard > lo) {
                return Err(Error::OutOfRange(format!(
                    "t = {t} lies beyond the last tabulated time {}",
                    self.last_time()
                )));
            }
            let t_guard = self.time_of_eps((-guard).exp())?;
            if t > t_guard {
                return Err(Error::OutOfRange(format!(
                    "t = {t} needs J below the singularity guard (t = {t_guard} there)"
                )));
            }
            hi = guard;
            x = 0.5 * (lo + hi);
        }
        // Safeguarded Newton in x = -ln eps with dt/dx = eta* eps K0^(2 lambda).
        for _ in 0..60 {
            let eps = (-x).exp();
            let r = self.time_of_eps(eps)? - t;
            if r.abs() <= tol {
                return Ok(eps);
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.solution.eta_star * eps * self.solution.kbar0_eps(eps)?.powf(2.0 * self.solution.lambda);
            let newton = x - r / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 * hi.abs().max(1.0) {
                return Ok((-x).exp());
            }
        }
        Err(Error::NonConvergence { terms: 60 })
    }
}

/// Fritsch-Carlson limited slopes; `derivs` are exact end slopes.
fn pchip_slopes(xs: &[f64], ys: &[f64], derivs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let delta: Vec<f64> = (0..n - 1)
        .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
        .collect();
    let mut m: Vec<f64> = derivs.to_vec();
    for k in 0..n - 1 {
        if delta[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / delta[k];
        let b = m[k + 1] / delta[k];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[k] = tau * a * delta[k];
            m[k + 1] = tau * b * delta[k];
        }
    }
    m
}

fn hermite(xs: &[f64], ys: &[f64], ms: &[f64], k: usize, x: f64) -> f64 {
    let h = xs[k + 1] - xs[k];
    let s = (x - xs[k]) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * ys[k] + h10 * h * ms[k] + h01 * ys[k + 1] + h11 * h * ms[k + 1]
}

/// `int_0^1 J^-b dalpha` for the given profile, lambda and clock value.
pub fn integrate_jpow(
    profile: &Arc<InitialProfile>,
    lambda: f64,
    eta: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    ExactSolution::new(profile.clone(), lambda)?
        .with_spec(spec.clone())?
        .integrate_jpow(eta, b)
}

/// Physical time reached at clock value `eta`.
pub fn time_of_eta(lambda: f64, profile: &Arc<InitialProfile>, eta: f64) -> Result<f64> {
    ExactSolution::new(profile.clone(), lambda)?.time_of_eta(eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::builtin;

    fn sol(name: &str) -> ExactSolution {
        let p = Arc::new(builtin(name).unwrap());
        let l = p.suggested_lambda.unwrap();
        ExactSolution::new(p, l).unwrap()
    }

    fn ex1_k0(eta: f64) -> f64 {
        let at = (2.0 * eta / (eta - 6.0)).atanh();
        -(54.0 * (eta - 6.0) * eta - 81.0 * (2.0 - eta) * (6.0 + eta) * at) / (4.0 * (6.0 + eta) * eta.powi(3))
    }

    #[test]
    fn kernel_and_trivial_frame() {
        let s = sol("ex2_q5");
        let f = s.frame(0.25).unwrap();
        assert!((f.jac_j(0.0) - 0.5).abs() < 1e-15);
        let f0 = s.frame(0.0).unwrap();
        assert_eq!(f0.kbar0, 1.0);
        assert!((f0.ux(0.3) - s.profile().u0p(0.3)).abs() < 1e-12);
        assert_eq!(s.integrate_jpow(0.0, 3.7).unwrap(), 1.0);
    }

    #[test]
    fn ex1_closed_form() {
        let s = sol("ex1_q13");
        for &eta in &[0.5, 1.0, 1.5, 1.9] {
            let k = s.integrate_jpow(eta, 2.0).unwrap();
            assert!((k / ex1_k0(eta) - 1.0).abs() < 1e-9, "eta {eta}: {k}");
        }
        let k = s.integrate_jpow(2.0, 2.0).unwrap();
        assert!((k - 27.0 / 16.0).abs() < 1e-8, "{k}");
        assert!(matches!(s.integrate_jpow(2.0, 3.0), Err(Error::Divergent(_))));
    }

    #[test]
    fn characteristic_round_trip() {
        let s = sol("ex5_mixed");
        let f = s.frame(20.0).unwrap();
        for &a in &[0.05, 0.3, 0.36210065665931, 0.5, 0.97, 0.9999] {
            let x = f.characteristic(a).unwrap();
            let back = f.inverse_characteristic(x).unwrap();
            assert!((back - a).abs() < 1e-9, "{a} -> {x} -> {back}");
        }
        assert_eq!(f.characteristic(1.0).unwrap(), 1.0);
    }

    #[test]
    fn time_map_round_trip() {
        let s = sol("ex2_q5");
        let map = s.eta_time_map(40, 1e-8, None).unwrap();
        let t = s.time_of_eta(0.3).unwrap();
        let eta = map.eta_of_time(t).unwrap();
        assert!((eta - 0.3).abs() < 1e-9, "{eta}");
    }
}
