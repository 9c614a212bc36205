//! Norms, energy, blow-up time and blow-up locations of exact solutions.
//!
//! Integrals over Eulerian `x` are taken in Lagrangian form,
//! `int f(u_x(x)) dx = int f(u_x(gamma(alpha))) gamma_alpha dalpha`, so no
//! remeshing is needed as the flow map concentrates.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::asymptotics::{blowup_tail, k0_growth, time_tail, Finiteness, K0Growth, TailLaw};
use crate::classifier::{classify_linfty, LinftyOutcome};
use crate::error::{Error, Result};
use crate::exact_solution::{ExactSolution, SolutionFrame};
use crate::profiles::InitialProfile;
use crate::quadrature::{integrate, QuadratureSpec};

/// Cutoff `J(active)` below which the time integral is closed analytically.
pub const TAIL_CUTOFF: f64 = 1e-6;
/// Cutoffs used to extrapolate blow-up locations.
pub const LOCATION_CUTOFFS: [f64; 3] = [1e-4, 1e-5, 1e-6];

/// `|u_x|_p` at the frame.
pub fn lp_norm(frame: &SolutionFrame, p: f64) -> Result<f64> {
    check_p(p)?;
    let inv = 1.0 / frame.lambda();
    let k0 = frame.kbar0;
    let s = frame.integrate(|pt| frame.ux_at(pt).abs().powf(p) * pt.j.powf(-inv) / k0)?;
    Ok(s.powf(1.0 / p))
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("p must lie in [1, inf) (got {p})")))
    }
}

/// Lower and upper bounds on `|u_x|_p` built from `int J^-b` alone:
///
/// `|u_x|_p >= |int J^(-1-1/(lambda p)) - (K1/K0) int J^(-1/(lambda p))| / (|lambda eta| K0^(2 lambda + 1/p))`
///
/// `|u_x|_p^p <= 2^(p-1) (int J^(-p-1/lambda) + K1^p / K0^(p-1)) / (|lambda eta|^p K0^(1 + 2 lambda p))`
pub fn lp_bounds(frame: &SolutionFrame, p: f64) -> Result<(f64, f64)> {
    check_p(p)?;
    if frame.eta == 0.0 {
        return Err(Error::Domain("the L^p bounds are singular at eta = 0".into()));
    }
    let l = frame.lambda();
    let le = frame.lambda_eta().abs();
    let (k0, k1) = (frame.kbar0, frame.kbar1);
    let a = frame.integrate(|pt| pt.j.powf(-1.0 - 1.0 / (l * p)))?;
    let b = frame.integrate(|pt| pt.j.powf(-1.0 / (l * p)))?;
    let lower = (a - k1 / k0 * b).abs() / (le * k0.powf(2.0 * l + 1.0 / p));
    let c = frame.integrate(|pt| pt.j.powf(-p - 1.0 / l))?;
    let upper_p = 2f64.powf(p - 1.0) * (c + k1.powf(p) / k0.powf(p - 1.0)) / (le.powf(p) * k0.powf(1.0 + 2.0 * l * p));
    Ok((lower, upper_p.powf(1.0 / p)))
}

/// `E = |u_x|_2^2`, evaluated as `K0^(-1-4 lambda) int J^(-1/lambda) (u0'/J - F/K0)^2`.
pub fn energy(frame: &SolutionFrame) -> Result<f64> {
    moment(frame, 2)
}

/// `E` from the `K_i` alone: `(K0 K2 - K1^2) / (lambda eta K0^(1 + 2 lambda))^2`.
/// Loses accuracy to cancellation as `eta -> 0`.
pub fn energy_from_kbar(frame: &SolutionFrame) -> Result<f64> {
    let (k0, k1, k2) = (frame.kbar0, frame.kbar1, frame.kbar(2)?);
    let d = frame.lambda_eta() * k0.powf(1.0 + 2.0 * frame.lambda());
    Ok((k0 * k2 - k1 * k1) / (d * d))
}

/// `dE/dt = (1 + 2 lambda) int u_x^3 dx`.
pub fn energy_rate(frame: &SolutionFrame) -> Result<f64> {
    let c = 1.0 + 2.0 * frame.lambda();
    if c == 0.0 {
        return Ok(0.0);
    }
    Ok(c * moment(frame, 3)?)
}

/// `dE/dt` from the `K_i`:
/// `(1 + 2 lambda) (K3 - 3 K1 K2/K0 + 2 K1^3/K0^2) / ((lambda eta)^3 K0^(1 + 6 lambda))`.
pub fn energy_rate_from_kbar(frame: &SolutionFrame) -> Result<f64> {
    let l = frame.lambda();
    let c = 1.0 + 2.0 * l;
    if c == 0.0 {
        return Ok(0.0);
    }
    let (k0, k1, k2, k3) = (frame.kbar0, frame.kbar1, frame.kbar(2)?, frame.kbar(3)?);
    let s = k3 - 3.0 * k1 * k2 / k0 + 2.0 * k1.powi(3) / (k0 * k0);
    Ok(c * s / (frame.lambda_eta().powi(3) * k0.powf(1.0 + 6.0 * l)))
}

/// `int u_x^n dx`.
fn moment(frame: &SolutionFrame, n: i32) -> Result<f64> {
    let inv = 1.0 / frame.lambda();
    let k0 = frame.kbar0;
    frame.integrate(|pt| frame.ux_at(pt).powi(n) * pt.j.powf(-inv) / k0)
}

/// How `t*` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupMethod {
    ClosedForm,
    QuadratureTail,
    Bracketed,
    /// Quadrature plus an elementary tail with no asymptotic law behind it.
    Numeric,
}

fn ser_extended<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else if x.is_nan() {
        s.serialize_str("nan")
    } else if *x > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub profile: String,
    pub lambda: f64,
    pub q: f64,
    pub eta_star: f64,
    /// `+inf` for global solutions.
    #[serde(serialize_with = "ser_extended")]
    pub t_star: f64,
    pub method: BlowupMethod,
    pub bracket: Option<[f64; 2]>,
    pub blowup_type: LinftyOutcome,
    pub locations_eulerian: Vec<f64>,
    /// `t` at the cutoff `J(active) = TAIL_CUTOFF`, when it was computed.
    pub t_cutoff: Option<f64>,
    pub notes: Vec<String>,
}

/// `t*` for the profile, with locations when it is finite.
pub fn blowup_time(lambda: f64, profile: &Arc<InitialProfile>) -> Result<BlowupReport> {
    blowup_report(&ExactSolution::new(profile.clone(), lambda)?)
}

/// As [`blowup_time`], with the quadrature settings of `sol`.
pub fn blowup_report(sol: &ExactSolution) -> Result<BlowupReport> {
    let mut report = blowup_time_only(sol)?;
    if report.t_star.is_finite() {
        report.locations_eulerian = blowup_locations_for(sol)?;
    }
    Ok(report)
}

fn blowup_time_only(sol: &ExactSolution) -> Result<BlowupReport> {
    let lambda = sol.lambda();
    let profile = sol.profile();
    let q = profile.active_q(lambda);
    let eta_star = sol.eta_star();
    let blowup_type = classify_linfty(lambda, q)?.linfty;
    let mut report = BlowupReport {
        profile: profile.name.clone(),
        lambda,
        q,
        eta_star,
        t_star: f64::NAN,
        method: BlowupMethod::QuadratureTail,
        bracket: None,
        blowup_type,
        locations_eulerian: Vec::new(),
        t_cutoff: None,
        notes: Vec::new(),
    };

    let mean_slope = profile.u0(1.0) - profile.u0(0.0);
    if lambda == -1.0 && mean_slope.abs() <= 1e-12 {
        // K0 = 1 + eta int u0' = 1, so t = eta.
        report.t_star = eta_star;
        report.method = BlowupMethod::ClosedForm;
        report.bracket = Some([eta_star, eta_star]);
        report.notes.push("K0 = 1 identically, so t = eta".into());
        return Ok(report);
    }

    let tail = match blowup_tail(lambda, q, profile) {
        Ok(t) => Some(t),
        Err(e @ Error::UnsupportedRegime(_)) => {
            report.notes.push(format!("no analytic tail: {e}"));
            None
        }
        Err(e) => return Err(e),
    };
    if let Some(t) = &tail {
        report.notes.push(t.provenance.clone());
        if t.finiteness == Finiteness::Infinite {
            report.t_star = f64::INFINITY;
            return Ok(report);
        }
        if let TailLaw::Bracket { lower, upper } = t.law {
            report.bracket = Some([lower, upper]);
            report.method = BlowupMethod::Bracketed;
        }
    } else {
        report.method = BlowupMethod::Numeric;
    }

    let delta = TAIL_CUTOFF;
    let t_cut = sol.time_of_eps(delta)?;
    let k0 = [sol.kbar0_eps(delta)?, sol.kbar0_eps(0.1 * delta)?];
    let growth = k0_growth(lambda, profile);
    match fitted_tail(lambda, eta_star, delta, k0, growth)? {
        Some(rest) => {
            if let Some(first) = time_tail(lambda, eta_star, delta, k0[0], growth) {
                log::debug!("time tail: fitted {rest}, leading order {first}");
            }
            report.t_star = t_cut + rest;
        }
        None => {
            report.t_star = f64::INFINITY;
            report.notes.push("the time integral diverges at eta*".into());
        }
    }
    report.t_cutoff = Some(t_cut);
    if let Some([lo, hi]) = report.bracket {
        let slack = 1e-9 * hi.abs().max(1.0);
        if report.t_star < lo - slack || report.t_star > hi + slack {
            report.notes.push(format!(
                "estimate {} lies outside the bracket [{lo}, {hi}]",
                report.t_star
            ));
        }
    }
    Ok(report)
}

/// `eta* int_0^delta K0(e)^(2 lambda) de` with `K0` modelled as `A + B g(e)`,
/// where `g` is the growth law (`e^s` or `ln(1/e)`) and `A`, `B` are fitted to
/// `K0` at `delta` and `delta/10`. `None` when the integral diverges.
fn fitted_tail(
    lambda: f64,
    eta_star: f64,
    delta: f64,
    k0: [f64; 2],
    growth: K0Growth,
) -> Result<Option<f64>> {
    let two_l = 2.0 * lambda;
    let (g, decay): (Box<dyn Fn(f64) -> f64>, f64) = match growth {
        K0Growth::Power { exponent } if exponent < 0.0 => (Box::new(move |e: f64| e.powf(exponent)), 1.0 + two_l * exponent),
        K0Growth::Power { .. } => (Box::new(|_| 0.0), 1.0),
        K0Growth::Log => (Box::new(|e: f64| (1.0 / e).ln()), 1.0),
    };
    if decay <= 1e-9 {
        return Ok(None);
    }
    let (g0, g1) = (g(delta), g(0.1 * delta));
    let b = if g1 != g0 { (k0[1] - k0[0]) / (g1 - g0) } else { 0.0 };
    let a = k0[0] - b * g0;
    // e = delta exp(-y); the integrand decays like exp(-decay y).
    let f = |y: f64| {
        let e = delta * (-y).exp();
        e * (a + b * g(e)).powf(two_l)
    };
    let y_max = 45.0 / decay;
    let spec = QuadratureSpec::default().with_split_points((1..(y_max as usize)).step_by(5).map(|k| k as f64).collect());
    Ok(Some(eta_star * integrate(f, 0.0, y_max, &spec)?.value))
}

/// Eulerian blow-up locations: the active extremal points carried to
/// `eta*` along their characteristics.
pub fn blowup_locations(lambda: f64, profile: &Arc<InitialProfile>) -> Result<Vec<f64>> {
    let sol = ExactSolution::new(profile.clone(), lambda)?;
    blowup_locations_for(&sol)
}

fn blowup_locations_for(sol: &ExactSolution) -> Result<Vec<f64>> {
    let lambda = sol.lambda();
    let actives = sol.profile().active_extrema(lambda);
    let frames = LOCATION_CUTOFFS
        .iter()
        .map(|&d| sol.frame_at_eps(d))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(actives.len());
    for e in &actives {
        if e.location == 0.0 || e.location == 1.0 {
            out.push(e.location);
            continue;
        }
        let xs = frames
            .iter()
            .map(|f| {
                f.characteristic_of_extremum(e.location)
                    .map_or_else(|| f.characteristic(e.location), Ok)
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(aitken(xs[0], xs[1], xs[2]).clamp(0.0, 1.0));
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(out)
}

/// Limit of a sequence converging geometrically, from three terms; falls back
/// to the last term when the differences do not contract.
fn aitken(x0: f64, x1: f64, x2: f64) -> f64 {
    let d1 = x1 - x0;
    let d2 = x2 - x1;
    let den = d2 - d1;
    if den == 0.0 || d1 == 0.0 || (d2 / d1).abs() >= 1.0 || d2 / d1 < 0.0 {
        return x2;
    }
    x2 - d2 * d2 / den
}

/// One row of an `eta` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub t: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub m: f64,
    pub lp1: f64,
    pub lp2: f64,
    pub lp3: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "Edot")]
    pub energy_rate: f64,
}

impl SweepRow {
    pub const COLUMNS: [&'static str; 9] = ["eta", "t", "M", "m", "lp1", "lp2", "lp3", "E", "Edot"];

    pub fn values(&self) -> [f64; 9] {
        [
            self.eta,
            self.t,
            self.big_m,
            self.m,
            self.lp1,
            self.lp2,
            self.lp3,
            self.energy,
            self.energy_rate,
        ]
    }
}

pub fn sweep_row(frame: &SolutionFrame) -> Result<SweepRow> {
    let (big_m, m) = frame.extrema()?;
    Ok(SweepRow {
        eta: frame.eta,
        t: frame.time()?,
        big_m,
        m,
        lp1: lp_norm(frame, 1.0)?,
        lp2: lp_norm(frame, 2.0)?,
        lp3: lp_norm(frame, 3.0)?,
        energy: energy(frame)?,
        energy_rate: energy_rate(frame)?,
    })
}

/// Diagnostics at each `eta`, computed in parallel and returned in order.
pub fn sweep(sol: &ExactSolution, etas: &[f64]) -> Result<Vec<SweepRow>> {
    etas.par_iter()
        .map(|&eta| sweep_row(&sol.frame(eta)?))
        .collect()
}

/// Behaviour of the extrema of `u_x` read off a sequence of frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Diverges,
    Vanishes,
    Plateau,
    Bounded,
    Undetermined,
}

/// Observed behaviour as `J(active)` runs through `10^-1 .. 10^-k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericBehavior {
    pub eps: Vec<f64>,
    pub max: Vec<f64>,
    pub min: Vec<f64>,
    pub max_trend: Trend,
    pub min_trend: Trend,
    /// `max |u_x|` at `eta = 0`.
    pub scale: f64,
}

impl NumericBehavior {
    /// `L^inf` outcome implied by the trends, when they determine one.
    pub fn outcome(&self) -> Option<LinftyOutcome> {
        use Trend::*;
        match (self.max_trend, self.min_trend) {
            (Diverges, Diverges) => Some(LinftyOutcome::TwoSidedEverywhere),
            (Diverges, Bounded | Plateau) => Some(LinftyOutcome::OneSidedDiscreteMax),
            (Bounded | Plateau, Diverges) => Some(LinftyOutcome::OneSidedDiscreteMin),
            (Vanishes, Vanishes) => Some(LinftyOutcome::GlobalVanish),
            (Plateau, Plateau) => Some(LinftyOutcome::GlobalNontrivialSteady),
            _ => None,
        }
    }
}

/// Growth factor beyond which an extremum counts as diverging.
pub const DIVERGENCE_FACTOR: f64 = 1e6;
/// Fraction of the initial scale below which an extremum counts as vanished.
pub const VANISH_FRACTION: f64 = 1e-3;
/// Relative change over the last decade of `J` allowed for a plateau.
pub const PLATEAU_TOL: f64 = 0.01;

/// Tracks `M` and `m` over decades of `J(active)` down to `eps_min`.
pub fn observe(sol: &ExactSolution, eps_min: f64) -> Result<NumericBehavior> {
    let profile = sol.profile();
    let scale = profile.m0_max.abs().max(profile.m0_min.abs());
    let mut eps = Vec::new();
    let mut e = 0.1;
    while e >= eps_min * (1.0 - 1e-9) {
        eps.push(e);
        e /= 10.0;
    }
    if eps.len() < 2 {
        return Err(Error::Domain(format!("eps_min = {eps_min} leaves fewer than two decades")));
    }
    let pairs = eps
        .par_iter()
        .map(|&e| sol.frame_at_eps(e)?.extrema())
        .collect::<Result<Vec<_>>>()?;
    let max: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let min: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(NumericBehavior {
        max_trend: trend(&max, scale),
        min_trend: trend(&min, scale),
        eps,
        max,
        min,
        scale,
    })
}

/// Thresholds first; otherwise the last four per-decade increments of `|x|`
/// decide. Growth with non-contracting increments (logarithmic or faster)
/// diverges; contracting growth converges. A decrease is extrapolated and
/// counts as vanishing when the limit falls below the vanishing threshold.
fn trend(xs: &[f64], scale: f64) -> Trend {
    let a: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    let n = a.len();
    let last = a[n - 1];
    if last > DIVERGENCE_FACTOR * scale {
        return Trend::Diverges;
    }
    if last < VANISH_FRACTION * scale {
        return Trend::Vanishes;
    }
    let k = (n - 1).min(4);
    let d: Vec<f64> = (n - k..n).map(|i| a[i] - a[i - 1]).collect();
    if d[k - 1].abs() <= PLATEAU_TOL * last {
        return Trend::Plateau;
    }
    if k < 3 {
        return Trend::Undetermined;
    }
    if d.iter().all(|&x| x > 0.0) {
        return if d[k - 1] >= 0.9 * d[0] {
            Trend::Diverges
        } else {
            Trend::Bounded
        };
    }
    if d.iter().all(|&x| x < 0.0) {
        let limit = aitken(a[n - 3], a[n - 2], a[n - 1]);
        return if limit < VANISH_FRACTION * scale {
            Trend::Vanishes
        } else {
            Trend::Bounded
        };
    }
    Trend::Undetermined
}
