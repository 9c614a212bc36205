//! Initial data `u0'(alpha)` on `[0, 1]` together with the extremal
//! structure that the solution theory keys on.
//!
//! Besides evaluating `u0'`, a profile supplies the gaps `M0 - u0'(alpha)` and
//! `u0'(alpha) - m0` in a form that keeps full relative accuracy next to the
//! extremal points. The kernel `J = 1 - lambda eta u0'` is assembled from these
//! gaps so that `J` stays accurate when it is many orders of magnitude below 1.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

/// A declared extremal point with its local law
/// `u0'(loc + h) ~ value + coeff |h|^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub location: f64,
    pub kind: ExtremumKind,
    pub q: f64,
    /// Negative at a maximum, positive at a minimum.
    pub coeff: f64,
}

impl Extremum {
    /// Number of sides of the point that lie inside `[0, 1]`.
    pub fn sides(&self) -> u32 {
        if self.location <= 0.0 || self.location >= 1.0 {
            1
        } else {
            2
        }
    }
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    /// `u0` given by ascending coefficients.
    Polynomial {
        u0: Vec<f64>,
        d1: Vec<f64>,
        d2: Vec<f64>,
        /// Coefficients of `u0'` re-expanded about each extremum, in the
        /// same order as `InitialProfile::extrema`.
        shifted: Vec<Vec<f64>>,
    },
    /// `u0 = s alpha (1 - alpha^p)`, so `u0' = s (1 - (p + 1) alpha^p)`.
    AlphaPower { s: f64, p: f64 },
    /// `u0' = a + k |alpha - 1/2|^q`.
    PowerLaw { a: f64, k: f64, q: f64 },
    Custom {
        u0p: Eval,
        u0pp: Option<Eval>,
        u0: Option<Eval>,
    },
}

/// Initial slope `u0'` on `[0, 1]` with its extremal metadata.
#[derive(Clone)]
pub struct InitialProfile {
    pub name: String,
    shape: Shape,
    /// Representative curvature exponent (the one quoted for the data).
    pub q: f64,
    pub m0_max: f64,
    pub m0_min: f64,
    pub maxima: Vec<f64>,
    pub minima: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub boundary: Boundary,
    pub extrema: Vec<Extremum>,
    /// The value of lambda this data is usually paired with, if any.
    pub suggested_lambda: Option<f64>,
}

impl fmt::Debug for InitialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialProfile")
            .field("name", &self.name)
            .field("q", &self.q)
            .field("M0", &self.m0_max)
            .field("m0", &self.m0_min)
            .field("extrema", &self.extrema)
            .field("boundary", &self.boundary)
            .finish()
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &ck)| k as f64 * ck).collect()
}

/// Coefficients of `p(x0 + h)` in powers of `h`.
fn taylor_shift(c: &[f64], x0: f64) -> Vec<f64> {
    let mut t = c.to_vec();
    let n = t.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            t[j] += x0 * t[j + 1];
        }
    }
    t
}

/// `1 - x^p` for `x` in `[0, 1]` without cancellation near `x = 1`.
fn one_minus_pow(x: f64, p: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        -(p * x.ln()).exp_m1()
    }
}

impl InitialProfile {
    pub fn m0(&self) -> f64 {
        self.m0_max
    }

    /// `u0'(alpha)` with a domain check.
    pub fn eval_u0p(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} outside [0, 1]")));
        }
        Ok(self.u0p(alpha))
    }

    /// `u0'(alpha)`; callers guarantee `alpha` in `[0, 1]`.
    pub fn u0p(&self, alpha: f64) -> f64 {
        match &self.shape {
            Shape::Polynomial { d1, .. } => horner(d1, alpha),
            Shape::AlphaPower { s, p } => s * (1.0 - (p + 1.0) * alpha.powf(*p)),
            Shape::PowerLaw { a, k, q } => a + k * (alpha - 0.5).abs().powf(*q),
            Shape::Custom { u0p, .. } => u0p(alpha),
        }
    }

    /// `u0''(alpha)`, by central differences (step 1e-6) when no closed
    /// form is available.
    pub fn u0pp(&self, alpha: f64) -> f64 {
        match &self.shape {
            Shape::Polynomial { d2, .. } => horner(d2, alpha),
            Shape::AlphaPower { s, p } => -s * (p + 1.0) * p * alpha.powf(p - 1.0),
            Shape::PowerLaw { k, q, .. } => {
                let d = alpha - 0.5;
                if d == 0.0 {
                    if *q > 1.0 {
                        0.0
                    } else {
                        f64::NAN
                    }
                } else {
                    k * q * d.abs().powf(q - 1.0) * d.signum()
                }
            }
            Shape::Custom { u0pp: Some(g), .. } => g(alpha),
            Shape::Custom { u0p, .. } => {
                let h = 1e-6;
                let lo = (alpha - h).max(0.0);
                let hi = (alpha + h).min(1.0);
                (u0p(hi) - u0p(lo)) / (hi - lo)
            }
        }
    }

    /// `u0(alpha) = int_0^alpha u0'`.
    pub fn u0(&self, alpha: f64) -> f64 {
        match &self.shape {
            Shape::Polynomial { u0, .. } => horner(u0, alpha),
            Shape::AlphaPower { s, p } => s * alpha * (1.0 - alpha.powf(*p)),
            Shape::PowerLaw { a, k, q } => {
                let d = alpha - 0.5;
                a * alpha + k * (d.signum() * d.abs().powf(q + 1.0) + 0.5f64.powf(q + 1.0)) / (q + 1.0)
            }
            Shape::Custom { u0: Some(g), .. } => g(alpha),
            Shape::Custom { u0p, .. } => {
                let f = u0p.clone();
                crate::quadrature::integrate(move |x| f(x), 0.0, alpha, &Default::default())
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }

    fn nearest(&self, kind: ExtremumKind, alpha: f64) -> Option<usize> {
        self.extrema
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == kind)
            .min_by(|(_, x), (_, y)| {
                (x.location - alpha).abs().total_cmp(&(y.location - alpha).abs())
            })
            .map(|(i, _)| i)
    }

    /// `M0 - u0'(alpha) >= 0`, accurate near the maxima.
    pub fn gap_below_max(&self, alpha: f64) -> f64 {
        let g = match &self.shape {
            Shape::AlphaPower { s, p } if *s > 0.0 => s * (p + 1.0) * alpha.powf(*p),
            Shape::AlphaPower { s, p } => -s * (p + 1.0) * one_minus_pow(alpha, *p),
            Shape::PowerLaw { k, q, .. } if *k < 0.0 => -k * (alpha - 0.5).abs().powf(*q),
            Shape::PowerLaw { k, q, .. } => k * endpoint_gap(alpha, *q),
            Shape::Polynomial { shifted, .. } => match self.nearest(ExtremumKind::Max, alpha) {
                Some(i) => -horner(&shifted[i][1..], alpha - self.extrema[i].location)
                    * (alpha - self.extrema[i].location),
                None => self.m0_max - self.u0p(alpha),
            },
            Shape::Custom { .. } => self.m0_max - self.u0p(alpha),
        };
        g.max(0.0)
    }

    /// `u0'(alpha) - m0 >= 0`, accurate near the minima.
    pub fn gap_above_min(&self, alpha: f64) -> f64 {
        let g = match &self.shape {
            Shape::AlphaPower { s, p } if *s > 0.0 => s * (p + 1.0) * one_minus_pow(alpha, *p),
            Shape::AlphaPower { s, p } => -s * (p + 1.0) * alpha.powf(*p),
            Shape::PowerLaw { k, q, .. } if *k > 0.0 => k * (alpha - 0.5).abs().powf(*q),
            Shape::PowerLaw { k, q, .. } => -k * endpoint_gap(alpha, *q),
            Shape::Polynomial { shifted, .. } => match self.nearest(ExtremumKind::Min, alpha) {
                Some(i) => horner(&shifted[i][1..], alpha - self.extrema[i].location)
                    * (alpha - self.extrema[i].location),
                None => self.u0p(alpha) - self.m0_min,
            },
            Shape::Custom { .. } => self.u0p(alpha) - self.m0_min,
        };
        g.max(0.0)
    }

    /// `|u0'(e + h) - u0'(e)|` for the extremum `extrema[idx]` at `e`, with
    /// the offset `h` passed directly so that no precision is lost forming
    /// `alpha - e`.
    pub fn gap_at(&self, idx: usize, h: f64) -> f64 {
        let e = self.extrema[idx];
        let sign = match e.kind {
            ExtremumKind::Max => -1.0,
            ExtremumKind::Min => 1.0,
        };
        let m = h.abs();
        let g = match &self.shape {
            Shape::Polynomial { shifted, .. } => sign * h * horner(&shifted[idx][1..], h),
            Shape::AlphaPower { s, p } => {
                if e.location == 0.0 {
                    s.abs() * (p + 1.0) * m.powf(*p)
                } else {
                    s.abs() * (p + 1.0) * -(p * (-m).ln_1p()).exp_m1()
                }
            }
            Shape::PowerLaw { k, q, .. } => {
                if e.location == 0.5 {
                    k.abs() * m.powf(*q)
                } else {
                    k.abs() * 0.5f64.powf(*q) * -(q * (-2.0 * m).ln_1p()).exp_m1()
                }
            }
            Shape::Custom { u0p, .. } => {
                let v = u0p((e.location + h).clamp(0.0, 1.0));
                sign * (v - u0p(e.location))
            }
        };
        g.max(0.0)
    }

    /// The blow-up clock value `1/(lambda M0)` (`lambda > 0`) or
    /// `1/(lambda m0)` (`lambda < 0`).
    pub fn eta_star(&self, lambda: f64) -> Result<f64> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda = {lambda} must be finite and nonzero")));
        }
        if lambda > 0.0 {
            if !(self.m0_max > 0.0) {
                return Err(Error::Domain("lambda > 0 requires M0 > 0".into()));
            }
            Ok(1.0 / (lambda * self.m0_max))
        } else {
            if !(self.m0_min < 0.0) {
                return Err(Error::Domain("lambda < 0 requires m0 < 0".into()));
            }
            Ok(1.0 / (lambda * self.m0_min))
        }
    }

    /// Extremal points where `J` first vanishes: the maxima for
    /// `lambda > 0`, the minima for `lambda < 0`.
    pub fn active_extrema(&self, lambda: f64) -> Vec<Extremum> {
        let kind = if lambda > 0.0 {
            ExtremumKind::Max
        } else {
            ExtremumKind::Min
        };
        self.extrema.iter().copied().filter(|e| e.kind == kind).collect()
    }

    /// Smallest curvature exponent over the active extremal points.
    pub fn active_q(&self, lambda: f64) -> f64 {
        self.active_extrema(lambda)
            .iter()
            .map(|e| e.q)
            .fold(f64::INFINITY, f64::min)
    }

    /// Gap from the active extremum: `M0 - u0'` or `u0' - m0`.
    pub fn active_gap(&self, lambda: f64, alpha: f64) -> f64 {
        if lambda > 0.0 {
            self.gap_below_max(alpha)
        } else {
            self.gap_above_min(alpha)
        }
    }

    /// The active extremal value `M0` (`lambda > 0`) or `m0` (`lambda < 0`).
    pub fn active_value(&self, lambda: f64) -> f64 {
        if lambda > 0.0 {
            self.m0_max
        } else {
            self.m0_min
        }
    }

    /// All extremal locations, sorted and deduplicated.
    pub fn extremal_locations(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.extrema.iter().map(|e| e.location).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Dense-grid check that the declared extremal values and locations are
    /// the true ones.
    pub fn check_extrema_on_grid(&self, n: usize, value_tol: f64, loc_tol: f64) -> Result<()> {
        let mut best_max = (f64::NEG_INFINITY, 0.0);
        let mut best_min = (f64::INFINITY, 0.0);
        for i in 0..=n {
            let a = i as f64 / n as f64;
            let v = self.u0p(a);
            if v > best_max.0 {
                best_max = (v, a);
            }
            if v < best_min.0 {
                best_min = (v, a);
            }
        }
        let check = |found: (f64, f64), value: f64, locs: &[f64], what: &str| -> Result<()> {
            let scale = value.abs().max(1e-300);
            if (found.0 - value).abs() > value_tol * scale {
                return Err(Error::Consistency(format!(
                    "{}: grid {what} {} differs from declared {value}",
                    self.name, found.0
                )));
            }
            if !locs.iter().any(|&l| (l - found.1).abs() <= loc_tol) {
                return Err(Error::Consistency(format!(
                    "{}: grid {what} at {} is not a declared location",
                    self.name, found.1
                )));
            }
            Ok(())
        };
        check(best_max, self.m0_max, &self.maxima, "maximum")?;
        check(best_min, self.m0_min, &self.minima, "minimum")
    }

    /// Fits `log |u0'(loc +- h) - extreme|` against `log h` over
    /// `h in [1e-5, 1e-2]` at every declared extremum.
    pub fn verify_local_expansion(&self) -> Result<ExpansionReport> {
        if self.extrema.is_empty() {
            return Err(Error::FitFailure(format!("{} declares no extrema", self.name)));
        }
        let mut fits = Vec::new();
        for (idx, e) in self.extrema.iter().enumerate() {
            for side in [-1.0, 1.0] {
                let inside = |h: f64| (0.0..=1.0).contains(&(e.location + side * h));
                if !inside(1e-2) {
                    continue;
                }
                let fit = self.fit_side(idx, side)?;
                fits.push(fit);
            }
        }
        Ok(ExpansionReport { fits })
    }

    fn fit_side(&self, idx: usize, side: f64) -> Result<SideFit> {
        let e = self.extrema[idx];
        let gap = |a: f64| match e.kind {
            ExtremumKind::Max => self.gap_below_max(a),
            ExtremumKind::Min => self.gap_above_min(a),
        };
        let n = 31;
        let (lo, hi) = (1e-5f64.ln(), 1e-2f64.ln());
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let lh = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let h = lh.exp();
            let alpha = e.location + side * h;
            let g = gap(alpha);
            // Where plain subtraction is resolvable it must agree with the
            // cancellation-free gap.
            let extreme = match e.kind {
                ExtremumKind::Max => self.m0_max,
                ExtremumKind::Min => self.m0_min,
            };
            let direct = (self.u0p(alpha) - extreme).abs();
            if direct > 1e-6 * extreme.abs().max(1.0) && (direct - g).abs() > 1e-6 * direct {
                return Err(Error::FitFailure(format!(
                    "{}: gap {g} disagrees with direct difference {direct} at alpha = {alpha}",
                    self.name
                )));
            }
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::FitFailure(format!(
                    "{}: no power law at {} (gap {g} at h = {h})",
                    self.name, e.location
                )));
            }
            xs.push(lh);
            ys.push(g.ln());
        }
        let (slope, intercept, rms) = linear_fit(&xs, &ys);
        let fit = SideFit {
            location: e.location,
            kind: e.kind,
            side,
            slope,
            coefficient: intercept.exp(),
            residual: rms,
            declared_q: e.q,
            declared_coeff: e.coeff.abs(),
            ratio_trend: [1e-2, 1e-3, 1e-4].map(|h| gap(e.location + side * h) / (e.coeff.abs() * h.powf(e.q))),
        };
        if rms > 0.05 {
            return Err(Error::FitFailure(format!(
                "{}: residual {rms} at {} is not a power law",
                self.name, e.location
            )));
        }
        if (slope - e.q).abs() > 0.02 * e.q {
            return Err(Error::FitFailure(format!(
                "{}: fitted exponent {slope} at {} vs declared {}",
                self.name, e.location, e.q
            )));
        }
        // The free intercept absorbs the O(h) corrections over the fit
        // window, so the coefficient is read off at the smallest offset.
        let h = lo.exp();
        let lead = gap(e.location + side * h) / (fit.declared_coeff * h.powf(e.q));
        if (lead - 1.0).abs() > 0.02 {
            return Err(Error::FitFailure(format!(
                "{}: leading coefficient {} at {} vs declared {}",
                self.name,
                lead * fit.declared_coeff,
                e.location,
                fit.declared_coeff
            )));
        }
        Ok(fit)
    }
}

/// `(1/2)^q - |alpha - 1/2|^q` written without cancellation near the ends.
fn endpoint_gap(alpha: f64, q: f64) -> f64 {
    let m = alpha.min(1.0 - alpha).max(0.0);
    0.5f64.powf(q) * -(q * (-2.0 * m).ln_1p()).exp_m1()
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Result of [`InitialProfile::verify_local_expansion`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub fits: Vec<SideFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideFit {
    pub location: f64,
    pub kind: ExtremumKind,
    /// `-1` for the left side, `+1` for the right.
    pub side: f64,
    pub slope: f64,
    /// `exp` of the fitted intercept.
    pub coefficient: f64,
    pub residual: f64,
    pub declared_q: f64,
    pub declared_coeff: f64,
    /// `gap / (|C| h^q)` at `h = 1e-2, 1e-3, 1e-4`.
    pub ratio_trend: [f64; 3],
}

// ---------------------------------------------------------------------------
// Construction

/// Builder for polynomial and closure-backed profiles.
pub struct ProfileBuilder {
    name: String,
    q: f64,
    boundary: Boundary,
    extrema: Vec<Extremum>,
    m0_max: f64,
    m0_min: f64,
    suggested_lambda: Option<f64>,
}

impl ProfileBuilder {
    pub fn new(name: impl Into<String>, q: f64) -> Self {
        Self {
            name: name.into(),
            q,
            boundary: Boundary::Dirichlet,
            extrema: Vec::new(),
            m0_max: f64::NAN,
            m0_min: f64::NAN,
            suggested_lambda: None,
        }
    }

    pub fn boundary(mut self, b: Boundary) -> Self {
        self.boundary = b;
        self
    }

    pub fn suggested_lambda(mut self, lambda: f64) -> Self {
        self.suggested_lambda = Some(lambda);
        self
    }

    pub fn maximum(mut self, value: f64, location: f64, q: f64, coeff: f64) -> Self {
        self.m0_max = value;
        self.extrema.push(Extremum {
            location,
            kind: ExtremumKind::Max,
            q,
            coeff,
        });
        self
    }

    pub fn minimum(mut self, value: f64, location: f64, q: f64, coeff: f64) -> Self {
        self.m0_min = value;
        self.extrema.push(Extremum {
            location,
            kind: ExtremumKind::Min,
            q,
            coeff,
        });
        self
    }

    /// Polynomial `u0` with ascending coefficients.
    pub fn polynomial(self, u0: Vec<f64>) -> Result<InitialProfile> {
        let d1 = derivative(&u0);
        let d2 = derivative(&d1);
        let shifted = self
            .extrema
            .iter()
            .map(|e| taylor_shift(&d1, e.location))
            .collect();
        let shape = Shape::Polynomial { u0, d1, d2, shifted };
        self.finish(shape)
    }

    /// Profile given by closures; `u0` and `u0''` are optional.
    pub fn custom(
        self,
        u0p: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u0pp: Option<Eval>,
        u0: Option<Eval>,
    ) -> Result<InitialProfile> {
        let shape = Shape::Custom {
            u0p: Arc::new(u0p),
            u0pp,
            u0,
        };
        self.finish(shape)
    }

    fn finish(self, shape: Shape) -> Result<InitialProfile> {
        let mut extrema = self.extrema;
        extrema.sort_by(|a, b| a.location.total_cmp(&b.location));
        let collect = |k: ExtremumKind| -> Vec<f64> {
            extrema.iter().filter(|e| e.kind == k).map(|e| e.location).collect()
        };
        let maxima = collect(ExtremumKind::Max);
        let minima = collect(ExtremumKind::Min);
        let first_coeff = |k: ExtremumKind| {
            extrema
                .iter()
                .filter(|e| e.kind == k)
                .min_by(|a, b| a.q.total_cmp(&b.q))
                .map(|e| e.coeff)
                .unwrap_or(f64::NAN)
        };
        let profile = InitialProfile {
            name: self.name,
            shape,
            q: self.q,
            m0_max: self.m0_max,
            m0_min: self.m0_min,
            c1: first_coeff(ExtremumKind::Max),
            c2: first_coeff(ExtremumKind::Min),
            maxima,
            minima,
            boundary: self.boundary,
            extrema,
            suggested_lambda: self.suggested_lambda,
        };
        // Shifted polynomial coefficients are indexed like `extrema`; rebuild
        // them after sorting.
        let profile = match profile.shape {
            Shape::Polynomial { ref u0, ref d1, ref d2, .. } => {
                let shifted = profile
                    .extrema
                    .iter()
                    .map(|e| taylor_shift(d1, e.location))
                    .collect();
                InitialProfile {
                    shape: Shape::Polynomial {
                        u0: u0.clone(),
                        d1: d1.clone(),
                        d2: d2.clone(),
                        shifted,
                    },
                    ..profile
                }
            }
            _ => profile,
        };
        profile.validate()?;
        Ok(profile)
    }
}

impl InitialProfile {
    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0) {
            return Err(Error::Parameter(format!("{}: q must be positive", self.name)));
        }
        if !self.maxima.is_empty() && !self.minima.is_empty() && !(self.m0_max > 0.0 && self.m0_min < 0.0) {
            return Err(Error::Parameter(format!(
                "{}: need M0 > 0 > m0 (got {}, {})",
                self.name, self.m0_max, self.m0_min
            )));
        }
        for e in &self.extrema {
            if !(0.0..=1.0).contains(&e.location) || !(e.q > 0.0) {
                return Err(Error::Parameter(format!("{}: bad extremum {e:?}", self.name)));
            }
            let ok = match e.kind {
                ExtremumKind::Max => e.coeff < 0.0,
                ExtremumKind::Min => e.coeff > 0.0,
            };
            if !ok {
                return Err(Error::Parameter(format!(
                    "{}: C1 must be negative and C2 positive ({e:?})",
                    self.name
                )));
            }
            let declared = match e.kind {
                ExtremumKind::Max => self.m0_max,
                ExtremumKind::Min => self.m0_min,
            };
            let v = self.u0p(e.location);
            if (v - declared).abs() > 1e-9 * declared.abs().max(1.0) {
                return Err(Error::Parameter(format!(
                    "{}: u0'({}) = {v} but the declared extreme is {declared}",
                    self.name, e.location
                )));
            }
        }
        if self.maxima.iter().any(|a| self.minima.contains(a)) {
            return Err(Error::Parameter(format!("{}: maxima and minima overlap", self.name)));
        }
        Ok(())
    }

    fn alpha_power(name: &str, s: f64, p: f64, lambda: f64) -> Result<Self> {
        // u0' = s (1 - (p+1) alpha^p): one extreme at 0 (exponent p) and the
        // other at 1 (linear).
        let at0 = Extremum {
            location: 0.0,
            kind: if s > 0.0 { ExtremumKind::Max } else { ExtremumKind::Min },
            q: p,
            coeff: -s * (p + 1.0),
        };
        let at1 = Extremum {
            location: 1.0,
            kind: if s > 0.0 { ExtremumKind::Min } else { ExtremumKind::Max },
            q: 1.0,
            coeff: s * (p + 1.0) * p,
        };
        let (m0_max, m0_min, max_e, min_e) = if s > 0.0 {
            (s, -s * p, at0, at1)
        } else {
            (-s * p, s, at1, at0)
        };
        let profile = InitialProfile {
            name: name.to_string(),
            shape: Shape::AlphaPower { s, p },
            q: p,
            m0_max,
            m0_min,
            maxima: vec![max_e.location],
            minima: vec![min_e.location],
            c1: max_e.coeff,
            c2: min_e.coeff,
            boundary: Boundary::Dirichlet,
            extrema: {
                let mut v = vec![at0, at1];
                v.sort_by(|a, b| a.location.total_cmp(&b.location));
                v
            },
            suggested_lambda: Some(lambda),
        };
        profile.validate()?;
        Ok(profile)
    }

    /// `u0' = a + k |alpha - 1/2|^q` on `[0, 1]`, periodic.
    ///
    /// With `k < 0` the maximum `a` sits at `1/2` and the minimum at both
    /// endpoints; with `k > 0` the roles swap. The data has zero mean when
    /// `a = -k 2^-q / (q + 1)`.
    pub fn power_law(q: f64, a: f64, k: f64) -> Result<Self> {
        if !(q > 0.0) || k == 0.0 || !a.is_finite() || !k.is_finite() {
            return Err(Error::Parameter(format!("powerlaw({q}, {a}, {k}) is degenerate")));
        }
        let edge_value = a + k * 0.5f64.powf(q);
        let edge_coeff = -k * q * 2f64.powf(1.0 - q);
        let centre_kind = if k < 0.0 { ExtremumKind::Max } else { ExtremumKind::Min };
        let edge_kind = if k < 0.0 { ExtremumKind::Min } else { ExtremumKind::Max };
        let centre = Extremum {
            location: 0.5,
            kind: centre_kind,
            q,
            coeff: k,
        };
        let edges = [0.0, 1.0].map(|location| Extremum {
            location,
            kind: edge_kind,
            q: 1.0,
            coeff: edge_coeff,
        });
        let (m0_max, m0_min) = if k < 0.0 { (a, edge_value) } else { (edge_value, a) };
        let (maxima, minima) = if k < 0.0 {
            (vec![0.5], vec![0.0, 1.0])
        } else {
            (vec![0.0, 1.0], vec![0.5])
        };
        let profile = InitialProfile {
            name: format!("powerlaw({q}, {a}, {k})"),
            shape: Shape::PowerLaw { a, k, q },
            q,
            m0_max,
            m0_min,
            maxima,
            minima,
            c1: if k < 0.0 { k } else { edge_coeff },
            c2: if k < 0.0 { edge_coeff } else { k },
            boundary: Boundary::Periodic,
            extrema: vec![edges[0], centre, edges[1]],
            suggested_lambda: None,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Zero-mean power law with its maximum (`centre = Max`) or minimum at
    /// `1/2` and unit coefficient.
    pub fn power_law_mean_zero(q: f64, centre: ExtremumKind) -> Result<Self> {
        let a = 0.5f64.powf(q) / (q + 1.0);
        match centre {
            ExtremumKind::Max => Self::power_law(q, a, -1.0),
            ExtremumKind::Min => Self::power_law(q, -a, 1.0),
        }
    }
}

/// Names accepted by [`builtin`], apart from the `powerlaw(...)` family.
pub const BUILTIN_NAMES: [&str; 8] = [
    "ex1_q13",
    "ex1_q65",
    "ex2_q5",
    "ex2_q52",
    "ex3_q6",
    "ex4_q32",
    "ex5_mixed",
    "ex6_linear",
];

/// Named reference profiles.
///
/// Also accepts `powerlaw(q, a, k)` (see [`InitialProfile::power_law`]) and
/// the zero-mean shorthands `powerlaw(q)` and `powerlaw_min(q)`.
pub fn builtin(name: &str) -> Result<InitialProfile> {
    let name = name.trim();
    match name {
        "ex1_q13" => InitialProfile::alpha_power(name, 1.0, 1.0 / 3.0, 0.5),
        "ex1_q65" => InitialProfile::alpha_power(name, 1.0, 6.0 / 5.0, 0.5),
        "ex2_q5" => InitialProfile::alpha_power(name, 1.0, 5.0, 2.0),
        "ex2_q52" => InitialProfile::alpha_power(name, 1.0, 5.0 / 2.0, 5.0 / 4.0),
        "ex3_q6" => InitialProfile::alpha_power(name, 1.0 / 11.0, 6.0, 11.0 / 2.0),
        "ex4_q32" => InitialProfile::alpha_power(name, -1.0, 3.0 / 2.0, -5.0 / 2.0),
        "ex5_mixed" => ex5_mixed(),
        "ex6_linear" => ex6_linear(),
        _ => parse_power_law(name),
    }
}

fn parse_power_law(name: &str) -> Result<InitialProfile> {
    let unknown = || Error::UnknownProfile(name.to_string());
    let (head, rest) = name.split_once('(').ok_or_else(unknown)?;
    let args = rest.strip_suffix(')').ok_or_else(unknown)?;
    let nums: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| unknown())?;
    match (head.trim(), nums.as_slice()) {
        ("powerlaw", [q]) => InitialProfile::power_law_mean_zero(*q, ExtremumKind::Max),
        ("powerlaw_min", [q]) => InitialProfile::power_law_mean_zero(*q, ExtremumKind::Min),
        ("powerlaw", [q, a, k]) => InitialProfile::power_law(*q, *a, *k),
        _ => Err(unknown()),
    }
}

/// `u0 = alpha (1 - alpha)(alpha - 3/4)(alpha - r)` with
/// `r = (1 + 4 sqrt 22)/36`: minima of equal depth at an interior point
/// (quadratic) and at `alpha = 1` (linear).
fn ex5_mixed() -> Result<InitialProfile> {
    let s22 = 22f64.sqrt();
    let r = (1.0 + 4.0 * s22) / 36.0;
    let a2 = (4.0 + s22) / 24.0;
    // alpha (1 - alpha) = alpha - alpha^2; (alpha - 3/4)(alpha - r) = alpha^2 - (3/4 + r) alpha + 3r/4
    let quad = [0.75 * r, -(0.75 + r), 1.0];
    let lin = [0.0, 1.0, -1.0];
    let mut u0 = vec![0.0; 5];
    for (i, a) in lin.iter().enumerate() {
        for (j, b) in quad.iter().enumerate() {
            u0[i + j] += a * b;
        }
    }
    let d1 = derivative(&u0);
    let d2 = derivative(&d1);
    let d3 = derivative(&d2);
    let m0_min = horner(&d1, a2);
    let m0_max = horner(&d1, 0.0);
    ProfileBuilder::new("ex5_mixed", 1.0)
        .suggested_lambda(-1.0 / 3.0)
        .maximum(m0_max, 0.0, 1.0, horner(&d2, 0.0))
        .minimum(m0_min, a2, 2.0, horner(&d3, a2) / 2.0)
        .minimum(m0_min, 1.0, 1.0, -horner(&d2, 1.0))
        .polynomial(u0)
}

/// `u0 = alpha (alpha - 1)(alpha - 1/2)`, so `u0' = 3 alpha^2 - 3 alpha + 1/2`.
fn ex6_linear() -> Result<InitialProfile> {
    ProfileBuilder::new("ex6_linear", 1.0)
        .suggested_lambda(1.0)
        .maximum(0.5, 0.0, 1.0, -3.0)
        .maximum(0.5, 1.0, 1.0, -3.0)
        .minimum(-0.25, 0.5, 2.0, 3.0)
        .polynomial(vec![0.0, 0.5, -1.5, 1.0])
}

// ---------------------------------------------------------------------------
// JSON

/// On-disk profile description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub kind: ProfileKind,
    /// Ascending coefficients of `u0` (polynomial kind).
    #[serde(default)]
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(rename = "M0", default)]
    pub m0_max: Option<f64>,
    #[serde(rename = "m0", default)]
    pub m0_min: Option<f64>,
    #[serde(default)]
    pub maxima: Vec<f64>,
    #[serde(default)]
    pub minima: Vec<f64>,
    #[serde(rename = "C1", default)]
    pub c1: Option<f64>,
    #[serde(rename = "C2", default)]
    pub c2: Option<f64>,
    #[serde(default)]
    pub boundary: Option<Boundary>,
    /// Per-location `(q, coefficient)` overrides.
    #[serde(default)]
    pub locations: Vec<Extremum>,
    #[serde(default)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Polynomial,
    Powerlaw,
    Builtin,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<InitialProfile> {
        let missing = |f: &str| Error::Parameter(format!("profile JSON is missing `{f}`"));
        match self.kind {
            ProfileKind::Builtin => {
                let name = self.name.as_deref().ok_or_else(|| missing("name"))?;
                builtin(name)
            }
            ProfileKind::Powerlaw => {
                let q = self.q.ok_or_else(|| missing("q"))?;
                let mut p = match (self.m0_max, self.c1) {
                    (Some(a), Some(k)) => InitialProfile::power_law(q, a, k)?,
                    _ => InitialProfile::power_law_mean_zero(q, ExtremumKind::Max)?,
                };
                if let Some(n) = &self.name {
                    p.name = n.clone();
                }
                p.suggested_lambda = self.lambda;
                Ok(p)
            }
            ProfileKind::Polynomial => {
                if self.coeffs.len() < 2 {
                    return Err(missing("coeffs"));
                }
                let q = self.q.ok_or_else(|| missing("q"))?;
                let m0_max = self.m0_max.ok_or_else(|| missing("M0"))?;
                let m0_min = self.m0_min.ok_or_else(|| missing("m0"))?;
                let c1 = self.c1.ok_or_else(|| missing("C1"))?;
                let c2 = self.c2.ok_or_else(|| missing("C2"))?;
                let lookup = |loc: f64, kind: ExtremumKind, q0: f64, c0: f64| {
                    self.locations
                        .iter()
                        .find(|e| e.kind == kind && (e.location - loc).abs() < 1e-12)
                        .map(|e| (e.q, e.coeff))
                        .unwrap_or((q0, c0))
                };
                let mut b = ProfileBuilder::new(self.name.clone().unwrap_or_else(|| "custom".into()), q)
                    .boundary(self.boundary.unwrap_or(Boundary::Periodic));
                if let Some(l) = self.lambda {
                    b = b.suggested_lambda(l);
                }
                for &loc in &self.maxima {
                    let (qq, cc) = lookup(loc, ExtremumKind::Max, q, c1);
                    b = b.maximum(m0_max, loc, qq, cc);
                }
                for &loc in &self.minima {
                    let (qq, cc) = lookup(loc, ExtremumKind::Min, q, c2);
                    b = b.minimum(m0_min, loc, qq, cc);
                }
                b.polynomial(self.coeffs.clone())
            }
        }
    }
}

impl InitialProfile {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ProfileSpec = serde_json::from_str(text)
            .map_err(|e| Error::Parameter(format!("profile JSON: {e}")))?;
        spec.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values_at_extrema() {
        let p = builtin("ex1_q13").unwrap();
        assert_eq!(p.eval_u0p(0.0).unwrap(), 1.0);
        assert!((p.u0p(1.0) + 1.0 / 3.0).abs() < 1e-15);
        let p = builtin("ex2_q5").unwrap();
        assert_eq!(p.eval_u0p(0.0).unwrap(), 1.0);
        assert!(p.eval_u0p(1.5).is_err());
    }

    #[test]
    fn ex4_metadata() {
        let p = builtin("ex4_q32").unwrap();
        assert_eq!(p.m0_min, -1.0);
        assert_eq!(p.minima, vec![0.0]);
        assert_eq!(p.active_q(-2.5), 1.5);
        assert!((p.eta_star(-2.5).unwrap() - 0.4).abs() < 1e-15);
        assert!((p.u0(0.64) - 0.64 * (0.64f64.powf(1.5) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn ex5_metadata() {
        let p = builtin("ex5_mixed").unwrap();
        assert!((p.m0_min + 0.1127662288937936).abs() < 1e-12);
        assert!((p.minima[0] - 0.36210065665931).abs() < 1e-12);
        assert_eq!(p.minima[1], 1.0);
        assert!((p.m0_max - 0.4117013133186).abs() < 1e-12);
        assert!((p.eta_star(-1.0 / 3.0).unwrap() - 26.60370954521751).abs() < 1e-9);
    }

    #[test]
    fn ex6_metadata() {
        let p = builtin("ex6_linear").unwrap();
        assert_eq!(p.maxima, vec![0.0, 1.0]);
        assert_eq!(p.m0_max, 0.5);
        assert_eq!(p.q, 1.0);
    }

    #[test]
    fn gaps_are_accurate_near_extrema() {
        let p = builtin("ex6_linear").unwrap();
        let h = 1e-12;
        assert!((p.gap_below_max(h) / (3.0 * h) - 1.0).abs() < 1e-9);
        assert!((p.gap_below_max(1.0 - h) / (3.0 * h) - 1.0).abs() < 1e-3);
        assert!((p.gap_above_min(0.5 + 1e-9) / 3e-18 - 1.0).abs() < 1e-6);
        let p = builtin("powerlaw(0.5)").unwrap();
        assert!((p.gap_above_min(1e-14) / (p.c2 * 1e-14) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(matches!(builtin("ex9"), Err(Error::UnknownProfile(_))));
        assert!(matches!(builtin("powerlaw(1, 2)"), Err(Error::UnknownProfile(_))));
    }

    #[test]
    fn degenerate_expansion_fails_fit() {
        // u0' = 1 - 2 alpha^2 (max at 0 with q = 2), declared with a wrong q.
        let p = ProfileBuilder::new("wrong_q", 1.0)
            .maximum(1.0, 0.0, 1.0, -2.0)
            .minimum(-1.0, 1.0, 1.0, 4.0)
            .polynomial(vec![0.0, 1.0, 0.0, -2.0 / 3.0])
            .unwrap();
        assert!(matches!(p.verify_local_expansion(), Err(Error::FitFailure(_))));
        // Flat near the maximum: no power law at all.
        let flat = ProfileBuilder::new("flat", 1.0)
            .maximum(1.0, 0.0, 1.0, -1.0)
            .minimum(-1.0, 1.0, 1.0, 1.0)
            .custom(|a| if a < 0.1 { 1.0 } else { 1.0 - 2.0 * (a - 0.1) / 0.9 }, None, None)
            .unwrap();
        assert!(matches!(flat.verify_local_expansion(), Err(Error::FitFailure(_))));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"name":"cubic","kind":"polynomial","coeffs":[0,0.5,-1.5,1],
            "q":1,"M0":0.5,"m0":-0.25,"maxima":[0,1],"minima":[0.5],"C1":-3,"C2":3,
            "boundary":"dirichlet","locations":[{"location":0.5,"kind":"min","q":2,"coeff":3}]}"#;
        let p = InitialProfile::from_json(text).unwrap();
        assert_eq!(p.extrema[1].q, 2.0);
        p.verify_local_expansion().unwrap();
        let b = InitialProfile::from_json(r#"{"kind":"builtin","name":"ex2_q5"}"#).unwrap();
        assert_eq!(b.name, "ex2_q5");
    }
}
