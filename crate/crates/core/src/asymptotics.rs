//! Leading-order behaviour of `int J^-b` as `eta -> eta*` and the resulting
//! laws for the approach of `t` to `t*`.
//!
//! Near an active extremum with local law `|u0' - extreme| ~ |C| h^q` the
//! kernel is `J ~ eps + (|C|/|extreme|) h^q`, so each side of the point
//! contributes `Gamma(1 + 1/q) Gamma(b - 1/q)/Gamma(b) (|extreme|/|C|)^(1/q)
//! eps^(1/q - b)` when `b > 1/q`. Interior points have two sides, endpoints
//! of `[0, 1]` one.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_solution::ExactSolution;
use crate::profiles::{Extremum, InitialProfile};
use crate::special_fn::{gamma, gamma_ratio};

/// `J(active)` at which bounded constants are measured.
pub const BOUNDED_PROBE: f64 = 1e-6;
/// Symmetric lambda shift used on excluded parameter lines.
pub const CONTINUITY_SHIFT: f64 = 1e-6;
const LINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `b > 1/q`, `lambda > 0`: blows up like a power of `J` at the maxima.
    MaxSide,
    /// `b > 1/q`, `lambda < 0`: same at the minima.
    MinSide,
    /// `b = 1/q`: grows like `ln(1/J)`.
    Logarithmic,
    /// Bounded, positive limit.
    Bounded,
    /// `b = 0`: the integral is identically 1.
    Trivial,
}

/// `int J^-b ~ C J(active)^e` (or `C ln(1/J)` in the logarithmic regime).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub constant: f64,
    pub exponent: f64,
    pub regime: Regime,
    /// Conditions the estimate relies on, in words.
    pub conditions: Vec<String>,
    pub warnings: Vec<String>,
}

impl AsymptoticEstimate {
    /// Value of the leading-order law at `J(active) = j`.
    pub fn eval(&self, j: f64) -> f64 {
        match self.regime {
            Regime::Logarithmic => self.constant * (1.0 / j).ln(),
            _ => self.constant * j.powf(self.exponent),
        }
    }

    fn bounded(constant: f64, conditions: Vec<String>) -> Self {
        Self {
            constant,
            exponent: 0.0,
            regime: Regime::Bounded,
            conditions,
            warnings: Vec::new(),
        }
    }
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < LINE_TOL
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= LINE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Active locations whose exponent equals `q`.
fn locations_with_q(profile: &InitialProfile, lambda: f64, q: f64) -> Result<Vec<Extremum>> {
    let locs: Vec<Extremum> = profile
        .active_extrema(lambda)
        .into_iter()
        .filter(|e| same(e.q, q))
        .collect();
    if locs.is_empty() {
        return Err(Error::Parameter(format!(
            "{} has no active extremum with q = {q} for lambda = {lambda}",
            profile.name
        )));
    }
    Ok(locs)
}

/// `sum over locations of sides * (|extreme|/|C|)^(1/q)`.
fn weighted_scale(profile: &InitialProfile, lambda: f64, locs: &[Extremum], q: f64) -> f64 {
    let extreme = profile.active_value(lambda).abs();
    locs.iter()
        .map(|e| e.sides() as f64 * (extreme / e.coeff.abs()).powf(1.0 / q))
        .sum()
}

/// Three-case estimate of `int_0^1 J^-b` near `eta*`.
///
/// Singular cases use the Gamma-ratio constant. The bounded case measures
/// its constant by one quadrature at `J(active) = 1e-6`.
pub fn lemma_general(lambda: f64, q: f64, b: f64, profile: &Arc<InitialProfile>) -> Result<AsymptoticEstimate> {
    if lambda == 0.0 || !(q > 0.0) {
        return Err(Error::Domain(format!("need lambda != 0 and q > 0 (got {lambda}, {q})")));
    }
    if b == 0.0 {
        return Ok(AsymptoticEstimate {
            constant: 1.0,
            exponent: 0.0,
            regime: Regime::Trivial,
            conditions: vec!["b = 0".into()],
            warnings: Vec::new(),
        });
    }
    let locs = locations_with_q(profile, lambda, q)?;
    if b > 1.0 / q && !same(b, 1.0 / q) {
        let c = gamma(1.0 + 1.0 / q)? * gamma_ratio(b - 1.0 / q, b)?
            * weighted_scale(profile, lambda, &locs, q);
        let (regime, side) = if lambda > 0.0 {
            (Regime::MaxSide, "lambda > 0, b > 1/q")
        } else {
            (Regime::MinSide, "lambda < 0, b > 1/q")
        };
        return Ok(AsymptoticEstimate {
            constant: c,
            exponent: 1.0 / q - b,
            regime,
            conditions: vec![side.into()],
            warnings: Vec::new(),
        });
    }
    if same(b, 1.0 / q) {
        return Err(Error::UnsupportedRegime(format!(
            "b = 1/q = {b}: the power-law estimate degenerates"
        )));
    }
    // Bounded regime.
    let covered = b < 0.0 || (q > 0.5 && b > 0.0 && b < 1.0 / q) || (q < 0.5 && b > 0.0 && b < 2.0);
    if !covered {
        return Err(Error::UnsupportedRegime(format!(
            "bounded regime requires q > 1/2 with 0 < b < 1/q, or q < 1/2 with 0 < b < 2 (q = {q}, b = {b})"
        )));
    }
    if b > 0.0 && (is_integer(1.0 / q) || is_integer(b) || is_integer(b - 1.0 / q)) {
        return Err(Error::ExcludedParameter(format!(
            "1/q, b and b - 1/q must not be integers (q = {q}, b = {b})"
        )));
    }
    let c = measure_bounded(profile, lambda, b)?;
    let cond = if b < 0.0 {
        "b <= 0".to_string()
    } else {
        format!("b = {b} < 1/q = {}", 1.0 / q)
    };
    Ok(AsymptoticEstimate::bounded(c, vec![cond]))
}

fn measure_bounded(profile: &Arc<InitialProfile>, lambda: f64, b: f64) -> Result<f64> {
    ExactSolution::new(profile.clone(), lambda)?.jpow_eps(BOUNDED_PROBE, b)
}

/// Estimate for `K_i = int J^-(i + 1/lambda)` with `i` in `0..=3`.
///
/// Uses the largest active exponent `q` of the profile (the locations that
/// dominate). Parameters on an excluded line yield
/// [`Error::ExcludedParameter`]; see [`kbar_estimate_continuous`].
pub fn kbar_estimate(lambda: f64, q: f64, profile: &Arc<InitialProfile>, i: u32) -> Result<AsymptoticEstimate> {
    if i > 3 {
        return Err(Error::Parameter(format!("i = {i} must be in 0..=3")));
    }
    if lambda == 0.0 || !(q > 0.0) {
        return Err(Error::Domain(format!("need lambda != 0 and q > 0 (got {lambda}, {q})")));
    }
    let b = i as f64 + 1.0 / lambda;
    if same(b, 1.0 / q) {
        if same(q, 1.0) && same(lambda, 1.0) && i == 0 {
            let locs = locations_with_q(profile, lambda, q)?;
            let c = weighted_scale(profile, lambda, &locs, q) / q;
            return Ok(AsymptoticEstimate {
                constant: c,
                exponent: 0.0,
                regime: Regime::Logarithmic,
                conditions: vec!["q = 1, lambda = 1".into()],
                warnings: Vec::new(),
            });
        }
        return Err(Error::UnsupportedRegime(format!(
            "i + 1/lambda = 1/q (lambda = {lambda}, q = {q}) has no stated estimate"
        )));
    }
    if b < 1.0 / q && b > 0.0 && lambda > 0.0 && i <= 1 {
        // Bounded branches carry the excluded lines lambda != q/(1 - nq), q != 1/n.
        if is_integer(1.0 / q) {
            return Err(Error::ExcludedParameter(format!("q = {q} is a reciprocal integer")));
        }
        let n = 1.0 / q - b;
        if is_integer(n) {
            return Err(Error::ExcludedParameter(format!(
                "lambda = {lambda} lies on lambda = q/(1 - nq) with n = {}",
                n.round()
            )));
        }
    }
    lemma_general(lambda, q, b, profile)
}

/// [`kbar_estimate`] with the continuity fallback: on an excluded line the
/// estimates at `lambda +- 1e-6` are averaged and a warning is attached.
pub fn kbar_estimate_continuous(
    lambda: f64,
    q: f64,
    profile: &Arc<InitialProfile>,
    i: u32,
) -> Result<AsymptoticEstimate> {
    match kbar_estimate(lambda, q, profile, i) {
        Err(Error::ExcludedParameter(why)) => {
            let lo = lemma_shifted(lambda - CONTINUITY_SHIFT, q, profile, i)?;
            let hi = lemma_shifted(lambda + CONTINUITY_SHIFT, q, profile, i)?;
            if lo.regime != hi.regime {
                return Err(Error::ExcludedParameter(format!(
                    "{why}; neighbouring regimes differ"
                )));
            }
            let mut est = AsymptoticEstimate {
                constant: 0.5 * (lo.constant + hi.constant),
                exponent: 0.5 * (lo.exponent + hi.exponent),
                regime: lo.regime,
                conditions: lo.conditions,
                warnings: lo.warnings,
            };
            est.warnings.push(format!(
                "{why}; averaged over lambda +- {CONTINUITY_SHIFT:e}"
            ));
            Ok(est)
        }
        other => other,
    }
}

fn lemma_shifted(lambda: f64, q: f64, profile: &Arc<InitialProfile>, i: u32) -> Result<AsymptoticEstimate> {
    let b = i as f64 + 1.0 / lambda;
    match lemma_general(lambda, q, b, profile) {
        // The shifted b may still sit on an integer; the bounded constant is
        // measured, so the integrality conditions do not affect its value.
        Err(Error::ExcludedParameter(_)) => {
            let c = measure_bounded(profile, lambda, b)?;
            Ok(AsymptoticEstimate::bounded(c, vec![format!("b = {b}")]))
        }
        other => other,
    }
}

/// `C4/C3 = Gamma(1 + y1) Gamma(y2) / (Gamma(y1) Gamma(1 + y2))` with
/// `y1 = 1/lambda - 1/q`, `y2 = 1/lambda`, for `0 < lambda < q`.
pub fn c4_over_c3(lambda: f64, q: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < q) {
        return Err(Error::Domain(format!("need 0 < lambda < q (got {lambda}, {q})")));
    }
    let y1 = 1.0 / lambda - 1.0 / q;
    let y2 = 1.0 / lambda;
    Ok(gamma_ratio(1.0 + y1, y1)? * gamma_ratio(y2, 1.0 + y2)?)
}

/// Whether `t*` is finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Finiteness {
    Finite,
    Infinite,
    Unknown,
}

/// Law for `t* - t` as a function of `eta* - eta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailLaw {
    /// `t* - t ~ C (eta* - eta)^exponent`; `t* = inf` when `exponent <= 0`.
    Power { exponent: f64 },
    /// `t(eta)` grows like `-ln(eta* - eta)`: `t* = inf`.
    LogInfinite,
    /// `t* - t ~ C (eta* - eta) ln(1/(eta* - eta))^(2 lambda)`.
    LinearLog { log_power: f64 },
    /// Only bounds on `t*` are available.
    Bracket { lower: f64, upper: f64 },
    /// `t* = eta*` exactly.
    Exact { t_star: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupTail {
    pub finiteness: Finiteness,
    pub law: TailLaw,
    pub provenance: String,
}

/// Tail of `t(eta)` at `eta*` for the regimes the theory resolves.
pub fn blowup_tail(lambda: f64, q: f64, profile: &InitialProfile) -> Result<BlowupTail> {
    if lambda == 0.0 || !(q > 0.0) {
        return Err(Error::Domain(format!("need lambda != 0 and q > 0 (got {lambda}, {q})")));
    }
    if lambda < 0.0 {
        return lambda_negative_bracket(lambda, profile);
    }
    let finite = Finiteness::Finite;
    if lambda < q {
        let e = 2.0 * lambda / q - 1.0;
        let (finiteness, law) = if same(lambda, 0.5 * q) {
            (Finiteness::Infinite, TailLaw::LogInfinite)
        } else if e < 0.0 {
            (Finiteness::Infinite, TailLaw::Power { exponent: e })
        } else {
            (finite, TailLaw::Power { exponent: e })
        };
        return Ok(BlowupTail {
            finiteness,
            law,
            provenance: "K0 ~ C3 J^(1/q - 1/lambda) for 0 < lambda < q".into(),
        });
    }
    if same(lambda, q) {
        if same(q, 1.0) {
            return Ok(BlowupTail {
                finiteness: finite,
                law: TailLaw::LinearLog { log_power: 2.0 },
                provenance: "K0 ~ (2 M0/|C1|) ln(1/J) for q = lambda = 1".into(),
            });
        }
        return Err(Error::UnsupportedRegime(format!(
            "lambda = q = {q}: no estimate for K0 on this line"
        )));
    }
    let bounded = (q > 0.5 && lambda > q) || (q < 0.5 && lambda > 0.5);
    if bounded {
        return Ok(BlowupTail {
            finiteness: finite,
            law: TailLaw::Power { exponent: 1.0 },
            provenance: "K0 bounded for lambda > q > 1/2 or q < 1/2 < lambda".into(),
        });
    }
    Err(Error::UnsupportedRegime(format!(
        "lambda = {lambda}, q = {q}: K0 is not resolved near eta*"
    )))
}

fn lambda_negative_bracket(lambda: f64, profile: &InitialProfile) -> Result<BlowupTail> {
    let eta_star = profile.eta_star(lambda)?;
    let (m0, big) = (profile.m0_min, profile.m0_max);
    if lambda == -1.0 {
        return Ok(BlowupTail {
            finiteness: Finiteness::Finite,
            law: TailLaw::Exact { t_star: eta_star },
            provenance: "K0 = 1 for lambda = -1, hence t* = eta*".into(),
        });
    }
    if lambda > -1.0 {
        let lower = m0.abs() / (lambda.abs() * (m0 - big).powi(2));
        return Ok(BlowupTail {
            finiteness: Finiteness::Finite,
            law: TailLaw::Bracket {
                lower,
                upper: eta_star,
            },
            provenance: "|m0|/(|lambda| (m0 - M0)^2) <= t* <= eta* for -1 < lambda < 0".into(),
        });
    }
    // lambda < -1: J = 1 + s u0'/|m0| with s = eta/eta*, and K0(s) is
    // concave in s, so K0 >= min(K0(0), K0(1)).
    let k1 = ExactSolution::new(Arc::new(profile.clone()), lambda)?.jpow_eps(0.0, 1.0 / lambda)?;
    let upper = eta_star * k1.min(1.0).powf(2.0 * lambda);
    Ok(BlowupTail {
        finiteness: Finiteness::Finite,
        law: TailLaw::Bracket {
            lower: eta_star,
            upper,
        },
        provenance: "eta* <= t* <= eta* K0(eta*)^(2 lambda) for lambda < -1".into(),
    })
}

/// Local growth law of `K0(eps)` from the active extrema, used to close the
/// time integral below a cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum K0Growth {
    /// `K0 ~ C eps^exponent` with `exponent <= 0` (0 means bounded).
    Power { exponent: f64 },
    /// `K0 ~ C ln(1/eps)`.
    Log,
}

/// Growth of `K0` near `eta*` read off the local exponents of the active
/// extrema: each one behaves like `int (eps + h^q)^(-1/lambda) dh`.
pub fn k0_growth(lambda: f64, profile: &InitialProfile) -> K0Growth {
    if lambda < 0.0 {
        return K0Growth::Power { exponent: 0.0 };
    }
    let b = 1.0 / lambda;
    let mut worst = K0Growth::Power { exponent: 0.0 };
    for e in profile.active_extrema(lambda) {
        let g = if same(b, 1.0 / e.q) {
            K0Growth::Log
        } else if b > 1.0 / e.q {
            K0Growth::Power {
                exponent: 1.0 / e.q - b,
            }
        } else {
            K0Growth::Power { exponent: 0.0 }
        };
        worst = match (worst, g) {
            (K0Growth::Power { exponent: a }, K0Growth::Power { exponent: c }) => {
                K0Growth::Power { exponent: a.min(c) }
            }
            (K0Growth::Power { exponent: a }, K0Growth::Log) | (K0Growth::Log, K0Growth::Power { exponent: a }) => {
                if a < 0.0 {
                    K0Growth::Power { exponent: a }
                } else {
                    K0Growth::Log
                }
            }
            (K0Growth::Log, K0Growth::Log) => K0Growth::Log,
        };
    }
    worst
}

/// `int_0^delta eta* K0(e)^(2 lambda) de` from the value `K0(delta)` and the
/// growth law; `None` when the integral diverges.
pub fn time_tail(lambda: f64, eta_star: f64, delta: f64, k0_delta: f64, growth: K0Growth) -> Option<f64> {
    let base = eta_star * delta * k0_delta.powf(2.0 * lambda);
    match growth {
        K0Growth::Power { exponent } => {
            let d = 2.0 * lambda * exponent + 1.0;
            if d <= LINE_TOL {
                None
            } else {
                Some(base / d)
            }
        }
        K0Growth::Log => {
            let l = (1.0 / delta).ln();
            Some(base * (1.0 + 2.0 * lambda / l))
        }
    }
}
