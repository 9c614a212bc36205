//! Regularity verdicts as functions of `(lambda, q, p)`.
//!
//! Every verdict carries the rule that produced it. Rule ids name the regime
//! they cover (`linf.pos.two-sided.mid` is the strip `q/2 < lambda < q`) and
//! are followed by the defining inequality. Interval endpoints are compared
//! exactly as written; the excluded lines `q = 1/n` and
//! `lambda = q/(1 - n q)` are matched with a small tolerance since they are
//! rarely representable.

use serde::Serialize;

use crate::asymptotics::Finiteness;
use crate::error::{Error, Result};

const LINE_TOL: f64 = 1e-9;

/// Behaviour of `u_x` in `L^inf` as `t -> t*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LinftyOutcome {
    /// Global; long-time limit not resolved (`lambda = 0`).
    Global,
    GlobalVanish,
    GlobalNontrivialSteady,
    TwoSidedEverywhere,
    OneSidedDiscreteMin,
    OneSidedDiscreteMax,
    NotCovered,
}

impl LinftyOutcome {
    pub fn is_global(self) -> bool {
        matches!(self, Self::Global | Self::GlobalVanish | Self::GlobalNontrivialSteady)
    }

    pub fn is_blowup(self) -> bool {
        matches!(
            self,
            Self::TwoSidedEverywhere | Self::OneSidedDiscreteMin | Self::OneSidedDiscreteMax
        )
    }

    fn t_star(self) -> Finiteness {
        if self.is_global() {
            Finiteness::Infinite
        } else if self.is_blowup() {
            Finiteness::Finite
        } else {
            Finiteness::Unknown
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityVerdict {
    pub linfty: LinftyOutcome,
    pub t_star_finite: Finiteness,
    pub provenance: String,
    pub caveats: Vec<String>,
}

impl RegularityVerdict {
    fn new(linfty: LinftyOutcome, provenance: impl Into<String>) -> Self {
        Self {
            linfty,
            t_star_finite: linfty.t_star(),
            provenance: provenance.into(),
            caveats: Vec::new(),
        }
    }

    fn caveat(mut self, c: impl Into<String>) -> Self {
        self.caveats.push(c.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpOutcome {
    FiniteAtTstar,
    DivergesAtTstar,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpVerdict {
    pub p: f64,
    pub outcome: LpOutcome,
    pub provenance: String,
}

impl LpVerdict {
    fn new(p: f64, outcome: LpOutcome, provenance: impl Into<String>) -> Self {
        Self {
            p,
            outcome,
            provenance: provenance.into(),
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("q must be positive and finite (got {q})")))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("lambda must be finite (got {lambda})")))
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("p must lie in [1, inf) (got {p})")))
    }
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= LINE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// `q = 1/n` for some positive integer `n`.
fn is_reciprocal_integer(q: f64) -> Option<u64> {
    let n = (1.0 / q).round();
    (n >= 1.0 && near(q, 1.0 / n)).then_some(n as u64)
}

/// `lambda = q/(1 - n q)` for some positive integer `n` with `n q != 1`.
fn on_excluded_lambda_line(lambda: f64, q: f64) -> Option<u64> {
    // For n q > 1 + q the line values lie in (-1, 0), where no rule uses them.
    let n_max = ((1.0 + q) / q).ceil() as u64 + 1;
    (1..=n_max).find(|&n| {
        let d = 1.0 - n as f64 * q;
        d != 0.0 && near(lambda, q / d)
    })
}

/// Caveat text when `(lambda, q)` sits on one of the excluded lines.
fn excluded_line(lambda: f64, q: f64) -> Option<String> {
    if let Some(n) = is_reciprocal_integer(q) {
        return Some(format!("q = 1/{n} is excluded: the local integrals acquire log terms"));
    }
    on_excluded_lambda_line(lambda, q)
        .map(|n| format!("lambda = q/(1 - {n} q) is excluded: the local integrals acquire log terms"))
}

const LEMMA_CAVEAT: &str = "relies on the bounded-integral expansion near the active extrema (q != 1/n, lambda != q/(1 - n q))";

/// `L^inf` verdict for data with local exponent `q` at the active extrema.
pub fn classify_linfty(lambda: f64, q: f64) -> Result<RegularityVerdict> {
    check_q(q)?;
    check_lambda(lambda)?;
    use LinftyOutcome::*;
    if q == 1.0 {
        return Ok(linfty_q_one(lambda));
    }
    if lambda == 0.0 {
        return Ok(RegularityVerdict::new(Global, "linf.zero: lambda = 0").caveat(
            "global existence is known; the long-time limit is not resolved here",
        ));
    }
    if lambda > 0.0 {
        return Ok(linfty_positive(lambda, q));
    }
    Ok(linfty_negative(lambda, q))
}

fn linfty_q_one(lambda: f64) -> RegularityVerdict {
    use LinftyOutcome::*;
    if lambda > 0.5 {
        RegularityVerdict::new(TwoSidedEverywhere, "linf.q1.two-sided: q = 1, lambda > 1/2")
    } else if lambda == 0.5 {
        RegularityVerdict::new(GlobalNontrivialSteady, "linf.q1.steady: q = 1, lambda = 1/2")
    } else if lambda > 0.0 {
        RegularityVerdict::new(GlobalVanish, "linf.q1.vanish: q = 1, 0 < lambda < 1/2")
    } else if lambda == 0.0 {
        RegularityVerdict::new(Global, "linf.q1.global: q = 1, lambda = 0")
            .caveat("global existence is known; the long-time limit is not resolved here")
    } else {
        RegularityVerdict::new(OneSidedDiscreteMin, "linf.q1.one-sided-min: q = 1, lambda < 0")
    }
}

fn linfty_positive(lambda: f64, q: f64) -> RegularityVerdict {
    use LinftyOutcome::*;
    let half = 0.5 * q;
    if lambda < half {
        return RegularityVerdict::new(GlobalVanish, "linf.pos.vanish: 0 < lambda < q/2");
    }
    if lambda == half {
        return RegularityVerdict::new(GlobalNontrivialSteady, "linf.pos.steady: lambda = q/2");
    }
    if lambda < q {
        return RegularityVerdict::new(TwoSidedEverywhere, "linf.pos.two-sided.mid: q/2 < lambda < q");
    }
    if q > 1.0 {
        if lambda > q {
            return RegularityVerdict::new(TwoSidedEverywhere, "linf.pos.two-sided.large-q: lambda > q > 1");
        }
        return not_covered("lambda = q is not resolved for q > 1; nearest rules: linf.pos.two-sided.mid, linf.pos.two-sided.large-q");
    }
    let bend = q / (1.0 - q);
    if q > 0.5 {
        if lambda > q && lambda < bend {
            return RegularityVerdict::new(
                TwoSidedEverywhere,
                "linf.pos.two-sided.mid-q: 1/2 < q < 1, q < lambda < q/(1 - q)",
            );
        }
        if lambda > bend {
            return RegularityVerdict::new(
                OneSidedDiscreteMax,
                "linf.pos.one-sided-max.mid-q: 1/2 < q < 1, lambda > q/(1 - q)",
            );
        }
        return not_covered(format!(
            "boundary line lambda = {} of the strip 1/2 < q < 1; nearest rules: linf.pos.two-sided.mid-q, linf.pos.one-sided-max.mid-q",
            if lambda == q { "q" } else { "q/(1 - q)" }
        ));
    }
    if q == 0.5 {
        return not_covered("q = 1/2 with lambda >= q is not resolved; nearest rule: linf.pos.two-sided.mid");
    }
    // 0 < q < 1/2
    if q > 1.0 / 3.0 && lambda > 0.5 && lambda < bend {
        return RegularityVerdict::new(
            TwoSidedEverywhere,
            "linf.pos.two-sided.small-q: 1/3 < q < 1/2, 1/2 < lambda < q/(1 - q)",
        )
        .caveat(LEMMA_CAVEAT);
    }
    if lambda > 1.0 {
        if let Some(line) = excluded_line(lambda, q) {
            return not_covered(format!("{line}; nearest rule: linf.pos.one-sided-max.small-q"));
        }
        return RegularityVerdict::new(
            OneSidedDiscreteMax,
            "linf.pos.one-sided-max.small-q: 0 < q < 1/2, lambda > 1",
        )
        .caveat(LEMMA_CAVEAT);
    }
    not_covered(
        "0 < q < 1/2 with q <= lambda <= 1 outside the strip 1/3 < q < 1/2, 1/2 < lambda < q/(1 - q); \
         nearest rules: linf.pos.two-sided.small-q, linf.pos.one-sided-max.small-q",
    )
}

fn linfty_negative(lambda: f64, q: f64) -> RegularityVerdict {
    use LinftyOutcome::*;
    if lambda >= -1.0 {
        return RegularityVerdict::new(OneSidedDiscreteMin, "linf.neg.one-sided-min: -1 <= lambda < 0");
    }
    if q < 1.0 {
        if let Some(line) = excluded_line(lambda, q) {
            return not_covered(format!("{line}; nearest rule: linf.neg.one-sided-min.small-q"));
        }
        return RegularityVerdict::new(
            OneSidedDiscreteMin,
            "linf.neg.one-sided-min.small-q: lambda < -1, 0 < q < 1",
        )
        .caveat(LEMMA_CAVEAT);
    }
    // q > 1
    let bend = q / (1.0 - q);
    if lambda > bend {
        RegularityVerdict::new(
            OneSidedDiscreteMin,
            "linf.neg.one-sided-min.large-q: q > 1, q/(1 - q) < lambda < -1",
        )
    } else if lambda < bend {
        RegularityVerdict::new(
            TwoSidedEverywhere,
            "linf.neg.two-sided: q > 1, lambda < q/(1 - q)",
        )
        .caveat("u_x -> +inf away from the extremal points")
    } else {
        not_covered("lambda = q/(1 - q) for q > 1; nearest rules: linf.neg.one-sided-min.large-q, linf.neg.two-sided")
    }
}

fn not_covered(note: impl Into<String>) -> RegularityVerdict {
    RegularityVerdict::new(LinftyOutcome::NotCovered, "linf.not-covered").caveat(note)
}

/// `L^p` verdict, `1 <= p < inf`.
pub fn classify_lp(lambda: f64, q: f64, p: f64) -> Result<LpVerdict> {
    check_q(q)?;
    check_lambda(lambda)?;
    check_p(p)?;
    use LpOutcome::*;
    let v = |o, s: &str| Ok(LpVerdict::new(p, o, s));
    if lambda >= 0.0 && lambda <= 0.5 * q {
        return v(FiniteAtTstar, "lp.pos.global: 0 <= lambda <= q/2, all p");
    }
    if q == 1.0 {
        return lp_q_one(lambda, p);
    }
    if lambda > 0.0 {
        let diverging = p > 1.0
            && ((lambda > 0.5 * q && lambda < q)
                || (lambda > q && q > 1.0)
                || (q > 1.0 / 3.0 && q < 0.5 && lambda > 0.5 && lambda < q / (1.0 - q))
                || (q > 0.5 && q < 1.0 && lambda > q && lambda < q / (1.0 - q)));
        if diverging {
            return v(DivergesAtTstar, "lp.pos.two-sided: two-sided blow-up strips, p > 1");
        }
        if q < 0.5 && p < 2.0 && lambda > 1.0 / (2.0 - p) {
            return v(FiniteAtTstar, "lp.pos.small-q.finite: 0 < q < 1/2, 1 <= p < 2, lambda > 1/(2 - p)");
        }
        if q > 0.5 && q < 1.0 && p < 1.0 / q && lambda > q / (1.0 - p * q) {
            return v(FiniteAtTstar, "lp.pos.mid-q.finite: 1/2 < q < 1, 1 <= p < 1/q, lambda > q/(1 - p q)");
        }
        return v(Unknown, "lp.unresolved");
    }
    // lambda < 0
    if q < 0.5 {
        if p <= 2.0 {
            return v(FiniteAtTstar, "lp.neg.small-q.finite: 0 < q < 1/2, lambda < 0, 1 <= p <= 2");
        }
        if lambda > 1.0 / (2.0 - p) {
            return v(FiniteAtTstar, "lp.neg.small-q.finite-large-p: 0 < q < 1/2, 1/(2 - p) < lambda < 0, p > 2");
        }
    } else if q > 0.5 && q < 1.0 {
        if p <= 1.0 / q {
            return v(FiniteAtTstar, "lp.neg.mid-q.finite: 1/2 < q < 1, lambda < 0, 1 <= p <= 1/q");
        }
        if lambda > q / (1.0 - p * q) {
            return v(FiniteAtTstar, "lp.neg.mid-q.finite-large-p: 1/2 < q < 1, q/(1 - p q) < lambda < 0, p > 1/q");
        }
    } else if q > 1.0 {
        if lambda > q / (1.0 - p * q) {
            return v(FiniteAtTstar, "lp.neg.large-q.finite: q > 1, q/(1 - p q) < lambda < 0, p >= 1");
        }
        if p > 1.0 && lambda < q / (p * (1.0 - q)) {
            return v(DivergesAtTstar, "lp.neg.large-q.diverge: q > 1, lambda < q/(p (1 - q)), p > 1");
        }
    }
    v(Unknown, "lp.unresolved")
}

fn lp_q_one(lambda: f64, p: f64) -> Result<LpVerdict> {
    use LpOutcome::*;
    let v = |o, s: &str| Ok(LpVerdict::new(p, o, s));
    if lambda > 0.5 {
        if p > 1.0 {
            return v(DivergesAtTstar, "lp.q1.diverge: q = 1, lambda > 1/2, p > 1");
        }
        return v(Unknown, "lp.unresolved");
    }
    // lambda < 0
    if p == 1.0 {
        return v(FiniteAtTstar, "lp.q1.integrable: q = 1, lambda < 0, p = 1");
    }
    if lambda > 1.0 / (1.0 - p) {
        return v(FiniteAtTstar, "lp.q1.finite: q = 1, 1/(1 - p) < lambda < 0, p > 1");
    }
    // Divergence of E and of the L^3 norm propagates to larger p.
    if p >= 2.0 && lambda <= -1.0 {
        return v(DivergesAtTstar, "lp.q1.energy: q = 1, lambda <= -1, p >= 2");
    }
    if p >= 3.0 && lambda <= -0.5 {
        return v(DivergesAtTstar, "lp.q1.cubic: q = 1, lambda <= -1/2, p >= 3");
    }
    v(Unknown, "lp.unresolved")
}

/// Limit of a scalar functional of `u_x` as `t -> t*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    /// Stays bounded with a positive limit.
    Finite,
    /// Stays bounded (sign or limit not asserted).
    Bounded,
    Vanishes,
    IdenticallyZero,
    PlusInfinity,
    MinusInfinity,
}

/// Energy `E = |u_x|_2^2`, its rate, the `L^3` norm and `int u_x^3` at `t*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyVerdict {
    pub lambda: f64,
    pub t_star_finite: Finiteness,
    pub energy: Limit,
    pub energy_rate: Limit,
    pub l3_norm: Limit,
    pub cubic_integral: Limit,
    pub provenance: Vec<String>,
}

/// Energy table, available for `q = 1` only.
pub fn classify_energy(lambda: f64, q: f64) -> Result<EnergyVerdict> {
    check_q(q)?;
    check_lambda(lambda)?;
    if q != 1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "the energy table is available for q = 1 only (got q = {q})"
        )));
    }
    use Limit::*;
    let (energy, rate, l3, cubic, rules): (_, _, _, _, &[&str]) = if lambda > 0.5 {
        (
            PlusInfinity,
            PlusInfinity,
            PlusInfinity,
            PlusInfinity,
            &["energy.q1.diverge: lambda > 1/2", "rate.q1.diverge: lambda > 1/2", "cubic.q1.plus: lambda > 1/2"],
        )
    } else if lambda == 0.5 {
        (Finite, Bounded, Finite, Bounded, &["energy.q1.steady: lambda = 1/2", "cubic.q1.bounded: 0 <= lambda <= 1/2"])
    } else if lambda > 0.0 {
        (Vanishes, Bounded, Vanishes, Bounded, &["energy.q1.vanish: 0 < lambda < 1/2", "cubic.q1.bounded: 0 <= lambda <= 1/2"])
    } else if lambda == 0.0 {
        (Bounded, Bounded, Bounded, Bounded, &["energy.q1.global: lambda = 0", "cubic.q1.bounded: 0 <= lambda <= 1/2"])
    } else if lambda > -0.5 {
        (
            Finite,
            Bounded,
            Finite,
            Bounded,
            &["energy.q1.finite: -1 < lambda < 0", "rate.q1.bounded: -1/2 < lambda < 0", "cubic.q1.bounded: -1/2 < lambda < 0"],
        )
    } else if lambda == -0.5 {
        (
            Finite,
            IdenticallyZero,
            PlusInfinity,
            MinusInfinity,
            &["energy.q1.finite: -1 < lambda < 0", "rate.q1.zero: lambda = -1/2", "cubic.q1.minus: lambda <= -1/2"],
        )
    } else if lambda > -1.0 {
        (
            Finite,
            PlusInfinity,
            PlusInfinity,
            MinusInfinity,
            &["energy.q1.finite: -1 < lambda < 0", "rate.q1.diverge: -1 < lambda < -1/2", "cubic.q1.minus: lambda <= -1/2"],
        )
    } else {
        (
            PlusInfinity,
            PlusInfinity,
            PlusInfinity,
            MinusInfinity,
            &["energy.q1.diverge: lambda <= -1", "rate.q1.diverge: lambda <= -1", "cubic.q1.minus: lambda <= -1/2"],
        )
    };
    Ok(EnergyVerdict {
        lambda,
        t_star_finite: linfty_q_one(lambda).t_star_finite,
        energy,
        energy_rate: rate,
        l3_norm: l3,
        cubic_integral: cubic,
        provenance: rules.iter().map(|s| s.to_string()).collect(),
    })
}

fn check_order(k: u32) -> Result<()> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::Domain(format!("the zero order k must be odd and positive (got {k})")));
    }
    Ok(())
}

/// Verdict for smooth data whose `u0''` has a zero of odd order `k` at every
/// active extremum, i.e. local exponent `q = k + 1`.
pub fn classify_smooth(lambda: f64, k: u32) -> Result<RegularityVerdict> {
    check_order(k)?;
    check_lambda(lambda)?;
    use LinftyOutcome::*;
    let kf = k as f64;
    let half = 0.5 * (1.0 + kf);
    let bend = -(1.0 + kf) / kf;
    let v = if lambda == 0.0 {
        RegularityVerdict::new(Global, "smooth.zero: lambda = 0")
            .caveat("global existence is known; the long-time limit is not resolved here")
    } else if lambda > 0.0 && lambda < half {
        RegularityVerdict::new(GlobalVanish, "smooth.vanish: 0 < lambda < (1 + k)/2")
    } else if lambda == half {
        RegularityVerdict::new(GlobalNontrivialSteady, "smooth.steady: lambda = (1 + k)/2")
    } else if lambda > half {
        RegularityVerdict::new(TwoSidedEverywhere, "smooth.two-sided: lambda > (1 + k)/2")
            .caveat("L^p norms diverge for every p > 1")
    } else if lambda > bend {
        RegularityVerdict::new(OneSidedDiscreteMin, "smooth.one-sided-min: -(1 + k)/k < lambda < 0")
    } else if lambda < bend {
        RegularityVerdict::new(TwoSidedEverywhere, "smooth.two-sided.neg: lambda < -(1 + k)/k")
            .caveat("u_x -> +inf away from the extremal points")
    } else {
        not_covered("lambda = -(1 + k)/k; nearest rules: smooth.one-sided-min, smooth.two-sided.neg")
    };
    Ok(v)
}

/// `L^p` verdict for smooth data with zero order `k`.
pub fn classify_smooth_lp(lambda: f64, k: u32, p: f64) -> Result<LpVerdict> {
    check_order(k)?;
    check_lambda(lambda)?;
    check_p(p)?;
    use LpOutcome::*;
    let kf = k as f64;
    let q = 1.0 + kf;
    let o = if lambda >= 0.0 && lambda <= 0.5 * q {
        (FiniteAtTstar, "smooth.lp.global: 0 <= lambda <= (1 + k)/2, all p")
    } else if lambda > 0.5 * q {
        if p > 1.0 {
            (DivergesAtTstar, "smooth.lp.diverge: lambda > (1 + k)/2, p > 1")
        } else {
            (Unknown, "lp.unresolved")
        }
    } else if lambda > -q / kf && lambda > q / (1.0 - p * q) {
        (FiniteAtTstar, "smooth.lp.finite: (1 + k)/(1 - p (1 + k)) < lambda < 0")
    } else if lambda < -q / kf && p > 1.0 && lambda < -q / (p * kf) {
        (DivergesAtTstar, "smooth.lp.diverge.neg: lambda < -(1 + k)/(p k), p > 1")
    } else {
        (Unknown, "lp.unresolved")
    };
    Ok(LpVerdict::new(p, o.0, o.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EulerOutcome {
    FiniteTimeBlowup,
    GlobalInTime,
    Unknown,
}

/// Regularity of stagnation-point-form Euler flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerVerdict {
    pub dim: u32,
    pub lambda: f64,
    pub q: f64,
    pub outcome: EulerOutcome,
    pub notes: Vec<String>,
}

/// `lambda` for stagnation-point-form Euler in `dim` dimensions.
pub fn euler_lambda(dim: u32) -> Result<f64> {
    match dim {
        2 => Ok(1.0),
        3 => Ok(0.5),
        _ => Err(Error::Domain(format!("dim must be 2 or 3 (got {dim})"))),
    }
}

/// Two- and three-dimensional table by `q`.
pub fn euler_spf(q: f64, dim: u32) -> Result<EulerVerdict> {
    check_q(q)?;
    let lambda = euler_lambda(dim)?;
    let global_from = if dim == 2 { 2.0 } else { 1.0 };
    let mut notes = Vec::new();
    let outcome = if q >= global_from {
        EulerOutcome::GlobalInTime
    } else if q > 0.5 {
        EulerOutcome::FiniteTimeBlowup
    } else {
        notes.push("finite-time blow-up is expected for 0 < q <= 1/2 but not established".into());
        EulerOutcome::Unknown
    };
    Ok(EulerVerdict {
        dim,
        lambda,
        q,
        outcome,
        notes,
    })
}

/// Combined verdict with the JSON layout used by the command line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub lambda: f64,
    pub q: f64,
    pub linfty: LinftyOutcome,
    pub t_star: Finiteness,
    pub lp: Vec<LpVerdict>,
    pub provenance: Vec<String>,
    pub caveats: Vec<String>,
}

/// `L^inf` verdict plus `L^p` verdicts at each requested `p`; the energy
/// table is folded into the caveats when `q = 1`.
pub fn classify(lambda: f64, q: f64, ps: &[f64]) -> Result<Classification> {
    let v = classify_linfty(lambda, q)?;
    let lp = ps.iter().map(|&p| classify_lp(lambda, q, p)).collect::<Result<Vec<_>>>()?;
    let mut provenance = vec![v.provenance.clone()];
    provenance.extend(lp.iter().map(|l| l.provenance.clone()));
    let mut caveats = v.caveats.clone();
    if q == 1.0 {
        let e = classify_energy(lambda, q)?;
        if e.energy_rate == Limit::IdenticallyZero {
            caveats.push("energy rate vanishes identically (dE/dt = 0)".into());
        }
        provenance.extend(e.provenance);
    } else if lambda == -0.5 {
        caveats.push("energy rate vanishes identically at lambda = -1/2 (dE/dt = 0)".into());
    }
    provenance.dedup();
    Ok(Classification {
        lambda,
        q,
        linfty: v.linfty,
        t_star: v.t_star_finite,
        lp,
        provenance,
        caveats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use LinftyOutcome::*;

    fn linf(lambda: f64, q: f64) -> LinftyOutcome {
        classify_linfty(lambda, q).unwrap().linfty
    }

    #[test]
    fn linfty_examples() {
        assert_eq!(linf(1.0, 1.0), TwoSidedEverywhere);
        assert_eq!(linf(0.5, 1.0), GlobalNontrivialSteady);
        assert_eq!(linf(-2.5, 1.5), OneSidedDiscreteMin);
        assert_eq!(linf(2.0, 5.0), GlobalVanish);
        assert_eq!(linf(1.25, 2.5), GlobalNontrivialSteady);
        assert_eq!(linf(5.5, 6.0), TwoSidedEverywhere);
        assert_eq!(linf(0.5, 1.0 / 3.0), NotCovered);
        assert_eq!(linf(0.5, 1.2), GlobalVanish);
        assert_eq!(linf(0.0, 3.0), Global);
        assert_eq!(linf(-4.0, 1.5), TwoSidedEverywhere);
        assert_eq!(linf(-3.0, 1.5), NotCovered);
        assert_eq!(linf(0.9, 0.75), TwoSidedEverywhere);
        assert_eq!(linf(4.0, 0.75), OneSidedDiscreteMax);
        assert_eq!(linf(0.55, 0.4), TwoSidedEverywhere);
        assert_eq!(linf(2.0, 0.3), OneSidedDiscreteMax);
        assert!(classify_linfty(1.0, 0.0).is_err());
    }

    #[test]
    fn excluded_lines_are_not_covered() {
        // q = 0.3, n = 3: lambda = 0.3/(1 - 0.9) = 3.
        let v = classify_linfty(3.0, 0.3).unwrap();
        assert_eq!(v.linfty, NotCovered);
        assert!(v.caveats[0].contains("q/(1 - 3 q)"));
        assert_eq!(linf(2.0, 0.25), NotCovered);
        // q = 0.4, n = 3: lambda = 0.4/(1 - 1.2) = -2.
        assert_eq!(linf(-2.0, 0.4), NotCovered);
        assert_eq!(linf(-2.1, 0.4), OneSidedDiscreteMin);
    }

    #[test]
    fn lp_examples() {
        let o = |l, q, p| classify_lp(l, q, p).unwrap().outcome;
        assert_eq!(o(2.0, 1.0, 3.0), LpOutcome::DivergesAtTstar);
        assert_eq!(o(-0.25, 1.0, 2.0), LpOutcome::FiniteAtTstar);
        assert_eq!(o(-7.0, 1.0, 1.0), LpOutcome::FiniteAtTstar);
        assert_eq!(o(-7.0, 0.3, 1.0), LpOutcome::FiniteAtTstar);
        assert_eq!(o(-7.0, 0.7, 1.0), LpOutcome::FiniteAtTstar);
        assert_eq!(o(-1.0, 1.0, 2.0), LpOutcome::DivergesAtTstar);
        assert_eq!(o(-4.0, 1.5, 2.0), LpOutcome::DivergesAtTstar);
        assert_eq!(o(2.0, 0.3, 1.2), LpOutcome::FiniteAtTstar);
        assert_eq!(o(2.0, 1.0, 1.0), LpOutcome::Unknown);
        assert!(classify_lp(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn energy_table() {
        let e = classify_energy(-0.5, 1.0).unwrap();
        assert_eq!(e.energy_rate, Limit::IdenticallyZero);
        let e = classify_energy(-0.75, 1.0).unwrap();
        assert_eq!((e.energy, e.energy_rate), (Limit::Finite, Limit::PlusInfinity));
        let e = classify_energy(1.0, 1.0).unwrap();
        assert_eq!(e.energy, Limit::PlusInfinity);
        assert!(classify_energy(1.0, 2.0).is_err());
    }

    #[test]
    fn smooth_examples() {
        let s = |l, k| classify_smooth(l, k).unwrap().linfty;
        assert_eq!(s(1.0, 1), GlobalNontrivialSteady);
        assert_eq!(s(1.5, 1), TwoSidedEverywhere);
        assert_eq!(s(-1.0 / 3.0, 1), OneSidedDiscreteMin);
        assert_eq!(s(7.0, 99), GlobalVanish);
        assert_eq!(s(-3.0, 1), TwoSidedEverywhere);
        assert!(classify_smooth(1.0, 2).is_err());
        // Same answer as the general table at q = k + 1, off the line
        // lambda = q that only the smooth statement resolves.
        for k in [1u32, 3, 5] {
            for l in [-5.0, -1.7, -0.4, 0.3, 1.0, 2.5, 3.0, 4.5] {
                let a = s(l, k);
                let b = linf(l, k as f64 + 1.0);
                assert_eq!(a, b, "k = {k}, lambda = {l}");
            }
        }
    }

    #[test]
    fn euler_table() {
        assert_eq!(euler_spf(1.2, 3).unwrap().outcome, EulerOutcome::GlobalInTime);
        assert_eq!(euler_spf(1.0, 2).unwrap().outcome, EulerOutcome::FiniteTimeBlowup);
        assert_eq!(euler_spf(1.0 / 3.0, 3).unwrap().outcome, EulerOutcome::Unknown);
        assert!(euler_spf(1.0, 4).is_err());
    }

    #[test]
    fn classification_json_layout() {
        let c = classify(-0.5, 2.0, &[1.0, 2.0]).unwrap();
        assert_eq!(c.linfty, OneSidedDiscreteMin);
        assert!(c.caveats.iter().any(|s| s.contains("dE/dt = 0")));
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        for key in ["linfty", "t_star", "lp", "provenance", "caveats"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["lp"][0]["p"], 1.0);
        assert_eq!(v["t_star"], "finite");
    }
}
