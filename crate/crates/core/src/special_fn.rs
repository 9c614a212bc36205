//! Gamma and beta functions and the Gauss hypergeometric function on the
//! real line, including the continuation to `z < -1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Hard cap on series terms.
pub const SERIES_TERM_CAP: usize = 100_000;
const SERIES_REL_STOP: f64 = 1e-16;
/// Distance to an integer below which `a - b` is treated as integral.
const NEAR_INTEGER: f64 = 1e-8;
/// Symmetric shift applied to `a` when `a - b` is nearly integral.
const INTEGER_SHIFT: f64 = 1e-7;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// `sin(pi x)` with exact zeros at the integers. The reduction `x - round(x)`
/// is exact, which keeps full relative accuracy next to every integer.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let f = x - n;
    if f == 0.0 {
        return 0.0;
    }
    let s = (PI * f).sin();
    if n.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Gamma function for real `x` away from the non-positive integers.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma of non-finite argument {x}")));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        PI / (sin_pi(x) * gamma_unchecked(1.0 - x))
    } else {
        let x = x - 1.0;
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * lanczos_sum(x)
    }
}

/// `1/Gamma(x)`, which is entire: returns 0 at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma_unchecked(x)
    }
}

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    if x < 0.5 {
        return Ok((PI / sin_pi(x)).ln() - ln_gamma(1.0 - x)?);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + lanczos_sum(x).ln())
}

/// `Gamma(x) / Gamma(y)` for positive arguments, stable for large ones.
pub fn gamma_ratio(x: f64, y: f64) -> Result<f64> {
    if x > 0.0 && y > 0.0 && x.max(y) > 30.0 {
        Ok((ln_gamma(x)? - ln_gamma(y)?).exp())
    } else {
        Ok(gamma(x)? / gamma(y)?)
    }
}

/// Euler beta function `B(p, s) = Gamma(p) Gamma(s) / Gamma(p + s)`.
pub fn beta(p: f64, s: f64) -> Result<f64> {
    if p > 0.0 && s > 0.0 {
        Ok((ln_gamma(p)? + ln_gamma(s)? - ln_gamma(p + s)?).exp())
    } else {
        Ok(gamma(p)? * gamma(s)? * rgamma(p + s))
    }
}

/// Parameters of `2F1(a, b; c; z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyp2F1Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

impl Hyp2F1Params {
    pub fn new(a: f64, b: f64, c: f64, z: f64) -> Self {
        Self { a, b, c, z }
    }

    pub fn eval(&self) -> Result<f64> {
        hyp2f1(self.a, self.b, self.c, self.z)
    }
}

/// Gauss hypergeometric function for real arguments with `z < 1`.
///
/// `|z| <= 1/2` and `1/2 < z < 1` use the defining series; `-1 <= z < -1/2`
/// goes through the Pfaff transformation `z -> z/(z-1)`; `z < -1` uses the
/// connection formula in `1/z`.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if ![a, b, c, z].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("hyp2f1 arguments must be finite".into()));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::Parameter(format!("c = {c} is a non-positive integer")));
    }
    if z == 0.0 || a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return Ok(terminating_series(a, b, c, z));
    }
    if z >= 1.0 {
        return Err(Error::Domain(format!("z = {z} lies on the branch cut [1, inf)")));
    }
    if z < -1.0 {
        return continuation(a, b, c, z);
    }
    if z < -0.5 {
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * series(a, c - b, c, w)?);
    }
    series(a, b, c, z)
}

fn terminating_series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 0.0;
    while term != 0.0 {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        k += 1.0;
    }
    sum
}

fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..SERIES_TERM_CAP {
        let kf = k as f64;
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        term *= ratio;
        sum += term;
        if term == 0.0 || (term.abs() < SERIES_REL_STOP * sum.abs() && ratio.abs() < 1.0) {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        terms: SERIES_TERM_CAP,
    })
}

fn continuation(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let d = a - b;
    if (d - d.round()).abs() < NEAR_INTEGER {
        log::warn!(
            "hyp2f1: a - b = {d} is (nearly) an integer; averaging over a -> a +/- {INTEGER_SHIFT}"
        );
        let hi = continuation_raw(a + INTEGER_SHIFT, b, c, z)?;
        let lo = continuation_raw(a - INTEGER_SHIFT, b, c, z)?;
        return Ok(0.5 * (hi + lo));
    }
    continuation_raw(a, b, c, z)
}

fn continuation_raw(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let w = 1.0 / z;
    let mz = -z;
    let gc = gamma(c)?;
    let t1 = gc * gamma(b - a)? * rgamma(b) * rgamma(c - a)
        * mz.powf(-a)
        * hyp2f1(a, a - c + 1.0, a - b + 1.0, w)?;
    let t2 = gc * gamma(a - b)? * rgamma(a) * rgamma(c - b)
        * mz.powf(-b)
        * hyp2f1(b, b - c + 1.0, b - a + 1.0, w)?;
    Ok(t1 + t2)
}

/// Compares both sides of
///
/// `eps^-b d/dbeta[(beta - beta0) 2F1(1/q, b; 1 + 1/q; -c0 |beta - beta0|^q / eps)]
///   = (eps + c0 |beta - beta0|^q)^-b`
///
/// on a 100-point grid over `interval` and returns the largest absolute
/// defect. The left side is differentiated by central differences.
pub fn lemma_diff_check(
    q: f64,
    b: f64,
    c0: f64,
    eps: f64,
    beta0: f64,
    interval: (f64, f64),
) -> Result<f64> {
    if !(q > 0.0) || !(c0 > 0.0) {
        return Err(Error::Parameter("q and c0 must be positive".into()));
    }
    if !(b < 2.0) {
        return Err(Error::Parameter(format!("b = {b} must be below 2")));
    }
    if (b - 1.0 / q).abs() < 1e-12 {
        return Err(Error::Parameter("b = 1/q is excluded".into()));
    }
    if !(eps >= c0) {
        return Err(Error::Parameter(format!("eps = {eps} must be at least c0 = {c0}")));
    }
    let (lo, hi) = interval;
    if !(lo < hi) || (lo - beta0).abs() > 1.0 || (hi - beta0).abs() > 1.0 {
        return Err(Error::Parameter(
            "interval must be ordered and within unit distance of beta0".into(),
        ));
    }

    let antiderivative = |beta: f64| -> Result<f64> {
        let d = beta - beta0;
        let z = -c0 * d.abs().powf(q) / eps;
        Ok(d * hyp2f1(1.0 / q, b, 1.0 + 1.0 / q, z)?)
    };

    let n = 100;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let beta = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let d = (beta - beta0).abs();
        // Keep the stencil on one side of the kink at beta0.
        let mut h = 1e-5;
        if d > 0.0 && d < 2.0 * h {
            h = d / 2.0;
        }
        let lhs = (antiderivative(beta + h)? - antiderivative(beta - h)?) / (2.0 * h) / eps.powf(b);
        let rhs = (eps + c0 * d.powf(q)).powf(-b);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
