//! Adaptive Gauss-Kronrod integration.
//!
//! The driver is a global adaptive 15-point Gauss-Kronrod scheme that always
//! bisects the interval with the largest error estimate. When that stalls on
//! an endpoint singularity (depth or interval budget exhausted), each panel is
//! re-integrated on a geometric partition toward both of its endpoints and the
//! partial sums are accelerated with Wynn's epsilon algorithm.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Upper bound on live subintervals in the adaptive driver.
const MAX_INTERVALS: usize = 4000;
/// Number of geometric panels toward an endpoint in the fallback.
const MAX_GEOMETRIC_LEVELS: usize = 52;
/// Panels narrower than this many ulps of their location are not refined:
/// their Kronrod nodes would collapse onto the endpoints.
const MIN_WIDTH_ULPS: f64 = 1024.0;

fn resolvable(a: f64, b: f64) -> bool {
    (b - a).abs() > MIN_WIDTH_ULPS * f64::EPSILON * a.abs().max(b.abs())
}

/// Tolerances and breakpoints for [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    /// Interior breakpoints; the integration range is cut here before any
    /// adaptivity.
    pub split_points: Vec<f64>,
    /// Smallest value of the kernel `J` at the active extremum that callers
    /// may request.
    pub singularity_guard: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            max_depth: 60,
            split_points: Vec::new(),
            singularity_guard: 1e-13,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_split_points(mut self, points: Vec<f64>) -> Self {
        self.split_points = points;
        self
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.singularity_guard = guard;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Parameter("quadrature tolerances must be positive".into()));
        }
        if !(self.singularity_guard > 0.0) {
            return Err(Error::Parameter("singularity guard must be positive".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Parameter("max_depth must be at least 1".into()));
        }
        if self.split_points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parameter("split points must be strictly increasing".into()));
        }
        Ok(())
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

struct Ranked(f64, usize);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// One 15-point Kronrod rule with the QUADPACK error heuristic.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteIntegrand { at: x })
        }
    };

    let fc = eval(center)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut f1 = [0.0; 7];
    let mut f2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let y1 = eval(center - dx)?;
        let y2 = eval(center + dx)?;
        f1[j] = y1;
        f2[j] = y2;
        resk += WGK[j] * (y1 + y2);
        resabs += WGK[j] * (y1.abs() + y2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (y1 + y2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((f1[j] - mean).abs() + (f2[j] - mean).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((result, err))
}

fn breakpoints(a: f64, b: f64, spec: &QuadratureSpec) -> Vec<f64> {
    let mut pts = vec![a];
    pts.extend(spec.split_points.iter().copied().filter(|&p| p > a && p < b));
    pts.push(b);
    pts
}

/// Integrates `f` over `[a, b]`.
///
/// Returns the value with an error estimate no larger than
/// `max(abs_tol, rel_tol |value|)`, or [`Error::DepthExhausted`] carrying the
/// best estimate when that tolerance cannot be met.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    if a > b {
        let e = integrate(f, b, a, spec)?;
        return Ok(Estimate {
            value: -e.value,
            error: e.error,
        });
    }
    let pts = breakpoints(a, b, spec);
    match adaptive(&f, &pts, spec) {
        Ok(e) => Ok(e),
        Err(Error::DepthExhausted { value, error }) => {
            geometric_fallback(&f, &pts, spec).or(Err(Error::DepthExhausted { value, error }))
        }
        Err(e) => Err(e),
    }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, pts: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    let mut panels = Vec::with_capacity(64);
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in pts.windows(2) {
        let (value, error) = gk15(f, w[0], w[1])?;
        total += value;
        total_err += error;
        heap.push(Ranked(error, panels.len()));
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
            depth: 0,
        });
    }

    let mut stuck_err = 0.0;
    while total_err > spec.tolerance(total) {
        let Some(Ranked(_, idx)) = heap.pop() else {
            return Err(Error::DepthExhausted {
                value: ordered_sum(&panels),
                error: total_err,
            });
        };
        let p = panels[idx];
        let mid = 0.5 * (p.a + p.b);
        if p.depth >= spec.max_depth || !resolvable(p.a, mid) || !resolvable(mid, p.b) || panels.len() >= MAX_INTERVALS {
            // Leave this panel as is; its error still counts.
            stuck_err += p.error;
            if stuck_err > spec.tolerance(total) || panels.len() >= MAX_INTERVALS {
                return Err(Error::DepthExhausted {
                    value: ordered_sum(&panels),
                    error: total_err,
                });
            }
            continue;
        }
        let (v1, e1) = gk15(f, p.a, mid)?;
        let (v2, e2) = gk15(f, mid, p.b)?;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        panels[idx] = Panel {
            a: p.a,
            b: mid,
            value: v1,
            error: e1,
            depth: p.depth + 1,
        };
        heap.push(Ranked(e1, idx));
        heap.push(Ranked(e2, panels.len()));
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: v2,
            error: e2,
            depth: p.depth + 1,
        });
        if panels.len() % 256 == 0 {
            total = panels.iter().map(|p| p.value).sum();
            total_err = panels.iter().map(|p| p.error).sum();
        }
    }
    let error: f64 = panels.iter().map(|p| p.error).sum();
    Ok(Estimate {
        value: ordered_sum(&panels),
        error,
    })
}

/// Sum in order of interval position, so results do not depend on the
/// refinement history.
fn ordered_sum(panels: &[Panel]) -> f64 {
    let mut sorted: Vec<&Panel> = panels.iter().collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    sorted.iter().map(|p| p.value).sum()
}

/// Integrates each panel as two halves, each on a geometric partition toward
/// its outer endpoint, with epsilon-algorithm acceleration.
fn geometric_fallback<F: Fn(f64) -> f64>(f: &F, pts: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    let mut value = 0.0;
    let mut error = 0.0;
    let n_halves = 2 * (pts.len() - 1);
    let inner = QuadratureSpec {
        abs_tol: spec.abs_tol / (4.0 * n_halves as f64),
        rel_tol: spec.rel_tol / 4.0,
        ..spec.clone()
    };
    for w in pts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        for (end, inner_end) in [(w[0], mid), (w[1], mid)] {
            let e = graded_toward(f, end, inner_end, &inner)?;
            value += e.value;
            error += e.error;
        }
    }
    if error > spec.tolerance(value) {
        return Err(Error::DepthExhausted { value, error });
    }
    Ok(Estimate { value, error })
}

/// Integral over the interval between `end` and `far`, resolving a
/// singularity at `end`.
fn graded_toward<F: Fn(f64) -> f64>(f: &F, end: f64, far: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let len = far - end;
    let mut partial = Vec::with_capacity(MAX_GEOMETRIC_LEVELS);
    let mut sum = 0.0;
    let mut panel_err = 0.0;
    let mut last_extrap: Option<f64> = None;
    let mut outer = len;
    for _ in 0..MAX_GEOMETRIC_LEVELS {
        let inner = 0.5 * outer;
        let (lo, hi) = (end + inner, end + outer);
        if !resolvable(lo, hi) {
            break;
        }
        let e = adaptive(f, &[lo.min(hi), lo.max(hi)], spec)?;
        sum += e.value;
        panel_err += e.error;
        partial.push(sum);
        outer = inner;
        if partial.len() >= 4 {
            let (est, diff) = wynn_epsilon(&partial);
            let tol = spec.tolerance(est);
            if let Some(prev) = last_extrap {
                let err = diff.max((est - prev).abs()) + panel_err;
                if err <= tol {
                    return Ok(Estimate { value: est, error: err });
                }
            }
            last_extrap = Some(est);
        }
    }
    let (est, diff) = wynn_epsilon(&partial);
    Err(Error::DepthExhausted {
        value: est,
        error: diff + panel_err,
    })
}

/// Wynn's epsilon algorithm on a sequence of partial sums. Returns the most
/// advanced even-column estimate along the last anti-diagonal and the change
/// relative to the previous one.
fn wynn_epsilon(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    // prev2 = column j-1, prev = column j.
    let mut prev2 = vec![0.0; n + 1];
    let mut prev: Vec<f64> = s.to_vec();
    let mut best = s[n - 1];
    let mut best_prev = if n >= 2 { s[n - 2] } else { s[n - 1] };
    let mut col = 0;
    while prev.len() >= 2 {
        let mut next = Vec::with_capacity(prev.len() - 1);
        for k in 0..prev.len() - 1 {
            let d = prev[k + 1] - prev[k];
            if d == 0.0 || !d.is_finite() {
                if col % 2 == 0 && d == 0.0 {
                    // An estimate column became constant: exact convergence.
                    return (prev[k + 1], (best - prev[k + 1]).abs());
                }
                return (best, (best - best_prev).abs());
            }
            next.push(prev2[k + 1] + 1.0 / d);
        }
        col += 1;
        prev2 = prev;
        prev = next;
        if col % 2 == 0 && !prev.is_empty() {
            let cand = prev[prev.len() - 1];
            if !cand.is_finite() {
                break;
            }
            best_prev = if prev.len() >= 2 { prev[prev.len() - 2] } else { best };
            best = cand;
        }
    }
    (best, (best - best_prev).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand() {
        let e = integrate(|_| 1.0, 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_square_root_endpoint() {
        let e = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &QuadratureSpec::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn two_thirds_singularity_at_right_end() {
        let e = integrate(|x: f64| (1.0 - x).powf(-2.0 / 3.0), 0.0, 1.0, &QuadratureSpec::default())
            .unwrap();
        assert!((e.value - 3.0).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let spec = QuadratureSpec::default();
        let e = integrate(|x: f64| x * x, 1.0, 0.0, &spec).unwrap();
        assert!((e.value + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn split_points_respected() {
        let spec = QuadratureSpec::default().with_split_points(vec![0.3]);
        let e = integrate(|x: f64| (x - 0.3).abs().sqrt(), 0.0, 1.0, &spec).unwrap();
        let exact = 2.0 / 3.0 * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        assert!((e.value - exact).abs() < 1e-10);
    }

    #[test]
    fn non_finite_is_reported() {
        let r = integrate(|x: f64| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::NonFiniteIntegrand { .. })));
    }

    #[test]
    fn non_integrable_singularity_exhausts() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::DepthExhausted { .. })), "{r:?}");
    }

    #[test]
    fn wynn_accelerates_geometric_series() {
        let mut s = Vec::new();
        let mut acc = 0.0;
        for k in 0..10 {
            acc += 0.7f64.powi(k);
            s.push(acc);
        }
        let (est, _) = wynn_epsilon(&s);
        assert!((est - 1.0 / 0.3).abs() < 1e-12);
    }
}
