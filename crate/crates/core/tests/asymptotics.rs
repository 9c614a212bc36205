use std::sync::Arc;

use proptest::prelude::*;

use pjx_core::asymptotics::{c4_over_c3, kbar_estimate_continuous, lemma_general, Regime};
use pjx_core::Error;
use pjx_core::profiles::BUILTIN_NAMES;
use pjx_core::{builtin, ExactSolution};

/// Decay the next-order term predicts for `|quadrature/estimate - 1|`:
/// `J^d` with `d = min(|1/q - b|, 1)` (offset by the probe point in the
/// bounded case) or `1/ln(1/J)` in the logarithmic case.
fn correction(regime: Regime, q: f64, b: f64, j: f64) -> f64 {
    let d = (1.0 / q - b).abs().min(1.0);
    match regime {
        Regime::Logarithmic => 1.0 / (1.0 / j).ln(),
        Regime::Bounded => j.powf(d) - 1e-6f64.powf(d),
        _ => j.powf(d),
    }
}

#[test]
fn estimates_approach_quadrature_monotonically() {
    let mut exercised = Vec::new();
    for name in BUILTIN_NAMES {
        let p = Arc::new(builtin(name).unwrap());
        let lambda = p.suggested_lambda.unwrap();
        let q = p.active_q(lambda);
        let sol = ExactSolution::new(p.clone(), lambda).unwrap();
        for i in 0..=1 {
            let est = match kbar_estimate_continuous(lambda, q, &p, i) {
                Ok(est) => est,
                Err(Error::UnsupportedRegime(_)) => continue,
                Err(e) => panic!("{name}, i = {i}: {e}"),
            };
            let b = i as f64 + 1.0 / lambda;
            let js = [1e-2, 1e-3, 1e-4];
            let dev = js.map(|j| (sol.jpow_eps(j, b).unwrap() / est.eval(j) - 1.0).abs());
            let tag = format!("{name}, i = {i}, {:?}: {dev:?}", est.regime);
            assert!(dev[1] <= dev[0] + 1e-9 && dev[2] <= dev[1] + 1e-9, "{tag}");
            let slow = est.regime == Regime::Logarithmic || (1.0 / q - b).abs() < 0.25;
            if slow {
                let predicted = correction(est.regime, q, b, js[2]) / correction(est.regime, q, b, js[0]);
                assert!(dev[2] / dev[0] <= 1.1 * predicted, "{tag}: predicted decay {predicted}");
            } else {
                assert!(dev[0] <= 0.15 && dev[2] <= 0.05, "{tag}");
            }
            exercised.push(est.regime);
        }
    }
    for regime in [Regime::MaxSide, Regime::Bounded, Regime::Logarithmic] {
        assert!(exercised.contains(&regime), "{regime:?} not exercised: {exercised:?}");
    }
}

/// Linear data near both endpoint maxima of `ex6_linear`: `u0' = 1/2 - 3 h`.
/// Each side contributes `int (J + 6h)^-b dh`, so the two sides together give
/// `J^(1-b) / (3 (b - 1))` for `b > 1` and `ln(1/J) / 3` at `b = 1`.
#[test]
fn linear_extrema_reproduce_the_closed_forms() {
    let p = Arc::new(builtin("ex6_linear").unwrap());
    let est = kbar_estimate_continuous(1.0, 1.0, &p, 0).unwrap();
    assert_eq!(est.regime, Regime::Logarithmic);
    assert!((est.constant - 1.0 / 3.0).abs() <= 1e-10, "{}", est.constant);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_extrema_power_branch(lambda in 0.05f64..0.95) {
        let p = Arc::new(builtin("ex6_linear").unwrap());
        let b = 1.0 / lambda;
        let est = lemma_general(lambda, 1.0, b, &p).unwrap();
        prop_assert_eq!(est.regime, Regime::MaxSide);
        prop_assert!((est.exponent - (1.0 - b)).abs() <= 1e-12);
        let expected = 1.0 / (3.0 * (b - 1.0));
        prop_assert!((est.constant - expected).abs() <= 1e-10 * expected, "{} vs {expected}", est.constant);
    }

    #[test]
    fn gamma_ratio_identity(q in 0.05f64..8.0, s in 0.01f64..0.99) {
        let lambda = s * q;
        let r = c4_over_c3(lambda, q).unwrap();
        prop_assert!((r - (1.0 - lambda / q)).abs() <= 1e-10, "{r}");
    }
}
