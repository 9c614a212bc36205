use std::sync::Arc;

use proptest::prelude::*;

use pjx_core::profiles::BUILTIN_NAMES;
use pjx_core::{builtin, ExactSolution};

fn solution(name: &str) -> ExactSolution {
    let p = Arc::new(builtin(name).unwrap());
    let lambda = p.suggested_lambda.unwrap();
    ExactSolution::new(p, lambda).unwrap()
}

const FRACTIONS: [f64; 5] = [0.0, 0.2, 0.5, 0.9, 0.999];

#[test]
fn mean_flux_vanishes_and_jacobian_is_normalized() {
    for name in BUILTIN_NAMES {
        let sol = solution(name);
        for fr in FRACTIONS {
            let f = sol.frame(fr * sol.eta_star()).unwrap();
            let mass = f.integrate(|p| f.gamma_alpha_at(p)).unwrap();
            assert!((mass - 1.0).abs() <= 1e-10, "{name} at {fr}: int gamma_alpha = {mass}");
            let flux = f.integrate(|p| f.ux_at(p) * f.gamma_alpha_at(p)).unwrap();
            let scale = f.integrate(|p| f.ux_at(p).abs() * f.gamma_alpha_at(p)).unwrap().max(1.0);
            assert!(flux.abs() <= 1e-8 * scale, "{name} at {fr}: int u_x = {flux} (scale {scale})");
        }
    }
}

#[test]
fn time_increases_strictly_with_the_clock() {
    for name in BUILTIN_NAMES {
        let sol = solution(name);
        let mut prev = -1.0;
        for k in 0..=30 {
            let eps = 0.7f64.powi(k);
            let t = sol.time_of_eps(eps).unwrap();
            assert!(t > prev, "{name}: t = {t} after {prev} at J = {eps}");
            prev = t;
        }
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn name_strategy() -> impl Strategy<Value = &'static str> {
    prop::sample::select(BUILTIN_NAMES.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn both_forms_of_the_slope_agree(name in name_strategy(), fr in 0.01f64..0.99, alpha in 0.0f64..=1.0) {
        let sol = solution(name);
        let f = sol.frame(fr * sol.eta_star()).unwrap();
        let (a, b) = (f.ux(alpha), f.ux_main(alpha));
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn concavity_is_preserved(name in name_strategy(), fr in 0.0f64..0.999, alpha in 0.0f64..=1.0) {
        let sol = solution(name);
        let f = sol.frame(fr * sol.eta_star()).unwrap();
        prop_assert_eq!(sign(f.uxx(alpha)), sign(sol.profile().u0pp(alpha)));
    }

    #[test]
    fn characteristics_are_monotone(name in name_strategy(), fr in 0.0f64..0.999, a in 0.0f64..1.0, da in 1e-6f64..0.5) {
        let sol = solution(name);
        let f = sol.frame(fr * sol.eta_star()).unwrap();
        let b = (a + da).min(1.0);
        prop_assert!(f.characteristic(b).unwrap() > f.characteristic(a).unwrap());
    }
}
