use std::sync::Arc;

use proptest::prelude::*;

use pjx_core::diagnostics::{blowup_time, energy, lp_bounds, lp_norm};
use pjx_core::profiles::{ExtremumKind, InitialProfile, BUILTIN_NAMES};
use pjx_core::{builtin, ExactSolution};

fn solution(name: &str) -> ExactSolution {
    let p = Arc::new(builtin(name).unwrap());
    let lambda = p.suggested_lambda.unwrap();
    ExactSolution::new(p, lambda).unwrap()
}

fn name_strategy() -> impl Strategy<Value = &'static str> {
    prop::sample::select(BUILTIN_NAMES.to_vec())
}

#[test]
fn times_stay_below_the_blowup_time() {
    for name in BUILTIN_NAMES {
        let sol = solution(name);
        let t_star = blowup_time(sol.lambda(), sol.profile()).unwrap().t_star;
        if !t_star.is_finite() {
            continue;
        }
        for k in 0..=12 {
            let eps = 10f64.powf(-0.5 * k as f64);
            let t = sol.time_of_eps(eps).unwrap();
            assert!(t < t_star, "{name}: t = {t} at J = {eps} vs t* = {t_star}");
        }
    }
}

#[test]
fn burgers_blowup_time_equals_the_clock_limit() {
    let mut profiles: Vec<InitialProfile> = BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect();
    for q in [0.5, 1.0, 2.0, 3.5] {
        profiles.push(InitialProfile::power_law_mean_zero(q, ExtremumKind::Min).unwrap());
    }
    for p in profiles {
        let p = Arc::new(p);
        let es = p.eta_star(-1.0).unwrap();
        let t = blowup_time(-1.0, &p).unwrap().t_star;
        assert!((t - es).abs() <= 1e-9 * es, "{}: t* = {t}, eta* = {es}", p.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bounds_sandwich_every_norm(name in name_strategy(), fr in 0.02f64..0.98, k in 0usize..4) {
        let p = [1.0, 1.5, 2.0, 3.0][k];
        let sol = solution(name);
        let f = sol.frame(fr * sol.eta_star()).unwrap();
        let norm = lp_norm(&f, p).unwrap();
        let (lo, hi) = lp_bounds(&f, p).unwrap();
        prop_assert!(lo <= norm * (1.0 + 1e-9) && norm <= hi * (1.0 + 1e-9), "{lo} <= {norm} <= {hi}");
    }

    #[test]
    fn energy_is_the_squared_two_norm(name in name_strategy(), fr in 0.0f64..0.999) {
        let sol = solution(name);
        let f = sol.frame(fr * sol.eta_star()).unwrap();
        let e = energy(&f).unwrap();
        let l2 = lp_norm(&f, 2.0).unwrap();
        prop_assert!((e - l2 * l2).abs() <= 1e-7 * e.max(1e-12), "{e} vs {}", l2 * l2);
    }
}
