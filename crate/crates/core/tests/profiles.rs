use pjx_core::profiles::{ExtremumKind, BUILTIN_NAMES};
use pjx_core::builtin;

#[test]
fn declared_extrema_match_a_dense_grid() {
    for name in BUILTIN_NAMES {
        let p = builtin(name).unwrap();
        p.check_extrema_on_grid(1_000_000, 1e-9, 1e-5)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn local_expansions_fit_every_builtin() {
    for name in BUILTIN_NAMES {
        let p = builtin(name).unwrap();
        let report = p.verify_local_expansion().unwrap_or_else(|e| panic!("{name}: {e}"));
        for f in &report.fits {
            assert!((f.slope / f.declared_q - 1.0).abs() < 0.02, "{name}: {f:?}");
            let [far, _, near] = f.ratio_trend.map(|r| (r - 1.0).abs());
            assert!(near < 0.02 && near <= far.max(1e-9), "{name}: {f:?}");
        }
    }
}

#[test]
fn mixed_profile_has_quadratic_interior_and_linear_boundary_minimum() {
    let p = builtin("ex5_mixed").unwrap();
    let report = p.verify_local_expansion().unwrap();
    let minima: Vec<_> = report.fits.iter().filter(|f| f.kind == ExtremumKind::Min).collect();
    assert!(!minima.is_empty());
    for f in minima {
        let expected = if f.location == 1.0 { 1.0 } else { 2.0 };
        assert!((f.slope - expected).abs() < 0.02 * expected, "{f:?}");
    }
    let interior = (4.0 + 22f64.sqrt()) / 24.0;
    assert!(p.minima.iter().any(|&l| (l - interior).abs() < 1e-12));
    assert!(p.minima.contains(&1.0));
}

#[test]
fn extremum_lists_are_sorted_and_disjoint() {
    for name in BUILTIN_NAMES {
        let p = builtin(name).unwrap();
        assert!(p.maxima.windows(2).all(|w| w[0] < w[1]), "{name}");
        assert!(p.minima.windows(2).all(|w| w[0] < w[1]), "{name}");
        assert!(p.maxima.iter().all(|a| !p.minima.contains(a)), "{name}");
        assert!(p.m0_max > 0.0 && p.m0_min < 0.0, "{name}");
        for e in &p.extrema {
            assert!(e.q > 0.0, "{name}");
            match e.kind {
                ExtremumKind::Max => assert!(e.coeff < 0.0, "{name}"),
                ExtremumKind::Min => assert!(e.coeff > 0.0, "{name}"),
            }
        }
    }
}
