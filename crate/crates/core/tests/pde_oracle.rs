use std::sync::Arc;

use pjx_core::builtin;
use pjx_core::pde_oracle::{compare_with_formula, mol_solve, mol_step, MolState, CFL};

#[test]
fn halving_the_grid_cuts_the_error_eightfold() {
    let p = Arc::new(builtin("ex2_q5").unwrap());
    let err = |n: usize| {
        let s = mol_solve(&p, 2.0, n, 0.1, f64::INFINITY).unwrap();
        compare_with_formula(&s, &p, 2.0).unwrap().max_error
    };
    let (coarse, fine) = (err(256), err(512));
    assert!(coarse >= 8.0 * fine, "{coarse} then {fine}");
}

#[test]
fn nonlocal_term_matches_the_energy() {
    for (name, lambda, t) in [("ex2_q5", 2.0, 0.1), ("ex6_linear", 1.0, 0.3), ("ex5_mixed", -1.0 / 3.0, 1.0)] {
        let p = Arc::new(builtin(name).unwrap());
        let s = mol_solve(&p, lambda, 1024, t, f64::INFINITY).unwrap();
        let c = compare_with_formula(&s, &p, lambda).unwrap();
        let rel = (c.nonlocal_mol - c.nonlocal_exact).abs() / c.nonlocal_exact.abs();
        assert!(rel <= 1e-5, "{name}: {} vs {}", c.nonlocal_mol, c.nonlocal_exact);
    }
}

#[test]
fn slope_keeps_zero_mean() {
    for (name, lambda) in [("ex2_q5", 2.0), ("ex4_q32", -2.5), ("ex6_linear", 1.0)] {
        let p = builtin(name).unwrap();
        let mut s = MolState::new(&p, lambda, 512).unwrap();
        for _ in 0..200 {
            let dt = CFL * s.cfl_limit();
            s = mol_step(&s, lambda, dt).unwrap();
            assert!(s.mean().abs() <= 1e-8, "{name} at t = {}: mean {}", s.t, s.mean());
        }
    }
}
