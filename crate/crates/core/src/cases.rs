//! Worked examples with their reference numbers, runnable end to end.

use std::sync::Arc;

use serde::Serialize;

use crate::classifier::{classify_linfty, LinftyOutcome, RegularityVerdict};
use crate::diagnostics::{blowup_time, observe, BlowupReport, NumericBehavior, Trend};
use crate::error::{Error, Result};
use crate::exact_solution::ExactSolution;
use crate::profiles::{builtin, InitialProfile};
use crate::quadrature::QuadratureSpec;

/// Guard used when tracking extrema far into the approach to `eta*`.
pub const DEEP_GUARD: f64 = 1e-21;
/// Smallest `J(active)` visited when tracking extrema.
pub const DEEP_EPS: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExampleCase {
    pub id: &'static str,
    pub profile: &'static str,
    pub lambda: f64,
    pub summary: &'static str,
}

pub const EXAMPLES: [ExampleCase; 8] = [
    ExampleCase {
        id: "1a",
        profile: "ex1_q13",
        lambda: 0.5,
        summary: "q = 1/3, lambda = 1/2: two-sided blow-up at t* = 9/4",
    },
    ExampleCase {
        id: "1b",
        profile: "ex1_q65",
        lambda: 0.5,
        summary: "q = 6/5, lambda = 1/2: global, u_x -> 0",
    },
    ExampleCase {
        id: "2a",
        profile: "ex2_q5",
        lambda: 2.0,
        summary: "q = 5, lambda = 2: global, u_x -> 0",
    },
    ExampleCase {
        id: "2b",
        profile: "ex2_q52",
        lambda: 1.25,
        summary: "q = 5/2, lambda = 5/4: global, nontrivial steady state",
    },
    ExampleCase {
        id: "3",
        profile: "ex3_q6",
        lambda: 5.5,
        summary: "q = 6, lambda = 11/2: two-sided blow-up, t* ~ 22.5",
    },
    ExampleCase {
        id: "4",
        profile: "ex4_q32",
        lambda: -2.5,
        summary: "q = 3/2, lambda = -5/2: one-sided blow-up of the minimum, t* ~ 0.46",
    },
    ExampleCase {
        id: "5",
        profile: "ex5_mixed",
        lambda: -1.0 / 3.0,
        summary: "mixed q = 1, 2, lambda = -1/3: one-sided blow-up at x = 1 and x ~ 0.885, t* ~ 17.93",
    },
    ExampleCase {
        id: "6",
        profile: "ex6_linear",
        lambda: 1.0,
        summary: "q = 1, lambda = 1: two-sided blow-up with M at both walls, t* ~ 2.8",
    },
];

/// Looks up an example; `1` and `2` stand for `1a` and `2a`.
pub fn example(id: &str) -> Result<&'static ExampleCase> {
    let id = match id.trim() {
        "1" => "1a",
        "2" => "2a",
        other => other,
    };
    EXAMPLES
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::Domain(format!("unknown example `{id}` (expected one of 1a 1b 2a 2b 3 4 5 6)")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, expected: impl Into<String>, observed: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            expected: expected.into(),
            observed: observed.into(),
            pass,
        }
    }

    fn within(name: &str, target: f64, tol: f64, got: f64) -> Self {
        Self::new(name, format!("{target} +- {tol:e}"), format!("{got}"), (got - target).abs() <= tol)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleRun {
    pub case: ExampleCase,
    pub verdict: RegularityVerdict,
    pub report: BlowupReport,
    pub behavior: NumericBehavior,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Solution with the deep guard, for tracking extrema close to `eta*`.
pub fn deep_solution(profile: &Arc<InitialProfile>, lambda: f64) -> Result<ExactSolution> {
    ExactSolution::new(profile.clone(), lambda)?.with_spec(QuadratureSpec::default().with_guard(DEEP_GUARD))
}

pub fn run_example(id: &str) -> Result<ExampleRun> {
    let case = *example(id)?;
    let profile = Arc::new(builtin(case.profile)?);
    let lambda = case.lambda;
    let verdict = classify_linfty(lambda, profile.active_q(lambda))?;
    let report = blowup_time(lambda, &profile)?;
    let sol = deep_solution(&profile, lambda)?;
    let behavior = observe(&sol, DEEP_EPS)?;
    let observed = behavior.outcome();
    let outcome = |name: &str, want: LinftyOutcome| {
        Check::new(name, format!("{want:?}"), format!("{observed:?}"), observed == Some(want))
    };
    let infinite = || {
        Check::new(
            "t* infinite",
            "inf",
            format!("{}", report.t_star),
            report.t_star == f64::INFINITY,
        )
    };
    let has_location = |x: f64, tol: f64| report.locations_eulerian.iter().any(|&y| (y - x).abs() <= tol);
    let mut checks = Vec::new();
    match case.id {
        "1a" => {
            checks.push(Check::within("t*", 2.25, 1e-6, report.t_star));
            let k0 = ExactSolution::new(profile.clone(), lambda)?.jpow_eps(0.0, 1.0 / lambda)?;
            checks.push(Check::within("K0 at eta*", 27.0 / 16.0, 1e-8, k0));
            checks.push(outcome("observed blow-up", LinftyOutcome::TwoSidedEverywhere));
        }
        "1b" => {
            checks.push(infinite());
            let last = behavior.max.last().unwrap().abs().max(behavior.min.last().unwrap().abs());
            checks.push(Check::new(
                "max |u_x| / initial",
                "< 1e-3",
                format!("{:e}", last / behavior.scale),
                last < 1e-3 * behavior.scale,
            ));
        }
        "2a" => {
            checks.push(infinite());
            checks.push(outcome("observed limit", LinftyOutcome::GlobalVanish));
        }
        "2b" => {
            checks.push(infinite());
            let n = behavior.max.len();
            let change = (behavior.max[n - 1] - behavior.max[n - 2]).abs() / behavior.max[n - 1].abs();
            checks.push(Check::new(
                "M change over last decade of J",
                "<= 1%",
                format!("{:.3e}", change),
                change <= 0.01,
            ));
            checks.push(outcome("observed limit", LinftyOutcome::GlobalNontrivialSteady));
        }
        "3" => {
            checks.push(Check::within("t*", 22.5, 0.1, report.t_star));
            checks.push(outcome("observed blow-up", LinftyOutcome::TwoSidedEverywhere));
        }
        "4" => {
            checks.push(Check::within("t*", 0.46, 0.01, report.t_star));
            let lower = report.bracket.map_or(f64::NAN, |b| b[0]);
            checks.push(Check::new(
                "eta* <= t*",
                format!("{} <= t*", report.eta_star),
                format!("{lower} <= {}", report.t_star),
                lower == report.eta_star && lower <= report.t_star,
            ));
            checks.push(Check::new(
                "M bounded",
                "bounded",
                format!("{:?}", behavior.max_trend),
                matches!(behavior.max_trend, Trend::Bounded | Trend::Plateau),
            ));
            checks.push(outcome("observed blow-up", LinftyOutcome::OneSidedDiscreteMin));
        }
        "5" => {
            checks.push(Check::within("t*", 17.93, 0.05, report.t_star));
            checks.push(Check::new(
                "locations",
                "{1, 0.885 +- 0.005}",
                format!("{:?}", report.locations_eulerian),
                report.locations_eulerian.len() == 2 && has_location(1.0, 0.0) && has_location(0.885, 0.005),
            ));
            checks.push(outcome("observed blow-up", LinftyOutcome::OneSidedDiscreteMin));
        }
        "6" => {
            checks.push(Check::within("t*", 2.8, 0.05, report.t_star));
            checks.push(Check::new(
                "locations",
                "{0, 1}",
                format!("{:?}", report.locations_eulerian),
                report.locations_eulerian == [0.0, 1.0],
            ));
            checks.push(outcome("observed blow-up", LinftyOutcome::TwoSidedEverywhere));
        }
        _ => unreachable!("registry and checks are out of sync"),
    }
    let passed = checks.iter().all(|c| c.pass);
    Ok(ExampleRun {
        case,
        verdict,
        report,
        behavior,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        assert_eq!(example("1").unwrap().id, "1a");
        assert_eq!(example("2b").unwrap().lambda, 1.25);
        assert!(example("7").is_err());
        for c in EXAMPLES {
            let p = builtin(c.profile).unwrap();
            assert_eq!(p.suggested_lambda, Some(c.lambda), "{}", c.id);
        }
    }

    #[test]
    fn examples_pass() {
        for c in EXAMPLES {
            let run = run_example(c.id).unwrap();
            assert!(run.passed, "{}: {:?}", c.id, run.checks);
        }
    }
}
