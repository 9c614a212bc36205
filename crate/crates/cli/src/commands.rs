use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

use pjx_core::cases::run_example;
use pjx_core::classifier::classify as classify_params;
use pjx_core::diagnostics::{blowup_report, energy, sweep as sweep_rows, SweepRow};
use pjx_core::pde_oracle::{compare_with_formula, mol_advance, MolState};
use pjx_core::{builtin, Error, ExactSolution, InitialProfile, QuadratureSpec, Result};

use crate::output::{emit, num, pretty, Csv, Meta};
use crate::{samples, CliError, Format, OutputArgs, ProfileArgs, SampleArgs};

/// Knots of the `t(eta)` table used for time sampling.
const TIME_KNOTS: usize = 49;
/// Smallest `J(active)` tabulated for time sampling.
const TIME_EPS_MIN: f64 = 1e-8;

type CmdResult = std::result::Result<(), CliError>;

struct Setup {
    profile: Arc<InitialProfile>,
    sol: ExactSolution,
    meta: Meta,
}

fn load_profile(args: &ProfileArgs) -> Result<InitialProfile> {
    match (&args.builtin, &args.profile_json) {
        (Some(name), _) => builtin(name),
        (None, Some(src)) => {
            let text = if src.trim_start().starts_with('{') {
                src.clone()
            } else {
                std::fs::read_to_string(src)
                    .map_err(|e| Error::Parameter(format!("cannot read profile `{src}`: {e}")))?
            };
            InitialProfile::from_json(&text)
        }
        (None, None) => Err(Error::Parameter("one of --builtin or --profile-json is required".into())),
    }
}

fn setup(args: &ProfileArgs, command: &str) -> Result<Setup> {
    let profile = Arc::new(load_profile(args)?);
    let lambda = args
        .lambda
        .or(profile.suggested_lambda)
        .ok_or_else(|| Error::Parameter(format!("profile `{}` has no default lambda; pass --lambda", profile.name)))?;
    let mut spec = QuadratureSpec::default();
    if let Some(a) = args.tol_abs {
        spec.abs_tol = a;
    }
    if let Some(r) = args.tol_rel {
        spec.rel_tol = r;
    }
    let sol = ExactSolution::new(profile.clone(), lambda)?.with_spec(spec.clone())?;
    let mut meta = Meta::new(command);
    meta.push("profile", profile.name.clone());
    meta.num("lambda", lambda);
    meta.num("q", profile.active_q(lambda));
    meta.num("eta_star", sol.eta_star());
    meta.num("tol_abs", spec.abs_tol);
    meta.num("tol_rel", spec.rel_tol);
    Ok(Setup { profile, sol, meta })
}

fn format_or(output: &OutputArgs, default: Format) -> Format {
    output.format.unwrap_or(default)
}

fn json_only(output: &OutputArgs, command: &str) -> Result<()> {
    match output.format {
        Some(Format::Csv) => Err(Error::Parameter(format!("`{command}` writes JSON only"))),
        _ => Ok(()),
    }
}

/// Clock values to visit: `--eta` as given, `--t` through the `t(eta)`
/// table, or ten equally spaced values in `[0, eta*)`.
fn clock_values(s: &Setup, samples_args: &SampleArgs) -> Result<Vec<f64>> {
    if let Some(spec) = &samples_args.eta {
        return samples::parse(spec);
    }
    if let Some(spec) = &samples_args.t {
        let times = samples::parse(spec)?;
        let report = blowup_report(&s.sol)?;
        let t_star = report.t_star.is_finite().then_some(report.t_star);
        let eps_min = TIME_EPS_MIN.max(10.0 * s.sol.spec().singularity_guard);
        let map = s.sol.eta_time_map(TIME_KNOTS, eps_min, t_star)?;
        return times.iter().map(|&t| map.eta_of_time(t)).collect();
    }
    let es = s.sol.eta_star();
    Ok((0..10).map(|k| es * k as f64 / 10.0).collect())
}

pub fn classify(lambda: f64, q: f64, ps: &[f64], output: &OutputArgs) -> CmdResult {
    json_only(output, "classify")?;
    let c = classify_params(lambda, q, ps)?;
    emit(output.out.as_deref(), &pretty(&c))?;
    Ok(())
}

pub fn blowup(profile: &ProfileArgs, output: &OutputArgs) -> CmdResult {
    json_only(output, "blowup")?;
    let s = setup(profile, "blowup")?;
    let report = blowup_report(&s.sol)?;
    emit(output.out.as_deref(), &pretty(&json!({ "meta": s.meta.json(), "report": report })))?;
    Ok(())
}

struct FrameDump {
    eta: f64,
    t: f64,
    big_m: f64,
    m: f64,
    energy: f64,
    /// `(alpha, x, ux, uxx, gamma_alpha)`.
    rows: Vec<[f64; 5]>,
}

fn dump_frame(sol: &ExactSolution, eta: f64, grid: usize) -> Result<FrameDump> {
    let f = sol.frame(eta)?;
    let (big_m, m) = f.extrema()?;
    let rows = (0..=grid)
        .map(|k| {
            let a = k as f64 / grid as f64;
            Ok([a, f.characteristic(a)?, f.ux(a), f.uxx(a), f.gamma_alpha(a)])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameDump {
        eta,
        t: f.time()?,
        big_m,
        m,
        energy: energy(&f)?,
        rows,
    })
}

pub fn solve(profile: &ProfileArgs, samples_args: &SampleArgs, grid: usize, output: &OutputArgs) -> CmdResult {
    if grid < 1 {
        return Err(Error::Parameter("--grid must be at least 1".into()).into());
    }
    let mut s = setup(profile, "solve")?;
    s.meta.push("grid", grid.to_string());
    let etas = clock_values(&s, samples_args)?;
    let frames = etas
        .par_iter()
        .map(|&eta| dump_frame(&s.sol, eta, grid))
        .collect::<Result<Vec<_>>>()?;
    let lambda = s.sol.lambda();
    let text = match format_or(output, Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&s.meta, &["frame", "alpha", "x", "ux", "uxx", "gamma_alpha"]);
            for (k, fr) in frames.iter().enumerate() {
                csv.comment(&format!(
                    "frame={k} lambda={} eta={} t={} M={} m={} E={}",
                    num(lambda),
                    num(fr.eta),
                    num(fr.t),
                    num(fr.big_m),
                    num(fr.m),
                    num(fr.energy)
                ));
                for r in &fr.rows {
                    csv.row(&[k as f64, r[0], r[1], r[2], r[3], r[4]]);
                }
            }
            csv.finish()
        }
        Format::Json => {
            let col = |fr: &FrameDump, i: usize| -> Vec<f64> { fr.rows.iter().map(|r| r[i]).collect() };
            let frames: Vec<Value> = frames
                .iter()
                .map(|fr| {
                    json!({
                        "eta": fr.eta, "t": fr.t, "M": fr.big_m, "m": fr.m, "E": fr.energy,
                        "alpha": col(fr, 0), "x": col(fr, 1), "ux": col(fr, 2),
                        "uxx": col(fr, 3), "gamma_alpha": col(fr, 4),
                    })
                })
                .collect();
            pretty(&json!({ "meta": s.meta.json(), "frames": frames }))
        }
    };
    emit(output.out.as_deref(), &text)?;
    Ok(())
}

fn rows_text(meta: &Meta, rows: &[SweepRow], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut csv = Csv::new(meta, &SweepRow::COLUMNS);
            for r in rows {
                csv.row(&r.values());
            }
            csv.finish()
        }
        Format::Json => pretty(&json!({ "meta": meta.json(), "rows": rows })),
    }
}

pub fn sweep(profile: &ProfileArgs, samples_args: &SampleArgs, output: &OutputArgs) -> CmdResult {
    let s = setup(profile, "sweep")?;
    let etas = clock_values(&s, samples_args)?;
    let rows = sweep_rows(&s.sol, &etas)?;
    emit(output.out.as_deref(), &rows_text(&s.meta, &rows, format_or(output, Format::Csv)))?;
    Ok(())
}

pub fn example(id: &str, out: Option<&Path>) -> CmdResult {
    let run = run_example(id)?;
    let c = &run.case;
    println!("example {} ({}, lambda = {}): {}", c.id, c.profile, num(c.lambda), c.summary);
    for check in &run.checks {
        println!(
            "  {} {}: expected {}, observed {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.expected,
            check.observed
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let profile = Arc::new(builtin(c.profile)?);
        let sol = ExactSolution::new(profile.clone(), c.lambda)?;
        // Ten equal steps in eta, then decades of J(active) toward eta*.
        let eps: Vec<f64> = (0..10)
            .map(|k| 1.0 - k as f64 / 10.0)
            .chain((2..=8).map(|k| 10f64.powi(-k)))
            .collect();
        let etas: Vec<f64> = eps.iter().map(|&e| sol.eta_of_eps(e)).collect();
        let rows = sweep_rows(&sol, &etas)?;
        let mut meta = Meta::new("example");
        meta.push("example", c.id);
        meta.push("profile", c.profile);
        meta.num("lambda", c.lambda);
        meta.num("q", profile.active_q(c.lambda));
        meta.num("eta_star", sol.eta_star());
        meta.num("tol_abs", sol.spec().abs_tol);
        meta.num("tol_rel", sol.spec().rel_tol);
        std::fs::write(dir.join(format!("example_{}_frames.csv", c.id)), rows_text(&meta, &rows, Format::Csv))?;
        std::fs::write(
            dir.join(format!("example_{}_report.json", c.id)),
            pretty(&json!({ "meta": meta.json(), "run": run })),
        )?;
    }
    println!("example {}: {}", c.id, if run.passed { "PASS" } else { "FAIL" });
    if run.passed {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}

pub fn mol(profile: &ProfileArgs, t_spec: &str, grid: usize, output: &OutputArgs) -> CmdResult {
    let mut s = setup(profile, "mol")?;
    s.meta.push("grid", grid.to_string());
    let lambda = s.sol.lambda();
    let times = samples::parse(t_spec)?;
    if times[0] < 0.0 {
        return Err(Error::Domain(format!("t = {} must be non-negative", times[0])).into());
    }
    let mut state = MolState::new(&s.profile, lambda, grid)?;
    let mut snaps = Vec::with_capacity(times.len());
    for &t in &times {
        state = mol_advance(state, lambda, t, f64::INFINITY)?;
        // The formula side can fail close to the singularity; the snapshot
        // is still reported.
        let cmp = compare_with_formula(&state, &s.profile, lambda).ok();
        snaps.push((state.grid.clone(), state.u(), state.v.clone(), cmp));
    }
    let text = match format_or(output, Format::Csv) {
        Format::Csv => {
            let mut csv = Csv::new(&s.meta, &["t", "x", "u", "ux"]);
            for (&t, (x, u, ux, cmp)) in times.iter().zip(&snaps) {
                match cmp {
                    Some(c) => csv.comment(&format!(
                        "snapshot t={} eta={} max_error={} max_abs_ux={}",
                        num(t),
                        num(c.eta),
                        num(c.max_error),
                        num(c.max_abs_ux)
                    )),
                    None => csv.comment(&format!("snapshot t={} formula unavailable", num(t))),
                }
                for j in 0..x.len() {
                    csv.row(&[t, x[j], u[j], ux[j]]);
                }
            }
            csv.finish()
        }
        Format::Json => {
            let snaps: Vec<Value> = times
                .iter()
                .zip(&snaps)
                .map(|(&t, (x, u, ux, cmp))| json!({ "t": t, "x": x, "u": u, "ux": ux, "comparison": cmp }))
                .collect();
            pretty(&json!({ "meta": s.meta.json(), "snapshots": snaps }))
        }
    };
    emit(output.out.as_deref(), &text)?;
    Ok(())
}
