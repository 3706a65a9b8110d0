use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use swlab::admissibility::{
    check_admissible, check_asymptotic_hypothesis, check_system, derive_exponents, hardy_products,
    AdmissibilityReport, ConditionLine, Params, SystemExponents, SystemKind,
};
use swlab::kernel::CacheStats;
use swlab::operators::OperatorContext;
use swlab::profiles::{
    boundary_from_csv, boundary_norm, boundary_to_csv, boundary_truncation, halfspace_from_csv,
    halfspace_norm, halfspace_to_csv, halfspace_truncation, resample, BoundaryProfile,
    HalfSpaceProfile, RadialGrid,
};
use swlab::solver::{
    extremal_to_system, solve_extremal, solve_system, Init, ScaleFix, SolveOptions, SolveReport,
};
use swlab::verifier::{
    estimate_decay, indicator_family, lorentz_probe, regularity_window_check, tol,
    verify_asymptotics, verify_energy_balance, verify_hardy, verify_inequality, verify_mass,
    verify_pohozaev, verify_scaling, Status, VerificationRecord,
};
use swlab::Error;

use crate::config::{ConfigError, RunConfig};
use crate::json;
use crate::CliError;

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

type Outcome = Result<Verdict, CliError>;

/// The resolved config as embedded in reports. Output directory and worker
/// count are flags, not keys, so reports do not depend on them.
fn embedded(cfg: &RunConfig) -> BTreeMap<String, String> {
    cfg.values().clone()
}

fn emit<T: Serialize>(out: &Path, name: &str, report: &T) -> Result<(), CliError> {
    let text = json::to_string(report)?;
    json::write_atomic(&out.join(name), &text)?;
    print!("{text}");
    Ok(())
}

fn kind_of(s: &str) -> Result<SystemKind, ConfigError> {
    match s {
        "double" => Ok(SystemKind::DoubleWeighted),
        "single" => Ok(SystemKind::SingleWeighted),
        other => Err(ConfigError::Value {
            key: "params.kind".into(),
            value: other.into(),
        }),
    }
}

struct Raw {
    n: usize,
    p: Option<f64>,
    gamma: f64,
    alpha: f64,
    beta: f64,
}

fn raw_params(cfg: &RunConfig) -> Result<Raw, ConfigError> {
    Ok(Raw {
        n: cfg.require("params.n")?,
        p: cfg.parse("params.p")?,
        gamma: cfg.require("params.gamma")?,
        alpha: cfg.require("params.alpha")?,
        beta: cfg.require("params.beta")?,
    })
}

fn params(cfg: &RunConfig) -> Result<Params, CliError> {
    let r = raw_params(cfg)?;
    let p = r.p.ok_or_else(|| ConfigError::Missing("params.p".into()))?;
    Ok(derive_exponents(r.n, p, r.gamma, r.alpha, r.beta)?)
}

/// The system named by `params.kind`, with `params.p0`/`params.q0` when
/// given and the exponents of the extremal problem otherwise.
fn system(cfg: &RunConfig) -> Result<Option<SystemExponents>, CliError> {
    let Some(kind) = cfg.get("params.kind") else {
        return Ok(None);
    };
    let kind = kind_of(kind)?;
    let r = raw_params(cfg)?;
    let sys = match (cfg.parse::<f64>("params.p0")?, cfg.parse::<f64>("params.q0")?) {
        (Some(p0), Some(q0)) => SystemExponents {
            p0,
            q0,
            kind,
            alpha: r.alpha,
            beta: r.beta,
            gamma: r.gamma,
            n: r.n,
        },
        (None, None) => params(cfg)?.system(kind),
        _ => return Err(ConfigError::Missing("params.p0 and params.q0 go together".into()).into()),
    };
    Ok(Some(sys))
}

/// Operator parameters carrying the exponents of a system.
fn system_carrier(sys: &SystemExponents) -> Params {
    Params::with_qprime(
        sys.n,
        1.0 + 1.0 / sys.p0,
        1.0 + 1.0 / sys.q0,
        sys.alpha,
        sys.beta,
        sys.gamma,
    )
}

fn grid(cfg: &RunConfig) -> Result<RadialGrid, CliError> {
    Ok(RadialGrid::per_decade(
        cfg.require("grid.r_min")?,
        cfg.require("grid.r_max")?,
        cfg.require("grid.nodes_per_decade")?,
    )?)
}

fn solve_options(cfg: &RunConfig, grid: &RadialGrid) -> Result<SolveOptions, CliError> {
    let scale_fix = match cfg.get("solver.scale_fix").unwrap_or_default() {
        "half_mass_radius" => ScaleFix::HalfMassRadius,
        "none" => ScaleFix::None,
        v => return Err(value_err("solver.scale_fix", v)),
    };
    let init = match cfg.get("solver.init").unwrap_or_default() {
        "power_law_bump" => Init::PowerLawBump,
        "indicator" => Init::Indicator,
        "file" => {
            let path: String = cfg.require("io.init_file")?;
            let f = boundary_from_csv(&std::fs::read_to_string(path)?)?;
            Init::FromProfile(resample(&f, grid)?)
        }
        v => return Err(value_err("solver.init", v)),
    };
    Ok(SolveOptions {
        max_iters: cfg.require("solver.max_iters")?,
        tol_j: cfg.require("solver.tol_j")?,
        tol_res: cfg.require("solver.tol_res")?,
        scale_fix,
        init,
    })
}

fn value_err(key: &str, value: &str) -> CliError {
    ConfigError::Value {
        key: key.into(),
        value: value.into(),
    }
    .into()
}

#[derive(Serialize)]
struct CheckParamsJson<'a> {
    command: &'static str,
    config: BTreeMap<String, String>,
    params: Option<&'a Params>,
    report: &'a AdmissibilityReport,
    system: Option<&'a SystemExponents>,
    system_report: Option<&'a AdmissibilityReport>,
    asymptotic_hypothesis: Option<[bool; 2]>,
    pass: bool,
}

pub fn check_params(cfg: &RunConfig, out: &Path) -> Outcome {
    let raw = raw_params(cfg)?;
    let derived = match raw.p {
        Some(p) => derive_exponents(raw.n, p, raw.gamma, raw.alpha, raw.beta),
        None => Err(ConfigError::Missing("params.p".into()))?,
    };
    let (params, report) = match derived {
        Ok(p) => (Some(p), check_admissible(&p)),
        Err(e @ Error::NonPositiveExponent { .. }) => (
            None,
            AdmissibilityReport {
                lines: vec![ConditionLine {
                    name: "derived_exponents".into(),
                    statement: e.to_string(),
                    slack: f64::NAN,
                    pass: false,
                }],
                pass: false,
            },
        ),
        Err(e) => return Err(e.into()),
    };
    let sys = system(cfg).or_else(|e| match e {
        CliError::Core(Error::NonPositiveExponent { .. }) => Ok(None),
        e => Err(e),
    })?;
    let sys_report = sys.as_ref().map(check_system);
    let hyp = sys.as_ref().map(|s| {
        let (b, i) = check_asymptotic_hypothesis(s);
        [b, i]
    });
    let pass = report.pass && sys_report.as_ref().is_none_or(|r| r.pass);
    for line in report.failing().chain(sys_report.iter().flat_map(|r| r.failing())) {
        eprintln!("failing: {} ({})", line.name, line.statement);
    }
    emit(
        out,
        "check_params.json",
        &CheckParamsJson {
            command: "check-params",
            config: embedded(cfg),
            params: params.as_ref(),
            report: &report,
            system: sys.as_ref(),
            system_report: sys_report.as_ref(),
            asymptotic_hypothesis: hyp,
            pass,
        },
    )?;
    Ok(if pass { Verdict::Pass } else { Verdict::Fail })
}

#[derive(Serialize)]
struct ApplyJson {
    command: &'static str,
    config: BTreeMap<String, String>,
    direction: &'static str,
    input_norm: f64,
    output_norm: f64,
    output_truncation: f64,
    /// Output value at the innermost node; for V of a wide indicator this
    /// sits on the kernel-mass plateau.
    innermost_value: f64,
    adjoint_gap: f64,
    near_entries: usize,
    cache: CacheStats,
    output_file: &'static str,
}

fn adjoint_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale > 0.0 {
        (a - b).abs() / scale
    } else {
        0.0
    }
}

pub fn apply(cfg: &RunConfig, out: &Path) -> Outcome {
    let params = params(cfg)?;
    let path: String = cfg.require("io.input")?;
    let text = std::fs::read_to_string(&path)?;
    let direction = match cfg.get("io.direction") {
        Some("V" | "v") => "V",
        Some("W" | "w") => "W",
        Some(v) => return Err(value_err("io.direction", v)),
        None if text.contains("kind=halfspace") => "W",
        None => "V",
    };
    let ctx = OperatorContext::padded(params, &grid(cfg)?)?;
    let (image, report) = if direction == "V" {
        let f = boundary_from_csv(&text)?;
        let vf = ctx.apply_v(&f)?;
        let back = ctx.apply_w(&vf)?;
        let gap = adjoint_gap(
            ctx.interior_inner(vf.values(), vf.values()),
            ctx.boundary_inner(f.values(), back.values()),
        );
        let report = (
            boundary_norm(&f, params.p),
            halfspace_norm(&vf, params.q),
            halfspace_truncation(&vf, params.q),
            vf.values()[0],
            gap,
        );
        (halfspace_to_csv(&vf), report)
    } else {
        let g = halfspace_from_csv(&text)?;
        let wg = ctx.apply_w(&g)?;
        let back = ctx.apply_v(&wg)?;
        let gap = adjoint_gap(
            ctx.boundary_inner(wg.values(), wg.values()),
            ctx.interior_inner(g.values(), back.values()),
        );
        let report = (
            halfspace_norm(&g, params.qprime),
            boundary_norm(&wg, params.pprime),
            boundary_truncation(&wg, params.pprime),
            wg.values()[0],
            gap,
        );
        (boundary_to_csv(&wg), report)
    };
    let (input_norm, output_norm, output_truncation, innermost_value, adjoint_gap) = report;
    json::write_atomic(&out.join("image.csv"), &image)?;
    emit(
        out,
        "apply.json",
        &ApplyJson {
            command: "apply",
            config: embedded(cfg),
            direction,
            input_norm,
            output_norm,
            output_truncation,
            innermost_value,
            adjoint_gap,
            near_entries: ctx.near_entries(),
            cache: ctx.cache.stats(),
            output_file: "image.csv",
        },
    )?;
    Ok(Verdict::Pass)
}

#[derive(Serialize)]
struct Truncation {
    boundary: f64,
    interior: f64,
}

#[derive(Serialize)]
struct SolveJson<'a> {
    command: &'static str,
    config: BTreeMap<String, String>,
    mode: &'a str,
    converged: bool,
    iterations: usize,
    shifts: i64,
    c_est: f64,
    stationarity_gap: f64,
    el_residual: [f64; 2],
    truncation: Truncation,
    j_history: &'a [f64],
    boundary_file: &'static str,
    interior_file: &'static str,
}

/// Runs a solver, keeping the last iterate when it does not converge.
fn keep_unconverged<T>(r: swlab::Result<T>, last: impl FnOnce(SolveReport) -> T) -> Result<T, CliError> {
    match r {
        Ok(x) => Ok(x),
        Err(Error::NotConverged { report, .. }) => Ok(last(*report)),
        Err(e) => Err(e.into()),
    }
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Outcome {
    let mode = cfg.get("solver.mode").unwrap_or_default().to_owned();
    let grid = grid(cfg)?;
    let opts = solve_options(cfg, &grid)?;
    let (u, v, report, names) = match mode.as_str() {
        "extremal" => {
            let ctx = OperatorContext::padded(params(cfg)?, &grid)?;
            let rep = keep_unconverged(solve_extremal(&ctx, &opts), |r| r)?;
            (rep.f_star.clone(), rep.g_star.clone(), rep, ("f_star.csv", "g_star.csv"))
        }
        "system" => {
            let sys = system(cfg)?.ok_or_else(|| ConfigError::Missing("params.kind".into()))?;
            let ctx = OperatorContext::padded(system_carrier(&sys), &grid)?;
            let (u, v, rep) = keep_unconverged(solve_system(&sys, &ctx, &opts), |r| {
                (r.f_star.clone(), r.g_star.clone(), r)
            })?;
            (u, v, rep, ("u.csv", "v.csv"))
        }
        other => return Err(value_err("solver.mode", other)),
    };
    json::write_atomic(&out.join(names.0), &boundary_to_csv(&u))?;
    json::write_atomic(&out.join(names.1), &halfspace_to_csv(&v))?;
    emit(
        out,
        "solve.json",
        &SolveJson {
            command: "solve",
            config: embedded(cfg),
            mode: &mode,
            converged: report.converged,
            iterations: report.iterations,
            shifts: report.shifts,
            c_est: report.c_est,
            stationarity_gap: report.stationarity_gap,
            el_residual: [report.el_residual.0, report.el_residual.1],
            truncation: Truncation {
                boundary: report.truncation_diag.boundary,
                interior: report.truncation_diag.interior,
            },
            j_history: &report.j_history,
            boundary_file: names.0,
            interior_file: names.1,
        },
    )?;
    if !report.converged {
        eprintln!("solver did not converge after {} iterations", report.iterations);
    }
    Ok(if report.converged { Verdict::Pass } else { Verdict::Fail })
}

#[derive(Serialize)]
struct HardyJson {
    command: &'static str,
    config: BTreeMap<String, String>,
    radii: Vec<f64>,
    products: Vec<[f64; 2]>,
    record: VerificationRecord,
}

pub fn hardy(cfg: &RunConfig, out: &Path) -> Outcome {
    let params = params(cfg)?;
    let radii: Vec<f64> = cfg.list("hardy.radii")?;
    let products = hardy_products(&params, &radii)?.into_iter().map(|(a, b)| [a, b]).collect();
    let record = verify_hardy(&params, &radii)?;
    let pass = record.pass;
    emit(
        out,
        "hardy.json",
        &HardyJson {
            command: "hardy",
            config: embedded(cfg),
            radii,
            products,
            record,
        },
    )?;
    Ok(if pass { Verdict::Pass } else { Verdict::Fail })
}

pub const SUITE: [&str; 8] = [
    "scaling",
    "inequality",
    "lorentz",
    "asymptotics",
    "decay",
    "pohozaev",
    "hardy",
    "mass",
];

/// Points at which the kernel mass is checked.
fn mass_points() -> Vec<(f64, f64)> {
    [0.01, 0.1, 1.0]
        .into_iter()
        .flat_map(|t| [0.5, 2.0, 10.0].map(|c| (c * t, t)))
        .collect()
}

#[derive(Serialize)]
struct VerifyJson {
    command: &'static str,
    config: BTreeMap<String, String>,
    records: Vec<VerificationRecord>,
    pass: bool,
}

fn skipped(check: &str, why: impl std::fmt::Display) -> VerificationRecord {
    VerificationRecord::skipped(check, String::new(), why.to_string())
}

/// Turns a missing hypothesis into a skipped record.
fn or_skip(check: &str, r: swlab::Result<VerificationRecord>) -> Result<VerificationRecord, CliError> {
    match r {
        Err(e @ (Error::HypothesisNotSatisfied(_) | Error::InsufficientSupport(_) | Error::Precondition(_))) => {
            Ok(skipped(check, e))
        }
        other => Ok(other?),
    }
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Outcome {
    let suite: Vec<String> = cfg.list("verify.suite")?;
    if let Some(bad) = suite.iter().find(|s| !SUITE.contains(&s.as_str())) {
        return Err(value_err("verify.suite", bad));
    }
    let wants = |name: &str| suite.iter().any(|s| s == name);
    let params = params(cfg)?;
    let grid = grid(cfg)?;
    let opts = solve_options(cfg, &grid)?;
    let seed: u64 = cfg.require("io.seed")?;
    let trials: usize = cfg.require("verify.trials")?;
    let ctx = OperatorContext::padded(params, &grid)?;
    let mut records = Vec::new();

    if wants("scaling") {
        let f = BoundaryProfile::from_fn(&grid, params.n, |r| (-r * r).exp())?;
        records.push(verify_scaling(&f, &[0.25, 0.5, 2.0, 4.0], &ctx)?);
    }

    let needs_pair = ["inequality", "lorentz", "asymptotics", "decay", "pohozaev"]
        .iter()
        .any(|c| wants(c));
    let pair = if needs_pair {
        let rep = keep_unconverged(solve_extremal(&ctx, &opts), |r| r)?;
        records.push(VerificationRecord::with_gap(
            "solve",
            format!("iterations={}", rep.iterations),
            rep.c_est,
            rep.c_est,
            rep.stationarity_gap,
            opts.tol_res,
        ));
        Some(rep)
    } else {
        None
    };

    if let Some(rep) = &pair {
        if wants("inequality") {
            records.push(verify_inequality(&ctx, trials, seed, rep.c_est)?);
        }
        if wants("lorentz") {
            let mut family = indicator_family(&grid, params.n, &[0.1, 1.0, 10.0])?;
            family.push(rep.f_star.clone());
            records.push(lorentz_probe(&ctx, &family, rep.c_est)?);
        }
        let sys = params.system(SystemKind::DoubleWeighted);
        let system_pair = extremal_to_system(&rep.f_star, &rep.g_star, &ctx);
        match &system_pair {
            Ok((u, v)) => {
                if wants("asymptotics") {
                    let (b, i) = verify_asymptotics(u, v, &sys, &ctx)?;
                    records.extend([b, i]);
                }
                if wants("decay") {
                    records.push(decay_record(u, &sys));
                    records.push(or_skip("regularity", regularity_window_check(u, v, &sys, &ctx))?);
                }
            }
            Err(e) => {
                for c in ["asymptotics", "decay"].into_iter().filter(|c| wants(c)) {
                    records.push(skipped(c, e));
                }
            }
        }
        if wants("pohozaev") {
            records.extend(pohozaev_records(&params, &ctx, &opts, &system_pair)?);
        }
    }

    if wants("hardy") {
        records.push(verify_hardy(&params, &[0.5, 1.0, 2.0, 4.0])?);
    }
    if wants("mass") {
        let r = verify_mass(&grid, &mass_points(), params.n, params.gamma);
        records.push(match r {
            Err(e @ Error::Domain(_)) => skipped("mass", e),
            other => other?,
        });
    }

    let pass = records.iter().all(|r| r.status != Status::Fail);
    for r in records.iter().filter(|r| r.status == Status::Fail) {
        eprintln!("failed: {} (gap {:.3e} > {:.1e})", r.check, r.rel_gap, r.tolerance);
    }
    emit(
        out,
        "verify.json",
        &VerifyJson {
            command: "verify",
            config: embedded(cfg),
            records,
            pass,
        },
    )?;
    Ok(if pass { Verdict::Pass } else { Verdict::Fail })
}

/// Inner decay exponent of u against alpha, when the boundary hypothesis
/// holds.
fn decay_record(u: &BoundaryProfile, sys: &SystemExponents) -> VerificationRecord {
    if !check_asymptotic_hypothesis(sys).0 {
        return skipped("decay", "HypothesisNotSatisfied: boundary side");
    }
    match estimate_decay(u) {
        Ok((a0, a_inf)) => VerificationRecord::with_gap(
            "decay",
            format!("a_inf={a_inf:.6}"),
            a0,
            sys.alpha,
            (a0 - sys.alpha).abs(),
            tol::ASYMPTOTICS,
        ),
        Err(e) => skipped("decay", e),
    }
}

fn pohozaev_records(
    params: &Params,
    ctx: &OperatorContext,
    opts: &SolveOptions,
    system_pair: &swlab::Result<(BoundaryProfile, HalfSpaceProfile)>,
) -> Result<Vec<VerificationRecord>, CliError> {
    let sys = params.system(SystemKind::SingleWeighted);
    if !check_system(&sys).pass {
        return Ok(vec![skipped("pohozaev", "system exponents violate the balance condition")]);
    }
    // with no weights the single and double systems coincide
    let owned;
    let (u, v, ctx) = match system_pair {
        Ok((u, v)) if params.alpha == 0.0 && params.beta == 0.0 => (u, v, ctx),
        _ => {
            let sctx = OperatorContext::padded(system_carrier(&sys), ctx.boundary_grid())?;
            let (u, v, _) = keep_unconverged(solve_system(&sys, &sctx, opts), |r| {
                (r.f_star.clone(), r.g_star.clone(), r)
            })?;
            owned = (u, v, sctx);
            (&owned.0, &owned.1, &owned.2)
        }
    };
    Ok(vec![
        or_skip("pohozaev", verify_pohozaev(u, v, &sys, ctx))?,
        or_skip("energy_balance", verify_energy_balance(u, v, &sys, ctx))?,
    ])
}
