//! End-to-end acceptance run: one line per criterion, nonzero exit on any
//! failure.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swlab::admissibility::{check_admissible, derive_exponents, Params, SystemKind};
use swlab::kernel::kernel_mass;
use swlab::operators::{oracle_v_montecarlo, OperatorContext};
use swlab::profiles::*;
use swlab::solver::*;
use swlab::verifier::*;

type Outcome = Result<(bool, String), String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn grid(r_min: f64, r_max: f64, npd: usize) -> Result<RadialGrid, String> {
    RadialGrid::per_decade(r_min, r_max, npd).map_err(err)
}

fn report_of(r: swlab::Result<SolveReport>) -> Result<SolveReport, String> {
    match r {
        Ok(rep) => Ok(rep),
        Err(swlab::Error::NotConverged { report, iterations }) => {
            eprintln!("  note: not converged after {iterations} iterations");
            Ok(*report)
        }
        Err(e) => Err(err(e)),
    }
}

const C1_SETS: [(usize, f64); 4] = [(3, 2.0), (3, 2.5), (4, 2.0), (4, 2.9)];

fn kernel_mass_identity() -> Outcome {
    let g = grid(1e-4, 1e4, 256)?;
    let mut worst = 0.0f64;
    for (n, gamma) in C1_SETS {
        for t in [0.01, 0.1, 1.0] {
            for rho in [0.5 * t, 2.0 * t, 10.0 * t] {
                let m = grid_kernel_mass(&g, rho, t, n, gamma, 1e-12).map_err(err)?;
                worst = worst.max(rel(m, kernel_mass(t, gamma, n).map_err(err)?));
            }
        }
    }
    Ok((worst < 1e-4, format!("worst rel {worst:.3e} < 1e-4")))
}

fn adjoint_identity() -> Outcome {
    // 256 nodes along each of r, rho and t
    let g = make_log_grid(1e-3, 1e3, 256).map_err(err)?;
    let c = OperatorContext::new(derive_exponents(3, 2.0, 2.5, 0.2, 0.1).map_err(err)?, &g).map_err(err)?;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = BoundaryProfile::new(g.clone(), 3, (0..g.len()).map(|_| rng.random()).collect()).map_err(err)?;
        let vals = (0..g.len() * g.len()).map(|_| rng.random()).collect();
        let h = HalfSpaceProfile::new(g.clone(), g.clone(), 3, vals).map_err(err)?;
        let lhs = c.interior_inner(h.values(), c.apply_v(&f).map_err(err)?.values());
        let rhs = c.boundary_inner(c.apply_w(&h).map_err(err)?.values(), f.values());
        worst = worst.max(rel(lhs, rhs));
    }
    Ok((worst < 1e-10, format!("worst rel {worst:.3e} < 1e-10 over 20 pairs")))
}

fn dilation_invariance() -> Outcome {
    let g = grid(1e-4, 1e4, 64)?;
    let mut worst = 0.0f64;
    for (n, gamma) in C1_SETS {
        let c = OperatorContext::padded(derive_exponents(n, 2.0, gamma, 0.0, 0.0).map_err(err)?, &g).map_err(err)?;
        let f = BoundaryProfile::from_fn(&g, n, |r| (-r * r).exp()).map_err(err)?;
        let rec = verify_scaling(&f, &[0.25, 0.5, 2.0, 4.0], &c).map_err(err)?;
        worst = worst.max(rec.rel_gap);
    }
    Ok((worst < 1e-3, format!("worst rel {worst:.3e} < 1e-3")))
}

fn hardy_independence() -> Outcome {
    let sets = [(3, 2.0, 2.0, 0.0, 0.0), (3, 1.8, 2.5, 0.3, 0.1), (4, 2.5, 2.9, 0.4, 0.2)];
    let mut worst = 0.0f64;
    for (n, p, gamma, a, b) in sets {
        let params = derive_exponents(n, p, gamma, a, b).map_err(err)?;
        if !check_admissible(&params).pass {
            return Err(format!("set {:?} is not admissible", (n, p, gamma, a, b)));
        }
        worst = worst.max(verify_hardy(&params, &[0.5, 1.0, 2.0, 4.0]).map_err(err)?.rel_gap);
    }
    Ok((worst < 1e-12, format!("worst rel {worst:.3e} < 1e-12")))
}

/// Shared state of the extremal criteria.
struct Extremal {
    ctx: OperatorContext,
    report: SolveReport,
    opts: SolveOptions,
}

fn base_params() -> Result<Params, String> {
    derive_exponents(3, 2.0, 2.0, 0.0, 0.0).map_err(err)
}

fn extremal_solver() -> Result<((bool, String), Extremal), String> {
    let opts = SolveOptions::default();
    let coarse = OperatorContext::padded(base_params()?, &grid(1e-3, 1e4, 128)?).map_err(err)?;
    let bump = report_of(solve_extremal(&coarse, &opts))?;
    let ind = report_of(solve_extremal(
        &coarse,
        &SolveOptions {
            init: Init::Indicator,
            ..opts.clone()
        },
    ))?;
    let fine_grid = grid(1e-3, 1e4, 256)?;
    let fine = OperatorContext::padded(base_params()?, &fine_grid).map_err(err)?;
    let warm = resample(&bump.f_star, &fine_grid).map_err(err)?;
    let fine_opts = SolveOptions {
        init: Init::FromProfile(warm),
        ..opts.clone()
    };
    let top = report_of(solve_extremal(&fine, &fine_opts))?;
    let mono = [&bump, &ind, &top]
        .iter()
        .all(|r| r.j_history.windows(2).all(|w| w[1] >= w[0] - 1e-10));
    let dn = rel(bump.c_est, top.c_est);
    let di = rel(ind.c_est, bump.c_est);
    let conv = bump.converged && ind.converged && top.converged;
    let ok = mono && dn < 1e-3 && di < 2e-3 && conv;
    let line = format!(
        "J nondecreasing {mono}, C_est 128 {:.10} 256 {:.10} rel {dn:.3e} < 1e-3, inits rel {di:.3e} < 2e-3, converged {conv}",
        bump.c_est, top.c_est
    );
    Ok((
        (ok, line),
        Extremal {
            ctx: fine,
            report: top,
            opts: fine_opts,
        },
    ))
}

fn stationarity(x: &Extremal) -> Outcome {
    let g = optimal_g(&x.report.f_star, &x.ctx).map_err(err)?;
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (a, b) in x.report.g_star.values().iter().zip(g.values()) {
        num = num.max((a - b).abs());
        den = den.max(b.abs());
    }
    let gap = num / den;
    let env = radial_bound_check(&x.report.f_star, x.ctx.params.p).map_err(err)?;
    Ok((
        gap < 1e-8 && env <= 1e-6,
        format!("sup gap {gap:.3e} < 1e-8, envelope violation {env:.3e} <= 1e-6"),
    ))
}

fn euler_lagrange(x: &Extremal) -> Outcome {
    let (u, v) = extremal_to_system(&x.report.f_star, &x.report.g_star, &x.ctx).map_err(err)?;
    let sys = x.ctx.params.system(SystemKind::DoubleWeighted);
    let (ru, rv) = el_residual(&u, &v, &sys, &x.ctx).map_err(err)?;
    let bound = 10.0 * x.opts.tol_res;
    Ok((
        ru < bound && rv < bound,
        format!("residuals ({ru:.3e}, {rv:.3e}) < {bound:.0e}"),
    ))
}

fn pohozaev() -> Outcome {
    let params = derive_exponents(3, 1.6, 2.5, 0.0, 0.0).map_err(err)?;
    let sys = params.system(SystemKind::SingleWeighted);
    if rel(sys.p0, 5.0 / 3.0) > 1e-12 || rel(sys.q0, 3.0) > 1e-12 {
        return Err(format!("unexpected system exponents {} {}", sys.p0, sys.q0));
    }
    let c = OperatorContext::padded(params, &grid(1e-3, 1e4, 32)?).map_err(err)?;
    let (u, v, rep) = solve_system(&sys, &c, &SolveOptions::default()).map_err(err)?;
    let pt = pohozaev_terms(&u, &v, &sys, &c).map_err(err)?;
    let (g1, g2, ge) = (rel(pt.lhs, pt.rhs_a), rel(pt.rhs_a, pt.rhs_b), rel(pt.e_u, pt.e_v));
    Ok((
        g1 < 1e-2 && g2 < 1e-2 && ge < 1e-3 && rep.converged,
        format!("LHS/RHS_a {g1:.3e}, RHS_a/RHS_b {g2:.3e} < 1e-2, E_u/E_v {ge:.3e} < 1e-3"),
    ))
}

fn asymptotics() -> Outcome {
    let alpha = 0.3;
    let params = derive_exponents(3, 1.8, 2.5, alpha, 0.0).map_err(err)?;
    let c = OperatorContext::padded(params, &grid(1e-4, 1e4, 32)?).map_err(err)?;
    let opts = SolveOptions {
        tol_res: 1e-6,
        ..Default::default()
    };
    let rep = solve_extremal(&c, &opts).map_err(err)?;
    let (u, v) = extremal_to_system(&rep.f_star, &rep.g_star, &c).map_err(err)?;
    let sys = params.system(SystemKind::DoubleWeighted);
    let rec = asymptotic_record(Side::Boundary, &u, &v, &sys, &c).map_err(err)?;
    let (a0, _) = estimate_decay(&u).map_err(err)?;
    let da = (a0 - alpha).abs();
    Ok((
        rec.pass && da < 5e-2,
        format!(
            "u(eps) eps^alpha vs I_v rel {:.3e} < 5e-2 ({}), a0 {a0:.4} vs alpha {alpha} gap {da:.3e} < 5e-2",
            rec.rel_gap, rec.note
        ),
    ))
}

fn inequality_trials(x: &Extremal) -> Outcome {
    let rec = verify_inequality(&x.ctx, 100, 0, x.report.c_est).map_err(err)?;
    let ratio = rec.measured / x.report.c_est;
    Ok((ratio <= 1.01, format!("max ratio / C_est = {ratio:.6} <= 1.01")))
}

fn monte_carlo() -> Outcome {
    let params = derive_exponents(3, 2.0, 2.5, 0.2, 0.1).map_err(err)?;
    let g = grid(1e-3, 1e3, 32)?;
    let c = OperatorContext::padded(params, &g).map_err(err)?;
    let f = BoundaryProfile::from_fn(&g, 3, |r| (-r * r).exp()).map_err(err)?;
    let v = c.apply_v(&f).map_err(err)?;
    let h = g.log_step();
    let (rho, t) = (c.rho_grid(), c.t_grid());
    let mut worst = 0.0f64;
    let mut ok = true;
    for (i, (x, y)) in [(0.1, 0.1), (0.5, 0.2), (1.0, 1.0), (2.0, 0.5), (0.05, 3.0)].into_iter().enumerate() {
        let (j, k) = (rho.nearest(x), t.nearest(y));
        let point = [rho.nodes()[j], 0.0, t.nodes()[k]];
        let (est, se) = oracle_v_montecarlo(&f, &point, &params, 400_000, 100 + i as u64).map_err(err)?;
        let grid_v = v.at(j, k);
        // linear interpolation in log r of a smooth profile: second order in h
        let slack = h * h * grid_v;
        let dev = (est - grid_v).abs() / (3.0 * se + slack);
        worst = worst.max(dev);
        ok &= dev <= 1.0;
    }
    Ok((ok, format!("worst |MC - V| / (3 se + h^2 V) = {worst:.3} <= 1")))
}

fn determinism() -> Outcome {
    let run = |dir: &std::path::Path| -> Result<Vec<u8>, String> {
        let out = dir.to_str().ok_or("non-UTF-8 temp path")?;
        let args = [
            "swlab", "solve", "--out", out, "--seed", "7",
            "params.n=3", "params.p=2", "params.gamma=2",
            "grid.r_min=1e-2", "grid.r_max=1e3", "grid.nodes_per_decade=16",
            "solver.tol_res=1e-6",
        ];
        let code = swlab_cli::run(args);
        if code != 0 {
            return Err(format!("solve exited with {code}"));
        }
        std::fs::read(dir.join("solve.json")).map_err(err)
    };
    let (a, b) = (tempfile::tempdir().map_err(err)?, tempfile::tempdir().map_err(err)?);
    let (ja, jb) = (run(a.path())?, run(b.path())?);
    Ok((ja == jb, format!("solve.json identical across reruns: {} ({} bytes)", ja == jb, ja.len())))
}

fn main() {
    let mut failures = 0;
    let mut print = |id: usize, name: &str, started: Instant, outcome: Outcome| {
        let secs = started.elapsed().as_secs_f64();
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {name:<22} {} [{secs:.1} s] {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    };
    let timed = |f: fn() -> Outcome| {
        let s = Instant::now();
        (s, f())
    };

    let (s, o) = timed(kernel_mass_identity);
    print(1, "kernel mass", s, o);
    let (s, o) = timed(adjoint_identity);
    print(2, "adjoint identity", s, o);
    let (s, o) = timed(dilation_invariance);
    print(3, "dilation invariance", s, o);
    let (s, o) = timed(hardy_independence);
    print(4, "hardy independence", s, o);

    let s = Instant::now();
    match extremal_solver() {
        Ok((line, x)) => {
            print(5, "extremal solver", s, Ok(line));
            let s = Instant::now();
            print(6, "stationarity", s, stationarity(&x));
            let s = Instant::now();
            print(7, "euler-lagrange", s, euler_lagrange(&x));
            let (s, o) = timed(pohozaev);
            print(8, "pohozaev", s, o);
            let (s, o) = timed(asymptotics);
            print(9, "asymptotics", s, o);
            let s = Instant::now();
            print(10, "inequality trials", s, inequality_trials(&x));
        }
        Err(e) => {
            for (id, name) in [(5, "extremal solver"), (6, "stationarity"), (7, "euler-lagrange"), (10, "inequality trials")] {
                print(id, name, s, Err(e.clone()));
            }
            let (s, o) = timed(pohozaev);
            print(8, "pohozaev", s, o);
            let (s, o) = timed(asymptotics);
            print(9, "asymptotics", s, o);
        }
    }
    let (s, o) = timed(monte_carlo);
    print(11, "monte carlo", s, o);
    let (s, o) = timed(determinism);
    print(12, "determinism", s, o);

    println!("acceptance: {} of 12 criteria failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
