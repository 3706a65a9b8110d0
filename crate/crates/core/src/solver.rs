//! Extremal pairs by alternating maximization of J, and the Euler-Lagrange
//! integral systems by normalized fixed-point iteration.

use crate::admissibility::{check_admissible, check_system, SystemExponents, SystemKind};
use crate::error::{Error, Result};
use crate::operators::OperatorContext;
use crate::profiles::{
    boundary_norm, boundary_truncation, decreasing_rearrangement, dilate, half_mass_radius,
    halfspace_norm, halfspace_truncation, BoundaryProfile, HalfSpaceProfile,
};

/// How the dilation symmetry is pinned during iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleFix {
    /// Keep the half-mass radius of f^p r^{n-2} dr near 1.
    HalfMassRadius,
    None,
}

/// Starting profile of the boundary iteration.
#[derive(Debug, Clone)]
pub enum Init {
    /// (1 + r^2)^{-(n-1)/(2p)}.
    PowerLawBump,
    /// Indicator of the unit disk.
    Indicator,
    /// A given profile on the operator grid.
    FromProfile(BoundaryProfile),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Relative stall tolerance on J.
    pub tol_j: f64,
    /// Stationarity / residual tolerance.
    pub tol_res: f64,
    pub scale_fix: ScaleFix,
    pub init: Init,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol_j: 1e-12,
            tol_res: 1e-9,
            scale_fix: ScaleFix::HalfMassRadius,
            init: Init::PowerLawBump,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.tol_j > 0.0) || !(self.tol_res > 0.0) {
            return Err(Error::Precondition(
                "max_iters must be >= 1 and tolerances positive".into(),
            ));
        }
        Ok(())
    }
}

/// Fraction of the relevant mass in the outermost decade of each grid.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TruncationDiag {
    pub boundary: f64,
    pub interior: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub f_star: BoundaryProfile,
    pub g_star: HalfSpaceProfile,
    /// Final J(f_star, g_star); for the systems, the last normalization
    /// factor of the sweep map.
    pub c_est: f64,
    pub j_history: Vec<f64>,
    pub el_residual: (f64, f64),
    /// Relative sup distance between g_star and the optimal g for f_star
    /// (extremal mode) or between consecutive normalized iterates (systems).
    pub stationarity_gap: f64,
    pub truncation_diag: TruncationDiag,
    pub converged: bool,
    pub iterations: usize,
    /// Net number of lattice steps applied by the scale fix.
    pub shifts: i64,
}

fn normalize(values: &mut [f64], measures: &[f64], p: f64) -> Result<f64> {
    let s: f64 = values
        .iter()
        .zip(measures)
        .map(|(&v, &m)| if v > 0.0 { m * v.powf(p) } else { 0.0 })
        .sum();
    let norm = s.powf(1.0 / p);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::ZeroImage);
    }
    for v in values.iter_mut() {
        *v /= norm;
    }
    Ok(norm)
}

fn powered(values: &[f64], e: f64) -> Vec<f64> {
    values
        .iter()
        .map(|&v| if v > 0.0 { v.powf(e) } else { 0.0 })
        .collect()
}

/// sup |a - b| / sup |b|, optionally weighted.
fn rel_sup_gap(a: &[f64], b: &[f64], weights: Option<&[f64]>) -> f64 {
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        num = num.max(w * (x - y).abs());
        den = den.max(w * y.abs());
    }
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// g maximizing J(f, .) on the unit q'-sphere: V(f)^{q-1} normalized, and
/// the maximal value ‖V(f)‖_q.
fn best_g(f: &[f64], ctx: &OperatorContext) -> Result<(Vec<f64>, f64)> {
    let v = ctx.v_values(f);
    let q = ctx.params.q;
    let mut g = powered(&v, q - 1.0);
    let norm = normalize(&mut g, ctx.interior_measure(), ctx.params.qprime)?;
    // ‖V f‖_q = ‖V f^{q-1}‖_{q'}^{1/(q-1)}
    Ok((g, norm.powf(1.0 / (q - 1.0))))
}

/// f maximizing J(., g) on the unit p-sphere, together with W(g).
fn best_f(g: &[f64], ctx: &OperatorContext) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = ctx.w_values(g);
    let mut f = powered(&w, ctx.params.pprime - 1.0);
    normalize(&mut f, ctx.boundary_measure(), ctx.params.p)?;
    Ok((f, w))
}

fn check_unit(norm: f64, what: &str) -> Result<()> {
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!("{what} norm is {norm}, expected 1")));
    }
    Ok(())
}

/// V(f)^{q-1} normalized to unit q'-norm.
pub fn optimal_g(f: &BoundaryProfile, ctx: &OperatorContext) -> Result<HalfSpaceProfile> {
    check_unit(boundary_norm(f, ctx.params.p), "boundary p")?;
    ctx.apply_v(f)?;
    let (g, _) = best_g(f.values(), ctx)?;
    HalfSpaceProfile::new(ctx.rho_grid().clone(), ctx.t_grid().clone(), ctx.params.n, g)
}

/// W(g)^{p'-1} normalized to unit p-norm.
pub fn optimal_f(g: &HalfSpaceProfile, ctx: &OperatorContext) -> Result<BoundaryProfile> {
    check_unit(halfspace_norm(g, ctx.params.qprime), "half-space q'")?;
    ctx.apply_w(g)?;
    let (f, _) = best_f(g.values(), ctx)?;
    BoundaryProfile::new(ctx.boundary_grid().clone(), ctx.params.n, f)
}

fn initial_profile(init: &Init, ctx: &OperatorContext, p: f64) -> Result<BoundaryProfile> {
    let grid = ctx.boundary_grid();
    let n = ctx.params.n;
    let f = match init {
        Init::PowerLawBump => {
            let e = -(n as f64 - 1.0) / (2.0 * p);
            BoundaryProfile::from_fn(grid, n, |r| (1.0 + r * r).powf(e))?
        }
        Init::Indicator => BoundaryProfile::from_fn(grid, n, |r| if r <= 1.0 { 1.0 } else { 0.0 })?,
        Init::FromProfile(f) => {
            if !f.grid().same_as(grid) || f.n() != n {
                return Err(Error::GridMismatch("initial profile is not on the operator grid".into()));
            }
            f.clone()
        }
    };
    if f.values().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Domain("initial profile must be finite and nonnegative".into()));
    }
    unit(f, p)
}

fn unit(f: BoundaryProfile, p: f64) -> Result<BoundaryProfile> {
    let grid = f.grid().clone();
    let n = f.n();
    let measures = f.measures();
    let mut values = f.into_values();
    normalize(&mut values, &measures, p)?;
    BoundaryProfile::new(grid, n, values)
}

/// Rearranged and renormalized copy of f. Violations at rounding level, as
/// in the flat core of an image, are removed by a running minimum instead
/// of the cell-averaging rearrangement.
fn project(f: BoundaryProfile, p: f64) -> Result<BoundaryProfile> {
    if f.is_decreasing() {
        return Ok(f);
    }
    let top = f.values().iter().fold(0.0f64, |a, &b| a.max(b));
    let mut worst = 0.0f64;
    let mut run = f64::INFINITY;
    for &v in f.values() {
        worst = worst.max(v - run);
        run = run.min(v);
    }
    if worst <= ROUNDING_SLACK * top {
        let grid = f.grid().clone();
        let n = f.n();
        let mut run = f64::INFINITY;
        let values = f
            .into_values()
            .into_iter()
            .map(|v| {
                run = run.min(v);
                run
            })
            .collect();
        return unit(BoundaryProfile::new(grid, n, values)?, p);
    }
    unit(decreasing_rearrangement(&f), p)
}

/// Relative size of monotonicity violations treated as rounding noise.
const ROUNDING_SLACK: f64 = 1e-12;

/// Continuous dilation placing the half-mass radius at 1.
fn center(f: BoundaryProfile, p: f64) -> Result<BoundaryProfile> {
    match half_mass_radius(&f, p) {
        Some(rh) if (rh.ln()).abs() > 1e-12 => project(unit(dilate(&f, 1.0 / rh, p)?, p)?, p),
        _ => Ok(f),
    }
}

/// Lattice steps needed to bring the half-mass radius back near 1; zero
/// while it stays within two steps.
fn pending_shift(f: &BoundaryProfile, p: f64) -> i64 {
    let h = f.grid().log_step();
    match half_mass_radius(f, p) {
        Some(rh) if rh.ln().abs() > 2.0 * h => (rh.ln() / h).round() as i64,
        _ => 0,
    }
}

fn shift(f: &BoundaryProfile, k: i64, p: f64) -> Result<BoundaryProfile> {
    let lambda = (-(k as f64) * f.grid().log_step()).exp();
    project(unit(dilate(f, lambda, p)?, p)?, p)
}

/// Alternating maximization of J over unit-norm radial decreasing f and
/// axisymmetric g.
///
/// Each sweep computes g = optimal_g(f) then f = optimal_f(g), so the
/// recorded values ‖V(f_k)‖_q never decrease. The returned pair is
/// (optimal_f(g_k), g_k) and `c_est` is its J value.
pub fn solve_extremal(ctx: &OperatorContext, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let params = ctx.params;
    let report = check_admissible(&params);
    if !report.pass {
        let names: Vec<&str> = report.failing().map(|l| l.name.as_str()).collect();
        return Err(Error::Precondition(format!(
            "parameters are not admissible: {}",
            names.join(", ")
        )));
    }
    if !(params.p < params.q) {
        return Err(Error::Precondition(format!(
            "extremals are only sought for p < q (p = {}, q = {})",
            params.p, params.q
        )));
    }
    let p = params.p;
    let bgrid = ctx.boundary_grid().clone();
    let n = params.n;
    let mut f = project(initial_profile(&opts.init, ctx, p)?, p)?;
    if opts.scale_fix == ScaleFix::HalfMassRadius {
        f = center(f, p)?;
    }
    let (mut g, j0) = best_g(f.values(), ctx)?;
    let mut history = vec![j0];
    let mut shifts = 0i64;
    let mut gap = f64::INFINITY;
    let mut c_est = j0;
    let mut f_star = f.clone();
    let mut g_star = g.clone();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iters {
        iterations = it;
        let (f_vals, w) = best_f(&g, ctx)?;
        let f_new = project(BoundaryProfile::new(bgrid.clone(), n, f_vals)?, p)?;
        if opts.scale_fix == ScaleFix::HalfMassRadius {
            let k = pending_shift(&f_new, p);
            if k != 0 {
                let cand = shift(&f_new, k, p)?;
                let (g_c, j_c) = best_g(cand.values(), ctx)?;
                // a shift is only kept when it does not cost ascent
                if j_c >= *history.last().unwrap_or(&0.0) {
                    shifts += k;
                    history.push(j_c);
                    g = g_c;
                    continue;
                }
            }
        }
        let (g_new, j) = best_g(f_new.values(), ctx)?;
        gap = rel_sup_gap(&g, &g_new, None);
        let j_prev = *history.last().unwrap_or(&0.0);
        history.push(j);
        let stall = (j - j_prev).abs() <= opts.tol_j * j.abs();
        // f_new is the exact maximizer of J(., g) up to the rearrangement
        c_est = ctx.boundary_inner(&w, f_new.values());
        f_star = f_new;
        g_star = std::mem::replace(&mut g, g_new);
        if stall && gap < opts.tol_res {
            converged = true;
            break;
        }
    }
    let g_star = HalfSpaceProfile::new(ctx.rho_grid().clone(), ctx.t_grid().clone(), n, g_star)?;
    let sys = params.system(SystemKind::DoubleWeighted);
    let el = if (sys.p0 * sys.q0 - 1.0).abs() > 1e-12 {
        let (u, v) = extremal_to_system(&f_star, &g_star, ctx)?;
        el_residual(&u, &v, &sys, ctx)?
    } else {
        (f64::NAN, f64::NAN)
    };
    let report = SolveReport {
        truncation_diag: TruncationDiag {
            boundary: boundary_truncation(&f_star, p),
            interior: halfspace_truncation(&g_star, params.qprime),
        },
        f_star,
        g_star,
        c_est,
        j_history: history,
        el_residual: el,
        stationarity_gap: gap,
        converged,
        iterations,
        shifts,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::NotConverged {
            iterations,
            report: Box::new(report),
        })
    }
}

/// Maps an extremal pair to the double weighted system:
/// u = c1 f^{p-1}, v = c2 g^{q'-1} with c1, c2 fixed by the homogeneity of
/// the two equations.
pub fn extremal_to_system(
    f: &BoundaryProfile,
    g: &HalfSpaceProfile,
    ctx: &OperatorContext,
) -> Result<(BoundaryProfile, HalfSpaceProfile)> {
    let params = ctx.params;
    let sys = params.system(SystemKind::DoubleWeighted);
    let (p0, q0) = (sys.p0, sys.q0);
    let d = p0 * q0;
    if (d - 1.0).abs() <= 1e-12 {
        return Err(Error::Precondition("p0 q0 = 1: the system has no fixed amplitude".into()));
    }
    // W(g) = a f^{p-1} and V(f) = b g^{q'-1} at a stationary pair
    let fp = powered(f.values(), params.p - 1.0);
    let gq = powered(g.values(), params.qprime - 1.0);
    let a = ratio(&ctx.w_values(g.values()), &fp, ctx.boundary_measure())?;
    let b = ratio(&ctx.v_values(f.values()), &gq, ctx.interior_measure())?;
    // c1 = c2^{q0} a and c2 = c1^{p0} b
    let c1 = (a * b.powf(q0)).powf(1.0 / (1.0 - d));
    let c2 = c1.powf(p0) * b;
    let u = BoundaryProfile::new(ctx.boundary_grid().clone(), params.n, fp.iter().map(|x| c1 * x).collect())?;
    let v = HalfSpaceProfile::new(
        ctx.rho_grid().clone(),
        ctx.t_grid().clone(),
        params.n,
        gq.iter().map(|x| c2 * x).collect(),
    )?;
    Ok((u, v))
}

/// Least-squares factor a with x ≈ a y in the given measure.
fn ratio(x: &[f64], y: &[f64], m: &[f64]) -> Result<f64> {
    let (mut xy, mut yy) = (0.0, 0.0);
    for ((a, b), w) in x.iter().zip(y).zip(m) {
        xy += w * a * b;
        yy += w * b * b;
    }
    if !(yy > 0.0) || !(xy > 0.0) {
        return Err(Error::ZeroImage);
    }
    Ok(xy / yy)
}

/// The two integral maps of a system: u = T1(v^{q0}), v = T2(u^{p0}).
struct SystemMaps<'a> {
    ctx: &'a OperatorContext,
    kind: SystemKind,
    r_alpha: Vec<f64>,
    x_beta: Vec<f64>,
}

impl<'a> SystemMaps<'a> {
    fn new(ctx: &'a OperatorContext, kind: SystemKind) -> Self {
        let (a, b) = (ctx.params.alpha, ctx.params.beta);
        let r_alpha = ctx.boundary_grid().nodes().iter().map(|r| r.powf(a)).collect();
        let t = ctx.t_grid().nodes();
        let x_beta = ctx
            .rho_grid()
            .nodes()
            .iter()
            .flat_map(|&rho| t.iter().map(move |&tk| (rho * rho + tk * tk).powf(b / 2.0)))
            .collect();
        Self {
            ctx,
            kind,
            r_alpha,
            x_beta,
        }
    }

    fn t1(&self, g: &[f64]) -> Vec<f64> {
        let w = self.ctx.w_values(g);
        match self.kind {
            SystemKind::DoubleWeighted => w,
            SystemKind::SingleWeighted => w.iter().zip(&self.r_alpha).map(|(a, b)| a * b).collect(),
        }
    }

    fn t2(&self, f: &[f64]) -> Vec<f64> {
        let v = self.ctx.v_values(f);
        match self.kind {
            SystemKind::DoubleWeighted => v,
            SystemKind::SingleWeighted => v.iter().zip(&self.x_beta).map(|(a, b)| a * b).collect(),
        }
    }
}

fn check_system_on(sys: &SystemExponents, ctx: &OperatorContext) -> Result<()> {
    let rep = check_system(sys);
    if !rep.pass {
        let names: Vec<&str> = rep.failing().map(|l| l.name.as_str()).collect();
        return Err(Error::Precondition(format!("system check failed: {}", names.join(", "))));
    }
    let p = &ctx.params;
    let same = p.n == sys.n
        && (p.alpha - sys.alpha).abs() <= 1e-15
        && (p.beta - sys.beta).abs() <= 1e-15
        && (p.gamma - sys.gamma).abs() <= 1e-15;
    if !same {
        return Err(Error::Precondition(
            "system exponents do not match the operator parameters".into(),
        ));
    }
    if (sys.p0 * sys.q0 - 1.0).abs() <= 1e-12 {
        return Err(Error::Precondition("p0 q0 = 1: the system has no fixed amplitude".into()));
    }
    Ok(())
}

/// Relative weighted sup residuals of both equations, weights |xi|^alpha on
/// the boundary and |x|^beta in the interior.
pub fn el_residual(
    u: &BoundaryProfile,
    v: &HalfSpaceProfile,
    sys: &SystemExponents,
    ctx: &OperatorContext,
) -> Result<(f64, f64)> {
    ctx.apply_v(u)?;
    ctx.apply_w(v)?;
    let maps = SystemMaps::new(ctx, sys.kind);
    let tu = maps.t1(&powered(v.values(), sys.q0));
    let tv = maps.t2(&powered(u.values(), sys.p0));
    Ok((
        rel_sup_gap(u.values(), &tu, Some(&maps.r_alpha)),
        rel_sup_gap(v.values(), &tv, Some(&maps.x_beta)),
    ))
}

/// Normalized fixed-point iteration for the integral system.
///
/// The sweep u -> T1(T2(u^{p0})^{q0}) is homogeneous of degree p0 q0, so u is
/// kept at unit (p0+1)-norm and the amplitude c with c^{p0 q0 - 1} = 1/kappa
/// is restored at the end, kappa being the norm of the last sweep image.
pub fn solve_system(
    sys: &SystemExponents,
    ctx: &OperatorContext,
    opts: &SolveOptions,
) -> Result<(BoundaryProfile, HalfSpaceProfile, SolveReport)> {
    opts.validate()?;
    check_system_on(sys, ctx)?;
    let maps = SystemMaps::new(ctx, sys.kind);
    let pu = sys.p0 + 1.0;
    let n = sys.n;
    let bgrid = ctx.boundary_grid().clone();
    let d = sys.p0 * sys.q0;
    let mut u = project(initial_profile(&opts.init, ctx, pu)?, pu)?;
    if opts.scale_fix == ScaleFix::HalfMassRadius {
        u = center(u, pu)?;
    }
    let mut history = Vec::new();
    let mut shifts = 0i64;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut kappa = f64::NAN;
    let mut v_hat = Vec::new();
    for it in 1..=opts.max_iters {
        iterations = it;
        v_hat = maps.t2(&powered(u.values(), sys.p0));
        let mut w = maps.t1(&powered(&v_hat, sys.q0));
        kappa = normalize(&mut w, ctx.boundary_measure(), pu)?;
        history.push(kappa);
        gap = rel_sup_gap(&w, u.values(), Some(&maps.r_alpha));
        if gap < opts.tol_res {
            converged = true;
            break;
        }
        let mut next = project(BoundaryProfile::new(bgrid.clone(), n, w)?, pu)?;
        if opts.scale_fix == ScaleFix::HalfMassRadius {
            let k = pending_shift(&next, pu);
            if k != 0 {
                next = shift(&next, k, pu)?;
                shifts += k;
            }
        }
        u = next;
    }
    let c = kappa.powf(-1.0 / (d - 1.0));
    let u_sol = u.scaled(c);
    let v_sol = HalfSpaceProfile::new(
        ctx.rho_grid().clone(),
        ctx.t_grid().clone(),
        n,
        v_hat.iter().map(|x| c.powf(sys.p0) * x.max(0.0)).collect(),
    )?;
    let el = el_residual(&u_sol, &v_sol, sys, ctx)?;
    let report = SolveReport {
        f_star: u_sol.clone(),
        g_star: v_sol.clone(),
        c_est: kappa,
        j_history: history,
        el_residual: el,
        stationarity_gap: gap,
        truncation_diag: TruncationDiag {
            boundary: boundary_truncation(&u_sol, pu),
            interior: halfspace_truncation(&v_sol, sys.q0 + 1.0),
        },
        converged,
        iterations,
        shifts,
    };
    if converged {
        Ok((u_sol, v_sol, report))
    } else {
        Err(Error::NotConverged {
            iterations,
            report: Box::new(report),
        })
    }
}
