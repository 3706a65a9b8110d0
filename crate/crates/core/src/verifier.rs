//! Executable checks of the theory on computed objects.

use crate::admissibility::{
    check_asymptotic_hypothesis, check_system, hardy_products, regularity_intervals, Params,
    SystemExponents, SystemKind,
};
use crate::error::{Error, Result};
use crate::kernel::{kernel_mass, Angular};
use crate::operators::OperatorContext;
use crate::profiles::{
    boundary_norm, boundary_truncation, decreasing_rearrangement, dilate, halfspace_norm,
    lorentz_norm, BoundaryProfile, HalfSpaceProfile, LorentzIndices, RadialGrid,
};
use crate::special::sphere_area;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Default tolerances of the individual checks.
pub mod tol {
    pub const SCALING: f64 = 1e-3;
    pub const INEQUALITY: f64 = 1e-2;
    pub const ASYMPTOTICS: f64 = 5e-2;
    pub const POHOZAEV: f64 = 1e-2;
    pub const ENERGY: f64 = 1e-3;
    pub const HARDY: f64 = 1e-12;
    pub const MASS: f64 = 1e-4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    /// The check does not apply, e.g. a theorem's hypothesis fails.
    Skipped,
}

/// Outcome of one check. `pass` holds exactly when the relative gap is
/// within the tolerance and every side condition listed in `note` holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationRecord {
    pub check: String,
    pub inputs: String,
    pub measured: f64,
    pub reference: f64,
    pub rel_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    pub note: String,
}

impl VerificationRecord {
    /// Compares `measured` with a nonzero `reference`.
    pub fn compare(check: &str, inputs: String, measured: f64, reference: f64, tolerance: f64) -> Self {
        let rel_gap = rel(measured, reference);
        Self::with_gap(check, inputs, measured, reference, rel_gap, tolerance)
    }

    pub fn with_gap(
        check: &str,
        inputs: String,
        measured: f64,
        reference: f64,
        rel_gap: f64,
        tolerance: f64,
    ) -> Self {
        let pass = rel_gap <= tolerance;
        Self {
            check: check.into(),
            inputs,
            measured,
            reference,
            rel_gap,
            tolerance,
            pass,
            status: if pass { Status::Pass } else { Status::Fail },
            note: String::new(),
        }
    }

    pub fn skipped(check: &str, inputs: String, reason: String) -> Self {
        Self {
            check: check.into(),
            inputs,
            measured: f64::NAN,
            reference: f64::NAN,
            rel_gap: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            status: Status::Skipped,
            note: reason,
        }
    }

    /// Adds a side condition; a failed one fails the record.
    fn require(mut self, ok: bool, what: &str) -> Self {
        if !self.note.is_empty() {
            self.note.push_str("; ");
        }
        self.note.push_str(what);
        self.note.push_str(if ok { ": ok" } else { ": violated" });
        if !ok && self.status == Status::Pass {
            self.pass = false;
            self.status = Status::Fail;
        }
        self
    }

    fn annotate(mut self, text: String) -> Self {
        if !self.note.is_empty() {
            self.note.push_str("; ");
        }
        self.note.push_str(&text);
        self
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn lq(values: &[f64], measures: &[f64], q: f64) -> f64 {
    values
        .iter()
        .zip(measures)
        .map(|(&v, &m)| if v > 0.0 { m * v.powf(q) } else { 0.0 })
        .sum::<f64>()
        .powf(1.0 / q)
}

/// ‖V(f)‖_q on the context's interior grid.
pub fn v_norm(f: &BoundaryProfile, ctx: &OperatorContext) -> Result<f64> {
    let v = ctx.apply_v(f)?;
    Ok(lq(v.values(), ctx.interior_measure(), ctx.params.q))
}

/// Largest |‖V(f^λ)‖_q / ‖V(f)‖_q - 1| over the dilations.
pub fn verify_scaling(f: &BoundaryProfile, lambdas: &[f64], ctx: &OperatorContext) -> Result<VerificationRecord> {
    let p = ctx.params.p;
    let base = v_norm(f, ctx)?;
    if !(base > 0.0) {
        return Err(Error::ZeroImage);
    }
    let mut worst = (1.0f64, 0.0f64);
    let mut outer = boundary_truncation(f, p);
    for &l in lambdas {
        let fl = dilate(f, l, p)?;
        outer = outer.max(boundary_truncation(&fl, p));
        let ratio = v_norm(&fl, ctx)? / base;
        if (ratio - 1.0).abs() > (worst.1 - 1.0).abs() || worst.1 == 0.0 {
            worst = (l, ratio);
        }
    }
    let rec = VerificationRecord::compare(
        "scaling",
        format!("lambdas={lambdas:?} grid=[{:e}, {:e}]", f.grid().r_min(), f.grid().r_max()),
        worst.1,
        1.0,
        tol::SCALING,
    )
    .annotate(format!("worst lambda {}", worst.0));
    Ok(if outer > 1e-6 {
        rec.annotate(format!("truncation: outer-decade mass {outer:.3e} exceeds 1e-6"))
    } else {
        rec
    })
}

/// Nonnegative radial mixture of log-normal bumps, rearranged.
fn random_boundary(rng: &mut ChaCha8Rng, grid: &RadialGrid, n: usize) -> Result<BoundaryProfile> {
    let bumps: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=3))
        .map(|_| {
            (
                rng.random_range(0.1..1.0),
                rng.random_range((0.05f64).ln()..(20.0f64).ln()),
                rng.random_range(0.3..2.0),
            )
        })
        .collect();
    let f = BoundaryProfile::from_fn(grid, n, |r| {
        let x = r.ln();
        bumps
            .iter()
            .map(|&(a, m, s)| a * (-(x - m).powi(2) / (2.0 * s * s)).exp())
            .sum()
    })?;
    Ok(decreasing_rearrangement(&f))
}

fn random_interior(
    rng: &mut ChaCha8Rng,
    rho: &RadialGrid,
    t: &RadialGrid,
    n: usize,
) -> Result<HalfSpaceProfile> {
    let bumps: Vec<[f64; 5]> = (0..rng.random_range(1..=3))
        .map(|_| {
            [
                rng.random_range(0.1..1.0),
                rng.random_range((0.05f64).ln()..(20.0f64).ln()),
                rng.random_range((0.05f64).ln()..(20.0f64).ln()),
                rng.random_range(0.3..2.0),
                rng.random_range(0.3..2.0),
            ]
        })
        .collect();
    HalfSpaceProfile::from_fn(rho, t, n, |r, tk| {
        let (x, y) = (r.ln(), tk.ln());
        bumps
            .iter()
            .map(|b| b[0] * (-(x - b[1]).powi(2) / (2.0 * b[3] * b[3]) - (y - b[2]).powi(2) / (2.0 * b[4] * b[4])).exp())
            .sum()
    })
}

/// max over random trials of J(f, g) / (‖f‖_p ‖g‖_{q'}) against C_est.
pub fn verify_inequality(ctx: &OperatorContext, trials: usize, seed: u64, c_est: f64) -> Result<VerificationRecord> {
    let Params { n, p, qprime, .. } = ctx.params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let f = random_boundary(&mut rng, ctx.boundary_grid(), n)?;
        let g = random_interior(&mut rng, ctx.rho_grid(), ctx.t_grid(), n)?;
        let denom = boundary_norm(&f, p) * halfspace_norm(&g, qprime);
        let ratio = if denom > 0.0 { ctx.functional_j(&f, &g)? / denom } else { 0.0 };
        worst = worst.max(ratio);
    }
    let excess = (worst / c_est - 1.0).max(0.0);
    Ok(VerificationRecord::with_gap(
        "inequality",
        format!("trials={trials} seed={seed}"),
        worst,
        c_est,
        excess,
        tol::INEQUALITY,
    ))
}

/// max over the family of ‖V(f)‖_q / ‖f‖_{L^{p,q}}; passes when finite and
/// below twice the extremal ratio `c_est`.
pub fn lorentz_probe(ctx: &OperatorContext, family: &[BoundaryProfile], c_est: f64) -> Result<VerificationRecord> {
    if family.is_empty() {
        return Err(Error::Precondition("empty Lorentz family".into()));
    }
    let idx = LorentzIndices {
        p: ctx.params.p,
        s: ctx.params.q,
    };
    let mut worst = 0.0f64;
    let mut used = 0;
    for f in family {
        let l = lorentz_norm(f, idx);
        if !(l > 0.0) {
            continue;
        }
        used += 1;
        worst = worst.max(v_norm(f, ctx)? / l);
    }
    let bound = 2.0 * c_est;
    let excess = if worst.is_finite() { (worst / bound - 1.0).max(0.0) } else { f64::INFINITY };
    Ok(VerificationRecord::with_gap(
        "lorentz",
        format!("family={} used={used}", family.len()),
        worst,
        bound,
        excess,
        0.0,
    ))
}

/// Disks of radius R in the boundary, one indicator per radius.
pub fn indicator_family(grid: &RadialGrid, n: usize, radii: &[f64]) -> Result<Vec<BoundaryProfile>> {
    radii
        .iter()
        .map(|&r0| BoundaryProfile::from_fn(grid, n, |r| if r <= r0 { 1.0 } else { 0.0 }))
        .collect()
}

/// Which limit at the origin is examined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Boundary,
    Interior,
}

/// Number of innermost nodes that must approach the limit monotonically.
/// They start at the second node: the first one carries the ball (or the
/// cylinder) below the grid and holds an average rather than a point value.
const LIMIT_NODES: usize = 5;

fn monotone_converging(y: &[f64]) -> bool {
    let scale = y.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let slack = 1e-12 * scale;
    let d: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let up = d.iter().all(|&x| x >= -slack);
    let down = d.iter().all(|&x| x <= slack);
    // steps shrink toward the origin
    let shrinking = d.windows(2).all(|w| w[0].abs() <= w[1].abs() + slack);
    (up || down) && shrinking
}

/// Right-hand side of the boundary limit,
/// ∫ v^{q0} x_n |x|^{-(n+2-gamma+beta)} dx on the grid.
pub fn boundary_limit_integral(v: &HalfSpaceProfile, sys: &SystemExponents, ctx: &OperatorContext) -> f64 {
    let e = -(sys.n as f64 + 2.0 - sys.gamma + sys.beta) / 2.0;
    let t = ctx.t_grid().nodes();
    let nt = t.len();
    v.values()
        .iter()
        .zip(ctx.interior_measure())
        .enumerate()
        .map(|(idx, (&val, &m))| {
            let (rho, tk) = (ctx.rho_grid().nodes()[idx / nt], t[idx % nt]);
            if val > 0.0 {
                m * val.powf(sys.q0) * tk * (rho * rho + tk * tk).powf(e)
            } else {
                0.0
            }
        })
        .sum()
}

/// Right-hand side of the interior limit,
/// ∫ u^{p0} |xi|^{-alpha-(n+2-gamma)} dxi on the grid.
pub fn interior_limit_integral(u: &BoundaryProfile, sys: &SystemExponents, ctx: &OperatorContext) -> f64 {
    let e = -(sys.alpha + sys.n as f64 + 2.0 - sys.gamma);
    u.values()
        .iter()
        .zip(ctx.boundary_measure())
        .zip(ctx.boundary_grid().nodes())
        .map(|((&val, &m), &r)| if val > 0.0 { m * val.powf(sys.p0) * r.powf(e) } else { 0.0 })
        .sum()
}

/// The weight exponents carried by u and v at the origin: the boundary
/// function blows up like |xi|^{-alpha} and v like x_n |x|^{-beta} when the
/// weight sits outside the integral.
fn limit_weights(sys: &SystemExponents) -> (f64, f64) {
    match sys.kind {
        SystemKind::DoubleWeighted => (sys.alpha, sys.beta),
        SystemKind::SingleWeighted => (0.0, 0.0),
    }
}

/// Nodes of the interior grid on the diagonal rho = t, innermost first, as
/// (index into the profile, |x|).
fn diagonal(ctx: &OperatorContext) -> Vec<(usize, f64)> {
    let rho = ctx.rho_grid().nodes();
    let t = ctx.t_grid().nodes();
    let nt = t.len();
    let k0 = ctx.t_grid().nearest(rho[0]);
    rho.iter()
        .enumerate()
        .filter_map(|(j, &r)| {
            let k = k0 + j;
            (k < nt).then(|| (j * nt + k, r * std::f64::consts::SQRT_2))
        })
        .collect()
}

/// One side of the limit at the origin.
pub fn asymptotic_record(
    side: Side,
    u: &BoundaryProfile,
    v: &HalfSpaceProfile,
    sys: &SystemExponents,
    ctx: &OperatorContext,
) -> Result<VerificationRecord> {
    let (b_ok, i_ok) = check_asymptotic_hypothesis(sys);
    let (wa, wb) = limit_weights(sys);
    let eps = 10.0 * ctx.boundary_grid().r_min();
    match side {
        Side::Boundary => {
            if !b_ok {
                return Err(Error::HypothesisNotSatisfied("boundary limit at the origin".into()));
            }
            let r = ctx.boundary_grid().nodes();
            let y: Vec<f64> = u.values().iter().zip(r).map(|(&x, &ri)| x * ri.powf(wa)).collect();
            let i = ctx.boundary_grid().nearest(eps);
            let reference = boundary_limit_integral(v, sys, ctx);
            let ys = &y[1..(LIMIT_NODES + 1).min(y.len())];
            Ok(VerificationRecord::compare(
                "asymptotics_boundary",
                format!("eps={:e}", r[i]),
                y[i],
                reference,
                tol::ASYMPTOTICS,
            )
            .require(monotone_converging(ys), "monotone over the innermost nodes"))
        }
        Side::Interior => {
            if !i_ok {
                return Err(Error::HypothesisNotSatisfied("interior limit at the origin".into()));
            }
            let t = ctx.t_grid().nodes();
            let nt = t.len();
            let diag = diagonal(ctx);
            if diag.len() <= LIMIT_NODES {
                return Err(Error::InsufficientSupport("interior diagonal too short".into()));
            }
            let y: Vec<(f64, f64)> = diag
                .iter()
                .map(|&(idx, x)| (x, v.values()[idx] * x.powf(wb) / t[idx % nt]))
                .collect();
            let m = y
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 .0 / eps).ln().abs().total_cmp(&(b.1 .0 / eps).ln().abs()))
                .map_or(0, |(m, _)| m);
            let reference = interior_limit_integral(u, sys, ctx);
            let ys: Vec<f64> = y[1..=LIMIT_NODES].iter().map(|p| p.1).collect();
            Ok(VerificationRecord::compare(
                "asymptotics_interior",
                format!("|x|={:e} on rho=t", y[m].0),
                y[m].1,
                reference,
                tol::ASYMPTOTICS,
            )
            .require(monotone_converging(&ys), "monotone over the innermost nodes"))
        }
    }
}

/// Both limits at the origin; a side whose hypothesis fails is skipped.
pub fn verify_asymptotics(
    u: &BoundaryProfile,
    v: &HalfSpaceProfile,
    sys: &SystemExponents,
    ctx: &OperatorContext,
) -> Result<(VerificationRecord, VerificationRecord)> {
    let one = |side, name: &str| match asymptotic_record(side, u, v, sys, ctx) {
        Err(Error::HypothesisNotSatisfied(why)) => Ok(VerificationRecord::skipped(
            name,
            format!("p0={} q0={}", sys.p0, sys.q0),
            format!("HypothesisNotSatisfied: {why}"),
        )),
        other => other,
    };
    Ok((
        one(Side::Boundary, "asymptotics_boundary")?,
        one(Side::Interior, "asymptotics_interior")?,
    ))
}

/// Least-squares slope of ln y against ln x.
fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Values below this are treated as lost to underflow.
const FLOOR: f64 = 1e-290;

/// Decay exponents of a radial sample: minus the log-log slopes over the
/// innermost decade and over the outermost decade where it is positive.
fn decay_of(r: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let last = y
        .iter()
        .rposition(|&v| v > FLOOR)
        .ok_or_else(|| Error::InsufficientSupport("profile vanishes".into()))?;
    let inner: Vec<usize> = (0..=last).take_while(|&i| r[i] <= 10.0 * r[0] * (1.0 + 1e-12)).collect();
    let outer: Vec<usize> = (0..=last).filter(|&i| r[i] >= r[last] / 10.0 * (1.0 - 1e-12)).collect();
    if r[last] < 100.0 * r[0] {
        return Err(Error::InsufficientSupport("fewer than two decades above the floor".into()));
    }
    for d in [&inner, &outer] {
        if d.len() < 2 || d.iter().any(|&i| !(y[i] > FLOOR)) {
            return Err(Error::InsufficientSupport("a decade has values below the floor".into()));
        }
    }
    let pick = |ix: &[usize]| -> (Vec<f64>, Vec<f64>) { ix.iter().map(|&i| (r[i], y[i])).unzip() };
    let (xi, yi) = pick(&inner);
    let (xo, yo) = pick(&outer);
    Ok((-log_slope(&xi, &yi), -log_slope(&xo, &yo)))
}

/// (a0, a_inf): h ~ r^{-a0} at the inner end and r^{-a_inf} at the outer.
pub fn estimate_decay(h: &BoundaryProfile) -> Result<(f64, f64)> {
    decay_of(h.grid().nodes(), h.values())
}

/// Decay exponents of v along the diagonal rho = t, in |x|.
pub fn estimate_interior_decay(v: &HalfSpaceProfile, ctx: &OperatorContext) -> Result<(f64, f64)> {
    let (x, y): (Vec<f64>, Vec<f64>) = diagonal(ctx).iter().map(|&(idx, x)| (x, v.values()[idx])).unzip();
    decay_of(&x, &y)
}

/// Fractions of each window at which membership is sampled.
const WINDOW_SAMPLES: [f64; 3] = [0.25, 0.5, 0.75];

/// Integrability surrogate a0 < d/r < a_inf inside the integrability windows,
/// d = n-1 on the boundary and n in the interior. Records the worst margin.
pub fn regularity_window_check(
    u: &BoundaryProfile,
    v: &HalfSpaceProfile,
    sys: &SystemExponents,
    ctx: &OperatorContext,
) -> Result<VerificationRecord> {
    let (bw, iw) = regularity_intervals(sys);
    let (ua0, uinf) = estimate_decay(u)?;
    let (va0, vinf) = estimate_interior_decay(v, ctx)?;
    let nf = sys.n as f64;
    let mut worst = f64::INFINITY;
    for (w, d, a0, ainf) in [(bw, nf - 1.0, ua0, uinf), (iw, nf, va0, vinf)] {
        if w.is_empty() {
            continue;
        }
        for frac in WINDOW_SAMPLES {
            let x = d * w.at(frac);
            worst = worst.min((x - a0).min(ainf - x));
        }
    }
    if worst.is_infinite() {
        return Ok(VerificationRecord::skipped(
            "regularity",
            format!("p0={} q0={}", sys.p0, sys.q0),
            "both integrability windows are empty".into(),
        ));
    }
    Ok(VerificationRecord::with_gap(
        "regularity",
        format!("u decay ({ua0:.4}, {uinf:.4}) v decay ({va0:.4}, {vinf:.4})"),
        worst,
        0.0,
        -worst,
        0.0,
    ))
}

/// Terms of the Pohozaev identity for a single weighted solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PohozaevTerms {
    pub lhs: f64,
    pub rhs_a: f64,
    pub rhs_b: f64,
    pub e_u: f64,
    pub e_v: f64,
}

/// d y / d log r by central differences, one-sided at the ends.
fn log_derivative(y: &[f64], h: f64) -> Vec<f64> {
    let m = y.len();
    (0..m)
        .map(|i| match i {
            0 => (y[1] - y[0]) / h,
            _ if i == m - 1 => (y[m - 1] - y[m - 2]) / h,
            _ => (y[i + 1] - y[i - 1]) / (2.0 * h),
        })
        .collect()
}

pub fn pohozaev_terms(
    u: &BoundaryProfile,
    v: &HalfSpaceProfile,
    sys: &SystemExponents,
    ctx: &OperatorContext,
) -> Result<PohozaevTerms> {
    if sys.kind != SystemKind::SingleWeighted {
        return Err(Error::Precondition("the Pohozaev identity is checked for the single weighted system".into()));
    }
    if !check_system(sys).pass {
        return Err(Error::Precondition("system exponents violate the balance condition".into()));
    }
    let nf = sys.n as f64;
    let (a, b, g) = (sys.alpha, sys.beta, sys.gamma);
    let r = ctx.boundary_grid().nodes();
    let du = log_derivative(u.values(), ctx.boundary_grid().log_step());
    let mb = ctx.boundary_measure();
    let (mut lhs, mut e_u) = (0.0, 0.0);
    for i in 0..r.len() {
        let w = mb[i] * r[i].powf(-a);
        let x = u.values()[i];
        lhs += w * x.powf(sys.p0) * du[i];
        e_u += w * x.powf(sys.p0 + 1.0);
    }
    let rho = ctx.rho_grid().nodes();
    let t = ctx.t_grid().nodes();
    let (nr, nt) = (rho.len(), t.len());
    let vals = v.values();
    let mi = ctx.interior_measure();
    let mut e_v = 0.0;
    let hr = ctx.rho_grid().log_step();
    for j in 0..nr {
        let row = &vals[j * nt..(j + 1) * nt];
        let dt = log_derivative(row, ctx.t_grid().log_step());
        // neighbours in rho, one-sided at the ends
        let (lo, hi) = (j.saturating_sub(1), (j + 1).min(nr - 1));
        let span = (hi - lo) as f64 * hr;
        for k in 0..nt {
            let w = mi[j * nt + k] * (rho[j] * rho[j] + t[k] * t[k]).powf(-b / 2.0);
            let x = row[k];
            let drho = (vals[hi * nt + k] - vals[lo * nt + k]) / span;
            lhs += w * x.powf(sys.q0) * (drho + dt[k]);
            e_v += w * x.powf(sys.q0 + 1.0);
        }
    }
    Ok(PohozaevTerms {
        lhs,
        rhs_a: -(nf - 1.0 - a) / (sys.p0 + 1.0) * e_u - (nf - b) / (sys.q0 + 1.0) * e_v,
        rhs_b: -(nf + 1.0 - g) * e_v,
        e_u,
        e_v,
    })
}

/// Gaps LHS vs RHS_a and RHS_a vs RHS_b; the record carries the larger.
pub fn verify_pohozaev(
    u: &BoundaryProfile,
    v: &HalfSpaceProfile,
    sys: &SystemExponents,
    ctx: &OperatorContext,
) -> Result<VerificationRecord> {
    let pt = pohozaev_terms(u, v, sys, ctx)?;
    let g1 = rel(pt.lhs, pt.rhs_a);
    let g2 = rel(pt.rhs_a, pt.rhs_b);
    Ok(VerificationRecord::with_gap(
        "pohozaev",
        format!("p0={} q0={} gamma={}", sys.p0, sys.q0, sys.gamma),
        pt.lhs,
        pt.rhs_a,
        g1.max(g2),
        tol::POHOZAEV,
    )
    .annotate(format!("lhs/rhs_a gap {g1:.3e}, rhs_a/rhs_b gap {g2:.3e}")))
}

/// E_u against E_v for a single weighted solution.
pub fn verify_energy_balance(
    u: &BoundaryProfile,
    v: &HalfSpaceProfile,
    sys: &SystemExponents,
    ctx: &OperatorContext,
) -> Result<VerificationRecord> {
    let pt = pohozaev_terms(u, v, sys, ctx)?;
    Ok(VerificationRecord::compare(
        "energy_balance",
        format!("p0={} q0={}", sys.p0, sys.q0),
        pt.e_u,
        pt.e_v,
        tol::ENERGY,
    ))
}

/// R-independence of both Hardy products.
pub fn verify_hardy(params: &Params, radii: &[f64]) -> Result<VerificationRecord> {
    let prods = hardy_products(params, radii)?;
    let (a0, a1) = prods[0];
    let gap = prods
        .iter()
        .map(|&(x, y)| rel(x, a0).max(rel(y, a1)))
        .fold(0.0, f64::max);
    Ok(VerificationRecord::with_gap(
        "hardy",
        format!("radii={radii:?}"),
        gap,
        0.0,
        gap,
        tol::HARDY,
    )
    .annotate(format!("A0={a0:.16e} A1={a1:.16e}")))
}

/// t ∫_0^∞ A(r, rho, t) r^{n-2} dr by the grid rule, with the ball
/// r < r_min and the tail r > r_max added in closed form to second order.
pub fn grid_kernel_mass(grid: &RadialGrid, rho: f64, t: f64, n: usize, gamma: f64, tol: f64) -> Result<f64> {
    let ang = Angular::new(n, gamma);
    let m = n as f64 - 1.0;
    let s = (n as f64 + 2.0 - gamma) / 2.0;
    let mut body = 0.0;
    for (&r, &w) in grid.nodes().iter().zip(grid.weights()) {
        body += w * r.powi(n as i32 - 2) * ang.eval(r, rho, t, tol)?.value;
    }
    let r0 = grid.r_min();
    let ball = ang.eval(0.0, rho, t, tol)?.value * r0.powf(m) / m;
    // A = |S^{n-2}| r^{-2s} (1 + c2 / r^2 + ...) for large r
    let big = grid.r_max();
    let c2 = -s * (rho * rho + t * t) + 2.0 * s * (s + 1.0) * rho * rho / m;
    let area = sphere_area(n - 1);
    let tail = area * (big.powf(m - 2.0 * s) / (2.0 * s - m) + c2 * big.powf(m - 2.0 - 2.0 * s) / (2.0 * s + 2.0 - m));
    Ok(t * (body + ball + tail))
}

/// Worst relative deviation of the grid mass from the closed form.
pub fn verify_mass(grid: &RadialGrid, points: &[(f64, f64)], n: usize, gamma: f64) -> Result<VerificationRecord> {
    let mut worst = 0.0f64;
    for &(rho, t) in points {
        let exact = kernel_mass(t, gamma, n)?;
        worst = worst.max(rel(grid_kernel_mass(grid, rho, t, n, gamma, 1e-12)?, exact));
    }
    Ok(VerificationRecord::with_gap(
        "mass",
        format!("n={n} gamma={gamma} points={}", points.len()),
        worst,
        0.0,
        worst,
        tol::MASS,
    ))
}
