//! Exponent relations, hypothesis checks and closed-form Hardy integrals.

use crate::error::{Error, Result};
use crate::special::sphere_area;
use serde::Serialize;

/// Tolerance for the exact exponent relations.
pub const RELATION_TOL: f64 = 1e-12;

/// One admissible (or candidate) parameter set with its derived exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub n: usize,
    pub p: f64,
    pub qprime: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub q: f64,
    pub pprime: f64,
    pub s_kernel: f64,
}

impl Params {
    /// Builds a parameter set with an explicitly given q'. The dual exponent q
    /// comes from the 1/q relation, so an inconsistent q' shows up in
    /// `check_admissible` rather than here.
    pub fn with_qprime(n: usize, p: f64, qprime: f64, alpha: f64, beta: f64, gamma: f64) -> Self {
        let nf = n as f64;
        let inv_q = (nf - 1.0) / (nf * p) + (alpha + beta + 2.0 - gamma) / nf;
        Self {
            n,
            p,
            qprime,
            alpha,
            beta,
            gamma,
            q: 1.0 / inv_q,
            pprime: p / (p - 1.0),
            s_kernel: (nf + 2.0 - gamma) / 2.0,
        }
    }

    /// Exponents of the Euler-Lagrange system attached to this inequality:
    /// p0 = 1/(p-1), q0 = 1/(q'-1).
    pub fn system(&self, kind: SystemKind) -> SystemExponents {
        SystemExponents {
            p0: 1.0 / (self.p - 1.0),
            q0: 1.0 / (self.qprime - 1.0),
            kind,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            n: self.n,
        }
    }
}

/// Solves the exponent relation for q' and q.
pub fn derive_exponents(n: usize, p: f64, gamma: f64, alpha: f64, beta: f64) -> Result<Params> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::NonPositiveExponent { name: "p", value: p });
    }
    let nf = n as f64;
    let inv_qprime = 1.0 - (nf - 1.0) / (nf * p) - (alpha + beta + 2.0 - gamma) / nf;
    if !(inv_qprime > 0.0 && inv_qprime < 1.0) {
        return Err(Error::NonPositiveExponent {
            name: "q'",
            value: 1.0 / inv_qprime,
        });
    }
    let params = Params::with_qprime(n, p, 1.0 / inv_qprime, alpha, beta, gamma);
    if !(params.q > 1.0) || !params.q.is_finite() {
        return Err(Error::NonPositiveExponent {
            name: "q",
            value: params.q,
        });
    }
    Ok(params)
}

/// One checked hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionLine {
    pub name: String,
    pub statement: String,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub lines: Vec<ConditionLine>,
    pub pass: bool,
}

impl AdmissibilityReport {
    fn from_lines(lines: Vec<ConditionLine>) -> Self {
        let pass = lines.iter().all(|l| l.pass);
        Self { lines, pass }
    }

    pub fn line(&self, name: &str) -> Option<&ConditionLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    pub fn failing(&self) -> impl Iterator<Item = &ConditionLine> {
        self.lines.iter().filter(|l| !l.pass)
    }
}

fn equality(name: &str, statement: &str, residual: f64) -> ConditionLine {
    ConditionLine {
        name: name.into(),
        statement: statement.into(),
        slack: residual.abs(),
        pass: residual.abs() < RELATION_TOL,
    }
}

fn strict(name: &str, statement: &str, slack: f64) -> ConditionLine {
    ConditionLine {
        name: name.into(),
        statement: statement.into(),
        slack,
        pass: slack > 0.0,
    }
}

fn loose(name: &str, statement: &str, slack: f64) -> ConditionLine {
    ConditionLine {
        name: name.into(),
        statement: statement.into(),
        slack,
        pass: slack >= -RELATION_TOL,
    }
}

/// Checks every hypothesis of the inequality. Failures are report lines.
pub fn check_admissible(params: &Params) -> AdmissibilityReport {
    let Params {
        n,
        p,
        qprime,
        alpha,
        beta,
        gamma,
        q,
        pprime,
        ..
    } = *params;
    let nf = n as f64;
    let relation = (nf - 1.0) / (nf * p) + 1.0 / qprime + (alpha + beta + 2.0 - gamma) / nf - 1.0;
    let lines = vec![
        ConditionLine {
            name: "n >= 3".into(),
            statement: "n >= 3".into(),
            slack: nf - 3.0,
            pass: n >= 3,
        },
        strict("1 < p < inf", "1 < p < inf", if p.is_finite() { p - 1.0 } else { -1.0 }),
        strict(
            "1 < q' < inf",
            "1 < q' < inf",
            if qprime.is_finite() { qprime - 1.0 } else { -1.0 },
        ),
        ConditionLine {
            name: "2 <= gamma < n".into(),
            statement: "2 <= gamma < n".into(),
            slack: (gamma - 2.0).min(nf - gamma),
            pass: gamma - 2.0 >= -RELATION_TOL && nf - gamma > 0.0,
        },
        equality(
            "exponent relation",
            "(n-1)/(n p) + 1/q' + (alpha+beta+2-gamma)/n = 1",
            relation,
        ),
        strict("alpha < (n-1)/p'", "alpha < (n-1)/p'", (nf - 1.0) / pprime - alpha),
        strict("beta < n/q + 1", "beta < n/q + 1", nf / q + 1.0 - beta),
        loose("alpha + beta >= 0", "alpha + beta >= 0", alpha + beta),
        loose(
            "(n-1)/(n p) + 1/q' >= 1",
            "(n-1)/(n p) + 1/q' >= 1",
            (nf - 1.0) / (nf * p) + 1.0 / qprime - 1.0,
        ),
    ];
    AdmissibilityReport::from_lines(lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SystemKind {
    DoubleWeighted,
    SingleWeighted,
}

/// Powers of the Euler-Lagrange integral system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemExponents {
    pub p0: f64,
    pub q0: f64,
    pub kind: SystemKind,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
}

/// Checks the kind-specific exponent relation and positivity of the powers.
pub fn check_system(sys: &SystemExponents) -> AdmissibilityReport {
    let nf = sys.n as f64;
    let (a, b, g) = (sys.alpha, sys.beta, sys.gamma);
    let relation = match sys.kind {
        SystemKind::DoubleWeighted => equality(
            "system relation",
            "(n-1)/(n (p0+1)) + 1/(q0+1) = (n+alpha+beta+1-gamma)/n",
            (nf - 1.0) / (nf * (sys.p0 + 1.0)) + 1.0 / (sys.q0 + 1.0) - (nf + a + b + 1.0 - g) / nf,
        ),
        SystemKind::SingleWeighted => equality(
            "balance condition",
            "(n-1-alpha)/(p0+1) + (n-beta)/(q0+1) = n+1-gamma",
            (nf - 1.0 - a) / (sys.p0 + 1.0) + (nf - b) / (sys.q0 + 1.0) - (nf + 1.0 - g),
        ),
    };
    AdmissibilityReport::from_lines(vec![
        relation,
        strict("p0 > 0", "p0 > 0", sys.p0),
        strict("q0 > 0", "q0 > 0", sys.q0),
    ])
}

/// Whether the boundary and interior limit statements at the origin apply.
pub fn check_asymptotic_hypothesis(sys: &SystemExponents) -> (bool, bool) {
    let nf = sys.n as f64;
    let (p0, q0) = (sys.p0, sys.q0);
    let powers = p0 > 1.0 && q0 > 1.0;
    let boundary = 1.0 / q0 - (nf + 1.0 + sys.beta - sys.gamma) / (q0 * nf) > (sys.beta - 1.0) / nf;
    let interior =
        1.0 / p0 - (nf + 2.0 + sys.alpha - sys.gamma) / (p0 * (nf - 1.0)) > sys.alpha / (nf - 1.0);
    (powers && boundary, powers && interior)
}

/// An open interval (lo, hi); empty when lo >= hi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn intersect(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn at(&self, frac: f64) -> f64 {
        self.lo + frac * (self.hi - self.lo)
    }
}

/// Integrability windows of a solution pair: admissible values of 1/r for the
/// boundary function and of 1/s for the interior function.
pub fn regularity_intervals(sys: &SystemExponents) -> (Interval, Interval) {
    let nf = sys.n as f64;
    let m = nf - 1.0;
    let (a, b, g) = (sys.alpha, sys.beta, sys.gamma);
    let (pp, qq) = (1.0 / (sys.p0 + 1.0), 1.0 / (sys.q0 + 1.0));
    let shift_b = pp - nf / m * qq;
    let boundary = Interval {
        lo: a / m,
        hi: (nf + 2.0 - g + a) / m,
    }
    .intersect(Interval {
        lo: shift_b + (b - 1.0) / m,
        hi: shift_b + (nf + 1.0 - g + b) / m,
    });
    let shift_i = qq - m / nf * pp;
    let interior = Interval {
        lo: (b - 1.0) / nf,
        hi: (nf + 1.0 - g + b) / nf,
    }
    .intersect(Interval {
        lo: shift_i + a / nf,
        hi: shift_i + (nf + 2.0 - g + a) / nf,
    });
    (boundary, interior)
}

/// ln ∫ over {|x| >= R, x_n > 0} of |x|^{-mu} dx.
fn ln_hardy_tail(r: f64, mu: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if !(mu > nf) {
        return Err(Error::DivergentIntegral(format!(
            "half-space tail needs mu > n (mu = {mu}, n = {n})"
        )));
    }
    Ok((0.5 * sphere_area(n) / (mu - nf)).ln() + (nf - mu) * r.ln())
}

/// ln ∫ over {|xi| <= R} in R^{n-1} of |xi|^{-nu} dxi.
fn ln_hardy_ball(r: f64, nu: f64, n: usize) -> Result<f64> {
    let m = n as f64 - 1.0;
    if !(nu < m) {
        return Err(Error::DivergentIntegral(format!(
            "boundary ball needs nu < n-1 (nu = {nu}, n = {n})"
        )));
    }
    Ok((sphere_area(n - 1) / (m - nu)).ln() + (m - nu) * r.ln())
}

/// ln ∫ over {|x| <= R, x_n > 0} of |x|^{-mu} dx.
fn ln_halfspace_ball(r: f64, mu: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if !(mu < nf) {
        return Err(Error::DivergentIntegral(format!(
            "half-space ball needs mu < n (mu = {mu}, n = {n})"
        )));
    }
    Ok((0.5 * sphere_area(n) / (nf - mu)).ln() + (nf - mu) * r.ln())
}

/// ln ∫ over {|xi| >= R} in R^{n-1} of |xi|^{-nu} dxi.
fn ln_boundary_tail(r: f64, nu: f64, n: usize) -> Result<f64> {
    let m = n as f64 - 1.0;
    if !(nu > m) {
        return Err(Error::DivergentIntegral(format!(
            "boundary tail needs nu > n-1 (nu = {nu}, n = {n})"
        )));
    }
    Ok((sphere_area(n - 1) / (nu - m)).ln() + (m - nu) * r.ln())
}

/// ∫ over {|x| >= R, x_n > 0} of |x|^{-mu} dx.
pub fn hardy_tail_integral(r: f64, mu: f64, n: usize) -> Result<f64> {
    ln_hardy_tail(r, mu, n).map(f64::exp)
}

/// ∫ over {|xi| <= R} in R^{n-1} of |xi|^{-nu} dxi.
pub fn hardy_ball_integral(r: f64, nu: f64, n: usize) -> Result<f64> {
    ln_hardy_ball(r, nu, n).map(f64::exp)
}

/// ∫ over {|x| <= R, x_n > 0} of |x|^{-mu} dx.
pub fn halfspace_ball_integral(r: f64, mu: f64, n: usize) -> Result<f64> {
    ln_halfspace_ball(r, mu, n).map(f64::exp)
}

/// ∫ over {|xi| >= R} in R^{n-1} of |xi|^{-nu} dxi.
pub fn boundary_tail_integral(r: f64, nu: f64, n: usize) -> Result<f64> {
    ln_boundary_tail(r, nu, n).map(f64::exp)
}

/// Hardy products for the two weight pairs at each radius.
///
/// The first factor uses W = |x|^{-beta q-(n+1-gamma) q}, U = |xi|^{alpha p}
/// with mass outside R in the half-space and inside R on the boundary; the
/// second uses W = |x|^{(1-beta) q}, U = |xi|^{(n+2-gamma+alpha) p} with the
/// roles of inside and outside exchanged.
pub fn hardy_products(params: &Params, radii: &[f64]) -> Result<Vec<(f64, f64)>> {
    let Params {
        n,
        p,
        q,
        pprime,
        alpha,
        beta,
        gamma,
        ..
    } = *params;
    let nf = n as f64;
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Domain("radii must be positive".into()));
    }
    let mu0 = beta * q + (nf + 1.0 - gamma) * q;
    let nu0 = alpha * p * (pprime - 1.0);
    let mu1 = -(1.0 - beta) * q;
    let nu1 = (nf + 2.0 - gamma + alpha) * p * (pprime - 1.0);
    radii
        .iter()
        .map(|&r| {
            // in logs: the single integrals over- or underflow for large q
            let a0 = (ln_hardy_tail(r, mu0, n)? / q + ln_hardy_ball(r, nu0, n)? / pprime).exp();
            let a1 = (ln_halfspace_ball(r, mu1, n)? / q + ln_boundary_tail(r, nu1, n)? / pprime).exp();
            Ok((a0, a1))
        })
        .collect()
}
