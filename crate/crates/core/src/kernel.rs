//! The fractional Poisson kernel, its angular reduction and cached tables.

use crate::error::{Error, Result};
use crate::quad::{self, AdaptiveOptions, Estimate};
use crate::special::{beta, gamma_fn, sphere_area};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Kernel exponent s = (n+2-gamma)/2.
pub fn kernel_exponent(n: usize, gamma: f64) -> f64 {
    (n as f64 + 2.0 - gamma) / 2.0
}

/// P(x, xi, gamma) = x_n (|x' - xi|^2 + x_n^2)^{-(n+2-gamma)/2}.
///
/// `x` has n coordinates with x_n last; `xi` has n-1 coordinates.
pub fn kernel_eval(x: &[f64], xi: &[f64], gamma: f64, n: usize) -> Result<f64> {
    if x.len() != n || xi.len() + 1 != n {
        return Err(Error::Domain(format!(
            "expected points in R^{n} and R^{}, got lengths {} and {}",
            n - 1,
            x.len(),
            xi.len()
        )));
    }
    let t = x[n - 1];
    if !(t > 0.0) {
        return Err(Error::Domain(format!("x_n = {t} must be positive")));
    }
    let d2: f64 = x[..n - 1].iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(t * (d2 + t * t).powf(-kernel_exponent(n, gamma)))
}

/// Total boundary mass of the kernel at height t (finite only for gamma < 3).
pub fn kernel_mass(t: f64, gamma: f64, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("height t = {t} must be positive")));
    }
    if !(gamma >= 2.0 && gamma < 3.0) {
        return Err(Error::Domain(format!(
            "kernel mass needs 2 <= gamma < 3 (gamma = {gamma})"
        )));
    }
    let nf = n as f64;
    Ok(PI.powf((nf - 1.0) / 2.0) * gamma_fn((3.0 - gamma) / 2.0) / gamma_fn((nf + 2.0 - gamma) / 2.0)
        * t.powf(gamma - 2.0))
}

/// Evaluator for the angular reduction
/// A(r, rho, t) = |S^{n-3}| ∫_0^pi (r^2 + rho^2 + t^2 - 2 r rho cos θ)^{-s} sin^{n-3} θ dθ.
#[derive(Debug, Clone, Copy)]
pub struct Angular {
    pub n: usize,
    pub s: f64,
    prefactor: f64,
    base: f64,
}

/// Largest 2 r rho / (r^2 + rho^2 + t^2) handled by the power series.
const SERIES_LIMIT: f64 = 0.75;

impl Angular {
    pub fn new(n: usize, gamma: f64) -> Self {
        assert!(n >= 3, "dimension must be at least 3");
        Self {
            n,
            s: kernel_exponent(n, gamma),
            prefactor: sphere_area(n - 2),
            base: beta(0.5, (n as f64 - 2.0) / 2.0),
        }
    }

    #[inline]
    fn neg_pow(&self, x: f64) -> f64 {
        if self.s == 1.5 {
            1.0 / (x * x.sqrt())
        } else if self.s == 1.0 {
            1.0 / x
        } else {
            x.powf(-self.s)
        }
    }

    /// Value with an error estimate, to relative tolerance `tol`.
    pub fn eval(&self, r: f64, rho: f64, t: f64, tol: f64) -> Result<Estimate> {
        if !(r >= 0.0 && rho >= 0.0 && t > 0.0) {
            return Err(Error::Domain(format!(
                "angular factor needs r, rho >= 0 and t > 0 (got {r}, {rho}, {t})"
            )));
        }
        let (lo, hi) = if r <= rho { (r, rho) } else { (rho, r) };
        let a0 = lo * lo + hi * hi + t * t;
        if lo == 0.0 {
            return Ok(Estimate {
                value: sphere_area(self.n - 1) * self.neg_pow(a0),
                error: 0.0,
            });
        }
        let x = 2.0 * lo * hi / a0;
        if x <= SERIES_LIMIT {
            Ok(self.series(a0, x))
        } else {
            self.quadrature(lo, hi, t, tol)
        }
    }

    fn series(&self, a0: f64, x: f64) -> Estimate {
        let x2 = x * x;
        let s = self.s;
        let half = (self.n as f64 - 1.0) / 2.0;
        let mut term = self.base;
        let mut sum = term;
        let mut m = 0.0;
        let mut error = 0.0;
        for _ in 0..2000 {
            let ratio = (s + 2.0 * m) * (s + 2.0 * m + 1.0) / ((2.0 * m + 1.0) * (2.0 * m + 2.0))
                * (m + 0.5)
                / (m + half)
                * x2;
            term *= ratio;
            sum += term;
            m += 1.0;
            if term <= 1e-17 * sum && ratio < 1.0 {
                error = term * ratio / (1.0 - ratio);
                break;
            }
        }
        let scale = self.prefactor * self.neg_pow(a0);
        Estimate {
            value: scale * sum,
            error: scale * error,
        }
    }

    fn quadrature(&self, r: f64, rho: f64, t: f64, tol: f64) -> Result<Estimate> {
        let d0 = (r - rho) * (r - rho) + t * t;
        let b = 4.0 * r * rho;
        let width = (d0 / (r * rho)).sqrt();
        let breaks = quad::graded_breaks(PI, width);
        let weight = self.n - 3;
        let est = quad::integrate(
            |th: f64| {
                let sh = (0.5 * th).sin();
                let v = self.neg_pow(d0 + b * sh * sh);
                match weight {
                    0 => v,
                    1 => v * th.sin(),
                    k => v * th.sin().powi(k as i32),
                }
            },
            &breaks,
            AdaptiveOptions {
                tol_rel: tol,
                tol_abs: 0.0,
                max_panels: 4000,
            },
        )?;
        Ok(Estimate {
            value: self.prefactor * est.value,
            error: self.prefactor * est.error,
        })
    }
}

/// A(r, rho, t) to relative accuracy `tol`.
pub fn angular_factor(r: f64, rho: f64, t: f64, n: usize, gamma: f64, tol: f64) -> Result<f64> {
    Ok(Angular::new(n, gamma).eval(r, rho, t, tol)?.value)
}

/// Geometric lattice description shared by the cache and the operators.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeInfo {
    /// log-step between consecutive nodes
    pub h: f64,
    /// index offsets of rho and t grids relative to the r grid
    pub rho_offset: i64,
    pub t_offset: i64,
}

/// Detects whether three node sets live on one geometric lattice.
pub fn detect_lattice(r: &[f64], rho: &[f64], t: &[f64]) -> Option<LatticeInfo> {
    let geometric_ratio = |v: &[f64]| -> Option<f64> {
        if v.len() < 2 || v[0] <= 0.0 {
            return None;
        }
        let h = (v[v.len() - 1] / v[0]).ln() / (v.len() - 1) as f64;
        let ok = v
            .iter()
            .enumerate()
            .all(|(i, &x)| ((x / v[0]).ln() - h * i as f64).abs() < 1e-9 * (1.0 + h * i as f64));
        ok.then_some(h)
    };
    let h = geometric_ratio(r)?;
    let same = |v: &[f64]| geometric_ratio(v).is_some_and(|g| (g - h).abs() < 1e-12 * h.max(1.0));
    if !same(rho) || !same(t) {
        return None;
    }
    let offset = |v: &[f64]| -> Option<i64> {
        let o = (v[0] / r[0]).ln() / h;
        let k = o.round();
        ((o - k).abs() < 1e-6).then_some(k as i64)
    };
    Some(LatticeInfo {
        h,
        rho_offset: offset(rho)?,
        t_offset: offset(t)?,
    })
}

/// Values A(1, e^{a h}, e^{b h}) on a rectangle of integer indices.
#[derive(Debug, Clone)]
pub struct LatticeTable {
    pub h: f64,
    pub a_lo: i64,
    pub a_hi: i64,
    pub b_lo: i64,
    pub b_hi: i64,
    pub values: Vec<f64>,
    pub errors: Vec<f32>,
}

impl LatticeTable {
    pub fn build(
        ang: &Angular,
        h: f64,
        (a_lo, a_hi): (i64, i64),
        (b_lo, b_hi): (i64, i64),
        tol: f64,
    ) -> Result<Self> {
        let nb = (b_hi - b_lo + 1) as usize;
        let rows: Vec<Result<Vec<(f64, f32)>>> = (a_lo..=a_hi)
            .into_par_iter()
            .map(|a| {
                let rho = (a as f64 * h).exp();
                (b_lo..=b_hi)
                    .map(|b| {
                        let t = (b as f64 * h).exp();
                        ang.eval(1.0, rho, t, tol).map(|e| (e.value, e.error as f32))
                    })
                    .collect()
            })
            .collect();
        let mut values = Vec::with_capacity(rows.len() * nb);
        let mut errors = Vec::with_capacity(rows.len() * nb);
        for row in rows {
            for (v, e) in row? {
                values.push(v);
                errors.push(e);
            }
        }
        Ok(Self {
            h,
            a_lo,
            a_hi,
            b_lo,
            b_hi,
            values,
            errors,
        })
    }

    #[inline]
    pub fn get(&self, a: i64, b: i64) -> f64 {
        debug_assert!(a >= self.a_lo && a <= self.a_hi && b >= self.b_lo && b <= self.b_hi);
        let nb = self.b_hi - self.b_lo + 1;
        self.values[((a - self.a_lo) * nb + (b - self.b_lo)) as usize]
    }

    #[inline]
    pub fn error(&self, a: i64, b: i64) -> f64 {
        let nb = self.b_hi - self.b_lo + 1;
        self.errors[((a - self.a_lo) * nb + (b - self.b_lo)) as usize] as f64
    }

    pub fn contains(&self, a: i64, b: i64) -> bool {
        a >= self.a_lo && a <= self.a_hi && b >= self.b_lo && b <= self.b_hi
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Dense { values: Vec<f64>, errors: Vec<f32> },
    Lattice { info: LatticeInfo, table: LatticeTable },
}

/// Tabulated angular factors A(r_i, rho_j, t_k).
///
/// Node sets on a common geometric lattice are stored through the scaling
/// A(λr, λρ, λt) = λ^{-2s} A(r, ρ, t) as a two-index table; other node sets
/// are stored densely.
#[derive(Debug, Clone)]
pub struct KernelCache {
    pub r_nodes: Vec<f64>,
    pub rho_nodes: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub s_kernel: f64,
    pub n: usize,
    pub gamma: f64,
    storage: Storage,
    r_scale: Vec<f64>,
}

/// Counters describing a cache build.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CacheStats {
    pub entries: usize,
    pub compact: bool,
    pub max_error_estimate: f64,
}

fn check_nodes(name: &str, v: &[f64], allow_zero: bool) -> Result<()> {
    if v.is_empty() {
        return Err(Error::BadGrid(format!("{name} nodes are empty")));
    }
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadGrid(format!("{name} nodes must be strictly increasing")));
    }
    let ok = v.iter().all(|&x| x.is_finite() && if allow_zero { x >= 0.0 } else { x > 0.0 });
    if !ok {
        return Err(Error::BadGrid(format!("{name} nodes out of range")));
    }
    Ok(())
}

/// Tabulates A at every (r_i, rho_j, t_k). Lattice storage keeps one extra
/// ring of shifted entries for the product-integration rules.
pub fn build_kernel_cache(
    r_nodes: &[f64],
    rho_nodes: &[f64],
    t_nodes: &[f64],
    n: usize,
    gamma: f64,
    tol: f64,
) -> Result<KernelCache> {
    check_nodes("r", r_nodes, true)?;
    check_nodes("rho", rho_nodes, true)?;
    check_nodes("t", t_nodes, false)?;
    let ang = Angular::new(n, gamma);
    let s = ang.s;
    let storage = match detect_lattice(r_nodes, rho_nodes, t_nodes) {
        Some(info) => {
            let (nr, nrho, nt) = (r_nodes.len() as i64, rho_nodes.len() as i64, t_nodes.len() as i64);
            let table = LatticeTable::build(
                &ang,
                info.h,
                (info.rho_offset - nr, info.rho_offset + nrho),
                (info.t_offset - nr, info.t_offset + nt),
                tol,
            )?;
            Storage::Lattice { info, table }
        }
        None => {
            let rows: Vec<Result<Vec<(f64, f32)>>> = r_nodes
                .par_iter()
                .map(|&r| {
                    let mut row = Vec::with_capacity(rho_nodes.len() * t_nodes.len());
                    for &rho in rho_nodes {
                        for &t in t_nodes {
                            let e = ang.eval(r, rho, t, tol)?;
                            row.push((e.value, e.error as f32));
                        }
                    }
                    Ok(row)
                })
                .collect();
            let mut values = Vec::new();
            let mut errors = Vec::new();
            for row in rows {
                for (v, e) in row? {
                    values.push(v);
                    errors.push(e);
                }
            }
            Storage::Dense { values, errors }
        }
    };
    let r_scale = r_nodes.iter().map(|&r| r.powf(-2.0 * s)).collect();
    Ok(KernelCache {
        r_nodes: r_nodes.to_vec(),
        rho_nodes: rho_nodes.to_vec(),
        t_nodes: t_nodes.to_vec(),
        s_kernel: s,
        n,
        gamma,
        storage,
        r_scale,
    })
}

impl KernelCache {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.r_nodes.len(), self.rho_nodes.len(), self.t_nodes.len())
    }

    /// A(r_i, rho_j, t_k).
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        match &self.storage {
            Storage::Dense { values, .. } => {
                let (_, nrho, nt) = self.dims();
                values[(i * nrho + j) * nt + k]
            }
            Storage::Lattice { info, table } => {
                let (a, b) = lattice_index(info, i, j, k);
                self.r_scale[i] * table.get(a, b)
            }
        }
    }

    /// Error estimate of the entry at (i, j, k).
    pub fn error(&self, i: usize, j: usize, k: usize) -> f64 {
        match &self.storage {
            Storage::Dense { errors, .. } => {
                let (_, nrho, nt) = self.dims();
                errors[(i * nrho + j) * nt + k] as f64
            }
            Storage::Lattice { info, table } => {
                let (a, b) = lattice_index(info, i, j, k);
                self.r_scale[i] * table.error(a, b)
            }
        }
    }

    pub fn lattice(&self) -> Option<(&LatticeInfo, &LatticeTable)> {
        match &self.storage {
            Storage::Lattice { info, table } => Some((info, table)),
            Storage::Dense { .. } => None,
        }
    }

    pub fn stats(&self) -> CacheStats {
        let (entries, compact, max_err) = match &self.storage {
            Storage::Dense { values, errors } => (
                values.len(),
                false,
                errors
                    .iter()
                    .zip(values)
                    .map(|(&e, &v)| e as f64 / v)
                    .fold(0.0, f64::max),
            ),
            Storage::Lattice { table, .. } => (
                table.values.len(),
                true,
                table
                    .errors
                    .iter()
                    .zip(&table.values)
                    .map(|(&e, &v)| e as f64 / v)
                    .fold(0.0, f64::max),
            ),
        };
        CacheStats {
            entries,
            compact,
            max_error_estimate: max_err,
        }
    }
}

#[inline]
fn lattice_index(info: &LatticeInfo, i: usize, j: usize, k: usize) -> (i64, i64) {
    (
        j as i64 - i as i64 + info.rho_offset,
        k as i64 - i as i64 + info.t_offset,
    )
}
