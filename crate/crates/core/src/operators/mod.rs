//! The weighted operators V and W, the bilinear functional J and a
//! Monte-Carlo oracle for V.

mod oracle;
pub mod table;

pub use oracle::oracle_v_montecarlo;

use crate::admissibility::Params;
use crate::error::{Error, Result};
use crate::kernel::{build_kernel_cache, Angular, KernelCache};
use crate::profiles::{boundary_measures, halfspace_measures, BoundaryProfile, HalfSpaceProfile, RadialGrid};
use rayon::prelude::*;
use table::{correlate, HatSetup, HatTable};

/// Default relative tolerance of the kernel quadratures.
pub const KERNEL_TOL: f64 = 1e-10;

/// Decades by which `padded` continues the rho grid below r_min.
pub const RHO_PAD_DECADES: f64 = 1.0;
/// Decades by which `padded` continues the t grid below r_min.
pub const T_PAD_DECADES: f64 = 3.0;

/// Everything needed to apply V and W on fixed grids.
///
/// The boundary grid and the interior (rho, t) grids must lie on one
/// geometric lattice; the hat-function weights then reduce to a two-index
/// table shared by all nodes.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    pub params: Params,
    pub cache: KernelCache,
    boundary: RadialGrid,
    rho: RadialGrid,
    t: RadialGrid,
    table: HatTable,
    rho_offset: i64,
    t_offset: i64,
    /// r_i^{n-1-alpha-2s}, halved at the last node and zero at the first,
    /// whose contribution is carried by `inner`
    r_factor: Vec<f64>,
    /// kernel of the first node with the profile extended by its first value
    /// into the ball r < r_min, rho-major
    inner: Vec<f64>,
    /// t_k (rho_j^2 + t_k^2)^{-beta/2}
    interior_factor: Vec<f64>,
    boundary_measure: Vec<f64>,
    interior_measure: Vec<f64>,
}

impl OperatorContext {
    /// Context on one grid used for r, rho and t.
    pub fn new(params: Params, grid: &RadialGrid) -> Result<Self> {
        Self::with_grids(params, grid, grid, grid, KERNEL_TOL)
    }

    /// Context whose interior grids continue below the boundary grid.
    ///
    /// Lumping the cylinder rho < rho_min onto the first rho node perturbs W
    /// near rho_min at relative order rho_min^{gamma-1}; starting rho a decade
    /// lower moves that error away from the boundary nodes. The t grid goes
    /// further down because the slab t < t_min is lumped the same way.
    pub fn padded(params: Params, grid: &RadialGrid) -> Result<Self> {
        let rho = grid.extended_below(grid.steps_per(RHO_PAD_DECADES))?;
        let t = grid.extended_below(grid.steps_per(T_PAD_DECADES))?;
        Self::with_grids(params, grid, &rho, &t, KERNEL_TOL)
    }

    pub fn with_grids(
        params: Params,
        boundary: &RadialGrid,
        rho: &RadialGrid,
        t: &RadialGrid,
        tol: f64,
    ) -> Result<Self> {
        let n = params.n;
        let cache = build_kernel_cache(boundary.nodes(), rho.nodes(), t.nodes(), n, params.gamma, tol)?;
        let (info, lat) = cache.lattice().ok_or_else(|| {
            Error::GridMismatch("boundary and interior grids must share a geometric lattice".into())
        })?;
        let (nr, nrho, nt) = (boundary.len() as i64, rho.len() as i64, t.len() as i64);
        let (orho, ot) = (info.rho_offset, info.t_offset);
        let setup = HatSetup {
            ang: Angular::new(n, params.gamma),
            h: info.h,
            alpha: params.alpha,
            tol,
        };
        let table = HatTable::build(
            &setup,
            lat,
            (orho - (nr - 1), orho + nrho - 1),
            (ot - (nr - 1), ot + nt - 1),
            (ot - orho - (nrho - 1), ot - orho + nt - 1),
        )?;
        let s = params.s_kernel;
        let e = n as f64 - 1.0 - params.alpha - 2.0 * s;
        let last = boundary.len() - 1;
        let r_factor = boundary
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let c = if i == 0 {
                    0.0
                } else if i == last {
                    0.5
                } else {
                    1.0
                };
                c * r.powf(e)
            })
            .collect();
        let inner = inner_kernel(&setup, &table, boundary.r_min().powf(e), e, (orho, ot), (nrho, nt))?;
        let interior_factor = rho
            .nodes()
            .iter()
            .flat_map(|&r| t.nodes().iter().map(move |&tk| (r, tk)))
            .map(|(r, tk)| {
                let w = if params.beta == 0.0 {
                    1.0
                } else {
                    (r * r + tk * tk).powf(-params.beta / 2.0)
                };
                tk * w
            })
            .collect();
        Ok(Self {
            params,
            boundary_measure: boundary_measures(boundary, n),
            interior_measure: halfspace_measures(rho, t, n),
            cache,
            boundary: boundary.clone(),
            rho: rho.clone(),
            t: t.clone(),
            table,
            rho_offset: orho,
            t_offset: ot,
            r_factor,
            inner,
            interior_factor,
        })
    }

    pub fn boundary_grid(&self) -> &RadialGrid {
        &self.boundary
    }

    pub fn rho_grid(&self) -> &RadialGrid {
        &self.rho
    }

    pub fn t_grid(&self) -> &RadialGrid {
        &self.t
    }

    /// Number of table entries integrated directly rather than by the
    /// three-point lattice rule.
    pub fn near_entries(&self) -> usize {
        self.table.near_entries
    }

    pub fn boundary_measure(&self) -> &[f64] {
        &self.boundary_measure
    }

    pub fn interior_measure(&self) -> &[f64] {
        &self.interior_measure
    }

    fn check_boundary(&self, f: &BoundaryProfile) -> Result<()> {
        if !f.grid().same_as(&self.boundary) || f.n() != self.params.n {
            return Err(Error::GridMismatch("boundary profile is not on the operator grid".into()));
        }
        Ok(())
    }

    fn check_interior(&self, g: &HalfSpaceProfile) -> Result<()> {
        if !g.rho_grid().same_as(&self.rho) || !g.t_grid().same_as(&self.t) || g.n() != self.params.n {
            return Err(Error::GridMismatch("half-space profile is not on the operator grids".into()));
        }
        Ok(())
    }

    /// Raw V sums without the grid checks.
    ///
    /// For a fixed diagonal k - j every output is a window of the same table
    /// row, so rows are visited once and stay in cache.
    pub(crate) fn v_values(&self, f: &[f64]) -> Vec<f64> {
        let (nrho, nt) = (self.rho.len() as i64, self.t.len() as i64);
        let x_rev: Vec<f64> = f
            .iter()
            .zip(&self.r_factor)
            .map(|(a, b)| a * b)
            .rev()
            .collect();
        let doff = self.t_offset - self.rho_offset;
        let per_diag: Vec<(i64, i64, Vec<f64>)> = (-(nrho - 1)..nt)
            .into_par_iter()
            .map(|dd| {
                let j0 = 0.max(-dd);
                let j1 = (nrho - 1).min(nt - 1 - dd);
                let row = self.table.row(dd + doff);
                let mut sums = vec![0.0; (j1 - j0 + 1) as usize];
                correlate(&row[j0 as usize..], &x_rev, &mut sums);
                (dd, j0, sums)
            })
            .collect();
        let mut out = vec![0.0; (nrho * nt) as usize];
        for (dd, j0, sums) in per_diag {
            for (off, v) in sums.into_iter().enumerate() {
                let j = j0 + off as i64;
                let idx = (j * nt + j + dd) as usize;
                out[idx] = self.interior_factor[idx] * (v + f[0] * self.inner[idx]);
            }
        }
        out
    }

    /// Raw W sums without the grid checks.
    pub(crate) fn w_values(&self, g: &[f64]) -> Vec<f64> {
        const CHUNK: i64 = 32;
        let nr = self.boundary.len() as i64;
        let (nrho, nt) = (self.rho.len() as i64, self.t.len() as i64);
        let doff = self.t_offset - self.rho_offset;
        let lo = -(nrho - 1);
        let chunks: Vec<i64> = (lo..nt).step_by(CHUNK as usize).collect();
        let partial: Vec<Vec<f64>> = chunks
            .into_par_iter()
            .map(|c0| {
                let mut z = vec![0.0; nr as usize];
                let mut tmp = vec![0.0; nr as usize];
                let mut y = Vec::new();
                for dd in c0..(c0 + CHUNK).min(nt) {
                    let j0 = 0.max(-dd);
                    let j1 = (nrho - 1).min(nt - 1 - dd);
                    y.clear();
                    y.extend((j0..=j1).map(|j| {
                        let idx = (j * nt + j + dd) as usize;
                        self.interior_measure[idx] * self.interior_factor[idx] * g[idx]
                    }));
                    // z_i += Σ_m row[j0 + nr - 1 - i + m] y_m
                    let row = self.table.row(dd + doff);
                    correlate(&row[j0 as usize..], &y, &mut tmp);
                    for (zi, t) in z.iter_mut().zip(tmp.iter().rev()) {
                        *zi += t;
                    }
                }
                z
            })
            .collect();
        let mut z = vec![0.0; nr as usize];
        for part in partial {
            for (a, b) in z.iter_mut().zip(part) {
                *a += b;
            }
        }
        let mut out: Vec<f64> = z
            .iter()
            .zip(&self.r_factor)
            .zip(&self.boundary_measure)
            .map(|((zi, rf), m)| rf * zi / m)
            .collect();
        let first: f64 = g
            .iter()
            .zip(&self.interior_measure)
            .zip(&self.interior_factor)
            .zip(&self.inner)
            .map(|(((gv, m), fac), k)| gv * m * fac * k)
            .sum();
        out[0] = first / self.boundary_measure[0];
        out
    }

    /// V(f)(rho_j, t_k).
    pub fn apply_v(&self, f: &BoundaryProfile) -> Result<HalfSpaceProfile> {
        self.check_boundary(f)?;
        let v = self.v_values(f.values());
        HalfSpaceProfile::new(self.rho.clone(), self.t.clone(), self.params.n, clamp(v))
    }

    /// W(g)(r_i).
    pub fn apply_w(&self, g: &HalfSpaceProfile) -> Result<BoundaryProfile> {
        self.check_interior(g)?;
        let w = self.w_values(g.values());
        BoundaryProfile::new(self.boundary.clone(), self.params.n, clamp(w))
    }

    /// ⟨g, V(f)⟩ over the half-space.
    pub fn functional_j(&self, f: &BoundaryProfile, g: &HalfSpaceProfile) -> Result<f64> {
        self.check_interior(g)?;
        let v = self.apply_v(f)?;
        Ok(self.interior_inner(g.values(), v.values()))
    }

    pub fn interior_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.interior_measure)
            .map(|((x, y), m)| x * y * m)
            .sum()
    }

    pub fn boundary_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.boundary_measure)
            .map(|((x, y), m)| x * y * m)
            .sum()
    }
}

/// Kernel of the first boundary node including the inner ball, for every
/// interior node. Along a diagonal of the interior grid consecutive values
/// differ by one hat: D(a, b) = T(a, b) + e^{-h e} D(a+1, b+1), so each
/// diagonal is seeded once beyond its outer end and filled inward.
fn inner_kernel(
    setup: &HatSetup,
    table: &HatTable,
    scale: f64,
    e: f64,
    (orho, ot): (i64, i64),
    (nrho, nt): (i64, i64),
) -> Result<Vec<f64>> {
    let q = (-setup.h * e).exp();
    let diagonals: Vec<Result<(i64, i64, Vec<f64>)>> = (-(nrho - 1)..nt)
        .into_par_iter()
        .map(|dd| {
            let j0 = 0.max(-dd);
            let j1 = (nrho - 1).min(nt - 1 - dd);
            let mut vals = vec![0.0; (j1 - j0 + 1) as usize];
            let mut d = setup.inner_exact(j1 + 1 + orho, j1 + 1 + dd + ot)?;
            for j in (j0..=j1).rev() {
                d = table.get(j + orho, j + dd + ot) + q * d;
                vals[(j - j0) as usize] = d;
            }
            Ok((dd, j0, vals))
        })
        .collect();
    let mut out = vec![0.0; (nrho * nt) as usize];
    for diag in diagonals {
        let (dd, j0, vals) = diag?;
        for (off, v) in vals.into_iter().enumerate() {
            let j = j0 + off as i64;
            out[(j * nt + j + dd) as usize] = scale * v;
        }
    }
    Ok(out)
}

fn clamp(mut v: Vec<f64>) -> Vec<f64> {
    for x in &mut v {
        if !(*x > 0.0) {
            *x = 0.0;
        }
    }
    v
}

pub fn apply_v(f: &BoundaryProfile, ctx: &OperatorContext) -> Result<HalfSpaceProfile> {
    ctx.apply_v(f)
}

pub fn apply_w(g: &HalfSpaceProfile, ctx: &OperatorContext) -> Result<BoundaryProfile> {
    ctx.apply_w(g)
}

pub fn functional_j(f: &BoundaryProfile, g: &HalfSpaceProfile, ctx: &OperatorContext) -> Result<f64> {
    ctx.functional_j(f, g)
}
