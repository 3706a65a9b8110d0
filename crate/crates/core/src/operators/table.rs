//! Product-integration weights of the operators on a geometric lattice.
//!
//! With r_i = r_0 e^{ih}, the boundary profile is expanded in hat functions
//! of log r, and the entry
//!
//!   K_i(rho, t) = ∫ phi_i(r) r^{n-2-alpha} A(r, rho, t) dr
//!               = r_i^{n-1-alpha-2s} T(log(rho/r_i)/h, log(t/r_i)/h)
//!
//! only depends on index differences. `T(a, b)` is computed once per lattice.

use crate::error::Result;
use crate::kernel::{Angular, LatticeTable};
use crate::quad::{self, gauss10, AdaptiveOptions};
use crate::special::sphere_area;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Entries with |a| <= NEAR_A and t/rho < NEAR_T * h are integrated directly.
pub const NEAR_A: i64 = 8;
pub const NEAR_T: f64 = 32.0;

/// Beyond this distance (in units of the innermost radius) the inner ball is
/// treated as a point source.
const INNER_FAR: f64 = 1e4;

/// Parameters of the hat-moment integrals.
#[derive(Debug, Clone, Copy)]
pub struct HatSetup {
    pub ang: Angular,
    pub h: f64,
    pub alpha: f64,
    pub tol: f64,
}

impl HatSetup {
    fn c(&self) -> f64 {
        self.ang.n as f64 - 1.0 - self.alpha
    }

    /// T(a, b) = ∫_{-h}^{h} (1 - |σ|/h) e^{σ(n-1-alpha)} A(e^σ, e^{ah}, e^{bh}) dσ.
    pub fn exact(&self, a: i64, b: i64) -> Result<f64> {
        let rho = (a as f64 * self.h).exp();
        let t = (b as f64 * self.h).exp();
        if a.abs() <= 1 {
            self.local_polar(a, t)
        } else {
            self.sigma_gauss(rho, t)
        }
    }

    /// Moment of the profile that is 1 on the unit ball and falls as the hat
    /// of node 0 on [1, e^h]:
    ///
    ///   D(a, b) = ∫_0^{e^h} Ψ(u) u^{n-2-alpha} A(u, e^{ah}, e^{bh}) du.
    ///
    /// Far from the ball only the leading term A(0, .) ∫ Ψ u^{n-2-alpha}
    /// is kept.
    pub fn inner_exact(&self, a: i64, b: i64) -> Result<f64> {
        let h = self.h;
        let c = self.c();
        let rho = (a as f64 * h).exp();
        let t = (b as f64 * h).exp();
        if rho.hypot(t) > INNER_FAR {
            let m0 = 1.0 / c + ((c * h).exp() - 1.0 - c * h) / (c * c * h);
            return Ok(m0 * self.ang.eval(0.0, rho, t, self.tol)?.value);
        }
        let top = h.exp();
        let mut breaks = vec![0.0, 1.0, top];
        if c < 1.0 {
            breaks.extend((0..40).map(|m| 1e-12 * 2f64.powi(m)).filter(|&u| u < 1.0));
        }
        if rho < top {
            breaks.push(rho);
            for m in 0..60 {
                let w = t * 2f64.powi(m);
                breaks.push(rho - w);
                breaks.push(rho + w);
            }
        }
        breaks.retain(|&u| (0.0..=top).contains(&u));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut err = None;
        let est = quad::integrate(
            |u: f64| {
                if u == 0.0 && c < 1.0 {
                    return 0.0;
                }
                let psi = if u <= 1.0 { 1.0 } else { 1.0 - u.ln() / h };
                match self.ang.eval(u, rho, t, self.tol) {
                    Ok(e) => psi * u.powf(c - 1.0) * e.value,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                }
            },
            &breaks,
            AdaptiveOptions {
                tol_rel: self.tol,
                tol_abs: 0.0,
                max_panels: 20000,
            },
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(est.value),
        }
    }

    /// Three-point hat rule from the lattice values at (a, b) and its two
    /// diagonal neighbours.
    pub fn three_point(&self, lat: &LatticeTable, a: i64, b: i64) -> f64 {
        let h = self.h;
        let s2 = 2.0 * self.ang.s;
        let c = self.c();
        let f0 = lat.get(a, b);
        let fm = (h * (s2 - c)).exp() * lat.get(a + 1, b + 1);
        let fp = (h * (c - s2)).exp() * lat.get(a - 1, b - 1);
        h * (10.0 * f0 + fm + fp) / 12.0
    }

    pub fn is_near(&self, a: i64, b: i64) -> bool {
        a.abs() <= NEAR_A && ((b - a) as f64) * self.h < (NEAR_T * self.h).ln()
    }

    fn sigma_gauss(&self, rho: f64, t: f64) -> Result<f64> {
        let h = self.h;
        let c = self.c();
        let g = gauss10();
        let mut err = None;
        let mut f = |sigma: f64| -> f64 {
            match self.ang.eval(sigma.exp(), rho, t, self.tol) {
                Ok(e) => (1.0 - sigma.abs() / h) * (sigma * c).exp() * e.value,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        };
        let v = g.integrate(&mut f, -h, 0.0) + g.integrate(&mut f, 0.0, h);
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// Polar coordinates centred at the evaluation point x' (|x'| = rho):
    /// T = ∫ tau^{m-1} (tau^2 + t^2)^{-s} Phi(tau) dtau with m = n-1 and Phi the
    /// spherical mean of the hat times |xi|^{-alpha} around x'.
    fn local_polar(&self, a: i64, t: f64) -> Result<f64> {
        let h = self.h;
        let log_rho = a as f64 * h;
        let rho = log_rho.exp();
        let m = self.ang.n - 1;
        let s = self.ang.s;
        let alpha = self.alpha;
        let kinks = [(-h).exp(), 1.0, h.exp()];
        let (lo_r, hi_r) = (kinks[0], kinks[2]);
        let psi_weight = if m == 2 { 2.0 } else { sphere_area(m - 1) };
        let g = gauss10();
        // hat value at r = rho e^delta; log_rho is a multiple of h, so the
        // differences h -+ log_rho are exact and small values keep their
        // relative accuracy at the hat's ends
        let radial = |delta: f64| -> f64 {
            let lr = log_rho + delta;
            let v = if lr >= 0.0 {
                ((h - log_rho) - delta) / h
            } else {
                ((h + log_rho) + delta) / h
            };
            if v <= 0.0 {
                0.0
            } else if alpha == 0.0 {
                v
            } else {
                v * (-alpha * lr).exp()
            }
        };
        let delta_at = |tau: f64, cos_psi: f64| -> f64 {
            0.5 * ((tau * tau + 2.0 * rho * tau * cos_psi) / (rho * rho)).max(-1.0).ln_1p()
        };
        let phi = |tau: f64| -> f64 {
            if tau == 0.0 {
                return sphere_area(m) * radial(0.0);
            }
            let mut cuts = vec![0.0, PI];
            for &k in &kinks {
                let c = (k * k - rho * rho - tau * tau) / (2.0 * rho * tau);
                if c > -1.0 && c < 1.0 {
                    cuts.push(c.acos());
                }
            }
            cuts.sort_by(f64::total_cmp);
            let mut total = 0.0;
            for w in cuts.windows(2) {
                let (p0, p1) = (w[0], w[1]);
                if p1 - p0 <= 0.0 {
                    continue;
                }
                let pm = 0.5 * (p0 + p1);
                if radial(delta_at(tau, pm.cos())) <= 0.0 {
                    continue;
                }
                let mut f = |psi: f64| -> f64 {
                    let v = radial(delta_at(tau, psi.cos()));
                    if m == 2 {
                        v
                    } else {
                        v * psi.sin().powi(m as i32 - 2)
                    }
                };
                total += g.integrate(&mut f, p0, p1);
            }
            psi_weight * total
        };
        let tau_lo = (lo_r - rho).max(rho - hi_r).max(0.0);
        let tau_hi = rho + hi_r;
        let mut breaks = vec![tau_lo, tau_hi];
        for &k in &kinks {
            breaks.push((rho - k).abs());
            breaks.push(rho + k);
        }
        let mut x = t;
        while x < tau_hi {
            breaks.push(x);
            x *= 2.0;
        }
        breaks.retain(|&b| b >= tau_lo && b <= tau_hi);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
        let est = quad::integrate(
            |tau: f64| {
                let k = (tau * tau + t * t).powf(-s);
                let p = if m == 2 { tau } else { tau.powi(m as i32 - 1) };
                p * k * phi(tau)
            },
            &breaks,
            AdaptiveOptions {
                tol_rel: self.tol,
                tol_abs: 0.0,
                max_panels: 20000,
            },
        )?;
        Ok(est.value)
    }
}

/// T(a, b) stored along diagonals d = b - a so that the operator sums are
/// contiguous dot products.
#[derive(Debug, Clone)]
pub struct HatTable {
    pub a_lo: i64,
    pub a_len: usize,
    pub d_lo: i64,
    pub d_len: usize,
    pub rows: Vec<f64>,
    pub near_entries: usize,
}

impl HatTable {
    /// Builds every entry T(a, a + d) with a in [a_lo, a_hi], d in
    /// [d_lo, d_hi] and a + d in [b_lo, b_hi].
    pub fn build(
        setup: &HatSetup,
        lat: &LatticeTable,
        (a_lo, a_hi): (i64, i64),
        (b_lo, b_hi): (i64, i64),
        (d_lo, d_hi): (i64, i64),
    ) -> Result<Self> {
        let a_len = (a_hi - a_lo + 1) as usize;
        let d_len = (d_hi - d_lo + 1) as usize;
        let rows: Vec<Result<(Vec<f64>, usize)>> = (d_lo..=d_hi)
            .into_par_iter()
            .map(|d| {
                let mut row = vec![0.0; a_len];
                let mut near = 0;
                let from = a_lo.max(b_lo - d);
                let to = a_hi.min(b_hi - d);
                for a in from..=to {
                    let b = a + d;
                    row[(a - a_lo) as usize] = if setup.is_near(a, b) {
                        near += 1;
                        setup.exact(a, b)?
                    } else {
                        setup.three_point(lat, a, b)
                    };
                }
                Ok((row, near))
            })
            .collect();
        let mut flat = Vec::with_capacity(a_len * d_len);
        let mut near_entries = 0;
        for r in rows {
            let (row, near) = r?;
            flat.extend_from_slice(&row);
            near_entries += near;
        }
        Ok(Self {
            a_lo,
            a_len,
            d_lo,
            d_len,
            rows: flat,
            near_entries,
        })
    }

    #[inline]
    pub fn row(&self, d: i64) -> &[f64] {
        let k = (d - self.d_lo) as usize;
        &self.rows[k * self.a_len..(k + 1) * self.a_len]
    }

    pub fn get(&self, a: i64, b: i64) -> f64 {
        self.row(b - a)[(a - self.a_lo) as usize]
    }
}

/// Dot product with independent partial sums; uses AVX2/FMA when the CPU
/// has them.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
            // SAFETY: the required CPU features were detected at runtime.
            return unsafe { dot_avx2(a, b) };
        }
    }
    dot_portable(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn dot_avx2(a: &[f64], b: &[f64]) -> f64 {
    dot_portable(a, b)
}

#[inline(always)]
fn dot_portable(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 16];
    let ca = a.chunks_exact(16);
    let cb = b.chunks_exact(16);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..16 {
            acc[l] = x[l].mul_add(y[l], acc[l]);
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    let mut s = [0.0f64; 4];
    for l in 0..4 {
        s[l] = (acc[l] + acc[l + 4]) + (acc[l + 8] + acc[l + 12]);
    }
    (s[0] + s[2]) + (s[1] + s[3]) + tail
}

const BLOCK: usize = 16;

/// Sliding dot products out[j] = Σ_m row[j + m] x[m].
///
/// Sixteen consecutive outputs share every load of x, which keeps the
/// multiply-adds rather than the memory traffic as the bottleneck.
pub fn correlate(row: &[f64], x: &[f64], out: &mut [f64]) {
    assert!(row.len() + 1 >= out.len() + x.len(), "row too short for correlation");
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
            // SAFETY: the required CPU features were detected at runtime.
            unsafe { correlate_avx2(row, x, out) };
            return;
        }
    }
    correlate_portable(row, x, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn correlate_avx2(row: &[f64], x: &[f64], out: &mut [f64]) {
    correlate_portable(row, x, out)
}

#[inline(always)]
fn correlate_portable(row: &[f64], x: &[f64], out: &mut [f64]) {
    let l = x.len();
    let mut blocks = out.chunks_exact_mut(BLOCK);
    let mut j = 0;
    for block in &mut blocks {
        let mut acc = [0.0f64; BLOCK];
        let window = &row[j..j + l + BLOCK - 1];
        for (m, &xm) in x.iter().enumerate() {
            let r: &[f64; BLOCK] = window[m..m + BLOCK].try_into().expect("block width");
            for q in 0..BLOCK {
                acc[q] = r[q].mul_add(xm, acc[q]);
            }
        }
        block.copy_from_slice(&acc);
        j += BLOCK;
    }
    for (k, o) in blocks.into_remainder().iter_mut().enumerate() {
        let jj = j + k;
        *o = dot_portable(&row[jj..jj + l], x);
    }
}
