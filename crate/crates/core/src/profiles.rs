//! Log-spaced grids, radial and axisymmetric profiles, norms, rearrangement,
//! Lorentz norms and dilations.

use crate::error::{Error, Result};
use crate::special::{ball_volume, sphere_area};
use std::fmt::Write as _;

/// Geometric nodes r_i = r_min e^{i h} with trapezoid weights in log r.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    h: f64,
}

/// Builds a geometric grid with `count` nodes from `r_min` to `r_max`.
pub fn make_log_grid(r_min: f64, r_max: f64, count: usize) -> Result<RadialGrid> {
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::BadGrid(format!(
            "need 0 < r_min < r_max (got {r_min}, {r_max})"
        )));
    }
    if count < 2 {
        return Err(Error::BadGrid(format!("need at least 2 nodes (got {count})")));
    }
    let h = (r_max / r_min).ln() / (count - 1) as f64;
    let mut nodes: Vec<f64> = (0..count).map(|i| r_min * (h * i as f64).exp()).collect();
    nodes[count - 1] = r_max;
    let weights = nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| if i == 0 || i == count - 1 { 0.5 * h * r } else { h * r })
        .collect();
    Ok(RadialGrid { nodes, weights, h })
}

impl RadialGrid {
    /// Grid with `per_decade` nodes per factor of ten.
    pub fn per_decade(r_min: f64, r_max: f64, per_decade: usize) -> Result<Self> {
        if per_decade == 0 {
            return Err(Error::BadGrid("nodes per decade must be positive".into()));
        }
        let decades = (r_max / r_min).log10();
        let count = (decades * per_decade as f64).round() as usize + 1;
        make_log_grid(r_min, r_max, count)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Log step h = ln(r_{i+1}/r_i).
    pub fn log_step(&self) -> f64 {
        self.h
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// ∫ f(r) dr over [r_min, r_max].
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * f(r)).sum()
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        self.len() == other.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()))
    }

    /// The same lattice continued `steps` nodes below r_min.
    pub fn extended_below(&self, steps: usize) -> Result<Self> {
        let lo = self.r_min() * (-(steps as f64) * self.h).exp();
        make_log_grid(lo, self.r_max(), self.len() + steps)
    }

    /// Number of lattice steps spanning `decades` factors of ten.
    pub fn steps_per(&self, decades: f64) -> usize {
        (decades * std::f64::consts::LN_10 / self.h).round() as usize
    }

    /// Index of the node closest to `r` in log distance.
    pub fn nearest(&self, r: f64) -> usize {
        let u = ((r / self.nodes[0]).ln() / self.h).round();
        u.clamp(0.0, (self.len() - 1) as f64) as usize
    }
}

/// Radial function on the boundary, sampled on a log grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProfile {
    grid: RadialGrid,
    n: usize,
    values: Vec<f64>,
    decreasing: bool,
}

fn is_nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn check_values(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        Some(i) => Err(Error::Domain(format!(
            "profile value {} at index {i} is not finite and nonnegative",
            v[i]
        ))),
        None => Ok(()),
    }
}

impl BoundaryProfile {
    pub fn new(grid: RadialGrid, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        check_values(&values)?;
        let decreasing = is_nonincreasing(&values);
        Ok(Self {
            grid,
            n,
            values,
            decreasing,
        })
    }

    pub fn from_fn(grid: &RadialGrid, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid.clone(), n, values)
    }

    pub fn zeros(grid: &RadialGrid, n: usize) -> Self {
        Self {
            grid: grid.clone(),
            n,
            values: vec![0.0; grid.len()],
            decreasing: true,
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// True when the values are radially nonincreasing.
    pub fn is_decreasing(&self) -> bool {
        self.decreasing
    }

    /// Same grid, values mapped pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.n, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|v| v * c).collect();
        Self {
            decreasing: is_nonincreasing(&values),
            grid: self.grid.clone(),
            n: self.n,
            values,
        }
    }

    /// Cell measures |S^{n-2}| w_i r_i^{n-2}, see `boundary_measures`.
    pub fn measures(&self) -> Vec<f64> {
        boundary_measures(&self.grid, self.n)
    }
}

/// Boundary cell measures. The first cell also carries the ball r < r_min,
/// on which the profile is extended by its first value.
pub fn boundary_measures(grid: &RadialGrid, n: usize) -> Vec<f64> {
    let area = sphere_area(n - 1);
    let mut w = radial_weights(grid, n);
    // In log r a hat at an inner node has moment h kappa r_i^{n-1}
    // against r^{n-2} dr while its cell has h r_i^{n-1}. The first basis
    // function (the ball plus a half hat) gets the same moment-to-cell ratio,
    // so that the operator adjoint sees no artificial kink at r_min.
    let c = n as f64 - 1.0;
    let h = grid.log_step();
    let ch = c * h;
    let kappa = if ch < 1e-4 {
        1.0 + ch * ch / 12.0
    } else {
        2.0 * (ch.cosh() - 1.0) / (ch * ch)
    };
    let first = 1.0 / c + (ch.exp_m1() - ch) / (c * ch);
    w[0] = grid.r_min().powi(n as i32 - 1) * first / kappa;
    w.into_iter().map(|w| area * w).collect()
}

/// w_i r_i^{n-2} plus r_0^{n-1}/(n-1) on the first node.
fn radial_weights(grid: &RadialGrid, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .map(|(&r, &w)| w * r.powi(n as i32 - 2))
        .collect();
    w[0] += grid.r_min().powi(n as i32 - 1) / (n as f64 - 1.0);
    w
}

/// Axisymmetric function on the half-space sampled on a (rho, t) tensor grid,
/// stored rho-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceProfile {
    rho_grid: RadialGrid,
    t_grid: RadialGrid,
    n: usize,
    values: Vec<f64>,
}

impl HalfSpaceProfile {
    pub fn new(rho_grid: RadialGrid, t_grid: RadialGrid, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rho_grid.len() * t_grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                rho_grid.len(),
                t_grid.len()
            )));
        }
        check_values(&values)?;
        Ok(Self {
            rho_grid,
            t_grid,
            n,
            values,
        })
    }

    pub fn from_fn(
        rho_grid: &RadialGrid,
        t_grid: &RadialGrid,
        n: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let values = rho_grid
            .nodes()
            .iter()
            .flat_map(|&rho| t_grid.nodes().iter().map(move |&t| (rho, t)))
            .map(|(rho, t)| f(rho, t))
            .collect();
        Self::new(rho_grid.clone(), t_grid.clone(), n, values)
    }

    pub fn rho_grid(&self) -> &RadialGrid {
        &self.rho_grid
    }

    pub fn t_grid(&self) -> &RadialGrid {
        &self.t_grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.t_grid.len() + k]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.rho_grid.clone(),
            self.t_grid.clone(),
            self.n,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rho_grid: self.rho_grid.clone(),
            t_grid: self.t_grid.clone(),
            n: self.n,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Cell measures |S^{n-2}| w_j w_k rho_j^{n-2}, rho-major; see
    /// `halfspace_measures`.
    pub fn measures(&self) -> Vec<f64> {
        halfspace_measures(&self.rho_grid, &self.t_grid, self.n)
    }
}

/// Interior cell measures. As on the boundary, the first rho cell carries the
/// cylinder rho < rho_min and the first t cell the slab 0 < t < t_min.
pub fn halfspace_measures(rho_grid: &RadialGrid, t_grid: &RadialGrid, n: usize) -> Vec<f64> {
    let area = sphere_area(n - 1);
    let mut wt = t_grid.weights().to_vec();
    wt[0] += t_grid.r_min();
    let mut out = Vec::with_capacity(rho_grid.len() * t_grid.len());
    for wr in radial_weights(rho_grid, n) {
        out.extend(wt.iter().map(|&w| area * wr * w));
    }
    out
}

fn lp_norm(values: &[f64], measures: &[f64], p: f64) -> f64 {
    let sum: f64 = values
        .iter()
        .zip(measures)
        .map(|(&v, &m)| if v == 0.0 { 0.0 } else { m * v.powf(p) })
        .sum();
    sum.powf(1.0 / p)
}

/// (|S^{n-2}| Σ w_i r_i^{n-2} f_i^p)^{1/p}.
pub fn boundary_norm(f: &BoundaryProfile, p: f64) -> f64 {
    lp_norm(&f.values, &f.measures(), p)
}

/// (|S^{n-2}| Σ w_j w_k rho_j^{n-2} g_jk^{q'})^{1/q'}.
pub fn halfspace_norm(g: &HalfSpaceProfile, qprime: f64) -> f64 {
    lp_norm(&g.values, &g.measures(), qprime)
}

/// Fraction of ∫ f^p carried by the outermost decade of the grid.
pub fn boundary_truncation(f: &BoundaryProfile, p: f64) -> f64 {
    let cut = f.grid.r_max() / 10.0;
    let m = f.measures();
    let (mut outer, mut total) = (0.0, 0.0);
    for ((&r, &v), &w) in f.grid.nodes().iter().zip(&f.values).zip(&m) {
        let c = if v == 0.0 { 0.0 } else { w * v.powf(p) };
        total += c;
        if r >= cut {
            outer += c;
        }
    }
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}

/// Fraction of ∫ g^{q} carried where max(rho, t) lies in the outermost decade.
pub fn halfspace_truncation(g: &HalfSpaceProfile, q: f64) -> f64 {
    let cut_rho = g.rho_grid.r_max() / 10.0;
    let cut_t = g.t_grid.r_max() / 10.0;
    let m = g.measures();
    let nt = g.t_grid.len();
    let (mut outer, mut total) = (0.0, 0.0);
    for (idx, (&v, &w)) in g.values.iter().zip(&m).enumerate() {
        let c = if v == 0.0 { 0.0 } else { w * v.powf(q) };
        total += c;
        let (j, k) = (idx / nt, idx % nt);
        if g.rho_grid.nodes()[j] >= cut_rho || g.t_grid.nodes()[k] >= cut_t {
            outer += c;
        }
    }
    if total > 0.0 {
        outer / total
    } else {
        0.0
    }
}

/// Radius at which the measure f^p r^{n-2} dr reaches half its total,
/// interpolated in log r.
pub fn half_mass_radius(f: &BoundaryProfile, p: f64) -> Option<f64> {
    let m = f.measures();
    let contrib: Vec<f64> = f
        .values
        .iter()
        .zip(&m)
        .map(|(&v, &w)| if v == 0.0 { 0.0 } else { w * v.powf(p) })
        .collect();
    let total: f64 = contrib.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let half = 0.5 * total;
    let nodes = f.grid.nodes();
    let mut acc = 0.0;
    for (i, &c) in contrib.iter().enumerate() {
        if acc + c >= half {
            if i == 0 || c == 0.0 {
                return Some(nodes[i]);
            }
            let frac = (half - acc) / c;
            let (a, b) = (nodes[i - 1].ln(), nodes[i].ln());
            return Some((a + frac * (b - a)).exp());
        }
        acc += c;
    }
    Some(f.grid.r_max())
}

/// Values sorted descending with their cell measures.
fn sorted_levels(f: &BoundaryProfile) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = f.values.iter().copied().zip(f.measures()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

/// Radial decreasing rearrangement on the same grid.
///
/// The sorted step function (value, cell measure) is laid out from the
/// origin and averaged over the grid's own cells, which preserves ∫ f exactly
/// and each level set measure up to one cell.
pub fn decreasing_rearrangement(f: &BoundaryProfile) -> BoundaryProfile {
    if f.decreasing {
        return f.clone();
    }
    let levels = sorted_levels(f);
    let cells = f.measures();
    let mut out = Vec::with_capacity(cells.len());
    let mut it = levels.iter().copied();
    let mut current = it.next();
    let mut left = current.map_or(0.0, |c| c.1);
    for &cell in &cells {
        let mut need = cell;
        let mut mass = 0.0;
        while need > 0.0 {
            let Some((v, _)) = current else { break };
            let take = need.min(left);
            mass += v * take;
            need -= take;
            left -= take;
            if left <= 0.0 {
                current = it.next();
                left = current.map_or(0.0, |c| c.1);
            }
        }
        out.push(if cell > 0.0 { mass / cell } else { 0.0 });
    }
    // averaging a sorted sequence keeps it sorted; guard against rounding
    for i in 1..out.len() {
        if out[i] > out[i - 1] {
            out[i] = out[i - 1];
        }
    }
    BoundaryProfile {
        grid: f.grid.clone(),
        n: f.n,
        values: out,
        decreasing: true,
    }
}

/// Lorentz indices (p, s); `s = f64::INFINITY` selects the weak norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzIndices {
    pub p: f64,
    pub s: f64,
}

/// (∫_0^∞ (t^{1/p} f*(t))^s dt/t)^{1/s}, or sup_t t^{1/p} f*(t) for s = ∞,
/// evaluated exactly for the grid step function.
pub fn lorentz_norm(f: &BoundaryProfile, idx: LorentzIndices) -> f64 {
    let LorentzIndices { p, s } = idx;
    let mut t_prev = 0.0f64;
    if s.is_infinite() {
        let mut best = 0.0f64;
        for (v, m) in sorted_levels(f) {
            let t = t_prev + m;
            best = best.max(v * t.powf(1.0 / p));
            t_prev = t;
        }
        return best;
    }
    let e = s / p;
    let mut sum = 0.0;
    for (v, m) in sorted_levels(f) {
        let t = t_prev + m;
        if v > 0.0 {
            sum += v.powf(s) * (t.powf(e) - t_prev.powf(e)) / e;
        }
        t_prev = t;
    }
    sum.powf(1.0 / s)
}

const STENCIL: usize = 6;

/// λ^{-(n-1)/p} f(r/λ) resampled on the same grid. Below the grid f keeps
/// its first value, as inside the operators' inner ball; above it f is zero.
///
/// Integer multiples of the log step are exact index shifts; otherwise a
/// six-point Lagrange interpolant in (log r, log f) is used, falling back to
/// linear interpolation in f next to zeros.
pub fn dilate(f: &BoundaryProfile, lambda: f64, p: f64) -> Result<BoundaryProfile> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("dilation factor {lambda} must be positive")));
    }
    let grid = &f.grid;
    let h = grid.log_step();
    let nn = grid.len();
    let amp = lambda.powf(-(f.n as f64 - 1.0) / p);
    let shift = lambda.ln() / h;
    let ln_f: Vec<f64> = f.values.iter().map(|v| v.ln()).collect();
    let values = (0..nn)
        .map(|i| {
            let u = i as f64 - shift;
            let v = if (u - u.round()).abs() < 1e-9 {
                let k = u.round();
                if k < 0.0 {
                    f.values[0]
                } else if k > (nn - 1) as f64 {
                    0.0
                } else {
                    f.values[k as usize]
                }
            } else {
                interpolate(&f.values, &ln_f, u)
            };
            amp * v
        })
        .collect();
    BoundaryProfile::new(grid.clone(), f.n, values)
}

/// f sampled at the nodes of another grid with the dilation interpolant and
/// the same end extensions.
pub fn resample(f: &BoundaryProfile, grid: &RadialGrid) -> Result<BoundaryProfile> {
    let (r0, h) = (f.grid.r_min(), f.grid.log_step());
    let ln_f: Vec<f64> = f.values.iter().map(|v| v.ln()).collect();
    let last = (f.values.len() - 1) as f64;
    let values = grid
        .nodes()
        .iter()
        .map(|&r| {
            let u = (r / r0).ln() / h;
            let k = u.round();
            if (u - k).abs() < 1e-9 && (0.0..=last).contains(&k) {
                f.values[k as usize]
            } else {
                interpolate(&f.values, &ln_f, u)
            }
        })
        .collect();
    BoundaryProfile::new(grid.clone(), f.n, values)
}

fn interpolate(values: &[f64], ln_v: &[f64], u: f64) -> f64 {
    let nn = values.len();
    if u < 0.0 {
        return values[0];
    }
    if u > (nn - 1) as f64 {
        return 0.0;
    }
    let k = (u.floor() as usize).min(nn - 2);
    let start = (k + 1).saturating_sub(STENCIL / 2).min(nn.saturating_sub(STENCIL));
    let end = (start + STENCIL).min(nn);
    let positive = values[start..end].iter().all(|&v| v > 0.0);
    if !positive || end - start < STENCIL {
        let frac = u - k as f64;
        return values[k] * (1.0 - frac) + values[k + 1] * frac;
    }
    let mut acc = 0.0;
    for m in start..end {
        let mut w = 1.0;
        for l in start..end {
            if l != m {
                w *= (u - l as f64) / (m as f64 - l as f64);
            }
        }
        acc += w * ln_v[m];
    }
    acc.exp()
}

/// max_i (f_i v_{n-1}^{1/p} r_i^{(n-1)/p} - 1) for a decreasing profile.
pub fn radial_bound_check(f: &BoundaryProfile, p: f64) -> Result<f64> {
    if !f.decreasing {
        return Err(Error::Precondition("profile is not radially decreasing".into()));
    }
    let v = ball_volume(f.n - 1).powf(1.0 / p);
    let e = (f.n as f64 - 1.0) / p;
    Ok(f.grid
        .nodes()
        .iter()
        .zip(&f.values)
        .map(|(&r, &x)| x * v * r.powf(e) - 1.0)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text: `# kind=boundary n=<n>` then `r,value` rows.
pub fn boundary_to_csv(f: &BoundaryProfile) -> String {
    let mut s = format!("# kind=boundary n={}\nr,value\n", f.n);
    for (r, v) in f.grid.nodes().iter().zip(&f.values) {
        let _ = writeln!(s, "{},{}", fmt17(*r), fmt17(*v));
    }
    s
}

/// CSV text: `# kind=halfspace n=<n>` then `rho,t,value` rows.
pub fn halfspace_to_csv(g: &HalfSpaceProfile) -> String {
    let mut s = format!("# kind=halfspace n={}\nrho,t,value\n", g.n);
    let nt = g.t_grid.len();
    for (idx, v) in g.values.iter().enumerate() {
        let (j, k) = (idx / nt, idx % nt);
        let _ = writeln!(
            s,
            "{},{},{}",
            fmt17(g.rho_grid.nodes()[j]),
            fmt17(g.t_grid.nodes()[k]),
            fmt17(*v)
        );
    }
    s
}

fn parse_header(text: &str, kind: &str) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty profile file".into()))?;
    let mut found_kind = None;
    let mut n = None;
    for tok in header.trim_start_matches('#').split_whitespace() {
        if let Some(k) = tok.strip_prefix("kind=") {
            found_kind = Some(k.to_string());
        } else if let Some(v) = tok.strip_prefix("n=") {
            n = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("bad n: {e}")))?);
        }
    }
    if found_kind.as_deref() != Some(kind) {
        return Err(Error::Parse(format!("expected kind={kind} header, got '{header}'")));
    }
    let n = n.ok_or_else(|| Error::Parse("header lacks n=".into()))?;
    let mut rows = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.starts_with('#') || line.starts_with(|c: char| c.is_ascii_alphabetic()) {
            continue;
        }
        let row = line
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("'{line}': {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((n, rows))
}

fn grid_from_nodes(nodes: &[f64]) -> Result<RadialGrid> {
    if nodes.len() < 2 {
        return Err(Error::BadGrid("a profile needs at least two nodes".into()));
    }
    let grid = make_log_grid(nodes[0], nodes[nodes.len() - 1], nodes.len())?;
    let ok = grid
        .nodes()
        .iter()
        .zip(nodes)
        .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs());
    if !ok {
        return Err(Error::BadGrid("nodes are not geometrically spaced".into()));
    }
    Ok(grid)
}

pub fn boundary_from_csv(text: &str) -> Result<BoundaryProfile> {
    let (n, rows) = parse_header(text, "boundary")?;
    if rows.iter().any(|r| r.len() != 2) {
        return Err(Error::Parse("boundary rows must be r,value".into()));
    }
    let nodes: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let grid = grid_from_nodes(&nodes)?;
    BoundaryProfile::new(grid, n, rows.iter().map(|r| r[1]).collect())
}

pub fn halfspace_from_csv(text: &str) -> Result<HalfSpaceProfile> {
    let (n, rows) = parse_header(text, "halfspace")?;
    if rows.iter().any(|r| r.len() != 3) {
        return Err(Error::Parse("half-space rows must be rho,t,value".into()));
    }
    let mut rho: Vec<f64> = Vec::new();
    let mut t: Vec<f64> = Vec::new();
    for r in &rows {
        if rho.last() != Some(&r[0]) {
            rho.push(r[0]);
        }
        if rho.len() == 1 {
            t.push(r[1]);
        }
    }
    if rho.len() * t.len() != rows.len() {
        return Err(Error::Parse("rows do not form a rho-major tensor grid".into()));
    }
    for (idx, r) in rows.iter().enumerate() {
        if r[0] != rho[idx / t.len()] || r[1] != t[idx % t.len()] {
            return Err(Error::Parse("rows do not form a rho-major tensor grid".into()));
        }
    }
    HalfSpaceProfile::new(
        grid_from_nodes(&rho)?,
        grid_from_nodes(&t)?,
        n,
        rows.iter().map(|r| r[2]).collect(),
    )
}
