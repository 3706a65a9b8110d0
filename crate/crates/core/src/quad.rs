//! Gauss-Legendre rules and a globally adaptive panel integrator.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// A Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the `m`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..m.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over [a, b].
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: &mut F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gauss10() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(10))
}

pub fn gauss8() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(8))
}

/// Integral value together with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_panels: usize,
}

impl AdaptiveOptions {
    pub fn relative(tol_rel: f64) -> Self {
        Self {
            tol_rel,
            tol_abs: 0.0,
            max_panels: 4000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    error: f64,
}

impl Panel {
    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn make_panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64) -> Panel {
    let g = gauss10();
    let m = 0.5 * (a + b);
    let left = g.integrate(f, a, m);
    let right = g.integrate(f, m, b);
    Panel {
        a,
        b,
        left,
        right,
        error: (whole - left - right).abs(),
    }
}

/// Adaptive integration over the union of consecutive intervals given by
/// `breaks` (sorted, at least two entries). Each panel compares a 10-point
/// rule against the same rule on its halves; the worst panel is bisected
/// until the summed error estimate meets the tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    opts: AdaptiveOptions,
) -> Result<Estimate> {
    let g = gauss10();
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Panel> = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let whole = g.integrate(&mut f, a, b);
        heap.push(make_panel(&mut f, a, b, whole));
    }
    let mut count = heap.len();
    let sums = |heap: &BinaryHeap<Panel>, done: &[Panel]| {
        heap.iter()
            .chain(done.iter())
            .fold((0.0, 0.0), |(s, e), p| (s + p.value(), e + p.error))
    };
    let (mut total, mut err) = sums(&heap, &done);
    loop {
        let target = opts.tol_abs.max(opts.tol_rel * total.abs());
        if err <= target || heap.is_empty() {
            // running sums drift; confirm with a fresh pass
            let (t, e) = sums(&heap, &done);
            (total, err) = (t, e);
            if err <= opts.tol_abs.max(opts.tol_rel * total.abs()) || heap.is_empty() {
                return finish(heap, done);
            }
        }
        if count >= opts.max_panels {
            let (total, err) = sums(&heap, &done);
            return Err(Error::QuadratureFailure {
                tol: opts.tol_rel,
                estimate: total,
                error: err,
            });
        }
        let p = heap.pop().expect("nonempty heap");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b || (p.b - p.a) <= 1e-15 * p.a.abs().max(p.b.abs()) {
            done.push(p);
            continue;
        }
        let l = make_panel(&mut f, p.a, m, p.left);
        let r = make_panel(&mut f, m, p.b, p.right);
        total += l.value() + r.value() - p.value();
        err += l.error + r.error - p.error;
        heap.push(l);
        heap.push(r);
        count += 1;
    }
}

fn finish(heap: BinaryHeap<Panel>, done: Vec<Panel>) -> Result<Estimate> {
    let mut all: Vec<Panel> = heap.into_vec();
    all.extend(done);
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = all.iter().map(Panel::value).sum();
    let error = all.iter().map(|p| p.error).sum();
    Ok(Estimate { value, error })
}

/// Breakpoints on [0, end] refined geometrically toward 0 down to `scale`.
pub fn graded_breaks(end: f64, scale: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    if scale > 0.0 && scale < end {
        let mut x = scale;
        while x < end {
            pts.push(x);
            x *= 2.0;
        }
    }
    pts.push(end);
    pts
}
