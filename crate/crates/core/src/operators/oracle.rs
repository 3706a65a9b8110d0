use crate::admissibility::Params;
use crate::error::{Error, Result};
use crate::kernel::kernel_exponent;
use crate::profiles::BoundaryProfile;
use crate::special::sphere_area;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stratified Monte-Carlo estimate of V(f)(x) with its standard error.
///
/// Strata are the annuli between consecutive grid radii; inside an annulus
/// the radius is drawn with density proportional to r^{n-2} and the
/// direction uniformly, and f is interpolated linearly in log r. The ball
/// inside the first radius is one more stratum, with f extended by its
/// first value.
pub fn oracle_v_montecarlo(
    f: &BoundaryProfile,
    x: &[f64],
    params: &Params,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = params.n;
    if x.len() != n {
        return Err(Error::Domain(format!("point must have {n} coordinates")));
    }
    let t = x[n - 1];
    if !(t > 0.0) {
        return Err(Error::Domain(format!("x_n = {t} must be positive")));
    }
    let m = n - 1;
    let mf = m as f64;
    let s = kernel_exponent(n, params.gamma);
    let nodes = f.grid().nodes();
    let vals = f.values();
    let cells = nodes.len() - 1;
    let per = (samples / (cells + 1)).max(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = sphere_area(m);
    let h = f.grid().log_step();
    let xp = &x[..m];
    let mut estimate = 0.0;
    let mut variance = 0.0;
    let mut dir = vec![0.0; m];
    for stratum in 0..=cells {
        let (ra, rb, f0, f1) = match stratum {
            0 => (0.0, nodes[0], vals[0], vals[0]),
            i => (nodes[i - 1], nodes[i], vals[i - 1], vals[i]),
        };
        if f0 == 0.0 && f1 == 0.0 {
            continue;
        }
        let (pa, pb) = (ra.powf(mf), rb.powf(mf));
        let vol = area * (pb - pa) / mf;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..per {
            let u: f64 = rng.random();
            let r = (pa + u * (pb - pa)).powf(1.0 / mf);
            let norm = loop {
                for d in dir.iter_mut() {
                    *d = rng.sample(StandardNormal);
                }
                let q: f64 = dir.iter().map(|d| d * d).sum();
                if q > 0.0 {
                    break q.sqrt();
                }
            };
            let d2: f64 = xp
                .iter()
                .zip(&dir)
                .map(|(a, d)| {
                    let e = a - r * d / norm;
                    e * e
                })
                .sum();
            let theta = if ra > 0.0 { ((r / ra).ln() / h).clamp(0.0, 1.0) } else { 0.0 };
            let fv = f0 * (1.0 - theta) + f1 * theta;
            let val = r.powf(-params.alpha) * t * (d2 + t * t).powf(-s) * fv;
            sum += val;
            sum2 += val * val;
        }
        let k = per as f64;
        let mean = sum / k;
        let var = ((sum2 / k - mean * mean) * k / (k - 1.0)).max(0.0);
        estimate += vol * mean;
        variance += vol * vol * var / k;
    }
    let xn: f64 = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let w = xn.powf(-params.beta);
    Ok((estimate * w, variance.sqrt() * w))
}
