//! Sphere areas, ball volumes and gamma helpers.

use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Surface area of the unit sphere S^{m-1} in R^m.
///
/// `sphere_area(1) == 2` (the two points of S^0).
pub fn sphere_area(m: usize) -> f64 {
    let h = m as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Volume of the unit ball in R^m.
pub fn ball_volume(m: usize) -> f64 {
    let h = m as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Beta function via log-gamma, for positive arguments.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}
