use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swlab::admissibility::derive_exponents;
use swlab::operators::*;
use swlab::profiles::*;
use swlab::Error;

fn ctx(alpha: f64, beta: f64, gamma: f64) -> OperatorContext {
    let params = derive_exponents(3, 2.0, gamma, alpha, beta).unwrap();
    let grid = RadialGrid::per_decade(1e-3, 1e3, 16).unwrap();
    OperatorContext::padded(params, &grid).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn random_pair(c: &OperatorContext, seed: u64) -> (BoundaryProfile, HalfSpaceProfile) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = c.params.n;
    let f = BoundaryProfile::new(
        c.boundary_grid().clone(),
        n,
        (0..c.boundary_grid().len()).map(|_| rng.random::<f64>()).collect(),
    )
    .unwrap();
    let len = c.rho_grid().len() * c.t_grid().len();
    let g = HalfSpaceProfile::new(
        c.rho_grid().clone(),
        c.t_grid().clone(),
        n,
        (0..len).map(|_| rng.random::<f64>()).collect(),
    )
    .unwrap();
    (f, g)
}

#[test]
fn zero_in_zero_out() {
    let c = ctx(0.0, 0.0, 2.0);
    let f = BoundaryProfile::zeros(c.boundary_grid(), 3);
    assert!(c.apply_v(&f).unwrap().values().iter().all(|&v| v == 0.0));
    let g = HalfSpaceProfile::from_fn(c.rho_grid(), c.t_grid(), 3, |_, _| 0.0).unwrap();
    assert!(c.apply_w(&g).unwrap().values().iter().all(|&v| v == 0.0));
    let (f1, g1) = random_pair(&c, 1);
    assert_eq!(c.functional_j(&f, &g1).unwrap(), 0.0);
    assert_eq!(c.functional_j(&f1, &g).unwrap(), 0.0);
}

#[test]
fn wide_indicator_reaches_the_kernel_mass() {
    let c = ctx(0.0, 0.0, 2.0);
    let f = BoundaryProfile::from_fn(c.boundary_grid(), 3, |r| if r < 900.0 { 1.0 } else { 0.0 }).unwrap();
    let v = c.apply_v(&f).unwrap();
    let t = c.t_grid().nodes();
    // innermost rho, heights well below the indicator radius
    for k in (0..t.len()).filter(|&k| t[k] >= 1e-3 && t[k] <= 1.0) {
        assert!(rel(v.at(0, k), 2.0 * PI) < 2e-3, "t={} V={}", t[k], v.at(0, k));
    }
}

#[test]
fn linear_and_adjoint() {
    for (a, b, g) in [(0.0, 0.0, 2.0), (0.3, 0.1, 2.5), (0.2, 0.0, 2.0)] {
        let c = ctx(a, b, g);
        let (f1, g1) = random_pair(&c, 7);
        let (f2, g2) = random_pair(&c, 8);
        let sum = BoundaryProfile::new(
            c.boundary_grid().clone(),
            3,
            f1.values().iter().zip(f2.values()).map(|(x, y)| x + y).collect(),
        )
        .unwrap();
        let (v1, v2, vs) = (c.apply_v(&f1).unwrap(), c.apply_v(&f2).unwrap(), c.apply_v(&sum).unwrap());
        for ((x, y), z) in v1.values().iter().zip(v2.values()).zip(vs.values()) {
            assert!(rel(x + y, *z) < 1e-12);
        }
        let w = c.apply_w(&g2.scaled(3.0)).unwrap();
        for (x, y) in w.values().iter().zip(c.apply_w(&g2).unwrap().values()) {
            assert!(rel(*x, 3.0 * y) < 1e-14);
        }
        let lhs = c.interior_inner(g1.values(), v1.values());
        let rhs = c.boundary_inner(c.apply_w(&g1).unwrap().values(), f1.values());
        assert!(rel(lhs, rhs) < 1e-10, "{lhs} {rhs}");
        assert!(rel(c.functional_j(&f1, &g1).unwrap(), lhs) < 1e-14);
        let j = c.functional_j(&f1.scaled(2.0), &g1.scaled(3.0)).unwrap();
        assert!(rel(j, 6.0 * lhs) < 1e-13);
    }
}

#[test]
fn holder_bound_with_equality_at_the_power_of_the_image() {
    let c = ctx(0.0, 0.0, 2.0);
    let (q, qp) = (c.params.q, c.params.qprime);
    let (f, g) = random_pair(&c, 3);
    let v = c.apply_v(&f).unwrap();
    let vq = halfspace_norm(&v, q);
    assert!(c.functional_j(&f, &g).unwrap() <= halfspace_norm(&g, qp) * vq * (1.0 + 1e-12));
    let best = v.map(|x| x.powf(q - 1.0)).unwrap();
    let best = best.scaled(1.0 / halfspace_norm(&best, qp));
    assert!(rel(c.functional_j(&f, &best).unwrap(), vq) < 1e-12);
}

#[test]
fn monotone_in_the_input() {
    let c = ctx(0.2, 0.1, 2.2);
    let (f, _) = random_pair(&c, 11);
    let bigger = f.map(|x| x + 0.1).unwrap();
    let (a, b) = (c.apply_v(&f).unwrap(), c.apply_v(&bigger).unwrap());
    assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y));
    assert!(a.values().iter().all(|&x| x > 0.0));
}

#[test]
fn foreign_grids_are_rejected() {
    let c = ctx(0.0, 0.0, 2.0);
    let other = RadialGrid::per_decade(1e-2, 1e2, 16).unwrap();
    let f = BoundaryProfile::zeros(&other, 3);
    assert!(matches!(c.apply_v(&f), Err(Error::GridMismatch(_))));
    let g = HalfSpaceProfile::from_fn(&other, &other, 3, |_, _| 1.0).unwrap();
    assert!(matches!(c.apply_w(&g), Err(Error::GridMismatch(_))));
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let c = ctx(0.1, 0.0, 2.3);
    let (f, g) = random_pair(&c, 5);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (c.apply_v(&f).unwrap(), c.apply_w(&g).unwrap()))
    };
    let (v1, w1) = run(1);
    let (v4, w4) = run(4);
    assert_eq!(v1.values(), v4.values());
    assert_eq!(w1.values(), w4.values());
}

#[test]
fn monte_carlo_zero_and_mass() {
    let params = derive_exponents(3, 2.0, 2.0, 0.0, 0.0).unwrap();
    let grid = RadialGrid::per_decade(1e-3, 1e4, 16).unwrap();
    let zero = BoundaryProfile::zeros(&grid, 3);
    assert_eq!(oracle_v_montecarlo(&zero, &[0.0, 0.0, 1.0], &params, 10_000, 1).unwrap(), (0.0, 0.0));
    let f = BoundaryProfile::from_fn(&grid, 3, |r| if r <= 1e3 { 1.0 } else { 0.0 }).unwrap();
    let (est, err) = oracle_v_montecarlo(&f, &[0.0, 0.0, 1.0], &params, 200_000, 2).unwrap();
    // P integrated over the disk of radius R at height 1 in closed form; the
    // cell straddling R is interpolated linearly in log r
    let exact = 2.0 * PI * (1.0 - 1.0 / (1.0 + 1e6f64).sqrt());
    assert!((est - exact).abs() < 3.0 * err + 2.0 * PI * 1e-3 * grid.log_step(), "{est} {exact} {err}");
    assert!(matches!(
        oracle_v_montecarlo(&f, &[0.0, 0.0, 0.0], &params, 10_000, 1),
        Err(Error::Domain(_))
    ));
}

#[test]
fn monte_carlo_is_seeded() {
    let params = derive_exponents(3, 2.0, 2.5, 0.2, 0.1).unwrap();
    let grid = RadialGrid::per_decade(1e-2, 1e2, 8).unwrap();
    let f = BoundaryProfile::from_fn(&grid, 3, |r| (-r).exp()).unwrap();
    let a = oracle_v_montecarlo(&f, &[0.3, 0.0, 0.5], &params, 20_000, 9).unwrap();
    let b = oracle_v_montecarlo(&f, &[0.3, 0.0, 0.5], &params, 20_000, 9).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn adjoint_identity_for_random_profiles(seed in 0u64..1000, alpha in 0.0f64..0.4, dg in 0.0f64..0.8) {
        let c = ctx(alpha, 0.0, 2.0 + dg);
        let (f, g) = random_pair(&c, seed);
        let lhs = c.interior_inner(g.values(), c.apply_v(&f).unwrap().values());
        let rhs = c.boundary_inner(c.apply_w(&g).unwrap().values(), f.values());
        prop_assert!(rel(lhs, rhs) < 1e-10);
    }
}
