//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use semilinear::doubling::*;
use std::f64::consts::PI;

/// `v'^2/2 - ((N-2)^2/8) v^2 + ((N-2)/(2N)) |v|^{2N/(N-2)}`, written out here
/// so the check does not share code with the library.
pub fn energy(n: u32, v: f64, dv: f64) -> f64 {
    let n = f64::from(n);
    let q = 2.0 * n / (n - 2.0);
    dv * dv / 2.0 - (n - 2.0) * (n - 2.0) * v * v / 8.0 + (n - 2.0) / (2.0 * n) * v.abs().powf(q)
}

/// `((N-2)/2)^{(N-2)/2}`.
pub fn equilibrium(n: u32) -> f64 {
    let a = 0.5 * (f64::from(n) - 2.0);
    a.powf(a)
}

/// `T = 2 ∫ dv / √(2(E - W(v)))` between the turning points, with
/// `v = c + d cos θ` so the integrand is smooth, even and `2π`-periodic;
/// the midpoint rule then converges geometrically.
pub fn quadrature_period(n: u32, m: f64) -> f64 {
    let w = |v: f64| energy(n, v, 0.0);
    let e = w(m);
    let v_star = equilibrium(n);
    let (mut lo, mut hi) = (v_star, 10.0 * v_star);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if w(mid) < e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let big = 0.5 * (lo + hi);
    let (c, d) = (0.5 * (big + m), 0.5 * (big - m));
    let k = 4000;
    let h = PI / k as f64;
    let sum: f64 = (0..k)
        .map(|i| {
            let th = (i as f64 + 0.5) * h;
            d * th.sin() / (2.0 * (e - w(c - d * th.cos()))).sqrt()
        })
        .sum();
    2.0 * h * sum
}

/// Exhaustive check of both conclusions of the doubling lemma at `x`.
pub fn verify_doubling(space: &FiniteMetricSpace, m: &WeightFunction, y: usize, k: f64, x: usize) -> bool {
    if m.at(x) < m.at(y) {
        return false;
    }
    let radius = k / m.at(x);
    (0..space.len()).all(|z| space.distance(z, x) > radius || m.at(z) <= 2.0 * m.at(x))
}

pub fn random_doubling_instance(rng: &mut ChaCha8Rng, n: usize) -> (FiniteMetricSpace, WeightFunction, usize, f64) {
    let dim = rng.gen_range(1..=3);
    let pts: Vec<SpaceTimePoint> = (0..n)
        .map(|_| {
            let x = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
            SpaceTimePoint::new(x, rng.gen_range(-10.0..10.0))
        })
        .collect();
    let labels = (0..n).map(|i| format!("z{i}")).collect();
    let space = FiniteMetricSpace::from_metric(labels, &pts, parabolic_distance).unwrap();
    // heavy-tailed weights so that several doublings occur
    let m: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.1) {
                0.0
            } else {
                rng.gen_range(0.0f64..12.0).exp2()
            }
        })
        .collect();
    let y = loop {
        let y = rng.gen_range(0..n);
        if m[y] > 0.0 {
            break y;
        }
    };
    let k = rng.gen_range(0.1f64..50.0);
    (space, WeightFunction::new(m).unwrap(), y, k)
}
