use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semilinear::emden_fowler::*;
use semilinear::exponents::{ProblemParams, SingularSteadyState};
use semilinear::intersections::radial_intersections;
use semilinear::radial_ode::{integrate_regular_default, RadialFunction};
use semilinear::Error;
use std::f64::consts::PI;

mod common;
use common::{energy, quadrature_period};

fn crit(n: u32) -> ProblemParams {
    ProblemParams::sobolev_critical(n).unwrap()
}

fn max_drift(orbit: &CylindricalOrbit) -> (f64, f64) {
    let n = orbit.params().dim();
    let e0 = energy(n, orbit.v()[0], orbit.v_prime()[0]);
    let drift = orbit
        .v()
        .iter()
        .zip(orbit.v_prime())
        .map(|(&v, &dv)| (energy(n, v, dv) - e0).abs())
        .fold(0.0, f64::max);
    (e0, drift)
}

#[test]
fn energy_is_conserved_on_homoclinic_and_periodic_orbits() {
    for n in [3, 4, 6] {
        let orbit = integrate_cylinder(crit(n), homoclinic(n, 0.0).unwrap(), 0.0, 50.0).unwrap();
        let (e0, drift) = max_drift(&orbit);
        assert!(e0.abs() <= 1e-10);
        assert!(drift <= 1e-8 * (1.0 + e0.abs()), "N = {n}: {drift}");
        assert!((orbit.energy_drift().unwrap() - drift).abs() <= 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let n: u32 = rng.gen_range(3..=7);
        let v_star = critical_equilibrium(n).unwrap();
        let m = rng.gen_range(0.05..0.95) * v_star;
        let orbit = integrate_cylinder(crit(n), m, 0.0, 50.0).unwrap();
        let (e0, drift) = max_drift(&orbit);
        assert!(drift <= 1e-8 * (1.0 + e0.abs()), "N = {n}, m = {m}: {drift}");
        assert!(orbit.v().iter().all(|&v| v > 0.0));
    }
}

#[test]
fn homoclinic_closed_form() {
    assert!((homoclinic(3, 0.0).unwrap() - 0.930_604_859_1).abs() < 1e-9);
    assert!((homoclinic(3, 0.0).unwrap() - 3f64.powf(0.25) / 2f64.sqrt()).abs() < 1e-15);
    assert!(matches!(homoclinic(2, 0.0), Err(Error::Domain(_))));
    for n in [3u32, 4, 5, 8, 11] {
        let a = 0.5 * (f64::from(n) - 2.0);
        let p = (f64::from(n) + 2.0) / (f64::from(n) - 2.0);
        for i in -200..=200 {
            let t = 0.1 * f64::from(i);
            let v = homoclinic(n, t).unwrap();
            let sech2 = 1.0 / t.cosh().powi(2);
            let ddv = a * a * v - a * (a + 1.0) * v * sech2;
            let res = -ddv + a * a * v - v.powf(p);
            assert!(res.abs() <= 1e-10 * (1.0 + v), "N = {n}, t = {t}: {res}");
            let dv = homoclinic_derivative(n, t).unwrap();
            assert!((dv + a * t.tanh() * v).abs() <= 1e-14);
            let scale = 1.0 + a * a * v * v / 2.0;
            assert!(energy(n, v, dv).abs() <= 1e-10 * scale, "N = {n}, t = {t}");
        }
    }
}

proptest! {
    #[test]
    fn homoclinic_is_even(t in -40.0f64..40.0, n in 3u32..12) {
        prop_assert_eq!(homoclinic(n, t).unwrap(), homoclinic(n, -t).unwrap());
    }
}

#[test]
fn critical_profile_is_a_translated_homoclinic() {
    let phi = integrate_regular_default(crit(3), 10.0).unwrap();
    let orbit = cylinder_transform(&phi).unwrap();
    assert_eq!(orbit.kind(), OrbitKind::Homoclinic);
    let (shift, err) = homoclinic_translation_error(&orbit).unwrap();
    assert!(err <= 1e-7, "{err}");
    // Max of v = r^{1/2} (1 + r²/3)^{-1/2} is at r = √3.
    assert!((shift - 0.5 * 3f64.ln()).abs() < 1e-6);
    assert!((orbit.eval(shift).0 - 0.930_605).abs() < 1e-6);
    assert!(orbit.v().iter().all(|&v| v <= orbit.eval(shift).0 + 1e-12));
    let (e0, drift) = max_drift(&orbit);
    assert!(e0.abs() < 1e-8 && drift < 1e-8, "{e0} {drift}");
}

#[test]
fn singular_state_transforms_to_a_constant() {
    let pr = ProblemParams::new(5, 2.5).unwrap();
    let s = SingularSteadyState::new(pr).unwrap();
    let r: Vec<f64> = (1..200).map(|i| 0.05 * f64::from(i)).collect();
    let u: Vec<f64> = r.iter().map(|&x| s.value(x)).collect();
    let du: Vec<f64> = r.iter().map(|&x| s.derivative(x)).collect();
    let orbit = cylinder_transform_samples(pr, &r, &u, &du).unwrap();
    assert_eq!(orbit.kind(), OrbitKind::Constant);
    assert!(orbit.v().iter().all(|v| (v - s.amplitude()).abs() <= 1e-12));
    let bad = vec![-1.0; r.len()];
    assert!(matches!(
        cylinder_transform_samples(pr, &r, &bad, &du),
        Err(Error::Domain(_))
    ));
}

#[test]
fn constant_orbit_energy() {
    let p = periodic_orbit(3, critical_equilibrium(3).unwrap()).unwrap();
    assert_eq!(p.orbit.kind(), OrbitKind::Constant);
    assert!((p.params.energy + 1.0 / 24.0).abs() <= 1e-12);
    assert!((critical_equilibrium(3).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn small_amplitude_period() {
    for n in 3..=9 {
        let v_star = critical_equilibrium(n).unwrap();
        let t = periodic_orbit(n, 0.99 * v_star).unwrap().params.period;
        let want = 2.0 * PI / (f64::from(n) - 2.0).sqrt();
        assert!((t - want).abs() <= 0.01 * want, "N = {n}: {t} vs {want}");
    }
}

#[test]
fn period_matches_energy_quadrature() {
    for (n, m) in [(3, 0.3), (3, 0.05), (5, 0.5)] {
        let t = periodic_orbit(n, m).unwrap().params.period;
        let want = quadrature_period(n, m);
        assert!((t - want).abs() <= 1e-6 * want, "N = {n}, m = {m}: {t} vs {want}");
    }
}

#[test]
fn period_map_is_continuous_with_one_extremum_pair() {
    let n = 3;
    let v_star = critical_equilibrium(n).unwrap();
    let mut periods = vec![];
    for k in 1..=9 {
        let m = 0.1 * f64::from(k) * v_star;
        let orbit = periodic_orbit(n, m).unwrap();
        let t = orbit.params.period;
        assert!(t.is_finite() && t > 0.0);
        assert_eq!(orbit.interior_extrema, 1);
        assert!(orbit.symmetry_error <= 1e-9, "{}", orbit.symmetry_error);
        assert!(orbit.params.max_value > v_star && orbit.params.min_value < v_star);
        // A window that does not start at an extremum.
        let psi = DelaunayProfile::new(&orbit);
        let samples = 20_000;
        let (mut rises, mut falls) = (0, 0);
        let mut prev = psi.h(0.25 * t).1;
        for i in 1..=samples {
            let s = 0.25 * t + t * f64::from(i) / f64::from(samples);
            let d = psi.h(s).1;
            if prev < 0.0 && d >= 0.0 {
                rises += 1;
            }
            if prev > 0.0 && d <= 0.0 {
                falls += 1;
            }
            prev = d;
        }
        assert_eq!((rises, falls), (1, 1), "m = {m}");
        periods.push(t);
    }
    for w in periods.windows(2) {
        assert!((w[1] - w[0]).abs() < 0.5 * w[0], "{periods:?}");
    }
}

#[test]
fn periodic_orbit_rejects_bad_minima() {
    let v_star = critical_equilibrium(4).unwrap();
    assert!(matches!(periodic_orbit(4, 0.0), Err(Error::Domain(_))));
    assert!(matches!(periodic_orbit(4, 1.5 * v_star), Err(Error::Domain(_))));
    assert!(matches!(periodic_orbit(4, 1e-4 * v_star), Err(Error::Conditioning(_))));
}

#[test]
fn delaunay_log_periodicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [3u32, 5] {
        let v_star = critical_equilibrium(n).unwrap();
        let orbit = periodic_orbit(n, 0.35 * v_star).unwrap();
        let d = orbit.params;
        let psi = DelaunayProfile::new(&orbit).translated(0.3);
        let a = 0.5 * (f64::from(n) - 2.0);
        let stretch = d.period.exp();
        for _ in 0..100 {
            let r = 10f64.powf(rng.gen_range(-3.0..3.0));
            let lhs = psi.value(stretch * r) * (stretch * r).powf(a);
            let rhs = psi.value(r) * r.powf(a);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs, "r = {r}: {lhs} vs {rhs}");
        }
        assert!(matches!(psi.profile(0.0), Err(Error::Domain(_))));
        assert!(matches!(delaunay_profile(&d, -1.0), Err(Error::Domain(_))));
        assert!((delaunay_profile(&d, 2.0).unwrap() - DelaunayProfile::new(&orbit).value(2.0)).abs() < 1e-14);
    }
}

#[test]
fn delaunay_meets_singular_state_twice_per_period() {
    let n = 3;
    let inf = SingularSteadyState::new(crit(n)).unwrap();
    let v_star = critical_equilibrium(n).unwrap();
    for frac in [0.2, 0.5, 0.9] {
        let orbit = periodic_orbit(n, frac * v_star).unwrap();
        let period = orbit.params.period;
        let psi = DelaunayProfile::new(&orbit);
        let set = radial_intersections(&psi, &inf, ((-5f64).exp(), 5f64.exp()), 1e-12).unwrap();
        let bound = 2 * (10.0 / period).floor() as usize;
        assert!(set.len() >= bound, "m = {frac}·v*: {} < {bound}", set.len());
        assert!(set.transversal.iter().all(|&t| t));
    }
    let flat = DelaunayProfile::constant(n).unwrap();
    for r in [0.01, 1.0, 50.0] {
        assert!((flat.value(r) - inf.value(r)).abs() <= 1e-14 * inf.value(r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn translation_matches_scaling(s in -3.0f64..3.0, r in 0.01f64..100.0) {
        let n = 4;
        let v_star = critical_equilibrium(n).unwrap();
        let psi = DelaunayProfile::new(&periodic_orbit(n, 0.45 * v_star).unwrap());
        let a = 0.5 * (f64::from(n) - 2.0);
        let lhs = psi.translated(s).value(r);
        let rhs = (-a * s).exp() * psi.value((-s).exp() * r);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{} vs {}", lhs, rhs);
    }
}

#[test]
fn heteroclinic_limits_and_decay() {
    for (n, p) in [(3, 4.0), (5, 2.2)] {
        let pr = ProblemParams::new(n, p).unwrap();
        let het = heteroclinic_subcritical(pr).unwrap();
        let m = 2.0 / (p - 1.0);
        let l = (m * (f64::from(n) - 2.0 - m)).powf(1.0 / (p - 1.0));
        assert!(
            (het.backward_limit - l).abs() <= 1e-6,
            "({n},{p}): {}",
            het.backward_limit
        );
        let want = -(f64::from(n) - 2.0 - m);
        assert!((het.forward_slope - want).abs() <= 0.02 * want.abs());
        assert!(het.seed_sensitivity < 1e-6);
        assert_eq!(het.orbit.kind(), OrbitKind::Heteroclinic);
        assert!(het.orbit.v().iter().all(|&v| v > 0.0));
    }
    let l34 = heteroclinic_subcritical(ProblemParams::new(3, 4.0).unwrap())
        .unwrap()
        .amplitude;
    assert!((l34 - (2.0f64 / 9.0).powf(1.0 / 3.0)).abs() < 1e-12);
    assert!(matches!(heteroclinic_subcritical(crit(3)), Err(Error::Regime(_))));
}
