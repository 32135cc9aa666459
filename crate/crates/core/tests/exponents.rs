use proptest::prelude::*;
use semilinear::exponents::*;

fn jl_closed_form(n: f64) -> f64 {
    ((n - 2.0).powi(2) - 4.0 * n + 8.0 * (n - 1.0).sqrt()) / ((n - 2.0) * (n - 10.0))
}

#[test]
fn table_values() {
    let t = ExponentTable::for_dim(11).unwrap();
    assert!((t.p_jl.finite().unwrap() - 6.9220245868).abs() < 1e-9);
    assert!((t.p_jl.finite().unwrap() - jl_closed_form(11.0)).abs() < 1e-14);
    assert!(ExponentTable::for_dim(10).unwrap().p_jl.is_infinite());
    assert_eq!(serrin_exponent(3).unwrap(), ExtendedReal::Finite(3.0));
    assert_eq!(sobolev_exponent(3).unwrap(), ExtendedReal::Finite(5.0));
    assert_eq!(serrin_exponent(6).unwrap(), ExtendedReal::Finite(1.5));
    assert!(serrin_exponent(2).unwrap().is_infinite());
    assert!(sobolev_exponent(1).unwrap().is_infinite());
    assert!(serrin_exponent(0).is_err());
}

#[test]
fn ordering_for_all_finite_dimensions() {
    for n in 3..=60u32 {
        let t = ExponentTable::for_dim(n).unwrap();
        let (sg, s) = (t.p_sg.finite().unwrap(), t.p_s.finite().unwrap());
        assert!(sg < s);
        if let Some(jl) = t.p_jl.finite() {
            assert!(s < jl, "N = {n}");
        }
    }
}

#[test]
fn jl_decreasing_from_eleven() {
    let vals: Vec<f64> = (11..=60u32)
        .map(|n| joseph_lundgren_exponent(n).unwrap().finite().unwrap())
        .collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn regime_examples() {
    let r = |n, p| classify_regime(ProblemParams::new(n, p).unwrap());
    assert_eq!(r(3, 4.0), Regime::SerrinToSobolev);
    assert_eq!(r(3, 5.0), Regime::Critical);
    assert_eq!(r(11, 8.0), Regime::AtOrAboveJl);
    assert_eq!(r(3, 2.0), Regime::BelowSerrin);
    assert_eq!(r(3, 6.0), Regime::SobolevToJl);
    assert_eq!(r(7, 9.0 / 5.0), Regime::Critical);
}

#[test]
fn amplitude_examples() {
    let l = |n, p| singular_amplitude(ProblemParams::new(n, p).unwrap());
    assert!((l(3, 5.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    assert!((l(11, 3.0).unwrap() - 2.8284271247).abs() < 1e-10);
    assert!(matches!(l(3, 3.0), Err(semilinear::Error::Regime(_))));
    let params = ProblemParams::new(3, 5.0).unwrap();
    assert!((phi_infinity(params, 1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    assert!(phi_infinity(params, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn phi_infinity_scale_invariance(lam in 1e-3f64..1e3, r in 1e-3f64..1e3, n in 3u32..20, q in 0.05f64..3.0) {
        let p = n as f64 / (n as f64 - 2.0) + q;
        let params = ProblemParams::new(n, p).unwrap();
        let lhs = lam * phi_infinity(params, lam.powf((p - 1.0) / 2.0) * r).unwrap();
        let rhs = phi_infinity(params, r).unwrap();
        prop_assert!((lhs / rhs - 1.0).abs() <= 1e-14 * 4.0);
    }

    #[test]
    fn steady_state_identity(r in 1e-2f64..1e2, n in 3u32..30, q in 0.05f64..4.0) {
        let nf = n as f64;
        let p = nf / (nf - 2.0) + q;
        let params = ProblemParams::new(n, p).unwrap();
        let l = singular_amplitude(params).unwrap();
        let m = 2.0 / (p - 1.0);
        // u = L r^{-m}: u'' + (N-1)u'/r = -m(N-2-m) L r^{-m-2}
        let lap = -m * (nf - 2.0 - m) * l * r.powf(-m - 2.0);
        let u = phi_infinity(params, r).unwrap();
        let res = lap + u.powf(p);
        prop_assert!(res.abs() <= 1e-12 * u.powf(p));
    }
}
