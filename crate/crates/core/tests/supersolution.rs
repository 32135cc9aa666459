use proptest::prelude::*;
use semilinear::emden_fowler::{critical_equilibrium, periodic_orbit, DelaunayProfile};
use semilinear::exponents::{ProblemParams, SingularSteadyState};
use semilinear::radial_ode::RadialFunction;
use semilinear::supersolution::*;

const GRID: [(u32, f64); 6] = [(3, 4.0), (3, 4.5), (3, 5.0), (5, 2.5), (11, 3.0), (11, 5.0)];

fn params(n: u32, p: f64) -> ProblemParams {
    ProblemParams::new(n, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn barrier_is_scaling_equivariant(lambda in 0.1f64..10.0, pick in 0usize..3, r in 0.0f64..20.0) {
        let pr = [params(3, 4.0), params(3, 5.0), params(5, 2.5)][pick];
        let z = build_z_lambda(pr, 1.0).unwrap();
        let zl = build_z_lambda(pr, lambda).unwrap();
        let k = pr.scaling_exponent();
        let want = lambda * z.value(lambda.powf(k) * r);
        prop_assert!((zl.value(r) - want).abs() <= 1e-12 * want.abs(), "{} vs {}", zl.value(r), want);
        prop_assert_eq!(zl.value(0.0), lambda);
    }
}

#[test]
fn kink_is_positive_on_regime_grid() {
    for (n, p) in GRID {
        let z = build_z_lambda(params(n, p), 1.0).unwrap();
        assert!(z.kink_jump() > 0.0, "({n},{p})");
        assert!(z.continuity_gap() <= 1e-10 * z.value(z.junction()));
    }
}

#[test]
fn kink_margin_on_regime_grid() {
    let mut short = vec![];
    for (n, p) in GRID {
        let z = build_z_lambda(params(n, p), 1.0).unwrap();
        let slope = z.outer().derivative(z.junction()).abs();
        if z.kink_jump() < 0.1 * slope {
            short.push((n, p, z.kink_jump() / slope));
        }
    }
    assert!(short.is_empty(), "margin below 0.1 at {short:?}");
}

#[test]
fn outer_region_is_independent_of_lambda() {
    let pr = params(3, 4.0);
    let inf = SingularSteadyState::new(pr).unwrap();
    let family = BarrierFamily::new(pr).unwrap();
    for (l, mu) in [(0.5, 2.0), (1.0, 3.0), (0.1, 0.2)] {
        let zl = family.member(l).unwrap();
        let zm = family.member(mu).unwrap();
        let start = zl.junction().max(zm.junction());
        for i in 1..400 {
            let r = start * (1.0 + 0.01 * f64::from(i));
            assert_eq!(zl.value(r), zm.value(r));
            assert_eq!(zl.value(r), inf.value(r));
        }
    }
}

#[test]
fn barrier_caps_the_singular_state() {
    for (n, p) in [(3, 4.0), (3, 5.0), (5, 2.5)] {
        let pr = params(n, p);
        let inf = SingularSteadyState::new(pr).unwrap();
        let z = build_z_lambda(pr, 1.5).unwrap();
        assert!(z.value(0.0).is_finite());
        assert_eq!(z.sup(), 1.5);
        let mut min_gap = f64::INFINITY;
        for i in 1..=2000 {
            let r = 3.0 * z.junction() * f64::from(i) / 2000.0;
            let gap = z.value(r) - inf.value(r);
            min_gap = min_gap.min(gap);
            if r >= z.junction() {
                assert!(gap <= 0.0, "({n},{p}) r = {r}");
            }
            assert!(z.value(r) > 0.0 && z.value(r) <= z.sup());
        }
        assert!(min_gap <= 0.0);
    }
}

#[test]
fn barrier_vanishes_uniformly_as_lambda_shrinks() {
    let family = BarrierFamily::new(params(3, 4.0)).unwrap();
    let sups: Vec<f64> = [1.0, 0.1, 0.01, 0.001]
        .iter()
        .map(|&l| {
            (0..=5000)
                .map(|i| family.value(l, 1e3 * f64::from(i) / 5000.0))
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(sups.windows(2).all(|w| w[1] < w[0]), "{sups:?}");
    assert!(sups[3] <= 1e-3 + 1e-15);
}

#[test]
fn smooth_cells_have_small_residual() {
    for (n, p) in [(3, 4.0), (3, 5.0), (5, 2.5)] {
        let z = build_z_lambda(params(n, p), 1.0).unwrap();
        let nodes = snapped_nodes(z.junction(), 0.05, 4.0 * z.junction(), 1e-3).unwrap();
        let res = discrete_supersolution_residual(&z, &nodes).unwrap();
        assert!(
            res.max_smooth_residual <= 1e-6,
            "({n},{p}): {}",
            res.max_smooth_residual
        );
        assert!(res.junction_residual > 0.0);
        assert!(res.min_weak_residual >= -1e-6);
    }
}

#[test]
fn junction_residual_grows_like_inverse_h() {
    let z = build_z_lambda(params(3, 5.0), 1.0).unwrap();
    let mut prev: Option<f64> = None;
    for h in [1e-2, 5e-3, 2.5e-3] {
        let nodes = snapped_nodes(z.junction(), 0.1, 2.0, h).unwrap();
        let res = discrete_supersolution_residual(&z, &nodes).unwrap();
        assert!(res.junction_residual > 0.0);
        if let Some(q) = prev {
            let ratio = res.junction_residual / q;
            assert!((ratio - 2.0).abs() < 0.1, "h = {h}: ratio {ratio}");
        }
        prev = Some(res.junction_residual);
        assert!((res.kink_mass - z.kink_jump() * z.junction().powi(2)).abs() < 1e-14);
    }
}

#[test]
fn delaunay_junction_shrinks_as_lambda_grows() {
    let v_star = critical_equilibrium(3).unwrap();
    let psi = DelaunayProfile::new(&periodic_orbit(3, 0.5 * v_star).unwrap());
    let junctions: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&l| {
            let z = build_z_lambda_delaunay(3, &psi, l).unwrap();
            assert!(z.kink_jump() > 0.0);
            assert!(z.continuity_gap() <= 1e-10 * z.value(z.junction()));
            assert!(z.value(3.0 * z.junction()) == psi.value(3.0 * z.junction()));
            z.junction()
        })
        .collect();
    assert!(
        junctions[0] > junctions[1] && junctions[1] > junctions[2],
        "{junctions:?}"
    );
    assert!(matches!(
        build_z_lambda_delaunay(3, &DelaunayProfile::constant(4).unwrap(), 1.0),
        Err(semilinear::Error::Regime(_))
    ));
}
