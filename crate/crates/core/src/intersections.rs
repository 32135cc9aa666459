//! Intersections of radial profiles: a generic scan with adaptive refinement,
//! the first intersection radius `r_1` of `Φ` with `φ∞`, the regime census,
//! and the first intersection `τ_λ` of `φ_λ` with a Delaunay profile.

use serde::Serialize;

use crate::emden_fowler::{deviation_start, regular_deviation_orbit, DelaunayProfile};
use crate::error::{Error, Result};
use crate::exponents::{classify_regime, is_critical, ProblemParams, Regime, SingularSteadyState};
use crate::radial_ode::{integrate_regular_default, RadialFunction, RadialProfile};

/// Scan points per decade of radius.
pub const SCAN_PER_DECADE: usize = 10_000;

/// Refinement factor near sign changes and near-tangencies.
pub const REFINE_FACTOR: usize = 10;

/// Lower end of the census window.
pub const CENSUS_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionSet {
    pub radii: Vec<f64>,
    pub transversal: Vec<bool>,
    pub window: (f64, f64),
    pub warnings: Vec<String>,
}

impl IntersectionSet {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

fn scan_grid(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let decades = (b / a).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(2);
    let (la, lb) = (a.ln(), b.ln());
    let mut out: Vec<f64> = (0..=n).map(|i| (la + (lb - la) * i as f64 / n as f64).exp()).collect();
    out[0] = a;
    out[n] = b;
    out
}

/// Refine a root of `d` bracketed in `[a, b]` until the bracket is below
/// `tol` relative in `r` and the gap meets the residual bound.
fn refine_root(d: &impl Fn(f64) -> (f64, f64), mut a: f64, mut b: f64, mut da: f64, tol: f64) -> f64 {
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return m;
        }
        let (dm, scale) = d(m);
        let narrow = b - a <= tol * m;
        if dm == 0.0 || (narrow && dm.abs() <= tol * scale) {
            return m;
        }
        if (dm < 0.0) == (da < 0.0) {
            a = m;
            da = dm;
        } else {
            b = m;
        }
    }
}

/// All sign changes of `f - g` on `window`.
///
/// The window is scanned at [`SCAN_PER_DECADE`] log-spaced points; intervals
/// with a sign change or a near-tangency (`|f - g| < 1e-3` of the local
/// scale) are rescanned [`REFINE_FACTOR`] times finer. Roots are refined by
/// bisection. A root is transversal when `|f' - g'|` exceeds
/// `10·tol·(|f'| + |g'| + (|f| + |g|)/r)`.
pub fn radial_intersections<F, G>(f: &F, g: &G, window: (f64, f64), tol: f64) -> Result<IntersectionSet>
where
    F: RadialFunction + ?Sized,
    G: RadialFunction + ?Sized,
{
    let (a, b) = window;
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::domain(format!("invalid window ({a}, {b}); need 0 < a < b")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    for (name, dom) in [("f", f.domain()), ("g", g.domain())] {
        if a < dom.0 || b > dom.1 {
            return Err(Error::domain(format!(
                "{name} is only evaluable on [{}, {}]",
                dom.0, dom.1
            )));
        }
    }
    let gap = |r: f64| {
        let (fv, gv) = (f.value(r), g.value(r));
        (fv - gv, fv.abs() + gv.abs())
    };
    let grid = scan_grid(a, b, SCAN_PER_DECADE);
    let samples: Vec<(f64, f64)> = grid.iter().map(|&r| gap(r)).collect();
    let mut out = IntersectionSet {
        radii: vec![],
        transversal: vec![],
        window,
        warnings: vec![],
    };
    let tie = |d: f64, s: f64| d.abs() <= 4.0 * f64::EPSILON * s;
    if samples.iter().all(|&(d, s)| tie(d, s)) {
        out.warnings
            .push("degenerate: the profiles coincide at every scan point".into());
        return Ok(out);
    }

    let mut roots = Vec::new();
    let mut tangency_flagged = false;
    for i in 0..grid.len() - 1 {
        let (d0, s0) = samples[i];
        let (d1, s1) = samples[i + 1];
        let sign_change = (d0 < 0.0) != (d1 < 0.0) && d0 != 0.0 && d1 != 0.0;
        let near = d0.abs() < 1e-3 * s0 || d1.abs() < 1e-3 * s1;
        if d0 == 0.0 && i > 0 {
            roots.push(grid[i]);
        }
        if !(sign_change || near) {
            continue;
        }
        let (la, lb) = (grid[i].ln(), grid[i + 1].ln());
        let sub: Vec<f64> = (0..=REFINE_FACTOR)
            .map(|j| (la + (lb - la) * j as f64 / REFINE_FACTOR as f64).exp())
            .collect();
        let mut changes = 0;
        let mut prev = (sub[0], d0);
        for (j, &r) in sub.iter().enumerate().skip(1) {
            let dr = if j == REFINE_FACTOR { d1 } else { gap(r).0 };
            if dr != 0.0 && prev.1 != 0.0 && (dr < 0.0) != (prev.1 < 0.0) {
                roots.push(refine_root(&gap, prev.0, r, prev.1, tol));
                changes += 1;
            } else if dr == 0.0 && j < REFINE_FACTOR {
                roots.push(r);
                changes += 1;
            }
            prev = (r, dr);
        }
        if changes > 1 {
            out.warnings.push(format!(
                "{changes} sign changes inside one scan interval near r = {:.6e}",
                grid[i]
            ));
        }
        if near && !sign_change && changes == 0 && !tangency_flagged {
            let local_min = d0.abs().min(d1.abs());
            if local_min < 1e-8 * s0.max(s1) {
                out.warnings
                    .push(format!("possible unresolved tangency near r = {:.6e}", grid[i]));
                tangency_flagged = true;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= tol * y.abs());
    for r in roots {
        let (fv, gv) = (f.value(r), g.value(r));
        let (fd, gd) = (f.derivative(r), g.derivative(r));
        let scale = fd.abs() + gd.abs() + (fv.abs() + gv.abs()) / r;
        out.transversal.push((fd - gd).abs() > 10.0 * tol * scale);
        out.radii.push(r);
    }
    Ok(out)
}

/// Zeros of `r^m Φ(r) - L` on `(t_lo, t_hi)` in `t = ln r`, refined to
/// 1e-13 in `t`.
fn deviation_zeros(params: ProblemParams, r_max: f64) -> Result<Vec<f64>> {
    let orbit = regular_deviation_orbit(params, r_max.ln())?;
    Ok(orbit
        .roots(0, orbit.t_start(), orbit.t_end(), 1e-13)
        .into_iter()
        .map(|c| c.t.exp())
        .collect())
}

/// `Φ ≤ 1` on `[0, r0]` while `φ∞(r0) > 1` rules out crossings below the
/// start `r0` of the deviation orbit.
fn no_crossing_below_startup(params: ProblemParams) -> Result<bool> {
    let s = SingularSteadyState::new(params)?;
    Ok(s.value(deviation_start(params)?) > 1.0)
}

fn require_first_intersection(params: ProblemParams) -> Result<Regime> {
    let regime = classify_regime(params);
    if !regime.has_first_intersection() {
        return Err(Error::regime(format!(
            "Φ meets φ∞ only for p_sg < p < p_JL (N = {}, p = {}, regime {regime})",
            params.dim(),
            params.p()
        )));
    }
    Ok(regime)
}

/// The smallest radius at which `Φ = φ∞`.
pub fn first_intersection_radius(params: ProblemParams) -> Result<f64> {
    require_first_intersection(params)?;
    if !no_crossing_below_startup(params)? {
        return Err(Error::Search(
            "startup radius too large to exclude early crossings".into(),
        ));
    }
    let mut r_max = 10.0;
    loop {
        if let Some(&r) = deviation_zeros(params, r_max)?.first() {
            return Ok(r);
        }
        if r_max > 1e8 {
            return Err(Error::Search(format!("no intersection found below r = {r_max:e}")));
        }
        r_max *= 10.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Census {
    pub regime: Regime,
    pub count: usize,
    pub consistent: bool,
    pub radii: Vec<f64>,
    pub r_max: f64,
    /// First root of `Φ`, where the count stops in the subcritical regime.
    pub first_root: Option<f64>,
    /// Count on `(ε, 2R)`, used for the growth test above `p_S`.
    pub count_at_double: Option<usize>,
}

/// Count the intersections of `Φ` with `φ∞` on `(ε, R)` and compare the
/// count with the behavior expected in the regime of `p`.
pub fn regime_intersection_census(params: ProblemParams, r_max: f64) -> Result<Census> {
    let regime = classify_regime(params);
    if regime == Regime::BelowSerrin {
        return Err(Error::regime(format!(
            "no singular steady state for N = {}, p = {}",
            params.dim(),
            params.p()
        )));
    }
    if !(r_max > CENSUS_EPS && r_max.is_finite()) {
        return Err(Error::domain(format!(
            "census radius must exceed {CENSUS_EPS}, got {r_max}"
        )));
    }
    if !no_crossing_below_startup(params)? {
        return Err(Error::Search(
            "startup radius too large to exclude early crossings".into(),
        ));
    }
    let reach = if regime == Regime::SobolevToJl {
        2.0 * r_max
    } else {
        r_max
    };
    let all = deviation_zeros(params, reach)?;
    let mut first_root = None;
    let mut radii: Vec<f64> = all.iter().copied().filter(|&r| r < r_max).collect();
    let mut count_at_double = None;
    let consistent = match regime {
        Regime::SerrinToSobolev => {
            let profile = integrate_regular_default(params, r_max)?;
            first_root = profile.first_root();
            if let Some(rho) = first_root {
                radii.retain(|&r| r < rho);
            }
            radii.len() == 2
        }
        Regime::Critical => radii.len() == 2,
        Regime::SobolevToJl => {
            count_at_double = Some(all.len());
            all.len() > radii.len()
        }
        Regime::AtOrAboveJl => radii.is_empty(),
        Regime::BelowSerrin => unreachable!(),
    };
    Ok(Census {
        regime,
        count: radii.len(),
        consistent,
        radii,
        r_max,
        first_root,
        count_at_double,
    })
}

/// Whether `Φ < φ∞` at every node of the deviation orbit on `(ε, R)`.
pub fn below_singular_nodewise(params: ProblemParams, r_max: f64) -> Result<bool> {
    if !no_crossing_below_startup(params)? {
        return Ok(false);
    }
    let orbit = regular_deviation_orbit(params, r_max.ln())?;
    Ok(orbit.values().iter().all(|&w| w < 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauLambda {
    pub tau: f64,
    pub transversal: bool,
    /// `V_λ' - h'` at the crossing in `t = ln r`.
    pub slope_gap: f64,
}

/// The first radius at which `φ_λ = ψ`, for `p = p_S`.
///
/// Works in `t = ln r`, where `r^{(N-2)/2} φ_λ(r) = V(t + k ln λ)` with
/// `V` the transformed `Φ` and `k = (p-1)/2`, and `r^{(N-2)/2} ψ = h`.
pub fn tau_lambda(
    params: ProblemParams,
    profile: &RadialProfile,
    delaunay: &DelaunayProfile,
    lambda: f64,
) -> Result<TauLambda> {
    if !is_critical(params) {
        return Err(Error::regime(format!(
            "τ_λ is defined at the Sobolev exponent; got p = {}",
            params.p()
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    let a = 0.5 * (params.n() - 2.0);
    let k = params.scaling_exponent();
    let shift = k * lambda.ln();
    let phase = delaunay.params().phase;
    // V(s) from the sampled profile; the series value covers s < ln r0.
    let v_of = |s: f64| -> (f64, f64) {
        let r = s.exp();
        let (u, du) = profile.eval(r);
        let ra = r.powf(a);
        (ra * u, ra * (a * u + r * du))
    };
    let gap = |t: f64| -> (f64, f64) {
        let (v, dv) = v_of(t + shift);
        let (h, dh) = delaunay.h(t - phase);
        (v - h, dv - dh)
    };
    // V increases from 0 to its maximum, which exceeds every periodic orbit.
    let s_peak = peak_of_transform(profile, a);
    let s_lo = (crate::radial_ode::STARTUP_RADIUS).ln() - 2.0;
    if s_peak >= profile.r_max().ln() {
        return Err(Error::Search("profile range does not reach the maximum of V".into()));
    }
    let (t_lo, t_hi) = (s_lo - shift, s_peak - shift);
    let (g_lo, _) = gap(t_lo);
    if !(g_lo < 0.0) {
        return Err(Error::Search(format!(
            "φ_λ not below ψ at the start of the search window (t = {t_lo})"
        )));
    }
    let n = ((t_hi - t_lo) * 4343.0).ceil() as usize + 1;
    let mut prev = (t_lo, g_lo);
    for i in 1..=n {
        let t = t_lo + (t_hi - t_lo) * i as f64 / n as f64;
        let (g, _) = gap(t);
        if g >= 0.0 {
            let root = crate::ode::bisect(&|x| gap(x).0, prev.0, t, prev.1, 1e-14);
            let (_, slope_gap) = gap(root);
            let (h, dh) = delaunay.h(root - phase);
            let scale = h.abs() + dh.abs();
            return Ok(TauLambda {
                tau: root.exp(),
                transversal: slope_gap.abs() > 1e-9 * scale,
                slope_gap,
            });
        }
        prev = (t, g);
    }
    Err(Error::Search(format!(
        "no crossing of φ_λ and ψ in t ∈ [{t_lo}, {t_hi}] (λ = {lambda})"
    )))
}

/// `ln r` at the maximum of `r^a Φ(r)`, from a fine log scan and bisection on the slope.
fn peak_of_transform(profile: &RadialProfile, a: f64) -> f64 {
    let slope = |s: f64| {
        let r = s.exp();
        let (u, du) = profile.eval(r);
        a * u + r * du
    };
    let (lo, hi) = ((1e-3f64).ln(), profile.r_max().ln());
    let n = 20_000;
    let mut prev = (lo, slope(lo));
    for i in 1..=n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        let d = slope(s);
        if prev.1 > 0.0 && d <= 0.0 {
            return crate::ode::bisect(&slope, prev.0, s, prev.1, 1e-14);
        }
        prev = (s, d);
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emden_fowler::{critical_equilibrium, periodic_orbit};

    fn params(n: u32, p: f64) -> ProblemParams {
        ProblemParams::new(n, p).unwrap()
    }

    #[test]
    fn critical_intersections_closed_form() {
        let pr = params(3, 5.0);
        let phi = integrate_regular_default(pr, 10.0).unwrap();
        let inf = SingularSteadyState::new(pr).unwrap();
        let set = radial_intersections(&phi, &inf, (1e-3, 10.0), 1e-12).unwrap();
        let want = [3.0 - 6f64.sqrt(), 3.0 + 6f64.sqrt()];
        assert_eq!(set.len(), 2);
        for (r, w) in set.radii.iter().zip(want) {
            assert!((r - w).abs() < 1e-6, "{r} vs {w}");
            let (f, g) = (phi.value(*r), inf.value(*r));
            assert!((f - g).abs() <= 1e-12 * (f.abs() + g.abs()));
        }
        assert!(set.transversal.iter().all(|&t| t));
        assert!((first_intersection_radius(pr).unwrap() - want[0]).abs() < 1e-9);
    }

    #[test]
    fn identical_profiles_are_degenerate() {
        let inf = SingularSteadyState::new(params(3, 5.0)).unwrap();
        let set = radial_intersections(&inf, &inf, (0.1, 10.0), 1e-10).unwrap();
        assert!(set.is_empty());
        assert!(set.warnings.iter().any(|w| w.contains("degenerate")));
    }

    #[test]
    fn census_regimes() {
        let c = regime_intersection_census(params(3, 4.0), 10.0).unwrap();
        assert_eq!(c.count, 2);
        assert!(c.consistent);
        assert!(c.first_root.is_none_or(|rho| c.radii[1] < rho));
        let c = regime_intersection_census(params(3, 4.0), 30.0).unwrap();
        assert_eq!(c.count, 2);
        assert!(c.radii[1] < c.first_root.unwrap());
        let c = regime_intersection_census(params(3, 5.0), 10.0).unwrap();
        assert_eq!(c.count, 2);
        assert!(c.consistent);
        let c = regime_intersection_census(params(11, 8.0), 1e3).unwrap();
        assert_eq!(c.count, 0);
        assert!(c.consistent);
        assert!(below_singular_nodewise(params(11, 8.0), 1e3).unwrap());
        assert!(matches!(
            regime_intersection_census(params(3, 2.5), 10.0),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn first_intersection_regimes() {
        let r = first_intersection_radius(params(3, 4.0)).unwrap();
        let phi = integrate_regular_default(params(3, 4.0), 20.0).unwrap();
        assert!(r > 0.0 && r < phi.first_root().unwrap());
        assert!(matches!(
            first_intersection_radius(params(11, 8.0)),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn tau_constant_delaunay_matches_scaled_r1() {
        let pr = params(3, 5.0);
        let phi = integrate_regular_default(pr, 50.0).unwrap();
        let flat = DelaunayProfile::constant(3).unwrap();
        let r1 = 3.0 - 6f64.sqrt();
        for &lam in &[0.5, 1.0, 3.0] {
            let tau = tau_lambda(pr, &phi, &flat, lam).unwrap();
            let want = r1 * f64::powf(lam, -2.0);
            assert!((tau.tau - want).abs() < 1e-9 * want, "{} vs {want}", tau.tau);
            assert!(tau.transversal);
        }
    }

    #[test]
    fn tau_monotone_in_lambda() {
        let pr = params(3, 5.0);
        let phi = integrate_regular_default(pr, 50.0).unwrap();
        let v_star = critical_equilibrium(3).unwrap();
        let psi = DelaunayProfile::new(&periodic_orbit(3, 0.5 * v_star).unwrap());
        let taus: Vec<f64> = [0.01, 0.1, 1.0, 10.0, 100.0]
            .iter()
            .map(|&l| tau_lambda(pr, &phi, &psi, l).unwrap().tau)
            .collect();
        assert!(taus.windows(2).all(|w| w[1] < w[0]), "{taus:?}");
    }
}
