//! Cylinder variables `v(t) = r^m u(r)`, `t = ln r`, `m = 2/(p-1)`.
//!
//! A radial steady state becomes a solution of the autonomous equation
//!
//! ```text
//! v'' + (N - 2 - 2m) v' - m (N - 2 - m) v + |v|^{p-1} v = 0,
//! ```
//!
//! which is Hamiltonian exactly when `p = (N+2)/(N-2)`. Its periodic
//! solutions give the Delaunay-type singular steady states.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{classify_regime, is_critical, ProblemParams, Regime, SingularSteadyState};
use crate::ode::{self, DenseTrajectory, IntegratorOptions, SecondOrderSystem};
use crate::radial_ode::{integrate_regular, odd_power, regular_series, RadialFunction, RadialProfile, STARTUP_RADIUS};

/// Distance from `v = 0` at which the fast-decaying orbit is seeded.
pub const HETEROCLINIC_SEED: f64 = 1e-8;

/// The backward run stops once `|v - L| + |v'|` falls below this fraction of `L`.
pub const SETTLE_TOL: f64 = 1e-9;

/// Orbits with minimum below this fraction of `v*` are refused.
pub const SEPARATRIX_GUARD: f64 = 1e-3;

/// The transformed equation as a second-order system in `t`.
#[derive(Debug, Clone, Copy)]
pub struct CylinderEquation {
    p: f64,
    damping: f64,
    stiffness: f64,
}

impl CylinderEquation {
    pub fn new(params: ProblemParams) -> Self {
        if is_critical(params) {
            let a = 0.5 * (params.n() - 2.0);
            return Self {
                p: params.p(),
                damping: 0.0,
                stiffness: a * a,
            };
        }
        let m = params.decay_rate();
        Self {
            p: params.p(),
            damping: params.n() - 2.0 - 2.0 * m,
            stiffness: m * (params.n() - 2.0 - m),
        }
    }

    /// Coefficient of `v'`; zero exactly at the Sobolev exponent.
    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// Coefficient `m (N - 2 - m)` of the linear restoring term.
    pub fn stiffness(&self) -> f64 {
        self.stiffness
    }
}

impl SecondOrderSystem for CylinderEquation {
    fn accel(&self, _t: f64, v: f64, dv: f64) -> f64 {
        -self.damping * dv + self.stiffness * v - odd_power(v, self.p)
    }

    fn jerk(&self, t: f64, v: f64, dv: f64) -> f64 {
        let a = self.accel(t, v, dv);
        -self.damping * a + self.stiffness * dv - self.p * v.abs().powf(self.p - 1.0) * dv
    }
}

/// The transformed equation for `w = v - L`, written so that the linear
/// part is exact and the nonlinear remainder carries no cancellation.
#[derive(Debug, Clone, Copy)]
pub struct DeviationEquation {
    p: f64,
    damping: f64,
    amplitude: f64,
    linear: f64,
    forcing: f64,
}

/// `|1+x|^{p-1}(1+x) - 1 - p x`.
fn remainder(x: f64, p: f64) -> f64 {
    if x > -1.0 {
        (p * x.ln_1p()).exp_m1() - p * x
    } else {
        odd_power(1.0 + x, p) - 1.0 - p * x
    }
}

/// Derivative of [`remainder`].
fn remainder_slope(x: f64, p: f64) -> f64 {
    if x > -1.0 {
        p * ((p - 1.0) * x.ln_1p()).exp_m1()
    } else {
        p * ((1.0 + x).abs().powf(p - 1.0) - 1.0)
    }
}

impl DeviationEquation {
    pub fn new(params: ProblemParams) -> Result<Self> {
        let amplitude = SingularSteadyState::new(params)?.amplitude();
        let p = params.p();
        let lp1 = amplitude.powf(p - 1.0);
        Ok(Self {
            p,
            damping: params.n() - 2.0 - 2.0 * params.decay_rate(),
            amplitude,
            linear: (p - 1.0) * lp1,
            forcing: lp1 * amplitude,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

impl SecondOrderSystem for DeviationEquation {
    fn accel(&self, _t: f64, w: f64, dw: f64) -> f64 {
        let x = w / self.amplitude;
        -self.damping * dw - self.linear * w - self.forcing * remainder(x, self.p)
    }

    fn jerk(&self, t: f64, w: f64, dw: f64) -> f64 {
        let x = w / self.amplitude;
        let a = self.accel(t, w, dw);
        let lp1 = self.forcing / self.amplitude;
        -self.damping * a - self.linear * dw - lp1 * remainder_slope(x, self.p) * dw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Constant,
    Homoclinic,
    Periodic,
    Heteroclinic,
    /// A transformed profile that fits none of the above, e.g. the positive
    /// part of a subcritical profile.
    Transient,
}

/// A trajectory `(v, v')` of the transformed equation.
#[derive(Debug, Clone, PartialEq)]
pub struct CylindricalOrbit {
    params: ProblemParams,
    traj: DenseTrajectory,
    energy: Option<f64>,
    kind: OrbitKind,
    period: Option<f64>,
}

impl CylindricalOrbit {
    pub fn params(&self) -> ProblemParams {
        self.params
    }

    pub fn t_grid(&self) -> &[f64] {
        self.traj.times()
    }

    pub fn v(&self) -> &[f64] {
        self.traj.values()
    }

    pub fn v_prime(&self) -> &[f64] {
        self.traj.derivatives()
    }

    /// Energy at the first node; only set at the Sobolev exponent.
    pub fn energy(&self) -> Option<f64> {
        self.energy
    }

    pub fn kind(&self) -> OrbitKind {
        self.kind
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn trajectory(&self) -> &DenseTrajectory {
        &self.traj
    }

    pub fn eval(&self, t: f64) -> (f64, f64) {
        self.traj.eval(t)
    }

    /// `max |E(t_i) - E(t_0)|` over the nodes. `None` off the Sobolev exponent.
    pub fn energy_drift(&self) -> Option<f64> {
        let e0 = self.energy?;
        let n = self.params.dim();
        Some(
            self.v()
                .iter()
                .zip(self.v_prime())
                .map(|(&v, &dv)| (critical_energy(n, v, dv) - e0).abs())
                .fold(0.0, f64::max),
        )
    }
}

/// `v* = ((N-2)/2)^{(N-2)/2}`, the positive equilibrium at the Sobolev exponent.
pub fn critical_equilibrium(dim: u32) -> Result<f64> {
    check_dim(dim)?;
    let a = 0.5 * (f64::from(dim) - 2.0);
    Ok(a.powf(a))
}

/// `E = v'²/2 - ((N-2)²/8) v² + ((N-2)/(2N)) |v|^{2N/(N-2)}`.
pub fn critical_energy(dim: u32, v: f64, dv: f64) -> f64 {
    let n = f64::from(dim);
    0.5 * dv * dv - (n - 2.0).powi(2) / 8.0 * v * v + (n - 2.0) / (2.0 * n) * v.abs().powf(2.0 * n / (n - 2.0))
}

/// The potential part of [`critical_energy`].
pub fn critical_potential(dim: u32, v: f64) -> f64 {
    critical_energy(dim, v, 0.0)
}

/// `v'²/2 - m(N-2-m) v²/2 + |v|^{p+1}/(p+1)`; conserved only when the damping vanishes.
pub fn cylinder_energy(params: ProblemParams, v: f64, dv: f64) -> f64 {
    let eq = CylinderEquation::new(params);
    let p = params.p();
    0.5 * dv * dv - 0.5 * eq.stiffness * v * v + v.abs().powf(p + 1.0) / (p + 1.0)
}

fn check_dim(dim: u32) -> Result<()> {
    if dim < 3 {
        return Err(Error::domain(format!("requires N >= 3, got {dim}")));
    }
    Ok(())
}

/// `(N(N-2))^{(N-2)/4} (2 cosh t)^{-(N-2)/2}`.
pub fn homoclinic(dim: u32, t: f64) -> Result<f64> {
    check_dim(dim)?;
    let n = f64::from(dim);
    let a = 0.5 * (n - 2.0);
    // 2 cosh t = e^{|t|} (1 + e^{-2|t|}), safe for large |t|.
    let s = t.abs();
    let log_cosh2 = s + (-2.0 * s).exp().ln_1p();
    Ok((0.5 * a * (n * (n - 2.0)).ln() - a * log_cosh2).exp())
}

/// Derivative of [`homoclinic`] in `t`.
pub fn homoclinic_derivative(dim: u32, t: f64) -> Result<f64> {
    let v = homoclinic(dim, t)?;
    Ok(-0.5 * (f64::from(dim) - 2.0) * t.tanh() * v)
}

fn build_orbit(params: ProblemParams, traj: DenseTrajectory, kind: OrbitKind, period: Option<f64>) -> CylindricalOrbit {
    let energy = if is_critical(params) {
        Some(critical_energy(params.dim(), traj.values()[0], traj.derivatives()[0]))
    } else {
        None
    };
    CylindricalOrbit {
        params,
        traj,
        energy,
        kind,
        period,
    }
}

fn orbit_options() -> IntegratorOptions {
    IntegratorOptions::with_tolerances(1e-12, 1e-14)
}

/// Integrate the transformed equation from `(v0, dv0)` at `t = 0` to `t_end`.
pub fn integrate_cylinder(params: ProblemParams, v0: f64, dv0: f64, t_end: f64) -> Result<CylindricalOrbit> {
    let eq = CylinderEquation::new(params);
    let (traj, _) = ode::integrate(&eq, 0.0, v0, dv0, t_end, &orbit_options(), |_, _, _| false)?;
    Ok(build_orbit(params, traj, OrbitKind::Transient, None))
}

/// Transform sampled radial data `(r_i, u_i, u'_i)` with `r_i > 0`.
pub fn cylinder_transform_samples(
    params: ProblemParams,
    radii: &[f64],
    values: &[f64],
    derivatives: &[f64],
) -> Result<CylindricalOrbit> {
    if radii.len() != values.len() || radii.len() != derivatives.len() || radii.len() < 2 {
        return Err(Error::domain("need at least two samples of equal length"));
    }
    let eq = CylinderEquation::new(params);
    let m = params.decay_rate();
    let (mut t, mut v, mut dv, mut ddv, mut dddv) = (vec![], vec![], vec![], vec![], vec![]);
    for ((&r, &u), &du) in radii.iter().zip(values).zip(derivatives) {
        if r <= 0.0 {
            continue;
        }
        if !(u > 0.0) {
            return Err(Error::domain(format!(
                "profile must be positive on its range; u({r}) = {u}"
            )));
        }
        let rm = r.powf(m);
        let (vi, dvi) = (rm * u, rm * (m * u + r * du));
        t.push(r.ln());
        v.push(vi);
        dv.push(dvi);
        ddv.push(eq.accel(0.0, vi, dvi));
        dddv.push(eq.jerk(0.0, vi, dvi));
    }
    if t.len() < 2 || t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain(
            "radii must be strictly increasing with two positive entries",
        ));
    }
    let traj = DenseTrajectory::from_nodes(t, v, dv, ddv, dddv, 0.0);
    let kind = classify_transformed(params, &traj);
    Ok(build_orbit(params, traj, kind, None))
}

fn classify_transformed(params: ProblemParams, traj: &DenseTrajectory) -> OrbitKind {
    if let Ok(l) = SingularSteadyState::new(params).map(|s| s.amplitude()) {
        if traj.values().iter().all(|v| (v - l).abs() <= 1e-10 * l) {
            return OrbitKind::Constant;
        }
    }
    match classify_regime(params) {
        Regime::Critical => {
            let e = critical_energy(params.dim(), traj.values()[0], traj.derivatives()[0]);
            if e.abs() <= 1e-6 {
                OrbitKind::Homoclinic
            } else {
                OrbitKind::Periodic
            }
        }
        Regime::SobolevToJl | Regime::AtOrAboveJl => OrbitKind::Heteroclinic,
        _ => OrbitKind::Transient,
    }
}

/// Transform of a sampled profile, using only the nodes with `r > 0`.
pub fn cylinder_transform(profile: &RadialProfile) -> Result<CylindricalOrbit> {
    cylinder_transform_samples(
        profile.params(),
        profile.grid(),
        profile.values(),
        profile.derivatives(),
    )
}

/// Translation `s` and uniform error of the best match
/// `v(t) ≈ homoclinic(N, t - s)`, with `s` the location of the maximum of `v`.
pub fn homoclinic_translation_error(orbit: &CylindricalOrbit) -> Result<(f64, f64)> {
    let n = orbit.params().dim();
    check_dim(n)?;
    let traj = orbit.trajectory();
    let peak = traj
        .roots(1, traj.t_start(), traj.t_end(), 1e-13)
        .into_iter()
        .find(|c| !c.rising)
        .ok_or_else(|| Error::Search("no maximum of v in the orbit".into()))?;
    let shift = peak.t;
    let mut err: f64 = 0.0;
    for (&t, &v) in orbit.t_grid().iter().zip(orbit.v()) {
        err = err.max((v - homoclinic(n, t - shift)?).abs());
    }
    let samples = 4000;
    let (a, b) = (traj.t_start(), traj.t_end());
    for i in 0..=samples {
        let t = a + (b - a) * i as f64 / samples as f64;
        err = err.max((traj.value(t) - homoclinic(n, t - shift)?).abs());
    }
    Ok((shift, err))
}

/// Parameters of a Delaunay-type solution `ψ(r) = h(ln r - phase) r^{-(N-2)/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelaunayParams {
    pub dim: u32,
    pub min_value: f64,
    pub max_value: f64,
    pub period: f64,
    /// Location of a minimum of `h` in `t = ln r`.
    pub phase: f64,
    pub energy: f64,
    pub v_star: f64,
}

/// A periodic orbit of the critical transformed equation with its
/// parameters. `orbit` spans one period starting at a minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub params: DelaunayParams,
    pub orbit: CylindricalOrbit,
    /// `max |v(T/2 + s) - v(T/2 - s)|` about the maximum.
    pub symmetry_error: f64,
    /// Sign changes of `v'` strictly inside one period.
    pub interior_extrema: usize,
}

/// Locate the periodic orbit with minimum `m` and its period.
pub fn periodic_orbit(dim: u32, m: f64) -> Result<PeriodicOrbit> {
    let v_star = critical_equilibrium(dim)?;
    let params = ProblemParams::sobolev_critical(dim)?;
    let e_min = critical_potential(dim, v_star);
    if !(m > 0.0 && m <= v_star * (1.0 + 1e-12)) {
        return Err(Error::domain(format!(
            "minimum value must lie in (0, {v_star}], got {m}"
        )));
    }
    let small_period = 2.0 * PI / (f64::from(dim) - 2.0).sqrt();
    if (m - v_star).abs() <= 1e-12 * v_star {
        let eq = CylinderEquation::new(params);
        let nodes = vec![0.0, small_period];
        let traj = DenseTrajectory::from_nodes(
            nodes,
            vec![v_star; 2],
            vec![0.0; 2],
            vec![eq.accel(0.0, v_star, 0.0); 2],
            vec![0.0; 2],
            0.0,
        );
        let orbit = CylindricalOrbit {
            params,
            traj,
            energy: Some(e_min),
            kind: OrbitKind::Constant,
            period: Some(small_period),
        };
        return Ok(PeriodicOrbit {
            params: DelaunayParams {
                dim,
                min_value: v_star,
                max_value: v_star,
                period: small_period,
                phase: 0.0,
                energy: e_min,
                v_star,
            },
            orbit,
            symmetry_error: 0.0,
            interior_extrema: 0,
        });
    }
    if m < SEPARATRIX_GUARD * v_star {
        return Err(Error::Conditioning(format!(
            "minimum value {m} is within {SEPARATRIX_GUARD}·v* of the separatrix"
        )));
    }

    let eq = CylinderEquation::new(params);
    let mut seen_fall = false;
    let (traj, term) = ode::integrate(&eq, 0.0, m, 0.0, 1e4, &orbit_options(), |_, _, dv| {
        if dv < 0.0 {
            seen_fall = true;
        }
        seen_fall && dv >= 0.0
    })?;
    if term != ode::Termination::Stopped {
        return Err(Error::Search("orbit did not return to its minimum".into()));
    }
    let crossings = traj.roots(1, 1e-9, traj.t_end(), 1e-14);
    let ret = crossings
        .iter()
        .find(|c| c.rising)
        .ok_or_else(|| Error::Search("no return to the minimum".into()))?;
    // Newton polish on v'(T) = 0 with v'' from the equation.
    let mut period = ret.t;
    for _ in 0..4 {
        let (v, dv) = traj.eval(period);
        let step = dv / eq.accel(0.0, v, dv);
        if !step.is_finite() || !traj.contains(period - step) {
            break;
        }
        period -= step;
        if step.abs() < 1e-15 * period {
            break;
        }
    }
    // One full period of nodes, ending exactly at T.
    let (pv, pdv) = traj.eval(period);
    let keep = traj.times().partition_point(|&t| t < period);
    let mut t: Vec<f64> = traj.times()[..keep].to_vec();
    let mut v: Vec<f64> = traj.values()[..keep].to_vec();
    let mut dv: Vec<f64> = traj.derivatives()[..keep].to_vec();
    let mut ddv: Vec<f64> = traj.second_derivatives()[..keep].to_vec();
    if period - t[keep - 1] < 1e-9 * period {
        t.pop();
        v.pop();
        dv.pop();
        ddv.pop();
    }
    t.push(period);
    v.push(pv);
    dv.push(pdv);
    ddv.push(eq.accel(0.0, pv, pdv));
    let dddv = t
        .iter()
        .zip(&v)
        .zip(&dv)
        .map(|((&ti, &vi), &di)| eq.jerk(ti, vi, di))
        .collect();
    let one = DenseTrajectory::from_nodes(t, v, dv, ddv, dddv, traj.error_estimate());

    let interior = one.roots(1, 1e-9 * period, period * (1.0 - 1e-9), 1e-14);
    let half = interior.iter().find(|c| !c.rising).map(|c| c.t).unwrap_or(0.5 * period);
    let max_value = one.value(half);
    let samples = 2000;
    let mut symmetry_error: f64 = 0.0;
    let reach = half.min(period - half);
    for i in 0..=samples {
        let s = reach * i as f64 / samples as f64;
        symmetry_error = symmetry_error.max((one.value(half + s) - one.value(half - s)).abs());
    }
    let energy = critical_energy(dim, m, 0.0);
    let orbit = CylindricalOrbit {
        params,
        traj: one,
        energy: Some(energy),
        kind: OrbitKind::Periodic,
        period: Some(period),
    };
    Ok(PeriodicOrbit {
        params: DelaunayParams {
            dim,
            min_value: m,
            max_value,
            period,
            phase: 0.0,
            energy,
            v_star,
        },
        orbit,
        symmetry_error,
        interior_extrema: interior.len(),
    })
}

/// `ψ(r) = h(ln r - phase) r^{-(N-2)/2}` for a periodic `h`, or `h ≡ v*`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaunayProfile {
    params: DelaunayParams,
    /// `h` on one period starting at a minimum; `None` for the constant orbit.
    orbit: Option<DenseTrajectory>,
}

impl DelaunayProfile {
    pub fn new(periodic: &PeriodicOrbit) -> Self {
        let orbit = match periodic.orbit.kind() {
            OrbitKind::Constant => None,
            _ => Some(periodic.orbit.trajectory().clone()),
        };
        Self {
            params: periodic.params,
            orbit,
        }
    }

    /// The constant orbit `h ≡ v*`, for which `ψ = φ∞`.
    pub fn constant(dim: u32) -> Result<Self> {
        Ok(Self::new(&periodic_orbit(dim, critical_equilibrium(dim)?)?))
    }

    pub fn params(&self) -> DelaunayParams {
        self.params
    }

    pub fn is_constant(&self) -> bool {
        self.orbit.is_none()
    }

    /// The same profile with `h` translated by `s`, i.e. `phase + s`.
    pub fn translated(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.params.phase += s;
        out
    }

    /// `(h(s), h'(s))` for any real `s`, using evenness about the minimum.
    pub fn h(&self, s: f64) -> (f64, f64) {
        let Some(orbit) = &self.orbit else {
            return (self.params.v_star, 0.0);
        };
        let period = self.params.period;
        let mut x = s - period * (s / period).round();
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        x = x.abs().min(0.5 * period);
        let (v, dv) = orbit.eval(x);
        (v, sign * dv)
    }

    fn half_exponent(&self) -> f64 {
        0.5 * (f64::from(self.params.dim) - 2.0)
    }

    /// `ψ(r)`; domain error for `r <= 0`.
    pub fn profile(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("ψ is singular at r = {r}; need r > 0")));
        }
        Ok(self.value(r))
    }
}

impl RadialFunction for DelaunayProfile {
    fn value(&self, r: f64) -> f64 {
        let (h, _) = self.h(r.ln() - self.params.phase);
        h * r.powf(-self.half_exponent())
    }

    fn derivative(&self, r: f64) -> f64 {
        let a = self.half_exponent();
        let (h, dh) = self.h(r.ln() - self.params.phase);
        (dh - a * h) * r.powf(-a - 1.0)
    }

    fn domain(&self) -> (f64, f64) {
        (f64::MIN_POSITIVE, f64::INFINITY)
    }
}

/// `ψ(r)` for the given parameters (the periodic orbit is recomputed).
pub fn delaunay_profile(d: &DelaunayParams, r: f64) -> Result<f64> {
    let base = DelaunayProfile::new(&periodic_orbit(d.dim, d.min_value)?);
    base.translated(d.phase).profile(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heteroclinic {
    pub orbit: CylindricalOrbit,
    /// `v` at the earliest time reached, approaching `L`.
    pub backward_limit: f64,
    pub amplitude: f64,
    /// Least-squares slope of `ln v` against `t` where `v ∈ [1e-6 L, 1e-3 L]`.
    pub forward_slope: f64,
    /// `-(N - 2 - m)`.
    pub expected_slope: f64,
    /// Largest difference, after aligning in time, between the orbits
    /// seeded at `1e-8` and `1e-9`.
    pub seed_sensitivity: f64,
}

/// The orbit joining `v = L` (as `t → -∞`) to `v = 0` (as `t → +∞`) for
/// `p_sg < p < p_S`.
///
/// `L` is a repeller of the damped flow, so the orbit is computed backwards
/// from the stable manifold of `0`, seeded at `δ (1, -(N-2-m))`.
pub fn heteroclinic_subcritical(params: ProblemParams) -> Result<Heteroclinic> {
    if classify_regime(params) != Regime::SerrinToSobolev {
        return Err(Error::regime(format!(
            "fast-decaying orbit requires p_sg < p < p_S (N = {}, p = {})",
            params.dim(),
            params.p()
        )));
    }
    let amplitude = SingularSteadyState::new(params)?.amplitude();
    let m = params.decay_rate();
    let decay = params.n() - 2.0 - m;
    let eq = CylinderEquation::new(params);
    let growth_time = (amplitude / HETEROCLINIC_SEED).ln() / decay;
    // The spiral into L shrinks like e^{|damping| t / 2} backwards.
    let settle_time = 2.0 * (1e10f64).ln() / eq.damping().abs();
    let t_end = -(growth_time + settle_time + 10.0);
    let opts = IntegratorOptions::with_tolerances(1e-12, 1e-20);
    let settled =
        |t: f64, v: f64, dv: f64| t < -growth_time && (v - amplitude).abs() + dv.abs() <= SETTLE_TOL * amplitude;
    let run = |delta: f64| ode::integrate(&eq, 0.0, delta, -decay * delta, t_end, &opts, settled).map(|(traj, _)| traj);
    let traj = run(HETEROCLINIC_SEED)?;
    let check = run(0.1 * HETEROCLINIC_SEED)?;

    // The smaller seed reaches the same orbit ln(10)/decay later.
    let lag = 10f64.ln() / decay;
    let mut seed_sensitivity: f64 = 0.0;
    for i in 0..=2000 {
        let t = traj.t_start() + (0.0 - traj.t_start()) * i as f64 / 2000.0;
        let a = traj.value(t);
        let b = check.value(t - lag);
        if b.is_finite() {
            seed_sensitivity = seed_sensitivity.max((a - b).abs());
        }
    }

    let (lo, hi) = (1e-6 * amplitude, 1e-3 * amplitude);
    let pts: Vec<(f64, f64)> = traj
        .times()
        .iter()
        .zip(traj.values())
        .filter(|(_, &v)| v >= lo && v <= hi)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    let forward_slope =
        least_squares_slope(&pts).ok_or_else(|| Error::Search("too few samples in the decay window".into()))?;
    let backward_limit = traj.values()[0];
    let orbit = build_orbit(params, traj, OrbitKind::Heteroclinic, None);
    Ok(Heteroclinic {
        orbit,
        backward_limit,
        amplitude,
        forward_slope,
        expected_slope: -decay,
        seed_sensitivity,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Starting radius of the deviation orbit: the startup radius, or larger
/// when `r^m Φ` would otherwise sit below `1e-6 L` and be lost in `w = v - L`.
/// Always below `L^{1/m}`, where `φ∞ > 1 ≥ Φ`.
pub fn deviation_start(params: ProblemParams) -> Result<f64> {
    let amplitude = SingularSteadyState::new(params)?.amplitude();
    let m = params.decay_rate();
    Ok(STARTUP_RADIUS.max((1e-6 * amplitude).powf(1.0 / m)))
}

/// The regular profile `Φ` as a deviation orbit `w = r^m Φ(r) - L` in
/// `t = ln r`, from [`deviation_start`] up to `t_end`.
///
/// Zeros of `w` are exactly the intersections of `Φ` with `φ∞`, and the
/// absolute tolerance is tiny so that they are resolved far out where the
/// gap is many orders of magnitude below `L`.
pub fn regular_deviation_orbit(params: ProblemParams, t_end: f64) -> Result<DenseTrajectory> {
    let eq = DeviationEquation::new(params)?;
    let m = params.decay_rate();
    let r0 = deviation_start(params)?;
    let t0 = r0.ln();
    if !(t_end > t0) {
        return Err(Error::domain(format!("t_end must exceed ln r0 = {t0}")));
    }
    let (u, du) = if r0 > STARTUP_RADIUS {
        integrate_regular(params, r0, 1e-13, 1e-15)?.eval(r0)
    } else {
        regular_series(params, r0)
    };
    let rm = r0.powf(m);
    let w0 = rm * u - eq.amplitude();
    let dw0 = rm * (m * u + r0 * du);
    let opts = IntegratorOptions::with_tolerances(1e-12, 1e-300);
    let (traj, _) = ode::integrate(&eq, t0, w0, dw0, t_end, &opts, |_, _, _| false)?;
    Ok(traj)
}
