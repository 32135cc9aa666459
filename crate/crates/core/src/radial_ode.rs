//! Regular radial steady states: `u'' + ((N-1)/r) u' + |u|^{p-1} u = 0`,
//! `u(0) = λ`, `u'(0) = 0`.
//!
//! The profile with `λ = 1` is integrated once by shooting from the origin;
//! every other member of the family is obtained from it by the scaling
//! `φ_λ(r) = λ Φ(λ^{(p-1)/2} r)`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{classify_regime, ProblemParams, Regime, SingularSteadyState};
use crate::ode::{self, DenseTrajectory, IntegratorOptions, SecondOrderSystem, Termination};

/// Radius up to which the profile is seeded from its Taylor expansion.
pub const STARTUP_RADIUS: f64 = 1e-4;

/// Absolute tolerance in `r` for root location.
pub const ROOT_TOL: f64 = 1e-12;

/// Step cap for profiles, so that `u''` of the dense output stays accurate.
pub const DENSE_STEP: f64 = 0.05;

/// A radial function with a derivative, evaluated at `r >= 0`.
pub trait RadialFunction {
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> f64;

    /// Interval on which the function can be evaluated.
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
}

impl RadialFunction for SingularSteadyState {
    fn value(&self, r: f64) -> f64 {
        SingularSteadyState::value(self, r)
    }

    fn derivative(&self, r: f64) -> f64 {
        SingularSteadyState::derivative(self, r)
    }

    fn domain(&self) -> (f64, f64) {
        (f64::MIN_POSITIVE, f64::INFINITY)
    }
}

impl<F: RadialFunction + ?Sized> RadialFunction for &F {
    fn value(&self, r: f64) -> f64 {
        (**self).value(r)
    }
    fn derivative(&self, r: f64) -> f64 {
        (**self).derivative(r)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
}

impl<F: RadialFunction + ?Sized> RadialFunction for Arc<F> {
    fn value(&self, r: f64) -> f64 {
        (**self).value(r)
    }
    fn derivative(&self, r: f64) -> f64 {
        (**self).derivative(r)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
}

/// `|u|^{p-1} u`.
#[inline]
pub fn odd_power(u: f64, p: f64) -> f64 {
    u.abs().powf(p - 1.0) * u
}

/// The radial steady-state equation as a second-order system in `r`.
#[derive(Debug, Clone, Copy)]
pub struct RadialSteadyEquation {
    n: f64,
    p: f64,
}

impl RadialSteadyEquation {
    pub fn new(params: ProblemParams) -> Self {
        Self {
            n: params.n(),
            p: params.p(),
        }
    }
}

impl SecondOrderSystem for RadialSteadyEquation {
    fn accel(&self, r: f64, u: f64, du: f64) -> f64 {
        if r == 0.0 {
            // Regular solutions satisfy N u''(0) = -|u|^{p-1}u(0).
            -odd_power(u, self.p) / self.n
        } else {
            -(self.n - 1.0) / r * du - odd_power(u, self.p)
        }
    }

    fn jerk(&self, r: f64, u: f64, du: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let a = self.accel(r, u, du);
        (self.n - 1.0) / (r * r) * du - (self.n - 1.0) / r * a - self.p * u.abs().powf(self.p - 1.0) * du
    }
}

/// Taylor data `(u, u')` of `Φ` at small `r`:
/// `Φ = 1 - r²/(2N) + p r⁴/(8N(N+2)) + O(r⁶)`.
pub fn regular_series(params: ProblemParams, r: f64) -> (f64, f64) {
    let n = params.n();
    let a = -1.0 / (2.0 * n);
    let b = params.p() / (8.0 * n * (n + 2.0));
    let r2 = r * r;
    (1.0 + a * r2 + b * r2 * r2, 2.0 * a * r + 4.0 * b * r2 * r)
}

/// A sampled radial steady state `φ_λ` with dense evaluation on `[0, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    params: ProblemParams,
    lambda: f64,
    traj: DenseTrajectory,
    first_root: Option<f64>,
}

impl RadialProfile {
    pub fn params(&self) -> ProblemParams {
        self.params
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn grid(&self) -> &[f64] {
        self.traj.times()
    }

    pub fn values(&self) -> &[f64] {
        self.traj.values()
    }

    pub fn derivatives(&self) -> &[f64] {
        self.traj.derivatives()
    }

    pub fn first_root(&self) -> Option<f64> {
        self.first_root
    }

    pub fn r_max(&self) -> f64 {
        self.traj.t_end()
    }

    pub fn error_estimate(&self) -> f64 {
        self.traj.error_estimate()
    }

    pub fn trajectory(&self) -> &DenseTrajectory {
        &self.traj
    }

    /// `(u(r), u'(r))`; `NaN` outside `[0, r_max]`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        self.traj.eval(r)
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        self.traj.second_derivative(r)
    }

    /// `u'' + ((N-1)/r) u' + |u|^{p-1} u` at `r > 0`, with `u''` taken from
    /// the dense output.
    pub fn residual(&self, r: f64) -> f64 {
        let (u, du) = self.eval(r);
        let ddu = self.second_derivative(r);
        ddu + (self.params.n() - 1.0) / r * du + odd_power(u, self.params.p())
    }
}

impl RadialFunction for RadialProfile {
    fn value(&self, r: f64) -> f64 {
        self.traj.value(r)
    }

    fn derivative(&self, r: f64) -> f64 {
        self.traj.derivative(r)
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, self.r_max())
    }
}

/// Shoot `Φ` (`Φ(0) = 1`, `Φ'(0) = 0`) out to `r_max`.
///
/// Integration continues through the first root, which is located by
/// bisection on the dense output.
pub fn integrate_regular(params: ProblemParams, r_max: f64, rel_tol: f64, abs_tol: f64) -> Result<RadialProfile> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::domain(format!("r_max must be positive, got {r_max}")));
    }
    for (name, tol) in [("rel_tol", rel_tol), ("abs_tol", abs_tol)] {
        if !(tol > 0.0 && tol <= 1e-3) {
            return Err(Error::domain(format!("{name} must lie in (0, 1e-3], got {tol}")));
        }
    }
    let eq = RadialSteadyEquation::new(params);
    let r0 = STARTUP_RADIUS.min(0.5 * r_max);
    let (u0, du0) = regular_series(params, r0);
    let opts = IntegratorOptions::with_tolerances(rel_tol, abs_tol).max_step(DENSE_STEP);
    let mut nodes = Nodes::default();
    nodes.push(0.0, 1.0, 0.0, eq.accel(0.0, 1.0, 0.0), 0.0);
    let p = params.p();
    if p.fract() == 0.0 && p % 2.0 == 1.0 {
        let (tail, _) = ode::integrate(&eq, r0, u0, du0, r_max, &opts, |_, _, _| false)?;
        nodes.append(&eq, &tail, 0);
    } else {
        shoot_through_roots(&eq, (r0, u0, du0), r_max, &opts, &mut nodes)?;
    }
    let Nodes {
        t,
        u,
        du,
        ddu,
        dddu,
        err,
    } = nodes;
    let traj = DenseTrajectory::from_nodes(t, u, du, ddu, dddu, err);
    let first_root = traj.roots(0, 0.0, r_max, ROOT_TOL).first().map(|c| c.t);
    Ok(RadialProfile {
        params,
        lambda: 1.0,
        traj,
        first_root,
    })
}

#[derive(Default)]
struct Nodes {
    t: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    ddu: Vec<f64>,
    dddu: Vec<f64>,
    err: f64,
}

impl Nodes {
    fn push(&mut self, t: f64, u: f64, du: f64, ddu: f64, dddu: f64) {
        self.t.push(t);
        self.u.push(u);
        self.du.push(du);
        self.ddu.push(ddu);
        self.dddu.push(dddu);
    }

    /// Append the nodes of `piece` from index `skip` on; the first node of
    /// a continuation duplicates the last stored node and is skipped.
    fn append(&mut self, eq: &RadialSteadyEquation, piece: &DenseTrajectory, skip: usize) {
        let skip = if self.t.last() == piece.times().first() {
            skip.max(1)
        } else {
            skip
        };
        for i in skip..piece.len() {
            let (r, v, dv) = (piece.times()[i], piece.values()[i], piece.derivatives()[i]);
            self.push(r, v, dv, piece.second_derivatives()[i], eq.jerk(r, v, dv));
        }
        self.err += piece.error_estimate();
    }

    fn last(&self) -> (f64, f64, f64) {
        let k = self.t.len() - 1;
        (self.t[k], self.u[k], self.du[k])
    }
}

/// Smallest distance to a root used when grading steps around it.
fn grading_floor(root: f64) -> f64 {
    1e-9 * root.max(1e-3)
}

/// Integrate from the last stored node to `to` with steps no longer than
/// the distance to `root`, doubling or halving between breakpoints.
fn graded(eq: &RadialSteadyEquation, to: f64, root: f64, opts: &IntegratorOptions, nodes: &mut Nodes) -> Result<()> {
    let floor = grading_floor(root);
    let (from, _, _) = nodes.last();
    let (d_from, d_to) = ((from - root).abs(), (to - root).abs());
    let mut dists = vec![d_from];
    if d_to < d_from {
        let mut d = d_from / 2.0;
        while d > d_to.max(floor) {
            dists.push(d);
            d /= 2.0;
        }
    } else {
        let mut d = floor.max(2.0 * d_from);
        while d < d_to {
            dists.push(d);
            d *= 2.0;
        }
    }
    dists.push(d_to);
    let side = if to >= from { 1.0 } else { -1.0 };
    let at = |d: f64| {
        if d_to < d_from {
            root - side * d
        } else {
            root + side * d
        }
    };
    for w in dists.windows(2) {
        let (t0, u0, du0) = nodes.last();
        let end = if w[1] == d_to { to } else { at(w[1]) };
        if end == t0 {
            continue;
        }
        let step = w[0].min(w[1]).max(floor);
        let (piece, _) = ode::integrate(eq, t0, u0, du0, end, &opts.max_step(step), |_, _, _| false)?;
        nodes.append(eq, &piece, 1);
    }
    Ok(())
}

/// Shoot through every sign change of `u`, grading the steps towards and
/// away from each root so that the dense output resolves the `|u|^p`
/// behaviour of `u''` there.
fn shoot_through_roots(
    eq: &RadialSteadyEquation,
    start: (f64, f64, f64),
    r_max: f64,
    opts: &IntegratorOptions,
    nodes: &mut Nodes,
) -> Result<()> {
    let (r0, u0, du0) = start;
    nodes.push(r0, u0, du0, eq.accel(r0, u0, du0), eq.jerk(r0, u0, du0));
    loop {
        let (t, u, du) = nodes.last();
        let sign = u.signum();
        let (piece, how) = ode::integrate(eq, t, u, du, r_max, opts, |_, v, _| v * sign <= 0.0)?;
        if how == Termination::Completed {
            nodes.append(eq, &piece, 1);
            return Ok(());
        }
        let k = piece.len() - 2;
        let (t_k, t_last) = (piece.times()[k], piece.times()[k + 1]);
        let root = piece.roots(0, t_k, t_last, ROOT_TOL).first().map_or(t_last, |c| c.t);
        // grade over several natural steps on both sides of the root
        let margin = 32.0 * (t_last - t_k);
        let keep = piece.times().partition_point(|&r| r <= root - margin).max(1);
        for i in 1..keep {
            let (r, v, dv) = (piece.times()[i], piece.values()[i], piece.derivatives()[i]);
            nodes.push(r, v, dv, piece.second_derivatives()[i], eq.jerk(r, v, dv));
        }
        nodes.err += piece.error_estimate();
        graded(eq, root, root, opts, nodes)?;
        let reach = (root + margin).min(r_max);
        graded(eq, reach, root, opts, nodes)?;
        if reach >= r_max {
            return Ok(());
        }
    }
}

/// `Φ` with the default tolerances `rel_tol = 1e-10`, `abs_tol = 1e-12`.
pub fn integrate_regular_default(params: ProblemParams, r_max: f64) -> Result<RadialProfile> {
    integrate_regular(params, r_max, 1e-10, 1e-12)
}

/// `r ↦ λ u(λ^{(p-1)/2} r)` applied to a sampled profile.
pub fn rescale_profile(profile: &RadialProfile, lambda: f64) -> Result<RadialProfile> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    let k = profile.params.scaling_exponent();
    let stretch = lambda.powf(k);
    let tr = &profile.traj;
    let t: Vec<f64> = tr.times().iter().map(|r| r / stretch).collect();
    let scale = |v: &[f64], power: f64| -> Vec<f64> {
        let c = lambda * stretch.powf(power);
        v.iter().map(|x| c * x).collect()
    };
    let u = scale(tr.values(), 0.0);
    let du = scale(tr.derivatives(), 1.0);
    let ddu = scale(tr.second_derivatives(), 2.0);
    let eq = RadialSteadyEquation::new(profile.params);
    let dddu = t
        .iter()
        .zip(&u)
        .zip(&du)
        .map(|((&r, &v), &dv)| eq.jerk(r, v, dv))
        .collect();
    let traj = DenseTrajectory::from_nodes(t, u, du, ddu, dddu, tr.error_estimate() * lambda);
    Ok(RadialProfile {
        params: profile.params,
        lambda: profile.lambda * lambda,
        traj,
        first_root: profile.first_root.map(|r| r / stretch),
    })
}

/// `φ_λ` evaluated lazily from a shared `Φ` without copying its nodes.
#[derive(Debug, Clone)]
pub struct ScaledProfile {
    base: Arc<RadialProfile>,
    lambda: f64,
    stretch: f64,
    slope_factor: f64,
}

impl ScaledProfile {
    pub fn new(base: Arc<RadialProfile>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
        }
        let k = base.params().scaling_exponent();
        let stretch = lambda.powf(k);
        Ok(Self {
            lambda,
            stretch,
            slope_factor: lambda * stretch,
            base,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda * self.base.lambda()
    }

    pub fn base(&self) -> &Arc<RadialProfile> {
        &self.base
    }

    /// Largest radius at which this member can be evaluated.
    pub fn r_max(&self) -> f64 {
        self.base.r_max() / self.stretch
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        let (u, du) = self.base.eval(self.stretch * r);
        (self.lambda * u, self.slope_factor * du)
    }
}

impl RadialFunction for ScaledProfile {
    fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    fn derivative(&self, r: f64) -> f64 {
        self.eval(r).1
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, self.r_max())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRatio {
    /// Mean of `Φ/φ∞` over the window.
    pub mean: f64,
    /// `max |Φ/φ∞ - 1|` over the window.
    pub max_deviation: f64,
    pub min: f64,
    pub max: f64,
}

/// `Φ/φ∞` over `[window.0, window.1]`, sampled at 1000 log-spaced radii.
/// Only meaningful above the Sobolev exponent.
pub fn asymptotic_ratio(profile: &RadialProfile, window: (f64, f64)) -> Result<AsymptoticRatio> {
    let params = profile.params();
    match classify_regime(params) {
        Regime::SobolevToJl | Regime::AtOrAboveJl => {}
        other => {
            return Err(Error::regime(format!(
                "Φ/φ∞ → 1 is only asserted for p > p_S (regime {other})"
            )))
        }
    }
    let (a, b) = window;
    if !(a > 0.0 && b > a) {
        return Err(Error::domain(format!("empty window [{a}, {b}]")));
    }
    if b > profile.r_max() {
        return Err(Error::domain(format!(
            "window end {b} beyond computed range {}",
            profile.r_max()
        )));
    }
    let phi_inf = SingularSteadyState::new(params)?;
    let samples = 1000;
    let (la, lb) = (a.ln(), b.ln());
    let mut sum = 0.0;
    let mut out = AsymptoticRatio {
        mean: 0.0,
        max_deviation: 0.0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    for i in 0..samples {
        let r = (la + (lb - la) * i as f64 / (samples - 1) as f64).exp();
        let ratio = profile.value(r) / phi_inf.value(r);
        sum += ratio;
        out.max_deviation = out.max_deviation.max((ratio - 1.0).abs());
        out.min = out.min.min(ratio);
        out.max = out.max.max(ratio);
    }
    out.mean = sum / samples as f64;
    Ok(out)
}
