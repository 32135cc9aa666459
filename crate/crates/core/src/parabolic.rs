//! Explicit finite-volume solver for radial solutions of
//! `u_t = Δu + |u|^{p-1}u` on a ball or an annulus with Dirichlet data.
//!
//! The update is forward Euler on dual cells with volume
//! `V_i = (r_{i+1/2}^N - r_{i-1/2}^N)/N` and face coefficients
//! `c_{i+1/2} = r_{i+1/2}^{N-1}/(r_{i+1} - r_i)`. The origin of a ball uses
//! the symmetry cell `[0, r_{1/2}]`, which gives `Δu(0) ≈ 2N (u_1 - u_0)/h²`
//! on a uniform mesh. With `D_i = (c_{i-1/2} + c_{i+1/2})/V_i`, the step map
//! is order preserving when `dt · max_i D_i ≤ 1`; the admissible step used
//! here is the stricter `dt · (max_i D_i + p U^{p-1}) ≤ 1`, `U = sup |u|`.
//!
//! Results on a ball of radius `R` are truncated-domain demonstrations: the
//! Dirichlet data stand in for the whole-space problem.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial_ode::RadialFunction;
use crate::supersolution::BarrierFamily;

/// Default sup-norm ceiling at which a run is declared to blow up.
pub const DEFAULT_CEILING: f64 = 1e6;

/// Fraction of the admissible step used by automatic step control.
pub const AUTO_SAFETY: f64 = 0.9;

/// A radial mesh `r_0 < … < r_M` with its finite-volume geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    dim: u32,
    nodes: Vec<f64>,
    volumes: Vec<f64>,
    /// `c_{i-1/2}/V_i` and `c_{i+1/2}/V_i`.
    lower: Vec<f64>,
    upper: Vec<f64>,
    max_diag: f64,
    ball: bool,
}

impl RadialMesh {
    /// Mesh on `[r_0, r_M]`; a ball when `r_0 = 0`, an annulus otherwise.
    pub fn from_nodes(dim: u32, nodes: Vec<f64>) -> Result<Self> {
        if dim < 1 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        if nodes.len() < 3 {
            return Err(Error::Mesh("need at least three nodes".into()));
        }
        if nodes[0] < 0.0 || nodes.windows(2).any(|w| !(w[0] < w[1])) || !nodes.iter().all(|r| r.is_finite()) {
            return Err(Error::Mesh(
                "nodes must be finite, nonnegative and strictly increasing".into(),
            ));
        }
        let n = f64::from(dim);
        let m = nodes.len() - 1;
        let ball = nodes[0] == 0.0;
        let faces: Vec<f64> = (0..m)
            .map(|i| {
                let rf = 0.5 * (nodes[i] + nodes[i + 1]);
                rf.powf(n - 1.0) / (nodes[i + 1] - nodes[i])
            })
            .collect();
        let volumes: Vec<f64> = (0..=m)
            .map(|i| {
                let a = if i == 0 {
                    nodes[0]
                } else {
                    0.5 * (nodes[i - 1] + nodes[i])
                };
                let b = if i == m {
                    nodes[m]
                } else {
                    0.5 * (nodes[i] + nodes[i + 1])
                };
                (b.powf(n) - a.powf(n)) / n
            })
            .collect();
        if volumes.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Mesh("nonpositive cell volume".into()));
        }
        let lower: Vec<f64> = (0..=m)
            .map(|i| if i == 0 { 0.0 } else { faces[i - 1] / volumes[i] })
            .collect();
        let upper: Vec<f64> = (0..=m)
            .map(|i| if i == m { 0.0 } else { faces[i] / volumes[i] })
            .collect();
        let diag: Vec<f64> = (0..=m)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { faces[i - 1] };
                let right = if i == m { 0.0 } else { faces[i] };
                (left + right) / volumes[i]
            })
            .collect();
        let start = if ball { 0 } else { 1 };
        let max_diag = diag[start..m].iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            dim,
            nodes,
            volumes,
            lower,
            upper,
            max_diag,
            ball,
        })
    }

    /// `count` uniformly spaced nodes on `[0, radius]`.
    pub fn uniform_ball(dim: u32, radius: f64, count: usize) -> Result<Self> {
        Self::uniform(dim, 0.0, radius, count)
    }

    /// `count` uniformly spaced nodes on `[inner, outer]`, `inner > 0`.
    pub fn uniform_annulus(dim: u32, inner: f64, outer: f64, count: usize) -> Result<Self> {
        if !(inner > 0.0) {
            return Err(Error::Mesh("annulus needs a positive inner radius".into()));
        }
        Self::uniform(dim, inner, outer, count)
    }

    fn uniform(dim: u32, a: f64, b: f64, count: usize) -> Result<Self> {
        if !(b > a && b.is_finite()) || count < 3 {
            return Err(Error::Mesh(format!("invalid mesh [{a}, {b}] with {count} nodes")));
        }
        let h = (b - a) / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|i| a + h * i as f64).collect();
        nodes[count - 1] = b;
        Self::from_nodes(dim, nodes)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_ball(&self) -> bool {
        self.ball
    }

    pub fn radius(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Indices of the nodes updated by the scheme (all but Dirichlet nodes).
    fn interior(&self) -> std::ops::Range<usize> {
        let start = if self.ball { 0 } else { 1 };
        start..self.nodes.len() - 1
    }

    /// `max_i D_i` over updated nodes.
    pub fn max_diffusion(&self) -> f64 {
        self.max_diag
    }

    /// Finite-volume Laplacian at updated node `i`.
    fn laplacian(&self, u: &[f64], i: usize) -> f64 {
        let right = self.upper[i] * (u[i + 1] - u[i]);
        if i == 0 {
            right
        } else {
            right - self.lower[i] * (u[i] - u[i - 1])
        }
    }
}

/// Dirichlet data as a function of time.
#[derive(Clone)]
pub enum BoundaryValue {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl BoundaryValue {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            BoundaryValue::Constant(c) => *c,
            BoundaryValue::Function(f) => f(t),
        }
    }

    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryValue::Function(Arc::new(f))
    }

    pub fn negated(&self) -> Self {
        match self {
            BoundaryValue::Constant(c) => BoundaryValue::Constant(-c),
            BoundaryValue::Function(f) => {
                let f = Arc::clone(f);
                BoundaryValue::function(move |t| -f(t))
            }
        }
    }
}

impl fmt::Debug for BoundaryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryValue::Constant(c) => write!(f, "Constant({c})"),
            BoundaryValue::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Nodal values at one time, with Dirichlet data at `r = R` (and at the
/// inner radius of an annulus).
#[derive(Debug, Clone)]
pub struct ParabolicState {
    mesh: Arc<RadialMesh>,
    time: f64,
    values: Vec<f64>,
    outer: BoundaryValue,
    inner: Option<BoundaryValue>,
}

impl ParabolicState {
    pub fn new(
        mesh: Arc<RadialMesh>,
        time: f64,
        values: Vec<f64>,
        outer: BoundaryValue,
        inner: Option<BoundaryValue>,
    ) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::domain(format!(
                "{} values for {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) || !time.is_finite() {
            return Err(Error::domain("state values must be finite"));
        }
        if !mesh.is_ball() && inner.is_none() {
            return Err(Error::domain("an annulus needs boundary data at the inner radius"));
        }
        Ok(Self {
            mesh,
            time,
            values,
            outer,
            inner,
        })
    }

    /// Sample `f` at the nodes of a ball mesh; boundary data `outer`.
    pub fn from_fn(
        mesh: Arc<RadialMesh>,
        f: impl Fn(f64) -> f64,
        outer: BoundaryValue,
        inner: Option<BoundaryValue>,
    ) -> Result<Self> {
        let values = mesh.nodes().iter().map(|&r| f(r)).collect();
        Self::new(mesh, 0.0, values, outer, inner)
    }

    pub fn mesh(&self) -> &Arc<RadialMesh> {
        &self.mesh
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn outer_boundary(&self) -> &BoundaryValue {
        &self.outer
    }

    pub fn inner_boundary(&self) -> Option<&BoundaryValue> {
        self.inner.as_ref()
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// `-u` with negated boundary data.
    pub fn negated(&self) -> Self {
        Self {
            mesh: Arc::clone(&self.mesh),
            time: self.time,
            values: self.values.iter().map(|v| -v).collect(),
            outer: self.outer.negated(),
            inner: self.inner.as_ref().map(BoundaryValue::negated),
        }
    }

    /// The same state with new outer boundary data.
    pub fn with_outer_boundary(mut self, outer: BoundaryValue) -> Self {
        self.outer = outer;
        self
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Right-hand side options: the exponent, a switch for the reaction term,
/// and an optional source `s(r, t)` for manufactured solutions.
#[derive(Clone)]
pub struct HeatModel {
    p: f64,
    nonlinear: bool,
    int_power: Option<i32>,
    source: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
}

impl fmt::Debug for HeatModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HeatModel")
            .field("p", &self.p)
            .field("nonlinear", &self.nonlinear)
            .field("source", &self.source.is_some())
            .finish()
    }
}

impl HeatModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::domain(format!("exponent must be > 1, got {p}")));
        }
        let int_power = (p.fract() == 0.0 && p < 64.0).then_some(p as i32);
        Ok(Self {
            p,
            nonlinear: true,
            int_power,
            source: None,
        })
    }

    /// Pure diffusion, for diagnostics.
    pub fn linear() -> Self {
        Self {
            p: 2.0,
            nonlinear: false,
            int_power: Some(2),
            source: None,
        }
    }

    pub fn with_nonlinearity(mut self, on: bool) -> Self {
        self.nonlinear = on;
        self
    }

    pub fn with_source(mut self, s: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.source = Some(Arc::new(s));
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn is_nonlinear(&self) -> bool {
        self.nonlinear
    }

    #[inline]
    fn reaction(&self, u: f64) -> f64 {
        if !self.nonlinear {
            return 0.0;
        }
        match self.int_power {
            Some(k) => u.abs().powi(k - 1) * u,
            None => u.abs().powf(self.p - 1.0) * u,
        }
    }

    /// Admissible step for the given mesh and sup norm.
    pub fn monotone_bound(&self, mesh: &RadialMesh, sup: f64) -> f64 {
        let react = if self.nonlinear {
            self.p * sup.powf(self.p - 1.0)
        } else {
            0.0
        };
        1.0 / (mesh.max_diffusion() + react)
    }
}

fn advance(model: &HeatModel, state: &ParabolicState, t: f64, u: &[f64], dt: f64, out: &mut [f64]) {
    let mesh = &state.mesh;
    let interior = mesh.interior();
    let mut first = interior.start;
    if first == 0 {
        out[0] = u[0] + dt * (mesh.laplacian(u, 0) + model.reaction(u[0]));
        first = 1;
    }
    for i in first..interior.end {
        let lap = mesh.upper[i] * (u[i + 1] - u[i]) - mesh.lower[i] * (u[i] - u[i - 1]);
        out[i] = u[i] + dt * (lap + model.reaction(u[i]));
    }
    if let Some(s) = &model.source {
        for i in interior {
            out[i] += dt * s(mesh.nodes[i], t);
        }
    }
    let t_new = t + dt;
    let last = mesh.len() - 1;
    out[last] = state.outer.at(t_new);
    if !mesh.ball {
        out[0] = state.inner.as_ref().map_or(0.0, |g| g.at(t_new));
    }
}

fn check_step(model: &HeatModel, state: &ParabolicState, u: &[f64], dt: f64) -> Result<()> {
    let bound = model.monotone_bound(&state.mesh, sup_norm(u));
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::Step { dt, bound });
    }
    Ok(())
}

/// One forward-Euler step; fails if `dt` exceeds the admissible bound.
pub fn step(state: &ParabolicState, model: &HeatModel, dt: f64) -> Result<ParabolicState> {
    check_step(model, state, &state.values, dt)?;
    let mut out = state.values.clone();
    advance(model, state, state.time, &state.values, dt, &mut out);
    Ok(ParabolicState {
        mesh: Arc::clone(&state.mesh),
        time: state.time + dt,
        values: out,
        outer: state.outer.clone(),
        inner: state.inner.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtControl {
    /// `0.9` times the admissible bound at every step.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub horizon: f64,
    pub dt: DtControl,
    /// Times in `(t0, t0 + horizon]` at which snapshots are stored.
    pub checkpoints: Vec<f64>,
    pub ceiling: f64,
}

impl EvolveOptions {
    /// `count` evenly spaced checkpoints ending at the horizon.
    pub fn evenly(horizon: f64, count: usize) -> Self {
        let count = count.max(1);
        Self {
            horizon,
            dt: DtControl::Auto,
            checkpoints: (1..=count).map(|k| horizon * k as f64 / count as f64).collect(),
            ceiling: DEFAULT_CEILING,
        }
    }

    pub fn with_dt(mut self, dt: DtControl) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mesh: Arc<RadialMesh>,
    /// The initial state followed by one snapshot per checkpoint reached.
    pub snapshots: Vec<Snapshot>,
    pub sup_norm_trace: Vec<(f64, f64)>,
    pub blowup_time: Option<f64>,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

fn validate_options(opts: &EvolveOptions, t0: f64) -> Result<()> {
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be positive, got {}", opts.horizon)));
    }
    if !(opts.ceiling > 0.0) {
        return Err(Error::domain("ceiling must be positive"));
    }
    let end = t0 + opts.horizon;
    let mut prev = t0;
    for &c in &opts.checkpoints {
        if !(c > prev && c <= end * (1.0 + 1e-14)) {
            return Err(Error::domain(format!(
                "checkpoints must increase within ({t0}, {end}], got {c}"
            )));
        }
        prev = c;
    }
    if let DtControl::Fixed(dt) = opts.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!("fixed dt must be positive, got {dt}")));
        }
    }
    Ok(())
}

/// Observer called after every accepted step with `(t, u)`; returning
/// `false` stops the run.
pub type StepObserver<'a> = dyn FnMut(f64, &[f64]) -> bool + 'a;

/// Evolve several states with a shared step sequence; the step is the
/// minimum of the admissible steps of all members.
fn evolve_many(
    initial: &[&ParabolicState],
    model: &HeatModel,
    opts: &EvolveOptions,
    observer: &mut StepObserver<'_>,
) -> Result<Vec<Trajectory>> {
    let t0 = initial[0].time;
    validate_options(opts, t0)?;
    let end = t0 + opts.horizon;
    let mut us: Vec<Vec<f64>> = initial.iter().map(|s| s.values.clone()).collect();
    let mut scratch = us.clone();
    let mut trajs: Vec<Trajectory> = initial
        .iter()
        .map(|s| Trajectory {
            mesh: Arc::clone(&s.mesh),
            snapshots: vec![Snapshot {
                time: t0,
                values: s.values.clone(),
            }],
            sup_norm_trace: vec![(t0, s.sup_norm())],
            blowup_time: None,
            steps: 0,
        })
        .collect();
    let mut next_cp = 0;
    let mut t = t0;
    let mut steps = 0usize;
    let mut sups: Vec<f64> = us.iter().map(|u| sup_norm(u)).collect();
    while next_cp < opts.checkpoints.len() {
        let target = opts.checkpoints[next_cp];
        let mut bound = f64::INFINITY;
        for (k, &sup) in sups.iter().enumerate() {
            bound = bound.min(model.monotone_bound(&initial[k].mesh, sup));
        }
        let mut dt = match opts.dt {
            DtControl::Auto => AUTO_SAFETY * bound,
            DtControl::Fixed(dt) => {
                if dt > bound * (1.0 + 1e-12) {
                    return Err(Error::Step { dt, bound });
                }
                dt
            }
        };
        let hit = t + dt >= target * (1.0 - 1e-15);
        if hit {
            dt = target - t;
        }
        if !(dt > 0.0) {
            return Err(Error::Integration {
                last_valid: t,
                reason: "time step underflow".into(),
            });
        }
        for (k, u) in us.iter().enumerate() {
            advance(model, initial[k], t, u, dt, &mut scratch[k]);
        }
        std::mem::swap(&mut us, &mut scratch);
        t = if hit { target } else { t + dt };
        steps += 1;
        let mut blown = false;
        for (k, u) in us.iter().enumerate() {
            let sup = sup_norm(u);
            sups[k] = sup;
            if !(sup <= opts.ceiling) {
                trajs[k].blowup_time = Some(t);
                trajs[k].sup_norm_trace.push((t, sup));
                blown = true;
            }
        }
        if blown {
            break;
        }
        if !observer(t, &us[0]) {
            break;
        }
        if hit {
            for (k, u) in us.iter().enumerate() {
                trajs[k].snapshots.push(Snapshot {
                    time: t,
                    values: u.clone(),
                });
                trajs[k].sup_norm_trace.push((t, sups[k]));
            }
            next_cp += 1;
        }
        if t >= end {
            break;
        }
    }
    for tr in &mut trajs {
        tr.steps = steps;
    }
    Ok(trajs)
}

/// Evolve to `t0 + horizon`, storing snapshots at the checkpoints. A run
/// whose sup norm exceeds the ceiling stops and reports the time.
pub fn evolve(initial: &ParabolicState, model: &HeatModel, opts: &EvolveOptions) -> Result<Trajectory> {
    let mut out = evolve_many(&[initial], model, opts, &mut |_, _| true)?;
    Ok(out.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub preserved: bool,
    /// `max (u - v)^+` over all steps.
    pub max_violation: f64,
    pub steps: usize,
}

/// Evolve `u0 ≤ v0` with a shared step sequence and check `u ≤ v` after
/// every step, up to `1e-12` of the sup norm.
pub fn comparison_check(
    u0: &ParabolicState,
    v0: &ParabolicState,
    model: &HeatModel,
    opts: &EvolveOptions,
) -> Result<ComparisonReport> {
    if u0.mesh != v0.mesh {
        return Err(Error::domain("states live on different meshes"));
    }
    if let Some(i) = (0..u0.values.len()).find(|&i| u0.values[i] > v0.values[i]) {
        return Err(Error::domain(format!("u0 > v0 at node {i}")));
    }
    let t0 = u0.time;
    for k in 0..=200 {
        let t = t0 + opts.horizon * f64::from(k) / 200.0;
        let outer_bad = u0.outer.at(t) > v0.outer.at(t);
        let inner_bad = match (&u0.inner, &v0.inner) {
            (Some(a), Some(b)) => a.at(t) > b.at(t),
            _ => false,
        };
        if outer_bad || inner_bad {
            return Err(Error::domain(format!("boundary data not ordered at t = {t}")));
        }
    }
    let mut max_violation: f64 = 0.0;
    let mut preserved = true;
    let steps = evolve_pair_checked(u0, v0, model, opts, &mut |u, v| {
        let scale = sup_norm(u).max(sup_norm(v)).max(f64::MIN_POSITIVE);
        for (a, b) in u.iter().zip(v) {
            let d = a - b;
            if d > 0.0 {
                max_violation = max_violation.max(d);
                if d > 1e-12 * scale {
                    preserved = false;
                }
            }
        }
    })?;
    Ok(ComparisonReport {
        preserved,
        max_violation,
        steps,
    })
}

/// Shared-step evolution of two states, calling `check(u, v)` after every step.
fn evolve_pair_checked(
    u0: &ParabolicState,
    v0: &ParabolicState,
    model: &HeatModel,
    opts: &EvolveOptions,
    check: &mut dyn FnMut(&[f64], &[f64]),
) -> Result<usize> {
    validate_options(opts, u0.time)?;
    let end = u0.time + opts.horizon;
    let mut u = u0.values.clone();
    let mut v = v0.values.clone();
    let mut su = u.clone();
    let mut sv = v.clone();
    let mut t = u0.time;
    let mut steps = 0;
    while t < end {
        let bound = model
            .monotone_bound(&u0.mesh, sup_norm(&u))
            .min(model.monotone_bound(&v0.mesh, sup_norm(&v)));
        let mut dt = match opts.dt {
            DtControl::Auto => AUTO_SAFETY * bound,
            DtControl::Fixed(dt) => {
                if dt > bound * (1.0 + 1e-12) {
                    return Err(Error::Step { dt, bound });
                }
                dt
            }
        };
        let hit = t + dt >= end;
        if hit {
            dt = end - t;
        }
        advance(model, u0, t, &u, dt, &mut su);
        advance(model, v0, t, &v, dt, &mut sv);
        std::mem::swap(&mut u, &mut su);
        std::mem::swap(&mut v, &mut sv);
        t = if hit { end } else { t + dt };
        steps += 1;
        check(&u, &v);
        if sup_norm(&u).max(sup_norm(&v)) > opts.ceiling {
            break;
        }
    }
    Ok(steps)
}

/// Largest amount by which the sampled barrier fails to be a discrete
/// supersolution: `max_i (L_h z + |z|^{p-1} z)^+` over updated nodes.
///
/// A continuous supersolution sampled on a mesh carries an `O(h²)` defect,
/// so data touching the barrier can cross it by about `t · defect`.
pub fn barrier_defect<B: RadialFunction + ?Sized>(mesh: &RadialMesh, barrier: &B, model: &HeatModel) -> f64 {
    let z: Vec<f64> = mesh.nodes().iter().map(|&r| barrier.value(r)).collect();
    mesh.interior()
        .map(|i| mesh.laplacian(&z, i) + model.reaction(z[i]))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfinementReport {
    pub confined: bool,
    /// `max (|u| - z)^+` over all steps.
    pub max_excess: f64,
    /// `(t, node)` of the first step where the excess passed the tolerance.
    pub first_violation: Option<(f64, usize)>,
    pub sup_norm_trace: Vec<(f64, f64)>,
    pub steps: usize,
}

/// Run from `u0` and check `|u(·, t)| ≤ z` at every step, to `1e-10` of `sup z`.
pub fn barrier_confinement<B: RadialFunction + ?Sized>(
    u0: &ParabolicState,
    barrier: &B,
    model: &HeatModel,
    opts: &EvolveOptions,
) -> Result<ConfinementReport> {
    let z: Vec<f64> = u0.mesh.nodes().iter().map(|&r| barrier.value(r)).collect();
    if let Some(i) = (0..z.len()).find(|&i| u0.values[i].abs() > z[i]) {
        return Err(Error::Precondition(format!(
            "|u0| exceeds the barrier at node {i} (r = {})",
            u0.mesh.nodes()[i]
        )));
    }
    let last = z.len() - 1;
    for k in 0..=200 {
        let t = u0.time + opts.horizon * f64::from(k) / 200.0;
        if u0.outer.at(t).abs() > z[last] {
            return Err(Error::Precondition(format!(
                "boundary data exceed the barrier at t = {t}"
            )));
        }
        if let Some(g) = &u0.inner {
            if g.at(t).abs() > z[0] {
                return Err(Error::Precondition(format!(
                    "inner boundary data exceed the barrier at t = {t}"
                )));
            }
        }
    }
    let tol = 1e-10 * sup_norm(&z);
    let mut max_excess: f64 = 0.0;
    let mut first_violation = None;
    let traj = evolve_many(&[u0], model, opts, &mut |t, u| {
        for (i, (a, b)) in u.iter().zip(&z).enumerate() {
            let e = a.abs() - b;
            if e > 0.0 {
                max_excess = max_excess.max(e);
                if e > tol && first_violation.is_none() {
                    first_violation = Some((t, i));
                }
            }
        }
        true
    })?
    .remove(0);
    Ok(ConfinementReport {
        confined: first_violation.is_none() && traj.blowup_time.is_none(),
        max_excess,
        first_violation,
        sup_norm_trace: traj.sup_norm_trace,
        steps: traj.steps,
    })
}

/// Decreasing barrier parameters `λ_k` reached at increasing times `t_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSchedule {
    lambdas: Vec<f64>,
    times: Vec<f64>,
}

impl SweepSchedule {
    pub fn new(lambdas: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != times.len() {
            return Err(Error::domain("schedule needs equal, nonzero numbers of λ and times"));
        }
        if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::domain("λ values must be positive"));
        }
        if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::domain("λ values must be strictly decreasing"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times.iter().all(|t| t.is_finite()) {
            return Err(Error::domain("checkpoint times must be strictly increasing"));
        }
        Ok(Self { lambdas, times })
    }

    /// `count` geometrically spaced values from `start` down to `end`, at
    /// evenly spaced times from 0 to `horizon`.
    pub fn geometric(start: f64, end: f64, count: usize, horizon: f64) -> Result<Self> {
        if count < 2 || !(start > end && end > 0.0) || !(horizon > 0.0) {
            return Err(Error::domain("geometric schedule needs start > end > 0, count >= 2"));
        }
        let ratio = (end / start).ln();
        let last = (count - 1) as f64;
        let lambdas = (0..count)
            .map(|k| {
                if k + 1 == count {
                    end
                } else {
                    start * (ratio * k as f64 / last).exp()
                }
            })
            .collect();
        let times = (0..count).map(|k| horizon * k as f64 / last).collect();
        Self::new(lambdas, times)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `λ(t)`, log-linear between checkpoints and constant outside.
    pub fn lambda_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.lambdas[0];
        }
        if t >= self.times[n - 1] {
            return self.lambdas[n - 1];
        }
        let k = self.times.partition_point(|&x| x <= t) - 1;
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        (self.lambdas[k].ln() * (1.0 - s) + self.lambdas[k + 1].ln() * s).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCheckpoint {
    pub time: f64,
    pub lambda: f64,
    pub dominated: bool,
    pub sup_norm: f64,
    /// `max (|u| - z_λ)^+` at this checkpoint.
    pub max_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub lambda: f64,
    pub time: f64,
    pub node: usize,
    pub radius: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub completed: bool,
    pub checkpoints: Vec<SweepCheckpoint>,
    pub initial_sup: f64,
    pub final_sup: f64,
    /// Smallest `λ_k` such that domination held at every checkpoint up to `k`.
    pub smallest_dominating_lambda: Option<f64>,
    pub first_failure: Option<SweepFailure>,
    pub blowup_time: Option<f64>,
    pub steps: usize,
}

/// Sweep the barrier family along `schedule` from `u0`.
///
/// The outer Dirichlet value follows `z_{λ(t)}(R)`. At checkpoint `k` the
/// run must satisfy `|u(·, t_k)| ≤ z_{λ_k}` up to `1e-10 · λ_k`. The first
/// checkpoint time is the start of the run.
pub fn sweep(
    u0: &ParabolicState,
    family: &BarrierFamily,
    schedule: &SweepSchedule,
    model: &HeatModel,
) -> Result<SweepReport> {
    let mesh = Arc::clone(&u0.mesh);
    if !mesh.is_ball() {
        return Err(Error::Mesh("the sweep runs on a ball".into()));
    }
    let t0 = schedule.times[0];
    let lam0 = schedule.lambdas[0];
    let z0: Vec<f64> = mesh.nodes().iter().map(|&r| family.value(lam0, r)).collect();
    if let Some(i) = (0..z0.len()).find(|&i| u0.values[i].abs() > z0[i]) {
        return Err(Error::Precondition(format!(
            "|u0| exceeds z_λ̄ at node {i} (r = {})",
            mesh.nodes()[i]
        )));
    }
    let radius = mesh.radius();
    let sched = schedule.clone();
    let fam = family.clone();
    let boundary = BoundaryValue::function(move |t| fam.value(sched.lambda_at(t), radius));
    let mut start = u0.clone().with_outer_boundary(boundary);
    start.time = t0;
    start.values[mesh.len() - 1] = family.value(lam0, radius);

    let check = |k: usize, t: f64, u: &[f64]| -> (SweepCheckpoint, Option<SweepFailure>) {
        let lam = schedule.lambdas[k];
        let tol = 1e-10 * lam;
        let mut worst = (0.0f64, 0usize);
        for (i, (&r, &v)) in mesh.nodes().iter().zip(u).enumerate() {
            let e = v.abs() - family.value(lam, r);
            if e > worst.0 {
                worst = (e, i);
            }
        }
        let dominated = worst.0 <= tol;
        let failure = (!dominated).then(|| SweepFailure {
            lambda: lam,
            time: t,
            node: worst.1,
            radius: mesh.nodes()[worst.1],
            excess: worst.0,
        });
        (
            SweepCheckpoint {
                time: t,
                lambda: lam,
                dominated,
                sup_norm: sup_norm(u),
                max_excess: worst.0.max(0.0),
            },
            failure,
        )
    };

    let mut records = Vec::new();
    let mut first_failure = None;
    let (rec, fail) = check(0, t0, &start.values);
    records.push(rec);
    first_failure = first_failure.or(fail);
    let initial_sup = start.sup_norm();
    let mut blowup_time = None;
    let mut steps = 0;
    let mut state = start;
    for k in 1..schedule.times.len() {
        let opts = EvolveOptions {
            horizon: schedule.times[k] - state.time,
            dt: DtControl::Auto,
            checkpoints: vec![schedule.times[k]],
            ceiling: DEFAULT_CEILING,
        };
        let traj = evolve(&state, model, &opts)?;
        steps += traj.steps;
        if traj.blowup_time.is_some() {
            blowup_time = traj.blowup_time;
            break;
        }
        let snap = traj.last().clone();
        let (rec, fail) = check(k, snap.time, &snap.values);
        records.push(rec);
        if first_failure.is_none() {
            first_failure = fail;
        }
        state.values = snap.values;
        state.time = snap.time;
    }
    let smallest = records.iter().take_while(|r| r.dominated).last().map(|r| r.lambda);
    let completed = first_failure.is_none() && blowup_time.is_none() && records.len() == schedule.times.len();
    Ok(SweepReport {
        completed,
        final_sup: records.last().map_or(initial_sup, |r| r.sup_norm),
        checkpoints: records,
        initial_sup,
        smallest_dominating_lambda: smallest,
        first_failure,
        blowup_time,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingResidual {
    pub rho: f64,
    pub t0: f64,
    pub max_residual: f64,
    /// `y` at which the maximum is attained.
    pub at: f64,
}

/// PDE residual of `v(y, s) = ρ^{2/(p-1)} u(ρ y, t0 + ρ² s)` at `s = 0`.
///
/// `v` is sampled on the node-scaled grid `y_j = r_j / ρ` from the
/// snapshots at `t0` and its two neighbours; `v_s` is a central difference
/// and `Δ_y v` the three-point nonconservative stencil
/// `v'' + (N-1) v'/y` (with `2N (v_1 - v_0)/h²`-type limit at `y = 0`).
pub fn scaling_residual(traj: &Trajectory, p: f64, t0: f64, rho: f64) -> Result<ScalingResidual> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::domain(format!("rho must be positive, got {rho}")));
    }
    let snaps = &traj.snapshots;
    let k = snaps
        .iter()
        .position(|s| (s.time - t0).abs() <= 1e-12 * t0.abs().max(1.0))
        .filter(|&k| k > 0 && k + 1 < snaps.len())
        .ok_or_else(|| Error::domain(format!("t0 = {t0} is not an interior checkpoint")))?;
    let m = 2.0 / (p - 1.0);
    let scale_v = rho.powf(m);
    let (prev, here, next) = (&snaps[k - 1], &snaps[k], &snaps[k + 1]);
    let ds_minus = (here.time - prev.time) / (rho * rho);
    let ds_plus = (next.time - here.time) / (rho * rho);
    let y: Vec<f64> = traj.mesh.nodes().iter().map(|r| r / rho).collect();
    let v = |s: &Snapshot, j: usize| scale_v * s.values[j];
    let n = f64::from(traj.mesh.dim());
    let mut out = ScalingResidual {
        rho,
        t0,
        max_residual: 0.0,
        at: f64::NAN,
    };
    let first = if traj.mesh.is_ball() { 0 } else { 1 };
    for j in first..y.len() - 1 {
        // three-point derivative in s on a possibly uneven stencil
        let (a, b) = (ds_minus, ds_plus);
        let vs = (a * a * v(next, j) - b * b * v(prev, j) + (b * b - a * a) * v(here, j)) / (a * b * (a + b));
        let lap = if j == 0 {
            let h = y[1];
            2.0 * n * (v(here, 1) - v(here, 0)) / (h * h)
        } else {
            let (hm, hp) = (y[j] - y[j - 1], y[j + 1] - y[j]);
            let (um, u0, up) = (v(here, j - 1), v(here, j), v(here, j + 1));
            let d2 = 2.0 * (hm * up - (hm + hp) * u0 + hp * um) / (hm * hp * (hm + hp));
            let d1 = (hm * hm * up - hp * hp * um + (hp * hp - hm * hm) * u0) / (hm * hp * (hm + hp));
            d2 + (n - 1.0) / y[j] * d1
        };
        let vv = v(here, j);
        let res = (vs - lap - vv.abs().powf(p - 1.0) * vv).abs();
        if res > out.max_residual {
            out.max_residual = res;
            out.at = y[j];
        }
    }
    Ok(out)
}
