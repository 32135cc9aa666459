//! Adaptive integration of scalar second-order ODEs `u'' = F(t, u, u')`.
//!
//! Steps are taken with the Dormand–Prince 8(5,3) embedded pair. Accepted
//! nodes store `u, u', u'', u'''`, so the trajectory can be evaluated between
//! nodes by septic Hermite interpolation of `u`. Event
//! location (roots of `u`, extrema from roots of `u'`) works on that dense
//! output by bisection.

use crate::error::{Error, Result};

/// A scalar second-order system written in first-order form `(u, u')`.
pub trait SecondOrderSystem {
    /// `u''` at `(t, u, u')`.
    fn accel(&self, t: f64, u: f64, du: f64) -> f64;
    /// `u'''` along solutions, i.e. the total derivative of [`accel`](Self::accel).
    fn jerk(&self, t: f64, u: f64, du: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest admissible step; `f64::INFINITY` for no limit.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }
}

/// Why an integration run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The requested end point was reached.
    Completed,
    /// The caller's stop predicate fired.
    Stopped,
}

/// Accepted nodes of an integration, sorted by increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrajectory {
    t: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    ddu: Vec<f64>,
    dddu: Vec<f64>,
    error_estimate: f64,
}

impl DenseTrajectory {
    pub(crate) fn from_nodes(
        t: Vec<f64>,
        u: Vec<f64>,
        du: Vec<f64>,
        ddu: Vec<f64>,
        dddu: Vec<f64>,
        error_estimate: f64,
    ) -> Self {
        debug_assert!(t.windows(2).all(|w| w[0] < w[1]));
        Self {
            t,
            u,
            du,
            ddu,
            dddu,
            error_estimate,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.du
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.ddu
    }

    pub fn t_start(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("non-empty trajectory")
    }

    /// Accumulated absolute local error estimate of the `u` component.
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start() && t <= self.t_end()
    }

    /// Index `i` with `t[i] <= t <= t[i+1]`, clamped to the last interval.
    fn interval(&self, t: f64) -> usize {
        let n = self.t.len();
        if n < 2 {
            return 0;
        }
        let idx = self.t.partition_point(|&x| x <= t);
        idx.saturating_sub(1).min(n - 2)
    }

    /// `(u(t), u'(t))` by septic Hermite interpolation. `NaN` outside the range.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if !self.contains(t) {
            return (f64::NAN, f64::NAN);
        }
        if self.t.len() == 1 {
            return (self.u[0], self.du[0]);
        }
        let i = self.interval(t);
        self.eval_in(i, t)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    /// `u''(t)` from the second derivative of the Hermite interpolant.
    pub fn second_derivative(&self, t: f64) -> f64 {
        if !self.contains(t) {
            return f64::NAN;
        }
        if self.t.len() == 1 {
            return self.ddu[0];
        }
        self.jet_in(self.interval(t), t)[2]
    }

    fn eval_in(&self, i: usize, t: f64) -> (f64, f64) {
        let [u, du, _] = self.jet_in(i, t);
        (u, du)
    }

    fn jet_in(&self, i: usize, t: f64) -> [f64; 3] {
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        hermite7(
            (t - t0) / h,
            h,
            [self.u[i], self.du[i], self.ddu[i], self.dddu[i]],
            [self.u[i + 1], self.du[i + 1], self.ddu[i + 1], self.dddu[i + 1]],
        )
    }

    /// Roots of `u` (`component = 0`) or `u'` (`component = 1`) in
    /// `[from, to]`, located by sign changes between nodes and refined by
    /// bisection on the dense output to `tol` absolute.
    pub fn roots(&self, component: usize, from: f64, to: f64, tol: f64) -> Vec<Crossing> {
        let pick = |t: f64| {
            let (u, du) = self.eval(t);
            if component == 0 {
                u
            } else {
                du
            }
        };
        let node = |i: usize| if component == 0 { self.u[i] } else { self.du[i] };
        let lo = from.max(self.t_start());
        let hi = to.min(self.t_end());
        let mut out = Vec::new();
        if !(lo < hi) {
            return out;
        }
        let start = self.interval(lo);
        let mut a = lo;
        let mut fa = pick(a);
        for i in start..self.t.len() - 1 {
            let b = self.t[i + 1].min(hi);
            let fb = if b == self.t[i + 1] { node(i + 1) } else { pick(b) };
            if fa == 0.0 && a == lo {
                out.push(Crossing { t: a, rising: fb > 0.0 });
            } else if fb == 0.0 {
                let rising = fa < 0.0;
                if b < hi {
                    out.push(Crossing { t: b, rising });
                }
            } else if fa != 0.0 && (fa < 0.0) != (fb < 0.0) {
                let t = bisect(&pick, a, b, fa, tol);
                out.push(Crossing { t, rising: fa < 0.0 });
            }
            if b >= hi {
                break;
            }
            a = b;
            fa = fb;
        }
        out
    }
}

/// A sign change of a trajectory component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    /// True when the component goes from negative to positive.
    pub rising: bool,
}

/// Septic Hermite interpolant on a step of length `h` with data
/// `(y, y', y'', y''')` at both ends, evaluated at the fraction `s`.
/// Returns `(y, y', y'')` in unscaled units.
fn hermite7(s: f64, h: f64, left: [f64; 4], right: [f64; 4]) -> [f64; 3] {
    // Scaled Taylor coefficients at both ends.
    let a = [left[0], left[1] * h, left[2] * h * h / 2.0, left[3] * h * h * h / 6.0];
    let b = [
        right[0],
        right[1] * h,
        right[2] * h * h / 2.0,
        right[3] * h * h * h / 6.0,
    ];
    // Taylor coefficients at s = 1 of the remainder after the cubic at s = 0.
    let r = [
        b[0] - (a[0] + a[1] + a[2] + a[3]),
        b[1] - (a[1] + 2.0 * a[2] + 3.0 * a[3]),
        b[2] - (a[2] + 3.0 * a[3]),
        b[3] - a[3],
    ];
    // Multiply by the Taylor series of s^{-4} at s = 1.
    let w = [1.0, -4.0, 10.0, -20.0];
    let mut q = [0.0; 4];
    for k in 0..4 {
        for j in 0..=k {
            q[k] += r[j] * w[k - j];
        }
    }
    let d = s - 1.0;
    let qv = q[0] + d * (q[1] + d * (q[2] + d * q[3]));
    let qd = q[1] + d * (2.0 * q[2] + 3.0 * d * q[3]);
    let qdd = 2.0 * q[2] + 6.0 * d * q[3];
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let p = a[0] + s * (a[1] + s * (a[2] + s * a[3])) + s4 * qv;
    let dp = a[1] + s * (2.0 * a[2] + 3.0 * s * a[3]) + 4.0 * s3 * qv + s4 * qd;
    let ddp = 2.0 * a[2] + 6.0 * s * a[3] + 12.0 * s2 * qv + 8.0 * s3 * qd + s4 * qdd;
    [p, dp / h, ddp / (h * h)]
}

/// Bisection on `[a, b]` given `f(a) = fa` with a sign change across the interval.
pub(crate) fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

type State = [f64; 2];

struct Rhs<'a, S: SecondOrderSystem> {
    sys: &'a S,
}

impl<S: SecondOrderSystem> Rhs<'_, S> {
    #[inline]
    fn eval(&self, t: f64, y: &State) -> State {
        [y[1], self.sys.accel(t, y[0], y[1])]
    }
}

#[inline]
fn comb(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrate from `(t0, u0, du0)` towards `t_end` (either direction).
///
/// `stop(t, u, du)` is consulted after every accepted step; returning `true`
/// ends the run early with [`Termination::Stopped`].
pub fn integrate<S, P>(
    sys: &S,
    t0: f64,
    u0: f64,
    du0: f64,
    t_end: f64,
    opts: &IntegratorOptions,
    mut stop: P,
) -> Result<(DenseTrajectory, Termination)>
where
    S: SecondOrderSystem,
    P: FnMut(f64, f64, f64) -> bool,
{
    if !(opts.rel_tol > 0.0 && opts.abs_tol >= 0.0) {
        return Err(Error::domain("tolerances must be positive"));
    }
    if !(t0.is_finite() && t_end.is_finite() && u0.is_finite() && du0.is_finite()) {
        return Err(Error::domain("non-finite initial data"));
    }
    let rhs = Rhs { sys };
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();

    let mut ts = vec![t0];
    let mut us = vec![u0];
    let mut dus = vec![du0];
    let mut ddus = vec![sys.accel(t0, u0, du0)];
    let mut dddus = vec![sys.jerk(t0, u0, du0)];
    let mut err_sum = 0.0;

    if span == 0.0 {
        let traj = DenseTrajectory::from_nodes(ts, us, dus, ddus, dddus, 0.0);
        return Ok((traj, Termination::Completed));
    }

    let mut t = t0;
    let mut y: State = [u0, du0];
    let mut k1 = rhs.eval(t, &y);
    let mut h = initial_step(&rhs, t, &y, &k1, dir, opts).min(span);
    let mut last_rejected = false;
    let mut steps = 0usize;
    let mut termination = Termination::Completed;

    loop {
        if steps >= opts.max_steps {
            return Err(Error::Integration {
                last_valid: t,
                reason: format!("maximum number of steps ({}) reached", opts.max_steps),
            });
        }
        steps += 1;
        let remaining = (t_end - t).abs();
        // a remainder within rounding of h is absorbed into this step
        let last = remaining - h <= 1e-10 * remaining + 64.0 * f64::EPSILON * t.abs();
        if last {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration {
                last_valid: t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        let hs = dir * h;
        let (y_new, k_new, err, err_abs) = dop853_step(&rhs, t, &y, &k1, hs, opts);
        if !(err.is_finite() && y_new[0].is_finite() && y_new[1].is_finite()) {
            // Treat as a rejection with a hard shrink.
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        let expo1 = 1.0 / 8.0;
        let fac11 = err.powf(expo1);
        let fac = (fac11 / 0.9).clamp(1.0 / 6.0, 3.0);
        let mut h_new = h / fac;
        if err <= 1.0 {
            t = if last { t_end } else { t + hs };
            y = y_new;
            k1 = k_new;
            err_sum += err_abs;
            ts.push(t);
            us.push(y[0]);
            dus.push(y[1]);
            ddus.push(k1[1]);
            dddus.push(sys.jerk(t, y[0], y[1]));
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            if stop(t, y[0], y[1]) {
                termination = Termination::Stopped;
                break;
            }
            if last {
                break;
            }
        } else {
            h_new = h / (fac11 / 0.9).min(3.0);
            last_rejected = true;
        }
        h = h_new.min(opts.max_step);
    }

    if dir < 0.0 {
        ts.reverse();
        us.reverse();
        dus.reverse();
        ddus.reverse();
        dddus.reverse();
    }
    let traj = DenseTrajectory::from_nodes(ts, us, dus, ddus, dddus, err_sum);
    Ok((traj, termination))
}

fn initial_step<S: SecondOrderSystem>(
    rhs: &Rhs<'_, S>,
    t: f64,
    y: &State,
    k1: &State,
    dir: f64,
    opts: &IntegratorOptions,
) -> f64 {
    let sk = |i: usize| opts.abs_tol + opts.rel_tol * y[i].abs();
    let dnf: f64 = (0..2).map(|i| (k1[i] / sk(i)).powi(2)).sum();
    let dny: f64 = (0..2).map(|i| (y[i] / sk(i)).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(opts.max_step);
    let y1 = [y[0] + dir * h * k1[0], y[1] + dir * h * k1[1]];
    let k2 = rhs.eval(t + dir * h, &y1);
    let der2 = (0..2).map(|i| ((k2[i] - k1[i]) / sk(i)).powi(2)).sum::<f64>().sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(1.0 / 8.0)
    };
    (100.0 * h).min(h1).min(opts.max_step)
}

/// One DOP853 step. Returns the new state, `f` at the new state, the
/// normalized error and an absolute error estimate for the `u` component.
fn dop853_step<S: SecondOrderSystem>(
    rhs: &Rhs<'_, S>,
    t: f64,
    y: &State,
    k1: &State,
    h: f64,
    opts: &IntegratorOptions,
) -> (State, State, f64, f64) {
    use tableau::*;
    let k2 = rhs.eval(t + C2 * h, &comb(y, h, &[(A21, k1)]));
    let k3 = rhs.eval(t + C3 * h, &comb(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = rhs.eval(t + C4 * h, &comb(y, h, &[(A41, k1), (A43, &k3)]));
    let k5 = rhs.eval(t + C5 * h, &comb(y, h, &[(A51, k1), (A53, &k3), (A54, &k4)]));
    let k6 = rhs.eval(t + C6 * h, &comb(y, h, &[(A61, k1), (A64, &k4), (A65, &k5)]));
    let k7 = rhs.eval(
        t + C7 * h,
        &comb(y, h, &[(A71, k1), (A74, &k4), (A75, &k5), (A76, &k6)]),
    );
    let k8 = rhs.eval(
        t + C8 * h,
        &comb(y, h, &[(A81, k1), (A84, &k4), (A85, &k5), (A86, &k6), (A87, &k7)]),
    );
    let k9 = rhs.eval(
        t + C9 * h,
        &comb(
            y,
            h,
            &[(A91, k1), (A94, &k4), (A95, &k5), (A96, &k6), (A97, &k7), (A98, &k8)],
        ),
    );
    let k10 = rhs.eval(
        t + C10 * h,
        &comb(
            y,
            h,
            &[
                (A101, k1),
                (A104, &k4),
                (A105, &k5),
                (A106, &k6),
                (A107, &k7),
                (A108, &k8),
                (A109, &k9),
            ],
        ),
    );
    let k11 = rhs.eval(
        t + C11 * h,
        &comb(
            y,
            h,
            &[
                (A111, k1),
                (A114, &k4),
                (A115, &k5),
                (A116, &k6),
                (A117, &k7),
                (A118, &k8),
                (A119, &k9),
                (A1110, &k10),
            ],
        ),
    );
    let t_new = t + h;
    let yy1 = comb(
        y,
        h,
        &[
            (A121, k1),
            (A124, &k4),
            (A125, &k5),
            (A126, &k6),
            (A127, &k7),
            (A128, &k8),
            (A129, &k9),
            (A1210, &k10),
            (A1211, &k11),
        ],
    );
    let k12 = rhs.eval(t_new, &yy1);
    let mut incr = [0.0; 2];
    for i in 0..2 {
        incr[i] =
            B1 * k1[i] + B6 * k6[i] + B7 * k7[i] + B8 * k8[i] + B9 * k9[i] + B10 * k10[i] + B11 * k11[i] + B12 * k12[i];
    }
    let y_new = [y[0] + h * incr[0], y[1] + h * incr[1]];

    let mut err = 0.0;
    let mut err2 = 0.0;
    let mut comp_err = [0.0; 2];
    for i in 0..2 {
        let sk = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
        let e2 = incr[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k12[i];
        err2 += (e2 / sk).powi(2);
        let e = ER1 * k1[i]
            + ER6 * k6[i]
            + ER7 * k7[i]
            + ER8 * k8[i]
            + ER9 * k9[i]
            + ER10 * k10[i]
            + ER11 * k11[i]
            + ER12 * k12[i];
        err += (e / sk).powi(2);
        comp_err[i] = (e / sk).powi(2);
    }
    let mut deno = err + 0.01 * err2;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let scale = h.abs() / (2.0 * deno).sqrt();
    let err_norm = err * scale;
    // Same normalization applied to the u component alone, in absolute units.
    let sk0 = opts.abs_tol + opts.rel_tol * y[0].abs().max(y_new[0].abs());
    let err_abs = comp_err[0] * scale * sk0;
    let k_new = rhs.eval(t_new, &y_new);
    (y_new, k_new, err_norm, err_abs)
}

/// Dormand–Prince 8(5,3) coefficients.
#[allow(clippy::excessive_precision)]
mod tableau {
    pub const C2: f64 = 0.526001519587677318785587544488E-01;
    pub const C3: f64 = 0.789002279381515978178381316732E-01;
    pub const C4: f64 = 0.118350341907227396726757197510E+00;
    pub const C5: f64 = 0.281649658092772603273242802490E+00;
    pub const C6: f64 = 0.333333333333333333333333333333E+00;
    pub const C7: f64 = 0.25E+00;
    pub const C8: f64 = 0.307692307692307692307692307692E+00;
    pub const C9: f64 = 0.651282051282051282051282051282E+00;
    pub const C10: f64 = 0.6E+00;
    pub const C11: f64 = 0.857142857142857142857142857142E+00;

    pub const A21: f64 = 5.26001519587677318785587544488E-2;
    pub const A31: f64 = 1.97250569845378994544595329183E-2;
    pub const A32: f64 = 5.91751709536136983633785987549E-2;
    pub const A41: f64 = 2.95875854768068491816892993775E-2;
    pub const A43: f64 = 8.87627564304205475450678981324E-2;
    pub const A51: f64 = 2.41365134159266685502369798665E-1;
    pub const A53: f64 = -8.84549479328286085344864962717E-1;
    pub const A54: f64 = 9.24834003261792003115737966543E-1;
    pub const A61: f64 = 3.7037037037037037037037037037E-2;
    pub const A64: f64 = 1.70828608729473871279604482173E-1;
    pub const A65: f64 = 1.25467687566822425016691814123E-1;
    pub const A71: f64 = 3.7109375E-2;
    pub const A74: f64 = 1.70252211019544039314978060272E-1;
    pub const A75: f64 = 6.02165389804559606850219397283E-2;
    pub const A76: f64 = -1.7578125E-2;
    pub const A81: f64 = 3.70920001185047927108779319836E-2;
    pub const A84: f64 = 1.70383925712239993810214054705E-1;
    pub const A85: f64 = 1.07262030446373284651809199168E-1;
    pub const A86: f64 = -1.53194377486244017527936158236E-2;
    pub const A87: f64 = 8.27378916381402288758473766002E-3;
    pub const A91: f64 = 6.24110958716075717114429577812E-1;
    pub const A94: f64 = -3.36089262944694129406857109825E0;
    pub const A95: f64 = -8.68219346841726006818189891453E-1;
    pub const A96: f64 = 2.75920996994467083049415600797E1;
    pub const A97: f64 = 2.01540675504778934086186788979E1;
    pub const A98: f64 = -4.34898841810699588477366255144E1;
    pub const A101: f64 = 4.77662536438264365890433908527E-1;
    pub const A104: f64 = -2.48811461997166764192642586468E0;
    pub const A105: f64 = -5.90290826836842996371446475743E-1;
    pub const A106: f64 = 2.12300514481811942347288949897E1;
    pub const A107: f64 = 1.52792336328824235832596922938E1;
    pub const A108: f64 = -3.32882109689848629194453265587E1;
    pub const A109: f64 = -2.03312017085086261358222928593E-2;
    pub const A111: f64 = -9.3714243008598732571704021658E-1;
    pub const A114: f64 = 5.18637242884406370830023853209E0;
    pub const A115: f64 = 1.09143734899672957818500254654E0;
    pub const A116: f64 = -8.14978701074692612513997267357E0;
    pub const A117: f64 = -1.85200656599969598641566180701E1;
    pub const A118: f64 = 2.27394870993505042818970056734E1;
    pub const A119: f64 = 2.49360555267965238987089396762E0;
    pub const A1110: f64 = -3.0467644718982195003823669022E0;
    pub const A121: f64 = 2.27331014751653820792359768449E0;
    pub const A124: f64 = -1.05344954667372501984066689879E1;
    pub const A125: f64 = -2.00087205822486249909675718444E0;
    pub const A126: f64 = -1.79589318631187989172765950534E1;
    pub const A127: f64 = 2.79488845294199600508499808837E1;
    pub const A128: f64 = -2.85899827713502369474065508674E0;
    pub const A129: f64 = -8.87285693353062954433549289258E0;
    pub const A1210: f64 = 1.23605671757943030647266201528E1;
    pub const A1211: f64 = 6.43392746015763530355970484046E-1;

    pub const B1: f64 = 5.42937341165687622380535766363E-2;
    pub const B6: f64 = 4.45031289275240888144113950566E0;
    pub const B7: f64 = 1.89151789931450038304281599044E0;
    pub const B8: f64 = -5.8012039600105847814672114227E0;
    pub const B9: f64 = 3.1116436695781989440891606237E-1;
    pub const B10: f64 = -1.52160949662516078556178806805E-1;
    pub const B11: f64 = 2.01365400804030348374776537501E-1;
    pub const B12: f64 = 4.47106157277725905176885569043E-2;

    pub const BHH1: f64 = 0.244094488188976377952755905512E+00;
    pub const BHH2: f64 = 0.733846688281611857341361741547E+00;
    pub const BHH3: f64 = 0.220588235294117647058823529412E-01;

    pub const ER1: f64 = 0.1312004499419488073250102996E-01;
    pub const ER6: f64 = -0.1225156446376204440720569753E+01;
    pub const ER7: f64 = -0.4957589496572501915214079952E+00;
    pub const ER8: f64 = 0.1664377182454986536961530415E+01;
    pub const ER9: f64 = -0.3503288487499736816886487290E+00;
    pub const ER10: f64 = 0.3341791187130174790297318841E+00;
    pub const ER11: f64 = 0.8192320648511571246570742613E-01;
    pub const ER12: f64 = -0.2235530786388629525884427845E-01;
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;

    impl SecondOrderSystem for Oscillator {
        fn accel(&self, _t: f64, u: f64, _du: f64) -> f64 {
            -u
        }
        fn jerk(&self, _t: f64, _u: f64, du: f64) -> f64 {
            -du
        }
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let opts = IntegratorOptions::default();
        let (traj, term) = integrate(&Oscillator, 0.0, 1.0, 0.0, 20.0, &opts, |_, _, _| false).unwrap();
        assert_eq!(term, Termination::Completed);
        assert_eq!(traj.t_end(), 20.0);
        for i in 0..=2000 {
            let t = 0.01 * i as f64;
            let (u, du) = traj.eval(t);
            assert!((u - t.cos()).abs() < 1e-9, "t={t}: {u} vs {}", t.cos());
            assert!((du + t.sin()).abs() < 1e-9);
        }
        assert!(traj.error_estimate() > 0.0);
    }

    #[test]
    fn backward_integration_sorted() {
        let opts = IntegratorOptions::default();
        let (traj, _) = integrate(&Oscillator, 0.0, 1.0, 0.0, -5.0, &opts, |_, _, _| false).unwrap();
        assert_eq!(traj.t_start(), -5.0);
        assert_eq!(traj.t_end(), 0.0);
        assert!((traj.value(-3.0) - 3.0f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn roots_of_cosine() {
        let opts = IntegratorOptions::default();
        let (traj, _) = integrate(&Oscillator, 0.0, 1.0, 0.0, 10.0, &opts, |_, _, _| false).unwrap();
        let roots = traj.roots(0, 0.0, 10.0, 1e-13);
        let expected = [0.5, 1.5, 2.5].map(|k| k * std::f64::consts::PI);
        assert_eq!(roots.len(), 3);
        for (c, e) in roots.iter().zip(expected) {
            assert!((c.t - e).abs() < 1e-9);
        }
        assert!(!roots[0].rising);
        assert!(roots[1].rising);
        let extrema = traj.roots(1, 0.1, 10.0, 1e-13);
        assert_eq!(extrema.len(), 3);
        assert!((extrema[0].t - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn stop_predicate() {
        let opts = IntegratorOptions::default();
        let (traj, term) = integrate(&Oscillator, 0.0, 1.0, 0.0, 100.0, &opts, |_, u, _| u < 0.0).unwrap();
        assert_eq!(term, Termination::Stopped);
        assert!(traj.t_end() > 0.5 * std::f64::consts::PI);
        assert!(traj.t_end() < 5.0);
    }

    #[test]
    fn outside_range_is_nan() {
        let opts = IntegratorOptions::default();
        let (traj, _) = integrate(&Oscillator, 0.0, 1.0, 0.0, 1.0, &opts, |_, _, _| false).unwrap();
        assert!(traj.value(1.5).is_nan());
        assert!(traj.value(-0.1).is_nan());
    }

    #[test]
    fn hermite_reproduces_septics() {
        let c = [1.0, 2.0, -1.0, 0.5, -0.25, 0.1, 0.3, -0.07];
        let f = |x: f64, k: usize| -> f64 {
            let mut acc = 0.0;
            for (j, cj) in c.iter().enumerate().skip(k) {
                let fall: f64 = (0..k).map(|i| (j - i) as f64).product();
                acc += cj * fall * x.powi((j - k) as i32);
            }
            acc
        };
        let (a, b) = (0.3, 1.7);
        let h = b - a;
        let left = [f(a, 0), f(a, 1), f(a, 2), f(a, 3)];
        let right = [f(b, 0), f(b, 1), f(b, 2), f(b, 3)];
        for k in 0..=10 {
            let x = a + h * k as f64 / 10.0;
            let [v, dv, ddv] = hermite7((x - a) / h, h, left, right);
            assert!((v - f(x, 0)).abs() < 1e-12);
            assert!((dv - f(x, 1)).abs() < 1e-11);
            assert!((ddv - f(x, 2)).abs() < 1e-10);
        }
    }
}
