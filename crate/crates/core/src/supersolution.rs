//! Piecewise barriers `z_λ`: the regular steady state `φ_λ` inside the
//! junction radius, a singular steady state outside, and a concave kink at
//! the junction that makes the glued function a weak supersolution.

use std::sync::Arc;

use serde::Serialize;

use crate::emden_fowler::DelaunayProfile;
use crate::error::{Error, Result};
use crate::exponents::{classify_regime, is_critical, ProblemParams, SingularSteadyState};
use crate::intersections::{first_intersection_radius, tau_lambda};
use crate::ode::bisect;
use crate::radial_ode::{integrate_regular_default, RadialFunction, RadialProfile, ScaledProfile};

/// The part of the barrier beyond the junction.
#[derive(Debug, Clone)]
pub enum OuterBranch {
    Singular(SingularSteadyState),
    Delaunay(DelaunayProfile),
}

impl RadialFunction for OuterBranch {
    fn value(&self, r: f64) -> f64 {
        match self {
            OuterBranch::Singular(s) => s.value(r),
            OuterBranch::Delaunay(d) => d.value(r),
        }
    }

    fn derivative(&self, r: f64) -> f64 {
        match self {
            OuterBranch::Singular(s) => s.derivative(r),
            OuterBranch::Delaunay(d) => RadialFunction::derivative(d, r),
        }
    }
}

/// `z(r) = φ_λ(r)` for `r ≤ junction`, `outer(r)` beyond.
#[derive(Debug, Clone)]
pub struct PiecewiseBarrier {
    params: ProblemParams,
    lambda: f64,
    junction: f64,
    inner: ScaledProfile,
    outer: OuterBranch,
    kink_jump: f64,
}

impl PiecewiseBarrier {
    pub fn params(&self) -> ProblemParams {
        self.params
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn junction(&self) -> f64 {
        self.junction
    }

    /// `φ_λ'(junction) - outer'(junction)`.
    pub fn kink_jump(&self) -> f64 {
        self.kink_jump
    }

    pub fn inner(&self) -> &ScaledProfile {
        &self.inner
    }

    pub fn outer(&self) -> &OuterBranch {
        &self.outer
    }

    /// Largest value, attained at the origin.
    pub fn sup(&self) -> f64 {
        self.lambda
    }

    /// `|inner(junction) - outer(junction)|`.
    pub fn continuity_gap(&self) -> f64 {
        (self.inner.value(self.junction) - self.outer.value(self.junction)).abs()
    }

    /// One-sided derivatives at `r`: `(left, right)`.
    pub fn one_sided_derivatives(&self, r: f64) -> (f64, f64) {
        if r == self.junction {
            (self.inner.derivative(r), self.outer.derivative(r))
        } else {
            let d = self.derivative(r);
            (d, d)
        }
    }

    /// The same barrier family at `λ·mu`, reusing the base profile.
    pub fn rescaled(&self, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::domain(format!("lambda must be positive, got {mu}")));
        }
        let lambda = self.lambda * mu;
        let inner = ScaledProfile::new(Arc::clone(self.inner.base()), lambda)?;
        let stretch = mu.powf(self.params.scaling_exponent());
        let junction = self.junction / stretch;
        let outer = match &self.outer {
            OuterBranch::Singular(s) => OuterBranch::Singular(*s),
            OuterBranch::Delaunay(_) => {
                return Err(Error::domain(
                    "Delaunay barriers are rebuilt per λ; use build_z_lambda_delaunay",
                ))
            }
        };
        let kink_jump = inner.derivative(junction) - outer.derivative(junction);
        Ok(Self {
            params: self.params,
            lambda,
            junction,
            inner,
            outer,
            kink_jump,
        })
    }
}

impl RadialFunction for PiecewiseBarrier {
    fn value(&self, r: f64) -> f64 {
        if r <= self.junction {
            self.inner.value(r)
        } else {
            self.outer.value(r)
        }
    }

    fn derivative(&self, r: f64) -> f64 {
        if r <= self.junction {
            self.inner.derivative(r)
        } else {
            self.outer.derivative(r)
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

fn finish(
    params: ProblemParams,
    lambda: f64,
    junction: f64,
    inner: ScaledProfile,
    outer: OuterBranch,
) -> Result<PiecewiseBarrier> {
    let kink_jump = inner.derivative(junction) - outer.derivative(junction);
    let barrier = PiecewiseBarrier {
        params,
        lambda,
        junction,
        inner,
        outer,
        kink_jump,
    };
    let scale = barrier
        .inner
        .value(junction)
        .abs()
        .max(barrier.outer.value(junction).abs());
    if barrier.continuity_gap() > 1e-10 * scale {
        return Err(Error::Conditioning(format!(
            "barrier discontinuous at the junction: gap {:e}",
            barrier.continuity_gap()
        )));
    }
    if !(kink_jump > 0.0) {
        return Err(Error::Conditioning(format!(
            "kink sign check failed at the junction: jump {kink_jump:e}"
        )));
    }
    Ok(barrier)
}

/// `Z = Φ` on `[0, r_1]`, `φ∞` beyond, and `z_λ(r) = λ Z(λ^{(p-1)/2} r)`.
pub fn build_z_lambda(params: ProblemParams, lambda: f64) -> Result<PiecewiseBarrier> {
    let regime = classify_regime(params);
    if !regime.has_first_intersection() {
        return Err(Error::regime(format!(
            "the barrier needs p_sg < p < p_JL (N = {}, p = {}, regime {regime})",
            params.dim(),
            params.p()
        )));
    }
    check_lambda(lambda)?;
    let r1_orbit = first_intersection_radius(params)?;
    let base = Arc::new(integrate_regular_default(params, 2.0 * r1_orbit + 1.0)?);
    let singular = SingularSteadyState::new(params)?;
    let r1 = polish_crossing(&base, &singular, r1_orbit);
    let inner = ScaledProfile::new(base, lambda)?;
    let junction = r1 / lambda.powf(params.scaling_exponent());
    finish(params, lambda, junction, inner, OuterBranch::Singular(singular))
}

/// The whole family `λ ↦ z_λ` built from one `Z`.
#[derive(Debug, Clone)]
pub struct BarrierFamily {
    base: PiecewiseBarrier,
}

impl BarrierFamily {
    pub fn new(params: ProblemParams) -> Result<Self> {
        Ok(Self {
            base: build_z_lambda(params, 1.0)?,
        })
    }

    pub fn params(&self) -> ProblemParams {
        self.base.params
    }

    /// `Z`, the member with `λ = 1`.
    pub fn base(&self) -> &PiecewiseBarrier {
        &self.base
    }

    pub fn member(&self, lambda: f64) -> Result<PiecewiseBarrier> {
        self.base.rescaled(lambda)
    }

    /// `z_λ(r) = λ Z(λ^{(p-1)/2} r)`.
    pub fn value(&self, lambda: f64, r: f64) -> f64 {
        lambda * self.base.value(lambda.powf(self.base.params.scaling_exponent()) * r)
    }

    /// `s_λ = r_1 λ^{-(p-1)/2}`.
    pub fn junction(&self, lambda: f64) -> f64 {
        self.base.junction / lambda.powf(self.base.params.scaling_exponent())
    }
}

/// Re-locate a crossing on the sampled profile itself so that the glued
/// barrier is continuous to rounding.
fn polish_crossing(base: &RadialProfile, singular: &SingularSteadyState, r: f64) -> f64 {
    let gap = |x: f64| base.value(x) - singular.value(x);
    let (a, b) = (r * (1.0 - 1e-7), r * (1.0 + 1e-7));
    let (ga, gb) = (gap(a), gap(b));
    if (ga < 0.0) != (gb < 0.0) {
        bisect(&gap, a, b, ga, 4.0 * f64::EPSILON * r)
    } else {
        r
    }
}

/// `φ_λ` on `[0, τ_λ]` glued to the Delaunay profile `ψ` beyond, at `p = p_S`.
pub fn build_z_lambda_delaunay(dim: u32, delaunay: &DelaunayProfile, lambda: f64) -> Result<PiecewiseBarrier> {
    let params = ProblemParams::sobolev_critical(dim)?;
    if !is_critical(params) || delaunay.params().dim != dim {
        return Err(Error::regime("the Delaunay barrier lives at p = p_S(N)"));
    }
    check_lambda(lambda)?;
    if delaunay.is_constant() {
        return build_z_lambda(params, lambda);
    }
    let base = Arc::new(integrate_regular_default(params, 200.0)?);
    let tau = tau_lambda(params, &base, delaunay, lambda)?;
    if !tau.transversal {
        return Err(Error::Conditioning(format!(
            "φ_λ and ψ meet tangentially at τ = {}",
            tau.tau
        )));
    }
    let inner = ScaledProfile::new(base, lambda)?;
    finish(params, lambda, tau.tau, inner, OuterBranch::Delaunay(delaunay.clone()))
}

/// Build a barrier for `p_sg < p < p_JL`, or a Delaunay-capped one at `p = p_S`
/// when `delaunay` is given.
pub fn build_barrier(
    params: ProblemParams,
    lambda: f64,
    delaunay: Option<&DelaunayProfile>,
) -> Result<PiecewiseBarrier> {
    match delaunay {
        Some(d) => {
            if !is_critical(params) {
                return Err(Error::regime("the Delaunay barrier lives at p = p_S(N)"));
            }
            build_z_lambda_delaunay(params.dim(), d, lambda)
        }
        None => build_z_lambda(params, lambda),
    }
}

/// Uniform nodes `k h'` on `[r_lo, r_hi]` with `h' = junction / round(junction / h)`,
/// so that the junction is a node.
pub fn snapped_nodes(junction: f64, r_lo: f64, r_hi: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && r_lo >= 0.0 && r_hi > r_lo && junction > 0.0) {
        return Err(Error::Mesh(format!(
            "invalid mesh request h = {h}, range [{r_lo}, {r_hi}], junction {junction}"
        )));
    }
    let cells = (junction / h).round().max(1.0);
    let hs = junction / cells;
    let first = (r_lo / hs).ceil() as i64;
    let last = (r_hi / hs).floor() as i64;
    if last - first < 2 {
        return Err(Error::Mesh("fewer than three nodes in range".into()));
    }
    Ok((first..=last)
        .map(|k| if k as f64 == cells { junction } else { k as f64 * hs })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupersolutionResidual {
    /// `(r_i, residual_i)` for every interior node.
    pub cells: Vec<(f64, f64)>,
    pub min_weak_residual: f64,
    /// `max |residual|` over cells not containing the junction.
    pub max_smooth_residual: f64,
    pub junction_residual: f64,
    /// `kink_jump · junction^{N-1}`, the mass of the kink.
    pub kink_mass: f64,
    /// `kink_mass / V_j` for the junction cell volume `V_j`.
    pub predicted_junction_residual: f64,
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * GAUSS5.iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>()
}

/// Finite-volume weak residual `-(r^{N-1} z')'/r^{N-1} - z^p` averaged over
/// the dual cell `[r_{i-1/2}, r_{i+1/2}]` of each interior node.
///
/// Fluxes use the exact one-sided derivatives of the barrier at the cell
/// faces; the source is integrated by Gauss quadrature, split at the
/// junction. A kink with `z'(j-) > z'(j+)` contributes
/// `kink_jump · j^{N-1} / V_j` to the junction cell.
pub fn discrete_supersolution_residual(barrier: &PiecewiseBarrier, nodes: &[f64]) -> Result<SupersolutionResidual> {
    if nodes.len() < 3 || nodes.windows(2).any(|w| !(w[0] < w[1])) || nodes[0] < 0.0 {
        return Err(Error::Mesh("nodes must be nonnegative and strictly increasing".into()));
    }
    let j = barrier.junction();
    let jn = nodes
        .iter()
        .position(|&r| (r - j).abs() <= 1e-12 * j)
        .filter(|&i| i > 0 && i + 1 < nodes.len())
        .ok_or_else(|| Error::Mesh(format!("junction {j} is not an interior mesh node")))?;
    let n = barrier.params().n();
    let p = barrier.params().p();
    let flux = |r: f64| r.powf(n - 1.0) * barrier.derivative(r);
    let source = |r: f64| barrier.value(r).abs().powf(p) * r.powf(n - 1.0);
    let mut cells = Vec::with_capacity(nodes.len() - 2);
    let mut min_weak = f64::INFINITY;
    let mut max_smooth: f64 = 0.0;
    let mut junction_residual = f64::NAN;
    let mut volume_j = f64::NAN;
    for i in 1..nodes.len() - 1 {
        let a = 0.5 * (nodes[i - 1] + nodes[i]);
        let b = 0.5 * (nodes[i] + nodes[i + 1]);
        let vol = (b.powf(n) - a.powf(n)) / n;
        let mass = if a < j && j < b {
            gauss(source, a, j) + gauss(source, j, b)
        } else {
            gauss(source, a, b)
        };
        let res = (-(flux(b) - flux(a)) - mass) / vol;
        cells.push((nodes[i], res));
        min_weak = min_weak.min(res);
        if i == jn {
            junction_residual = res;
            volume_j = vol;
        } else {
            max_smooth = max_smooth.max(res.abs());
        }
    }
    let kink_mass = barrier.kink_jump() * j.powf(n - 1.0);
    Ok(SupersolutionResidual {
        cells,
        min_weak_residual: min_weak,
        max_smooth_residual: max_smooth,
        junction_residual,
        kink_mass,
        predicted_junction_residual: kink_mass / volume_j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emden_fowler::{critical_equilibrium, periodic_orbit};

    fn params(n: u32, p: f64) -> ProblemParams {
        ProblemParams::new(n, p).unwrap()
    }

    #[test]
    fn critical_kink_value() {
        let z = build_z_lambda(params(3, 5.0), 1.0).unwrap();
        let r1 = 3.0 - 6f64.sqrt();
        assert!((z.junction() - r1).abs() < 1e-9);
        assert!((z.kink_jump() - 0.70672).abs() < 1e-4, "{}", z.kink_jump());
        // closed-form derivatives at r1
        let dphi = -(r1 / 3.0) * (1.0 + r1 * r1 / 3.0).powf(-1.5);
        let dinf = -0.5 * 0.5f64.sqrt() * r1.powf(-1.5);
        assert!((z.kink_jump() - (dphi - dinf)).abs() < 1e-8);
        assert_eq!(z.value(0.0), 1.0);
    }

    #[test]
    fn junction_scaling_and_equivariance() {
        let pr = params(3, 4.0);
        let z1 = build_z_lambda(pr, 1.0).unwrap();
        let z2 = build_z_lambda(pr, 2.0).unwrap();
        let ratio = z2.junction() / z1.junction();
        assert!((ratio - 2f64.powf(-1.5)).abs() < 1e-14);
        let k = pr.scaling_exponent();
        for i in 1..200 {
            let r = 0.05 * f64::from(i);
            let want = 2.0 * z1.value(2f64.powf(k) * r);
            let got = z2.value(r);
            assert!((got - want).abs() <= 1e-12 * want.abs(), "r={r}: {got} vs {want}");
        }
        assert_eq!(z2.value(0.0), 2.0);
        assert!(matches!(build_z_lambda(params(11, 8.0), 1.0), Err(Error::Regime(_))));
        assert!(matches!(build_z_lambda(pr, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_delaunay_reduces_to_singular_cap() {
        let flat = DelaunayProfile::constant(3).unwrap();
        let a = build_z_lambda_delaunay(3, &flat, 1.5).unwrap();
        let b = build_z_lambda(params(3, 5.0), 1.5).unwrap();
        assert_eq!(a.junction(), b.junction());
        assert_eq!(a.kink_jump(), b.kink_jump());
    }

    #[test]
    fn delaunay_cap_is_continuous_with_positive_kink() {
        let v_star = critical_equilibrium(3).unwrap();
        let psi = DelaunayProfile::new(&periodic_orbit(3, 0.5 * v_star).unwrap());
        let z = build_z_lambda_delaunay(3, &psi, 1.0).unwrap();
        assert!(z.continuity_gap() <= 1e-10);
        assert!(z.kink_jump() > 0.0);
        assert!(matches!(
            build_barrier(params(3, 4.0), 1.0, Some(&psi)),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn residual_requires_snapped_mesh() {
        let z = build_z_lambda(params(3, 5.0), 1.0).unwrap();
        let nodes: Vec<f64> = (1..100).map(|i| 0.0123 * f64::from(i)).collect();
        assert!(matches!(
            discrete_supersolution_residual(&z, &nodes),
            Err(Error::Mesh(_))
        ));
        let nodes = snapped_nodes(z.junction(), 0.01, 3.0, 1e-2).unwrap();
        let res = discrete_supersolution_residual(&z, &nodes).unwrap();
        assert!(res.junction_residual > 0.0);
        let rel = (res.junction_residual - res.predicted_junction_residual).abs() / res.predicted_junction_residual;
        assert!(rel < 1e-6, "{rel}");
    }
}
