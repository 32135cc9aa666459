//! Critical exponents of the radial steady-state problem, regime
//! classification, and the explicit singular steady state
//! `φ∞(r) = L r^{-2/(p-1)}`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Default relative tolerance used to decide `p == p_S`.
pub const CRITICAL_REL_TOL: f64 = 1e-12;

/// Dimension and exponent of `u_t = Δu + |u|^{p-1}u` in `R^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemParams {
    dim: u32,
    p: f64,
}

impl ProblemParams {
    pub fn new(dim: u32, p: f64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::domain(format!("dimension must be >= 1, got {dim}")));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::domain(format!("exponent must be a finite real > 1, got {p}")));
        }
        Ok(Self { dim, p })
    }

    /// The critical Sobolev pair `(N, (N+2)/(N-2))`.
    pub fn sobolev_critical(dim: u32) -> Result<Self> {
        match sobolev_exponent(dim)? {
            ExtendedReal::Finite(p) => Self::new(dim, p),
            ExtendedReal::Infinite => Err(Error::domain(format!("no finite Sobolev exponent in dimension {dim}"))),
        }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn n(&self) -> f64 {
        f64::from(self.dim)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Self-similar decay rate `2/(p-1)`.
    pub fn decay_rate(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// Scaling exponent `(p-1)/2` of the family `λ Φ(λ^{(p-1)/2} r)`.
    pub fn scaling_exponent(&self) -> f64 {
        0.5 * (self.p - 1.0)
    }
}

/// A positive real or `+∞`. Ordered totally, with `+∞` above every finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinite,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            ExtendedReal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinite)
    }

    /// Compare a finite real against this value.
    pub fn cmp_real(self, x: f64) -> Ordering {
        match self {
            ExtendedReal::Infinite => Ordering::Greater,
            ExtendedReal::Finite(v) => v.total_cmp(&x),
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self, other) {
            (ExtendedReal::Infinite, ExtendedReal::Infinite) => Ordering::Equal,
            (ExtendedReal::Infinite, _) => Ordering::Greater,
            (_, ExtendedReal::Infinite) => Ordering::Less,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a.total_cmp(b),
        })
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::Infinite => f.write_str("inf"),
        }
    }
}

/// Finite values serialize as numbers, `+∞` as the string `"inf"`.
impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(x) => serializer.serialize_f64(*x),
            ExtendedReal::Infinite => serializer.serialize_str("inf"),
        }
    }
}

fn check_dim(dim: u32) -> Result<()> {
    if dim < 1 {
        Err(Error::domain(format!("dimension must be >= 1, got {dim}")))
    } else {
        Ok(())
    }
}

/// Serrin's exponent `N/(N-2)`, infinite for `N <= 2`.
pub fn serrin_exponent(dim: u32) -> Result<ExtendedReal> {
    check_dim(dim)?;
    if dim <= 2 {
        return Ok(ExtendedReal::Infinite);
    }
    let n = f64::from(dim);
    Ok(ExtendedReal::Finite(n / (n - 2.0)))
}

/// Critical Sobolev exponent `(N+2)/(N-2)`, infinite for `N <= 2`.
pub fn sobolev_exponent(dim: u32) -> Result<ExtendedReal> {
    check_dim(dim)?;
    if dim <= 2 {
        return Ok(ExtendedReal::Infinite);
    }
    let n = f64::from(dim);
    Ok(ExtendedReal::Finite((n + 2.0) / (n - 2.0)))
}

/// Joseph–Lundgren exponent, finite only for `N > 10`.
pub fn joseph_lundgren_exponent(dim: u32) -> Result<ExtendedReal> {
    check_dim(dim)?;
    if dim <= 10 {
        return Ok(ExtendedReal::Infinite);
    }
    let n = f64::from(dim);
    let num = (n - 2.0).powi(2) - 4.0 * n + 8.0 * (n - 1.0).sqrt();
    Ok(ExtendedReal::Finite(num / ((n - 2.0) * (n - 10.0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentTable {
    pub p_sg: ExtendedReal,
    #[serde(rename = "p_S")]
    pub p_s: ExtendedReal,
    #[serde(rename = "p_JL")]
    pub p_jl: ExtendedReal,
}

impl ExponentTable {
    pub fn for_dim(dim: u32) -> Result<Self> {
        Ok(Self {
            p_sg: serrin_exponent(dim)?,
            p_s: sobolev_exponent(dim)?,
            p_jl: joseph_lundgren_exponent(dim)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p <= p_sg`: no singular steady state.
    BelowSerrin,
    /// `p_sg < p < p_S`.
    SerrinToSobolev,
    /// `p = p_S`.
    Critical,
    /// `p_S < p < p_JL`.
    SobolevToJl,
    /// `p >= p_JL`.
    AtOrAboveJl,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::BelowSerrin => "below_serrin",
            Regime::SerrinToSobolev => "serrin_to_sobolev",
            Regime::Critical => "critical",
            Regime::SobolevToJl => "sobolev_to_jl",
            Regime::AtOrAboveJl => "at_or_above_jl",
        }
    }

    /// The range `(p_sg, p_JL)` in which the regular profile meets `φ∞`.
    pub fn has_first_intersection(self) -> bool {
        matches!(self, Regime::SerrinToSobolev | Regime::Critical | Regime::SobolevToJl)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_regime(params: ProblemParams) -> Regime {
    classify_regime_with_tol(params, CRITICAL_REL_TOL)
}

/// Regime classification where `|p - p_S| <= critical_rel_tol * p_S` counts as critical.
pub fn classify_regime_with_tol(params: ProblemParams, critical_rel_tol: f64) -> Regime {
    // dim >= 1 is guaranteed by ProblemParams.
    let table = ExponentTable::for_dim(params.dim).expect("valid dimension");
    let p = params.p;
    if table.p_sg.cmp_real(p) != Ordering::Less {
        return Regime::BelowSerrin;
    }
    if let ExtendedReal::Finite(ps) = table.p_s {
        if (p - ps).abs() <= critical_rel_tol * ps {
            return Regime::Critical;
        }
        if p < ps {
            return Regime::SerrinToSobolev;
        }
    } else {
        return Regime::SerrinToSobolev;
    }
    if table.p_jl.cmp_real(p) == Ordering::Greater {
        Regime::SobolevToJl
    } else {
        Regime::AtOrAboveJl
    }
}

pub fn is_critical(params: ProblemParams) -> bool {
    classify_regime(params) == Regime::Critical
}

/// `L^{p-1} = (2/(p-1)) (N - 2 - 2/(p-1))`.
fn amplitude_power(params: ProblemParams) -> f64 {
    let m = params.decay_rate();
    m * (params.n() - 2.0 - m)
}

/// Amplitude `L` of the singular steady state; requires `p > p_sg(N)`.
pub fn singular_amplitude(params: ProblemParams) -> Result<f64> {
    let inner = amplitude_power(params);
    let above_serrin = serrin_exponent(params.dim)?.cmp_real(params.p) == Ordering::Less;
    if !above_serrin || inner <= 0.0 {
        return Err(Error::regime(format!(
            "no singular steady state for N = {}, p = {} (requires p > p_sg)",
            params.dim, params.p
        )));
    }
    Ok(inner.powf(1.0 / (params.p - 1.0)))
}

/// `φ∞(r) = L r^{-2/(p-1)}`.
pub fn phi_infinity(params: ProblemParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("φ∞ is singular at r = {r}; need r > 0")));
    }
    Ok(singular_amplitude(params)? * r.powf(-params.decay_rate()))
}

/// The singular steady state as a reusable radial function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularSteadyState {
    params: ProblemParams,
    amplitude: f64,
}

impl SingularSteadyState {
    pub fn new(params: ProblemParams) -> Result<Self> {
        Ok(Self {
            params,
            amplitude: singular_amplitude(params)?,
        })
    }

    pub fn params(&self) -> ProblemParams {
        self.params
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn value(&self, r: f64) -> f64 {
        self.amplitude * r.powf(-self.params.decay_rate())
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let m = self.params.decay_rate();
        -m * self.amplitude * r.powf(-m - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, p: f64) -> ProblemParams {
        ProblemParams::new(n, p).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert_eq!(serrin_exponent(3).unwrap(), ExtendedReal::Finite(3.0));
        assert_eq!(serrin_exponent(2).unwrap(), ExtendedReal::Infinite);
        assert_eq!(serrin_exponent(6).unwrap(), ExtendedReal::Finite(1.5));
        assert_eq!(sobolev_exponent(3).unwrap(), ExtendedReal::Finite(5.0));
        assert_eq!(sobolev_exponent(1).unwrap(), ExtendedReal::Infinite);
        assert_eq!(sobolev_exponent(6).unwrap(), ExtendedReal::Finite(2.0));
        assert_eq!(joseph_lundgren_exponent(10).unwrap(), ExtendedReal::Infinite);
        assert_eq!(joseph_lundgren_exponent(3).unwrap(), ExtendedReal::Infinite);
        let jl = joseph_lundgren_exponent(11).unwrap().finite().unwrap();
        assert!((jl - 6.9220245868).abs() < 1e-9, "{jl}");
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(serrin_exponent(0), Err(Error::Domain(_))));
        assert!(matches!(sobolev_exponent(0), Err(Error::Domain(_))));
        assert!(matches!(joseph_lundgren_exponent(0), Err(Error::Domain(_))));
        assert!(ProblemParams::new(0, 2.0).is_err());
        assert!(ProblemParams::new(3, 1.0).is_err());
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(params(3, 4.0)), Regime::SerrinToSobolev);
        assert_eq!(classify_regime(params(3, 5.0)), Regime::Critical);
        assert_eq!(classify_regime(params(11, 8.0)), Regime::AtOrAboveJl);
        assert_eq!(classify_regime(params(3, 3.0)), Regime::BelowSerrin);
        assert_eq!(classify_regime(params(3, 2.0)), Regime::BelowSerrin);
        assert_eq!(classify_regime(params(2, 50.0)), Regime::BelowSerrin);
        assert_eq!(classify_regime(params(11, 3.0)), Regime::SobolevToJl);
        assert_eq!(classify_regime(params(3, 9.0)), Regime::SobolevToJl);
        // (N+2)/(N-2) entered as a rounded decimal still routes to the critical case.
        assert_eq!(classify_regime(params(7, 1.8)), Regime::Critical);
        assert_eq!(
            classify_regime_with_tol(params(3, 5.0 + 1e-9), 1e-12),
            Regime::SobolevToJl
        );
        assert_eq!(classify_regime_with_tol(params(3, 5.0 + 1e-9), 1e-6), Regime::Critical);
    }

    #[test]
    fn amplitude_values() {
        let l = singular_amplitude(params(3, 5.0)).unwrap();
        assert!((l - 0.25f64.powf(0.25)).abs() < 1e-15);
        assert!((l - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        let l = singular_amplitude(params(11, 3.0)).unwrap();
        assert!((l - 2.8284271247).abs() < 1e-10);
        assert!(matches!(singular_amplitude(params(3, 3.0)), Err(Error::Regime(_))));
        assert!(matches!(singular_amplitude(params(2, 3.0)), Err(Error::Regime(_))));
    }

    #[test]
    fn phi_infinity_values() {
        let pr = params(3, 5.0);
        assert!((phi_infinity(pr, 1.0).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        assert!(matches!(phi_infinity(pr, 0.0), Err(Error::Domain(_))));
        assert!(matches!(phi_infinity(pr, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn exponent_ordering_and_monotonicity() {
        for n in 3..=60 {
            let t = ExponentTable::for_dim(n).unwrap();
            assert!(t.p_sg < t.p_s);
            assert!(t.p_s < t.p_jl);
        }
        let mut prev = joseph_lundgren_exponent(11).unwrap().finite().unwrap();
        for n in 12..=60 {
            let cur = joseph_lundgren_exponent(n).unwrap().finite().unwrap();
            assert!(cur < prev, "p_JL not decreasing at N = {n}");
            prev = cur;
        }
    }

    #[test]
    fn steady_state_identity() {
        // Residual of φ∞ in the radial equation is r^{-2p/(p-1)}(L^p - L m (N-2-m)).
        for &(n, p) in &[(3, 4.0), (3, 5.0), (5, 2.5), (11, 3.0), (11, 8.0), (20, 1.3)] {
            let pr = params(n, p);
            let l = singular_amplitude(pr).unwrap();
            let m = pr.decay_rate();
            let defect = l.powf(p) - l * m * (pr.n() - 2.0 - m);
            assert!(defect.abs() <= 1e-12 * l.powf(p), "N={n} p={p}: {defect}");
            let phi = SingularSteadyState::new(pr).unwrap();
            for &r in &[0.1f64, 1.0, 7.5] {
                // Second derivative in closed form.
                let d2 = m * (m + 1.0) * l * r.powf(-m - 2.0);
                let res = d2 + (pr.n() - 1.0) / r * phi.derivative(r) + phi.value(r).powf(p);
                assert!(res.abs() <= 1e-12 * phi.value(r).powf(p), "{res}");
            }
        }
    }

    #[test]
    fn serialization_of_infinity() {
        let t = ExponentTable::for_dim(3).unwrap();
        let s = format!("{}", t.p_jl);
        assert_eq!(s, "inf");
    }
}
