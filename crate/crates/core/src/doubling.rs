//! The doubling lemma on finite metric spaces.
//!
//! Given `M ≥ 0`, `y` with `M(y) > 0` and `k > 0`, find `x` with
//! `M(x) ≥ M(y)` such that `M(z) ≤ 2 M(x)` whenever `d(z, x) ≤ k / M(x)`.
//! Finite spaces are complete, so the iteration below always stops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(x, t)` of space-time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Self { x, t }
    }
}

/// `|x - x̃| + √|t - t̃|`.
///
/// # Panics
/// If the spatial dimensions differ.
pub fn parabolic_distance(a: &SpaceTimePoint, b: &SpaceTimePoint) -> f64 {
    assert_eq!(a.x.len(), b.x.len(), "spatial dimensions differ");
    let space = a.x.iter().zip(&b.x).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    space + (a.t - b.t).abs().sqrt()
}

/// Points with a validated distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMetricSpace {
    points: Vec<String>,
    dist: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    /// Check symmetry, zero diagonal, positivity off the diagonal and the
    /// triangle inequality, each to `1e-12` relative to the largest distance.
    #[allow(clippy::needless_range_loop)]
    pub fn new(points: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::domain("metric space has no points"));
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::domain(format!("distance matrix must be {n}×{n}")));
        }
        let scale = dist.iter().flatten().fold(0.0f64, |m, d| m.max(d.abs()));
        let tol = 1e-12 * scale.max(1.0);
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(Error::domain(format!("d({i},{i}) = {} is not zero", dist[i][i])));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::domain(format!(
                        "d({i},{j}) = {d} is not a finite nonnegative number"
                    )));
                }
                if i != j && d == 0.0 {
                    return Err(Error::domain(format!("distinct points {i} and {j} at distance 0")));
                }
                if (d - dist[j][i]).abs() > tol {
                    return Err(Error::domain(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    if dist[i][l] > dist[i][j] + dist[j][l] + tol {
                        return Err(Error::domain(format!("triangle inequality fails for ({i},{j},{l})")));
                    }
                }
            }
        }
        Ok(Self { points, dist })
    }

    /// Space on labelled points with distances from `metric`.
    pub fn from_metric<P>(labels: Vec<String>, pts: &[P], metric: impl Fn(&P, &P) -> f64) -> Result<Self> {
        if labels.len() != pts.len() {
            return Err(Error::domain("one label per point is required"));
        }
        let dist = pts.iter().map(|a| pts.iter().map(|b| metric(a, b)).collect()).collect();
        Self::new(labels, dist)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p == id)
    }
}

/// A nonnegative weight per point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightFunction {
    values: Vec<f64>,
}

impl WeightFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!(
                "M[{i}] = {v} is not a finite nonnegative number"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingPoint {
    /// Index of the returned point.
    pub x: usize,
    pub m_x: f64,
    /// `k / M(x)`.
    pub ball_radius: f64,
    /// Number of moves made; `M` more than doubles at each move.
    pub iterations: usize,
    /// Visited indices, starting at `y`.
    pub path: Vec<usize>,
}

/// Run the doubling iteration from `y`: while some `z` with
/// `d(z, x) ≤ k/M(x)` has `M(z) > 2M(x)`, move to the one with the largest
/// `M` (smallest index on ties).
pub fn doubling_point(space: &FiniteMetricSpace, weight: &WeightFunction, y: usize, k: f64) -> Result<DoublingPoint> {
    if weight.values.len() != space.len() {
        return Err(Error::domain(format!(
            "{} weights for {} points",
            weight.values.len(),
            space.len()
        )));
    }
    if y >= space.len() {
        return Err(Error::domain(format!("start index {y} out of range")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(format!("k must be positive, got {k}")));
    }
    let m = &weight.values;
    if !(m[y] > 0.0) {
        return Err(Error::Precondition(format!("M(y) = {} must be positive", m[y])));
    }
    let mut x = y;
    let mut path = vec![y];
    loop {
        let radius = k / m[x];
        let mut best: Option<usize> = None;
        for z in 0..space.len() {
            if m[z] > 2.0 * m[x] && space.dist[z][x] <= radius && best.is_none_or(|b| m[z] > m[b]) {
                best = Some(z);
            }
        }
        match best {
            Some(z) => {
                x = z;
                path.push(z);
            }
            None => {
                return Ok(DoublingPoint {
                    x,
                    m_x: m[x],
                    ball_radius: radius,
                    iterations: path.len() - 1,
                    path,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(ts: &[f64]) -> FiniteMetricSpace {
        let pts: Vec<SpaceTimePoint> = ts.iter().map(|&t| SpaceTimePoint::new(vec![0.0], t)).collect();
        let labels = (0..pts.len()).map(|i| format!("p{i}")).collect();
        FiniteMetricSpace::from_metric(labels, &pts, parabolic_distance).unwrap()
    }

    #[test]
    fn distance_examples() {
        let a = SpaceTimePoint::new(vec![0.0], 0.0);
        let b = SpaceTimePoint::new(vec![1.0], 4.0);
        assert_eq!(parabolic_distance(&a, &b), 3.0);
        assert_eq!(parabolic_distance(&a, &a), 0.0);
    }

    #[test]
    fn single_point() {
        let s = FiniteMetricSpace::new(vec!["a".into()], vec![vec![0.0]]).unwrap();
        let w = WeightFunction::new(vec![1.0]).unwrap();
        let out = doubling_point(&s, &w, 0, 1.0).unwrap();
        assert_eq!((out.x, out.iterations), (0, 0));
    }

    #[test]
    fn constant_weight_keeps_start() {
        let s = line(&[0.0, 1.0, 2.0, 5.0]);
        let w = WeightFunction::new(vec![3.0; 4]).unwrap();
        assert_eq!(doubling_point(&s, &w, 2, 10.0).unwrap().x, 2);
    }

    #[test]
    fn moves_to_the_largest_violator() {
        let s = line(&[0.0, 1.0, 4.0]);
        let w = WeightFunction::new(vec![1.0, 3.0, 7.0]).unwrap();
        let out = doubling_point(&s, &w, 0, 2.0).unwrap();
        assert_eq!(out.path, vec![0, 2]);
        let w = WeightFunction::new(vec![1.0, 7.0, 7.0]).unwrap();
        assert_eq!(doubling_point(&s, &w, 0, 2.0).unwrap().path, vec![0, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        let s = line(&[0.0, 1.0]);
        let w = WeightFunction::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(doubling_point(&s, &w, 0, 1.0), Err(Error::Precondition(_))));
        assert!(WeightFunction::new(vec![-1.0]).is_err());
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(FiniteMetricSpace::new(vec!["a".into(), "b".into(), "c".into()], bad).is_err());
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(FiniteMetricSpace::new(vec!["a".into(), "b".into()], asym).is_err());
    }
}
