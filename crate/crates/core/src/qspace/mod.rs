//! Values of multiple-valued functions: unordered Q-tuples of points in R^n.
//!
//! A [`QPoint`] is stored in canonical order (ascending for n = 1,
//! lexicographic for n > 1), so two Q-points are equal exactly when their
//! canonical coordinate arrays are equal. For n = 1 the ascending order is
//! also the optimal matching order, which makes the sorted coordinate
//! tuple an isometric embedding into R^Q.

pub mod assignment;
pub mod isotonic;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use isotonic::rho_pav;

/// Default per-coordinate tolerance for [`QPoint::approx_eq`].
pub const DEFAULT_APPROX_TOL: f64 = 1e-12;

/// An unordered multiset of Q points in R^n, kept in canonical order.
///
/// Serializes as the flat sequence `[n, Q, c_1, ..., c_{Qn}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct QPoint {
    n: usize,
    q: usize,
    coords: Vec<f64>,
}

/// A pairing of the points of two Q-points together with its squared cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// `sigma[i]` is the index of the point of the second operand paired with point `i`.
    pub sigma: Vec<usize>,
    pub cost: f64,
}

impl Matching {
    pub fn identity(q: usize, cost: f64) -> Self {
        Self {
            sigma: (0..q).collect(),
            cost,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.sigma.iter().enumerate().all(|(i, &s)| i == s)
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

fn canonicalize(n: usize, coords: &mut Vec<f64>) {
    if n == 1 {
        coords.sort_by(|a, b| a.total_cmp(b));
        return;
    }
    let mut points: Vec<&[f64]> = coords.chunks(n).collect();
    if points.windows(2).all(|w| lex_cmp(w[0], w[1]) != Ordering::Greater) {
        return;
    }
    points.sort_by(|a, b| lex_cmp(a, b));
    *coords = points.concat();
}

impl QPoint {
    /// Builds the canonical Q-point representing the multiset `values`.
    pub fn new(values: &[Vec<f64>]) -> Result<Self> {
        let first = values.first().ok_or(Error::EmptyQPoint)?;
        let n = first.len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut coords = Vec::with_capacity(n * values.len());
        for v in values {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
            coords.extend_from_slice(v);
        }
        Self::from_flat(n, coords)
    }

    /// Q-point with n = 1 from its Q scalar values.
    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    /// Builds a Q-point from `Q * n` coordinates grouped point by point.
    pub fn from_flat(n: usize, mut coords: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if coords.is_empty() {
            return Err(Error::EmptyQPoint);
        }
        if !coords.len().is_multiple_of(n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: coords.len() % n,
            });
        }
        if let Some(&bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        let q = coords.len() / n;
        canonicalize(n, &mut coords);
        Ok(Self { n, q, coords })
    }

    /// `Q[[p]]`: the point `p` taken with multiplicity `q`.
    pub fn repeated(p: &[f64], q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::EmptyQPoint);
        }
        Self::from_flat(p.len(), p.repeat(q))
    }

    pub fn zero(n: usize, q: usize) -> Result<Self> {
        Self::repeated(&vec![0.0; n], q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Canonical coordinates, point by point.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.n)
    }

    pub fn same_shape(&self, other: &QPoint) -> bool {
        self.n == other.n && self.q == other.q
    }

    pub(crate) fn check_shape(&self, other: &QPoint) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                n_left: self.n,
                q_left: self.q,
                n_right: other.n,
                q_right: other.q,
            })
        }
    }

    /// Per-coordinate comparison of canonical forms with absolute tolerance `tol`.
    pub fn approx_eq(&self, other: &QPoint, tol: f64) -> bool {
        self.same_shape(other)
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Flat serialization `[n, Q, coords...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 + self.coords.len());
        out.push(self.n as f64);
        out.push(self.q as f64);
        out.extend_from_slice(&self.coords);
        out
    }

    pub fn from_flat_serialized(flat: &[f64]) -> Result<Self> {
        if flat.len() < 2 {
            return Err(Error::EmptyQPoint);
        }
        let (n, q) = (flat[0], flat[1]);
        if n < 1.0 || q < 1.0 || n.fract() != 0.0 || q.fract() != 0.0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let (n, q) = (n as usize, q as usize);
        if flat.len() != 2 + n * q {
            return Err(Error::DimensionMismatch {
                expected: n * q,
                found: flat.len() - 2,
            });
        }
        Self::from_flat(n, flat[2..].to_vec())
    }
}

impl From<QPoint> for Vec<f64> {
    fn from(p: QPoint) -> Self {
        p.to_flat()
    }
}

impl TryFrom<Vec<f64>> for QPoint {
    type Error = Error;

    fn try_from(flat: Vec<f64>) -> Result<Self> {
        QPoint::from_flat_serialized(&flat)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The canonical Q-point of a multiset; see [`QPoint::new`].
pub fn make_qpoint(values: &[Vec<f64>]) -> Result<QPoint> {
    QPoint::new(values)
}

/// Squared cost of pairing point `i` of `s` with point `sigma[i]` of `w`.
pub fn matching_cost(s: &QPoint, w: &QPoint, sigma: &[usize]) -> f64 {
    sigma
        .iter()
        .enumerate()
        .map(|(i, &j)| sq_dist(s.point(i), w.point(j)))
        .sum()
}

/// Optimal pairing of the points of `s` and `w`.
///
/// For n = 1 the canonical (ascending) order is optimal, so the identity is
/// returned without search. For n > 1 an exact assignment is solved and ties
/// resolve to the lexicographically smallest permutation.
pub fn optimal_matching(s: &QPoint, w: &QPoint) -> Result<Matching> {
    s.check_shape(w)?;
    let q = s.q;
    if s.n == 1 {
        return Ok(Matching::identity(q, matching_cost(s, w, &identity(q))));
    }
    let mut cost = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            cost[i * q + j] = sq_dist(s.point(i), w.point(j));
        }
    }
    let sigma = assignment::lex_min_assignment(&cost, q);
    let cost = matching_cost(s, w, &sigma);
    Ok(Matching { sigma, cost })
}

fn identity(q: usize) -> Vec<usize> {
    (0..q).collect()
}

/// Squared matching distance, the square of [`metric_g`].
pub fn metric_g_sq(s: &QPoint, w: &QPoint) -> Result<f64> {
    s.check_shape(w)?;
    if s.n == 1 {
        return Ok(sq_dist(&s.coords, &w.coords));
    }
    Ok(optimal_matching(s, w)?.cost)
}

/// The matching metric: minimal root-sum-square distance over all pairings.
pub fn metric_g(s: &QPoint, w: &QPoint) -> Result<f64> {
    Ok(metric_g_sq(s, w)?.sqrt())
}

/// Average of the Q points.
pub fn eta(s: &QPoint) -> Vec<f64> {
    let mut mean = vec![0.0; s.n];
    for p in s.points() {
        for (m, c) in mean.iter_mut().zip(p) {
            *m += c;
        }
    }
    let q = s.q as f64;
    mean.iter_mut().for_each(|m| *m /= q);
    mean
}

/// Shifts every point of `s` by `v`.
pub fn translate(s: &QPoint, v: &[f64]) -> Result<QPoint> {
    if v.len() != s.n {
        return Err(Error::DimensionMismatch {
            expected: s.n,
            found: v.len(),
        });
    }
    let coords = s
        .coords
        .chunks(s.n)
        .flat_map(|p| p.iter().zip(v).map(|(a, b)| a + b))
        .collect();
    QPoint::from_flat(s.n, coords)
}

/// The ascending tuple of an n = 1 Q-point; an isometry onto the ascending cone.
pub fn xi_sorted(s: &QPoint) -> Result<Vec<f64>> {
    if s.n != 1 {
        return Err(Error::RequiresScalarValues(s.n));
    }
    Ok(s.coords.clone())
}

/// Inverse of [`xi_sorted`] on the ascending cone.
pub fn xi_inverse(x: &[f64]) -> Result<QPoint> {
    if x.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::NotAscending);
    }
    QPoint::scalars(x)
}

/// `|S| = sqrt(sum |p_i|^2)`, the distance to `Q[[0]]`.
pub fn norm(s: &QPoint) -> f64 {
    s.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
}
