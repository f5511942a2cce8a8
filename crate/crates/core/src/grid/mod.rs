//! Lattice discretization of the closed unit ball in one or two dimensions and
//! the discrete Dirichlet energy, L² distance and η-equation residual for
//! Q-valued grid functions.
//!
//! Quadrature: the energy sums squared matching distances over lattice edges
//! weighted by `delta^(m-2)`, and the L² mass sums over nodes weighted by
//! `delta^m`. Boundary nodes carry prescribed values and never move.

pub mod io;
pub mod presets;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qspace::{self, QPoint};

pub use presets::{sample_initial, InitialSpec, Preset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    Interior,
    Boundary,
}

/// Lattice nodes of spacing `delta` inside `|x| <= 1`, with axis-neighbor edges.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    m: usize,
    resolution: usize,
    delta: f64,
    coords: Vec<f64>,
    class: Vec<NodeClass>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

const ON_SPHERE_TOL: f64 = 1e-12;

impl GridDomain {
    /// Discretizes the unit ball `B_1^m` with `resolution` nodes per axis.
    pub fn new(m: usize, resolution: usize) -> Result<Self> {
        if m != 1 && m != 2 {
            return Err(Error::InvalidDomain(format!(
                "dimension m must be 1 or 2, got {m}"
            )));
        }
        if resolution < 3 || resolution.is_multiple_of(2) {
            return Err(Error::InvalidDomain(format!(
                "resolution must be odd and at least 3, got {resolution}"
            )));
        }
        let delta = 2.0 / (resolution - 1) as f64;
        let axis = |i: usize| -1.0 + i as f64 * delta;
        if m == 1 {
            let coords: Vec<f64> = (0..resolution).map(axis).collect();
            let mut class = vec![NodeClass::Interior; resolution];
            class[0] = NodeClass::Boundary;
            class[resolution - 1] = NodeClass::Boundary;
            let edges = (0..resolution - 1).map(|i| (i, i + 1)).collect();
            return Ok(Self::assemble(m, resolution, delta, coords, class, edges));
        }

        let r = resolution as isize;
        let inside = |i: isize, j: isize| {
            if i < 0 || j < 0 || i >= r || j >= r {
                return false;
            }
            let (x, y) = (axis(i as usize), axis(j as usize));
            x * x + y * y <= 1.0 + ON_SPHERE_TOL
        };
        // lattice (i, j) -> kept node index
        let mut index = vec![None; resolution * resolution];
        let mut coords = Vec::new();
        let mut class = Vec::new();
        for j in 0..r {
            for i in 0..r {
                if !inside(i, j) {
                    continue;
                }
                let (x, y) = (axis(i as usize), axis(j as usize));
                let on_sphere = ((x * x + y * y).sqrt() - 1.0).abs() <= ON_SPHERE_TOL;
                let all_neighbors = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .all(|&(di, dj)| inside(i + di, j + dj));
                index[(j * r + i) as usize] = Some(class.len());
                coords.extend([x, y]);
                class.push(if all_neighbors && !on_sphere {
                    NodeClass::Interior
                } else {
                    NodeClass::Boundary
                });
            }
        }
        let mut edges = Vec::new();
        for j in 0..resolution {
            for i in 0..resolution {
                let Some(a) = index[j * resolution + i] else {
                    continue;
                };
                if i + 1 < resolution {
                    if let Some(b) = index[j * resolution + i + 1] {
                        edges.push((a, b));
                    }
                }
                if j + 1 < resolution {
                    if let Some(b) = index[(j + 1) * resolution + i] {
                        edges.push((a, b));
                    }
                }
            }
        }
        Ok(Self::assemble(m, resolution, delta, coords, class, edges))
    }

    fn assemble(
        m: usize,
        resolution: usize,
        delta: f64,
        coords: Vec<f64>,
        class: Vec<NodeClass>,
        edges: Vec<(usize, usize)>,
    ) -> Self {
        let mut neighbors = vec![Vec::new(); class.len()];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        Self {
            m,
            resolution,
            delta,
            coords,
            class,
            edges,
            neighbors,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn node_count(&self) -> usize {
        self.class.len()
    }

    pub fn coord(&self, node: usize) -> &[f64] {
        &self.coords[node * self.m..(node + 1) * self.m]
    }

    /// Euclidean distance of a node from the origin.
    pub fn radius(&self, node: usize) -> f64 {
        self.coord(node).iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn class(&self, node: usize) -> NodeClass {
        self.class[node]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.class[node] == NodeClass::Boundary
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&i| !self.is_boundary(i))
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&i| self.is_boundary(i))
    }

    /// Edge weight `delta^(m-2)` of the energy quadrature.
    pub fn edge_weight(&self) -> f64 {
        self.delta.powi(self.m as i32 - 2)
    }

    /// Node weight `delta^m` of the L² quadrature.
    pub fn node_weight(&self) -> f64 {
        self.delta.powi(self.m as i32)
    }

    pub fn same_as(&self, other: &GridDomain) -> bool {
        self.m == other.m && self.resolution == other.resolution
    }
}

/// Convenience wrapper over [`GridDomain::new`].
pub fn build_domain(m: usize, resolution: usize) -> Result<GridDomain> {
    GridDomain::new(m, resolution)
}

/// One Q-point per node of a domain, all of the same shape `(n, Q)`.
#[derive(Clone, Debug)]
pub struct QGridFunction {
    domain: Arc<GridDomain>,
    n: usize,
    q: usize,
    values: Vec<QPoint>,
}

impl PartialEq for QGridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.domain.same_as(&other.domain) && self.values == other.values
    }
}

impl QGridFunction {
    pub fn new(domain: Arc<GridDomain>, values: Vec<QPoint>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::NodeCountMismatch {
                expected: domain.node_count(),
                found: values.len(),
            });
        }
        let first = values.first().ok_or(Error::EmptyQPoint)?;
        let (n, q) = (first.n(), first.q());
        for v in &values {
            first.check_shape(v)?;
        }
        Ok(Self {
            domain,
            n,
            q,
            values,
        })
    }

    /// Single-valued (Q = 1, n = 1) function from node values.
    pub fn from_scalars(domain: Arc<GridDomain>, values: &[f64]) -> Result<Self> {
        let values = values
            .iter()
            .map(|&v| QPoint::scalars(&[v]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, values)
    }

    /// n = 1 function from `branches[b][node]`; each node's values are sorted.
    pub fn from_branches(domain: Arc<GridDomain>, branches: &[Vec<f64>]) -> Result<Self> {
        let count = domain.node_count();
        if branches.is_empty() {
            return Err(Error::EmptyQPoint);
        }
        if let Some(b) = branches.iter().find(|b| b.len() != count) {
            return Err(Error::NodeCountMismatch {
                expected: count,
                found: b.len(),
            });
        }
        let values = (0..count)
            .map(|x| QPoint::scalars(&branches.iter().map(|b| b[x]).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn domain_arc(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn values(&self) -> &[QPoint] {
        &self.values
    }

    pub fn value(&self, node: usize) -> &QPoint {
        &self.values[node]
    }

    /// Replaces the value at `node`; the shape must match.
    pub fn set_value(&mut self, node: usize, value: QPoint) -> Result<()> {
        self.values[node].check_shape(&value)?;
        self.values[node] = value;
        Ok(())
    }

    /// Canonical branch `b` (the b-th smallest value) at every node; n = 1 only.
    pub fn branch(&self, b: usize) -> Result<Vec<f64>> {
        if self.n != 1 {
            return Err(Error::RequiresScalarValues(self.n));
        }
        Ok(self.values.iter().map(|v| v.coords()[b]).collect())
    }

    pub fn check_compatible(&self, other: &QGridFunction) -> Result<()> {
        if !self.domain.same_as(&other.domain) {
            return Err(Error::DomainMismatch);
        }
        self.values[0].check_shape(&other.values[0])
    }

    /// True when boundary values coincide exactly with those of `other`.
    pub fn same_boundary_trace(&self, other: &QGridFunction) -> bool {
        self.domain.same_as(&other.domain)
            && self
                .domain
                .boundary_nodes()
                .all(|x| self.values[x] == other.values[x])
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    /// Largest `|f(x)|` over all nodes.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(qspace::norm).fold(0.0, f64::max)
    }
}

fn g_sq(a: &QPoint, b: &QPoint) -> f64 {
    // shapes are validated when the grid function is built
    qspace::metric_g_sq(a, b).expect("grid values share one shape")
}

/// `sum over edges of G^2(f(a), f(b)) * delta^(m-2)`.
pub fn dirichlet_energy(f: &QGridFunction) -> f64 {
    let w = f.domain.edge_weight();
    f.domain
        .edges()
        .iter()
        .map(|&(a, b)| g_sq(&f.values[a], &f.values[b]))
        .sum::<f64>()
        * w
}

/// `sum over nodes of G^2(f(x), g(x)) * delta^m`.
pub fn l2_distance_sq(f: &QGridFunction, g: &QGridFunction) -> Result<f64> {
    f.check_compatible(g)?;
    let w = f.domain.node_weight();
    Ok(f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| g_sq(a, b))
        .sum::<f64>()
        * w)
}

/// Node-wise average of the Q points.
pub fn eta_field(f: &QGridFunction) -> Vec<Vec<f64>> {
    f.values.iter().map(qspace::eta).collect()
}

/// Node-wise translation `f (+) phi` by a single-valued field (`phi.q() == 1`).
pub fn translate_field(f: &QGridFunction, phi: &QGridFunction) -> Result<QGridFunction> {
    if !f.domain.same_as(&phi.domain) {
        return Err(Error::DomainMismatch);
    }
    if phi.q != 1 || phi.n != f.n {
        return Err(Error::ShapeMismatch {
            n_left: f.n,
            q_left: 1,
            n_right: phi.n,
            q_right: phi.q,
        });
    }
    let values = f
        .values
        .iter()
        .zip(&phi.values)
        .map(|(s, v)| qspace::translate(s, v.coords()))
        .collect::<Result<Vec<_>>>()?;
    QGridFunction::new(f.domain.clone(), values)
}

/// `sum over edges of <D eta(f), D phi> * delta^(m-2)`, the cross term of the
/// energy expansion of `f (+) phi`.
pub fn eta_cross_term(f: &QGridFunction, phi: &QGridFunction) -> Result<f64> {
    if !f.domain.same_as(&phi.domain) {
        return Err(Error::DomainMismatch);
    }
    let eta = eta_field(f);
    let w = f.domain.edge_weight();
    Ok(f.domain
        .edges()
        .iter()
        .map(|&(a, b)| {
            eta[a]
                .iter()
                .zip(&eta[b])
                .zip(phi.values[a].coords().iter().zip(phi.values[b].coords()))
                .map(|((ea, eb), (pa, pb))| (ea - eb) * (pa - pb))
                .sum::<f64>()
        })
        .sum::<f64>()
        * w)
}

/// Max over interior nodes of the η-equation residual of one implicit step,
/// `|(eta_k - eta_{k-1}) / tau - Lap eta_k|`.
///
/// This is the weak form tested against the hat function of each interior
/// node, using the energy/mass quadrature, divided by the hat's lumped mass.
pub fn weak_residual_eta(f_prev: &QGridFunction, f_curr: &QGridFunction, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidTau(tau));
    }
    f_prev.check_compatible(f_curr)?;
    if f_curr.n != 1 {
        return Err(Error::RequiresScalarValues(f_curr.n));
    }
    let dom = f_curr.domain();
    let prev: Vec<f64> = f_prev.values.iter().map(|v| qspace::eta(v)[0]).collect();
    let curr: Vec<f64> = f_curr.values.iter().map(|v| qspace::eta(v)[0]).collect();
    let inv_d2 = 1.0 / (dom.delta() * dom.delta());
    let mut worst: f64 = 0.0;
    for x in dom.interior_nodes() {
        let stiffness: f64 = dom.neighbors(x).iter().map(|&y| curr[x] - curr[y]).sum();
        let r = (curr[x] - prev[x]) / tau + stiffness * inv_d2;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(m: usize, r: usize) -> Arc<GridDomain> {
        Arc::new(GridDomain::new(m, r).unwrap())
    }

    #[test]
    fn interval_with_three_nodes() {
        let d = GridDomain::new(1, 3).unwrap();
        assert_eq!(d.node_count(), 3);
        assert_eq!(d.delta(), 1.0);
        assert_eq!(d.edges().len(), 2);
        assert_eq!(d.interior_nodes().collect::<Vec<_>>(), vec![1]);
        assert_eq!(
            (0..3).map(|i| d.coord(i)[0]).collect::<Vec<_>>(),
            vec![-1.0, 0.0, 1.0]
        );
    }

    #[test]
    fn interval_with_five_nodes() {
        let d = GridDomain::new(1, 5).unwrap();
        assert_eq!(d.delta(), 0.5);
        assert_eq!(d.interior_nodes().count(), 3);
        assert_eq!(d.boundary_nodes().count(), 2);
        assert_eq!(d.edges().len(), 4);
    }

    #[test]
    fn disk_with_three_nodes_per_axis() {
        let d = GridDomain::new(2, 3).unwrap();
        // center plus the four axis points; corners lie outside the disk
        assert_eq!(d.node_count(), 5);
        assert_eq!(d.edges().len(), 4);
        let interior: Vec<_> = d.interior_nodes().collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(d.coord(interior[0]), &[0.0, 0.0]);
    }

    #[test]
    fn disk_structure_invariants() {
        let d = GridDomain::new(2, 21).unwrap();
        for &(a, b) in d.edges() {
            let dist: f64 = d
                .coord(a)
                .iter()
                .zip(d.coord(b))
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            assert!((dist - d.delta()).abs() < 1e-12);
        }
        for x in d.interior_nodes() {
            assert_eq!(d.neighbors(x).len(), 4);
            assert!(d.radius(x) < 1.0);
        }
        for x in 0..d.node_count() {
            assert!(d.radius(x) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn invalid_domains() {
        assert!(GridDomain::new(3, 5).is_err());
        assert!(GridDomain::new(1, 4).is_err());
        assert!(GridDomain::new(2, 1).is_err());
    }

    #[test]
    fn energy_of_constant_is_zero() {
        let d = dom(2, 9);
        let v = QPoint::scalars(&[-1.0, 2.0]).unwrap();
        let f = QGridFunction::new(d.clone(), vec![v; d.node_count()]).unwrap();
        assert_eq!(dirichlet_energy(&f), 0.0);
    }

    #[test]
    fn energy_of_single_bump() {
        let f = QGridFunction::from_scalars(dom(1, 3), &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(dirichlet_energy(&f), 2.0);
    }

    #[test]
    fn symmetric_pair_doubles_energy() {
        let d = dom(1, 9);
        let u: Vec<f64> = (0..9).map(|i| (i as f64 * 0.3).sin().abs()).collect();
        let single = QGridFunction::from_scalars(d.clone(), &u).unwrap();
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        let pair = QGridFunction::from_branches(d, &[neg, u]).unwrap();
        let ratio = dirichlet_energy(&pair) / dirichlet_energy(&single);
        assert!((ratio - 2.0).abs() < 1e-14);
    }

    #[test]
    fn l2_distance_examples() {
        let d = dom(1, 3);
        let f = QGridFunction::from_scalars(d.clone(), &[0.0, 1.0, 0.0]).unwrap();
        let g = QGridFunction::from_scalars(d.clone(), &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(l2_distance_sq(&f, &f).unwrap(), 0.0);
        assert_eq!(l2_distance_sq(&f, &g).unwrap(), 1.0);
        let shift = QGridFunction::from_scalars(d, &[3.0, 3.0, 3.0]).unwrap();
        let fs = translate_field(&f, &shift).unwrap();
        let gs = translate_field(&g, &shift).unwrap();
        assert_eq!(l2_distance_sq(&fs, &gs).unwrap(), 1.0);
    }

    #[test]
    fn l2_distance_rejects_other_domains() {
        let f = QGridFunction::from_scalars(dom(1, 3), &[0.0; 3]).unwrap();
        let g = QGridFunction::from_scalars(dom(1, 5), &[0.0; 5]).unwrap();
        assert_eq!(l2_distance_sq(&f, &g), Err(Error::DomainMismatch));
    }

    #[test]
    fn eta_field_examples() {
        let d = dom(1, 3);
        let f = QGridFunction::from_branches(d.clone(), &[vec![1.0, -2.0, 0.0], vec![3.0, 2.0, 0.0]])
            .unwrap();
        assert_eq!(eta_field(&f), vec![vec![2.0], vec![0.0], vec![0.0]]);
        let single = QGridFunction::from_scalars(d, &[0.5, -1.5, 4.0]).unwrap();
        assert_eq!(eta_field(&single), vec![vec![0.5], vec![-1.5], vec![4.0]]);
    }

    #[test]
    fn residual_of_symmetric_pair_vanishes() {
        let d = dom(1, 7);
        let u: Vec<f64> = (0..7).map(|i| 1.0 + i as f64).collect();
        let neg: Vec<f64> = u.iter().map(|v| -v).collect();
        let f = QGridFunction::from_branches(d, &[neg, u]).unwrap();
        assert!(weak_residual_eta(&f, &f, 0.3).unwrap() <= 1e-10);
    }

    #[test]
    fn residual_of_frozen_state_is_laplacian() {
        let d = dom(1, 5);
        let u = [0.0, 1.0, 3.0, 2.0, 0.0];
        let f = QGridFunction::from_scalars(d, &u).unwrap();
        // delta = 1/2: Lap u = (u[i-1] - 2u[i] + u[i+1]) * 4 = 4, -12, -4
        let r = weak_residual_eta(&f, &f, 0.1).unwrap();
        assert_eq!(r, 12.0);
        assert_eq!(weak_residual_eta(&f, &f, 0.0), Err(Error::InvalidTau(0.0)));
    }
}
