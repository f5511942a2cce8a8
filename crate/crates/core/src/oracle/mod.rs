//! Reference computations that share no solver code with `morseflow`:
//! exact heat eigen-solutions, a tridiagonal implicit-Euler chain, an
//! exhaustive global step minimizer for tiny grids, and max-principle checks.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDomain, QGridFunction};
use crate::qspace::{matching_cost, QPoint};

/// Largest number of interior branch unknowns [`brute_force_step`] accepts.
pub const BRUTE_FORCE_MAX_UNKNOWNS: usize = 12;
const BRUTE_FORCE_MAX_CONFIGS: usize = 1 << 22;

/// Dirichlet eigenmode of the second derivative on `(-1, 1)`.
///
/// Odd indices use `cos(j pi x / 2)`, even ones `sin(j pi x / 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenHeatSpec {
    pub eigenindex: usize,
    pub amplitude: f64,
}

impl EigenHeatSpec {
    pub fn new(eigenindex: usize, amplitude: f64) -> Result<Self> {
        if eigenindex == 0 {
            return Err(Error::PresetParams("eigenindex must be positive".into()));
        }
        Ok(Self { eigenindex, amplitude })
    }

    fn wavenumber(&self) -> f64 {
        self.eigenindex as f64 * PI / 2.0
    }

    /// `(j pi / 2)^2`.
    pub fn lambda_continuum(&self) -> f64 {
        self.wavenumber().powi(2)
    }

    /// Eigenvalue of the three-point second difference with spacing `delta`.
    pub fn lambda_discrete(&self, delta: f64) -> f64 {
        2.0 / (delta * delta) * (1.0 - (self.wavenumber() * delta).cos())
    }

    /// Unit-amplitude eigenfunction at `x`.
    pub fn profile(&self, x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        let a = self.wavenumber() * x;
        if self.eigenindex % 2 == 1 {
            a.cos()
        } else {
            a.sin()
        }
    }

    /// The eigenfunction sampled on an interval grid (boundary values exactly 0).
    pub fn sample(&self, domain: &GridDomain) -> Result<Vec<f64>> {
        require_interval(domain)?;
        Ok((0..domain.node_count())
            .map(|x| self.amplitude * self.profile(domain.coord(x)[0]))
            .collect())
    }
}

fn require_interval(domain: &GridDomain) -> Result<()> {
    if domain.m() != 1 {
        return Err(Error::InvalidDomain(format!(
            "oracle needs m = 1, got m = {}",
            domain.m()
        )));
    }
    Ok(())
}

/// `amplitude * exp(-lambda t) * profile(x)` with the continuum eigenvalue.
pub fn heat_exact_eigen(spec: &EigenHeatSpec, t: f64, domain: &GridDomain) -> Result<Vec<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::TimeOutOfRange { t, end: f64::INFINITY });
    }
    let decay = (-spec.lambda_continuum() * t).exp();
    Ok(spec.sample(domain)?.into_iter().map(|v| v * decay).collect())
}

/// Solves `(I + tau_k L) u^k = u^{k-1}` for each `tau_k` on an interval grid,
/// `L` the negative second difference with `u0`'s end values held fixed.
pub fn implicit_euler_chain(domain: &GridDomain, u0: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
    require_interval(domain)?;
    let len = domain.node_count();
    if u0.len() != len {
        return Err(Error::NodeCountMismatch {
            expected: len,
            found: u0.len(),
        });
    }
    if let Some(&bad) = taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidTau(bad));
    }
    let inv_d2 = 1.0 / (domain.delta() * domain.delta());
    let (left, right) = (u0[0], u0[len - 1]);
    let interior = len - 2;
    let mut u = u0.to_vec();
    let mut c_prime = vec![0.0; interior];
    let mut d_prime = vec![0.0; interior];
    for &tau in taus {
        let off = -tau * inv_d2;
        let diag = 1.0 + 2.0 * tau * inv_d2;
        // Thomas algorithm on the interior rows
        for i in 0..interior {
            let mut rhs = u[i + 1];
            if i == 0 {
                rhs -= off * left;
            }
            if i == interior - 1 {
                rhs -= off * right;
            }
            if i == 0 {
                c_prime[i] = off / diag;
                d_prime[i] = rhs / diag;
            } else {
                let denom = diag - off * c_prime[i - 1];
                c_prime[i] = off / denom;
                d_prime[i] = (rhs - off * d_prime[i - 1]) / denom;
            }
        }
        u[interior] = d_prime[interior - 1];
        for i in (0..interior - 1).rev() {
            u[i + 1] = d_prime[i] - c_prime[i] * u[i + 2];
        }
    }
    Ok(u)
}

/// All permutations of `0..q` in lexicographic order.
pub fn permutations(q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..q).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..q).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..q).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
    }
}

/// Minimum matching cost by enumerating every permutation.
pub fn exhaustive_matching_cost(s: &QPoint, w: &QPoint) -> Result<f64> {
    if !s.same_shape(w) {
        return Err(Error::ShapeMismatch {
            n_left: s.n(),
            q_left: s.q(),
            n_right: w.n(),
            q_right: w.q(),
        });
    }
    Ok(permutations(s.q())
        .iter()
        .map(|sigma| matching_cost(s, w, sigma))
        .fold(f64::INFINITY, f64::min))
}

/// Global minimizer of `G(g) = Dir(g) + |f_prev - g|² / tau` for n = 1 on a
/// tiny grid.
///
/// `G` is the pointwise minimum over matching configurations (one permutation
/// per edge and per interior node) of convex quadratics, so its global
/// minimum is the least of the per-configuration minima. Each quadratic is
/// solved with a dense LU factorization. Ties go to the lowest configuration
/// index.
pub fn brute_force_step(f_prev: &QGridFunction, tau: f64) -> Result<(QGridFunction, f64)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidTau(tau));
    }
    if f_prev.n() != 1 {
        return Err(Error::RequiresScalarValues(f_prev.n()));
    }
    let dom = f_prev.domain();
    let q = f_prev.q();
    let interior: Vec<usize> = dom.interior_nodes().collect();
    let mut slot = vec![None; dom.node_count()];
    for (i, &x) in interior.iter().enumerate() {
        slot[x] = Some(i);
    }
    let unknowns = interior.len() * q;
    if unknowns > BRUTE_FORCE_MAX_UNKNOWNS {
        return Err(Error::InstanceTooLarge(format!(
            "{unknowns} unknowns, limit {BRUTE_FORCE_MAX_UNKNOWNS}"
        )));
    }
    let perms = permutations(q);
    let edge_w = dom.edge_weight();
    let node_w = dom.node_weight() / tau;

    // edges between two boundary nodes contribute a configuration-free constant
    let mut fixed = 0.0;
    let mut active = Vec::new();
    for &(a, b) in dom.edges() {
        if slot[a].is_none() && slot[b].is_none() {
            fixed += edge_w * exhaustive_matching_cost(f_prev.value(a), f_prev.value(b))?;
        } else {
            active.push((a, b));
        }
    }
    let choices = active.len() + interior.len();
    let configs = (perms.len() as f64).powi(choices as i32);
    if configs > BRUTE_FORCE_MAX_CONFIGS as f64 {
        return Err(Error::InstanceTooLarge(format!("{configs} matching configurations")));
    }
    let configs = configs as usize;
    let var = |s: usize, b: usize| s * q + b;
    let value = |x: usize, b: usize| f_prev.value(x).coords()[b];

    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut digits = vec![0usize; choices];
    for _ in 0..configs {
        // quadratic u^T H u - 2 r^T u + c
        let mut h = DMatrix::<f64>::zeros(unknowns, unknowns);
        let mut r = DVector::<f64>::zeros(unknowns);
        let mut c = fixed;
        for (e, &(a, b)) in active.iter().enumerate() {
            let sigma = &perms[digits[e]];
            for (i, &j) in sigma.iter().enumerate() {
                match (slot[a], slot[b]) {
                    (Some(sa), Some(sb)) => {
                        let (u, v) = (var(sa, i), var(sb, j));
                        h[(u, u)] += edge_w;
                        h[(v, v)] += edge_w;
                        h[(u, v)] -= edge_w;
                        h[(v, u)] -= edge_w;
                    }
                    (Some(sa), None) => {
                        let u = var(sa, i);
                        let p = value(b, j);
                        h[(u, u)] += edge_w;
                        r[u] += edge_w * p;
                        c += edge_w * p * p;
                    }
                    (None, Some(sb)) => {
                        let v = var(sb, j);
                        let p = value(a, i);
                        h[(v, v)] += edge_w;
                        r[v] += edge_w * p;
                        c += edge_w * p * p;
                    }
                    (None, None) => unreachable!(),
                }
            }
        }
        for (s, &x) in interior.iter().enumerate() {
            let pi = &perms[digits[active.len() + s]];
            for (i, &j) in pi.iter().enumerate() {
                let u = var(s, i);
                let p = value(x, j);
                h[(u, u)] += node_w;
                r[u] += node_w * p;
                c += node_w * p * p;
            }
        }
        let sol = h
            .clone()
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::Solver("singular configuration matrix".into()))?;
        // at the minimizer the quadratic equals c - r^T u
        let objective = c - r.dot(&sol);
        if best.as_ref().is_none_or(|(b, _)| objective < *b) {
            best = Some((objective, sol));
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < perms.len() {
                break;
            }
            *d = 0;
        }
    }

    let (objective, sol) = best.expect("at least one configuration");
    let mut out = f_prev.clone();
    for (s, &x) in interior.iter().enumerate() {
        let raw: Vec<f64> = (0..q).map(|b| sol[var(s, b)]).collect();
        out.set_value(x, QPoint::from_flat(1, raw)?)?;
    }
    Ok((out, objective.max(0.0)))
}

/// Largest `|f^k(x)|` per snapshot must not increase (within `1e-12`
/// relative); with `symmetric` set, the upper branch must also be strictly
/// positive at interior nodes from index 1 on.
pub fn max_principle_check(snapshots: &[QGridFunction], symmetric: bool) -> bool {
    let norms: Vec<f64> = snapshots.iter().map(QGridFunction::max_norm).collect();
    let monotone = norms
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12 * w[0].max(1.0));
    if !monotone {
        return false;
    }
    if !symmetric {
        return true;
    }
    snapshots.iter().skip(1).all(|f| {
        f.n() == 1
            && f.q() == 2
            && f.domain()
                .interior_nodes()
                .all(|x| f.value(x).coords()[1] > 1e-12)
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::{sample_initial, InitialSpec, Preset};
    use crate::morseflow::{minimize_step, SolverOptions};

    fn interval(r: usize) -> Arc<GridDomain> {
        Arc::new(GridDomain::new(1, r).unwrap())
    }

    #[test]
    fn eigen_profiles_vanish_at_the_ends() {
        for j in 1..6 {
            let s = EigenHeatSpec::new(j, 1.0).unwrap();
            assert_eq!(s.profile(-1.0), 0.0);
            assert_eq!(s.profile(1.0), 0.0);
        }
        assert!(EigenHeatSpec::new(0, 1.0).is_err());
    }

    #[test]
    fn discrete_eigenvalue_converges_at_second_order() {
        let s = EigenHeatSpec::new(1, 1.0).unwrap();
        let err = |d: f64| (s.lambda_discrete(d) - s.lambda_continuum()).abs();
        let order = (err(0.02) / err(0.01)).log2();
        assert!((order - 2.0).abs() < 0.01, "order {order}");
    }

    #[test]
    fn exact_heat_at_zero_and_amplitude_zero() {
        let dom = GridDomain::new(1, 11).unwrap();
        let s = EigenHeatSpec::new(1, 1.0).unwrap();
        assert_eq!(heat_exact_eigen(&s, 0.0, &dom).unwrap(), s.sample(&dom).unwrap());
        let u = heat_exact_eigen(&s, 0.3, &dom).unwrap();
        let mid = dom.node_count() / 2;
        assert!((u[mid] - (-(PI / 2.0).powi(2) * 0.3).exp()).abs() < 1e-15);
        let zero = EigenHeatSpec::new(2, 0.0).unwrap();
        assert!(heat_exact_eigen(&zero, 1.0, &dom).unwrap().iter().all(|&v| v == 0.0));
        assert!(heat_exact_eigen(&s, 0.1, &GridDomain::new(2, 5).unwrap()).is_err());
    }

    #[test]
    fn one_step_on_an_eigenvector_divides_by_the_symbol() {
        let dom = GridDomain::new(1, 41).unwrap();
        for j in 1..4 {
            let s = EigenHeatSpec::new(j, 1.0).unwrap();
            let v = s.sample(&dom).unwrap();
            let tau = 0.03;
            let lam = s.lambda_discrete(dom.delta());
            let one = implicit_euler_chain(&dom, &v, &[tau]).unwrap();
            let five = implicit_euler_chain(&dom, &v, &[tau; 5]).unwrap();
            for x in 0..v.len() {
                assert!((one[x] - v[x] / (1.0 + tau * lam)).abs() < 1e-13);
                assert!((five[x] - v[x] / (1.0 + tau * lam).powi(5)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn empty_chain_and_bad_tau() {
        let dom = GridDomain::new(1, 7).unwrap();
        let u0 = vec![1.0, 2.0, 0.0, 3.0, 1.0, 0.5, -1.0];
        assert_eq!(implicit_euler_chain(&dom, &u0, &[]).unwrap(), u0);
        assert!(implicit_euler_chain(&dom, &u0, &[0.1, 0.0]).is_err());
        assert!(implicit_euler_chain(&dom, &u0[..3], &[0.1]).is_err());
    }

    #[test]
    fn chain_keeps_nonzero_boundary_values() {
        // linear data is harmonic, so it is a fixed point
        let dom = GridDomain::new(1, 9).unwrap();
        let u0: Vec<f64> = (0..9).map(|x| 2.0 + dom.coord(x)[0]).collect();
        let u = implicit_euler_chain(&dom, &u0, &[0.5, 0.25]).unwrap();
        for (a, b) in u.iter().zip(&u0) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn permutation_listing() {
        assert_eq!(permutations(1), vec![vec![0]]);
        assert_eq!(
            permutations(3),
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        assert_eq!(permutations(5).len(), 120);
    }

    #[test]
    fn exhaustive_cost_examples() {
        let s = QPoint::scalars(&[1.0, 3.0]).unwrap();
        let w = QPoint::scalars(&[2.0, 4.0]).unwrap();
        assert_eq!(exhaustive_matching_cost(&s, &w).unwrap(), 2.0);
        let a = QPoint::new(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = QPoint::new(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(exhaustive_matching_cost(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn brute_force_symmetric_single_node() {
        let dom = interval(3);
        let zero = QPoint::scalars(&[0.0, 0.0]).unwrap();
        let f = QGridFunction::new(
            dom,
            vec![zero.clone(), QPoint::scalars(&[-1.0, 1.0]).unwrap(), zero],
        )
        .unwrap();
        let (g, obj) = brute_force_step(&f, 0.5).unwrap();
        assert_eq!(g.value(1).coords(), [-0.5, 0.5]);
        // each branch: 2 (1/2)^2 + (1/2)^2 / (1/2) = 1
        assert!((obj - 2.0).abs() < 1e-14);
    }

    #[test]
    fn brute_force_q1_matches_the_chain() {
        let dom = interval(5);
        let u0 = vec![0.0, 0.7, -0.2, 1.1, 0.0];
        let f = QGridFunction::from_scalars(dom.clone(), &u0).unwrap();
        let (g, obj) = brute_force_step(&f, 0.3).unwrap();
        let chain = implicit_euler_chain(&dom, &u0, &[0.3]).unwrap();
        for (x, c) in chain.iter().enumerate() {
            assert!((g.value(x).coords()[0] - c).abs() < 1e-12);
        }
        let direct = crate::morseflow::step_objective(&f, &g, 0.3).unwrap();
        assert!((obj - direct).abs() < 1e-12);
    }

    #[test]
    fn brute_force_constant_and_limits() {
        let dom = interval(5);
        let f = sample_initial(&InitialSpec::new(Preset::Constant, vec![1.0, 2.0]), dom, 2).unwrap();
        let (g, obj) = brute_force_step(&f, 0.1).unwrap();
        assert_eq!(g, f);
        assert_eq!(obj, 0.0);
        let big = sample_initial(&InitialSpec::symmetric_cos(), interval(9), 2).unwrap();
        assert!(matches!(brute_force_step(&big, 0.1), Err(Error::InstanceTooLarge(_))));
    }

    #[test]
    fn brute_force_is_never_above_the_local_solver() {
        let dom = interval(5);
        let f = QGridFunction::from_branches(
            dom,
            &[vec![0.0, 1.0, -0.5, 0.8, 0.2], vec![0.3, -0.4, 0.9, 0.1, 0.2]],
        )
        .unwrap();
        let (_, global) = brute_force_step(&f, 0.2).unwrap();
        let (_, report) = minimize_step(&f, 0.2, &SolverOptions::default()).unwrap();
        assert!(global <= report.objective + 1e-10);
    }

    #[test]
    fn max_principle_examples() {
        let f = sample_initial(&InitialSpec::symmetric_cos(), interval(11), 2).unwrap();
        assert!(max_principle_check(&[f.clone(), f.clone()], false));
        let mut bigger = f.clone();
        bigger.set_value(5, QPoint::scalars(&[-2.0, 2.0]).unwrap()).unwrap();
        assert!(!max_principle_check(&[f.clone(), bigger], false));
        let mut pinched = f.clone();
        pinched.set_value(3, QPoint::scalars(&[0.0, 0.0]).unwrap()).unwrap();
        assert!(max_principle_check(&[f.clone(), pinched.clone()], false));
        assert!(!max_principle_check(&[f, pinched], true));
    }
}
