//! One minimizing step by alternating matching and quadratic solves.
//!
//! With every edge matching (between neighboring node values) and node
//! matching (against the previous snapshot) frozen, `G` is a convex quadratic
//! in the branch coordinates. Its minimizer is found with conjugate gradient
//! in increment form, node values are re-canonicalized, matchings are
//! recomputed, and the loop repeats until the objective stalls. Both phases
//! can only lower `G`. For n = 1 every matching is the identity on canonical
//! values, so a single solve reaches the global minimizer.

use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy, l2_distance_sq, GridDomain, QGridFunction};
use crate::qspace::{optimal_matching, QPoint};

use super::cg::conjugate_gradient;
use super::{SolverOptions, StepReport};

/// `G(g) = Dir(g) + |f_prev - g|² / tau`.
pub fn step_objective(f_prev: &QGridFunction, g: &QGridFunction, tau: f64) -> Result<f64> {
    Ok(dirichlet_energy(g) + l2_distance_sq(f_prev, g)? / tau)
}

struct FrozenSystem<'a> {
    dom: &'a GridDomain,
    n: usize,
    q: usize,
    interior: Vec<usize>,
    slot: Vec<Option<usize>>,
    inv_d2: f64,
    inv_tau: f64,
}

type Matchings = (Vec<Vec<usize>>, Vec<Vec<usize>>);

impl<'a> FrozenSystem<'a> {
    fn new(f_prev: &'a QGridFunction, tau: f64) -> Self {
        let dom = f_prev.domain();
        let interior: Vec<usize> = dom.interior_nodes().collect();
        let mut slot = vec![None; dom.node_count()];
        for (i, &x) in interior.iter().enumerate() {
            slot[x] = Some(i);
        }
        Self {
            dom,
            n: f_prev.n(),
            q: f_prev.q(),
            interior,
            slot,
            inv_d2: 1.0 / (dom.delta() * dom.delta()),
            inv_tau: 1.0 / tau,
        }
    }

    fn unknowns(&self) -> usize {
        self.interior.len() * self.q * self.n
    }

    fn index(&self, slot: usize, branch: usize, coord: usize) -> usize {
        (slot * self.q + branch) * self.n + coord
    }

    fn matchings(&self, f: &QGridFunction, prev: &QGridFunction) -> Result<Matchings> {
        let scalar = self.n == 1;
        let identity: Vec<usize> = (0..self.q).collect();
        let edges = self
            .dom
            .edges()
            .iter()
            .map(|&(a, b)| {
                if scalar {
                    Ok(identity.clone())
                } else {
                    optimal_matching(f.value(a), f.value(b)).map(|m| m.sigma)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let nodes = self
            .interior
            .iter()
            .map(|&x| {
                if scalar {
                    Ok(identity.clone())
                } else {
                    optimal_matching(f.value(x), prev.value(x)).map(|m| m.sigma)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((edges, nodes))
    }

    /// Half gradient of the frozen quadratic divided by the node weight.
    fn gradient(&self, f: &QGridFunction, prev: &QGridFunction, matchings: &Matchings) -> Vec<f64> {
        let (edge_match, node_match) = matchings;
        let mut grad = vec![0.0; self.unknowns()];
        for (&(a, b), sigma) in self.dom.edges().iter().zip(edge_match) {
            let (sa, sb) = (self.slot[a], self.slot[b]);
            if sa.is_none() && sb.is_none() {
                continue;
            }
            let (va, vb) = (f.value(a), f.value(b));
            for (i, &j) in sigma.iter().enumerate() {
                for c in 0..self.n {
                    let diff = self.inv_d2 * (va.point(i)[c] - vb.point(j)[c]);
                    if let Some(sa) = sa {
                        grad[self.index(sa, i, c)] += diff;
                    }
                    if let Some(sb) = sb {
                        grad[self.index(sb, j, c)] -= diff;
                    }
                }
            }
        }
        for ((s, &x), pi) in self.interior.iter().enumerate().zip(node_match) {
            let (v, p) = (f.value(x), prev.value(x));
            for (i, &j) in pi.iter().enumerate() {
                for c in 0..self.n {
                    grad[self.index(s, i, c)] += self.inv_tau * (v.point(i)[c] - p.point(j)[c]);
                }
            }
        }
        grad
    }

    fn apply(&self, edge_match: &[Vec<usize>], d: &[f64], out: &mut [f64]) {
        for (s, &x) in self.interior.iter().enumerate() {
            let diag = self.dom.neighbors(x).len() as f64 * self.inv_d2 + self.inv_tau;
            let base = s * self.q * self.n;
            for u in base..base + self.q * self.n {
                out[u] = diag * d[u];
            }
        }
        for (&(a, b), sigma) in self.dom.edges().iter().zip(edge_match) {
            let (Some(sa), Some(sb)) = (self.slot[a], self.slot[b]) else {
                continue;
            };
            for (i, &j) in sigma.iter().enumerate() {
                for c in 0..self.n {
                    let (ua, ub) = (self.index(sa, i, c), self.index(sb, j, c));
                    out[ua] -= self.inv_d2 * d[ub];
                    out[ub] -= self.inv_d2 * d[ua];
                }
            }
        }
    }

    /// Applies the increment; returns the new function and whether any node
    /// had to be reordered to restore canonical form.
    fn advance(&self, f: &QGridFunction, d: &[f64]) -> Result<(QGridFunction, bool)> {
        let mut next = f.clone();
        let mut reordered = false;
        for (s, &x) in self.interior.iter().enumerate() {
            let base = s * self.q * self.n;
            let raw: Vec<f64> = f
                .value(x)
                .coords()
                .iter()
                .zip(&d[base..base + self.q * self.n])
                .map(|(v, dv)| v + dv)
                .collect();
            let value = QPoint::from_flat(self.n, raw.clone())?;
            reordered |= value.coords() != raw.as_slice();
            next.set_value(x, value)?;
        }
        Ok((next, reordered))
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `G(g) = Dir(g) + |f_prev - g|² / tau` over grid functions with
/// the boundary values of `f_prev`, starting from `f_prev`.
///
/// A run that exhausts `opts.max_outer` or whose linear solves stall is
/// returned with `converged = false` and the best iterate found.
pub fn minimize_step(
    f_prev: &QGridFunction,
    tau: f64,
    opts: &SolverOptions,
) -> Result<(QGridFunction, StepReport)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidTau(tau));
    }
    let energy_before = dirichlet_energy(f_prev);
    let mut report = StepReport {
        k: 0,
        tau,
        energy_before,
        energy_after: energy_before,
        penalty: 0.0,
        objective: energy_before,
        outer_iterations: 0,
        cg_iterations: 0,
        converged: true,
        stationarity: 0.0,
        objective_trace: vec![energy_before],
    };
    // zero energy: f_prev is the global minimizer of G (G >= 0 = G(f_prev))
    if energy_before == 0.0 {
        return Ok((f_prev.clone(), report));
    }

    let sys = FrozenSystem::new(f_prev, tau);
    let unknowns = sys.unknowns();
    let max_cg = (opts.cg_iter_factor * unknowns).max(1);
    let mut current = f_prev.clone();
    let mut objective = energy_before;
    let mut previous: Option<Matchings> = None;
    let mut last_solve_clean = false;
    let mut converged = false;
    let mut increment = vec![0.0; unknowns];

    for _ in 0..opts.max_outer {
        let matchings = sys.matchings(&current, f_prev)?;
        if last_solve_clean && previous.as_ref() == Some(&matchings) {
            // already at the minimizer of this frozen quadratic
            converged = true;
            break;
        }
        report.outer_iterations += 1;
        let rhs: Vec<f64> = sys
            .gradient(&current, f_prev, &matchings)
            .into_iter()
            .map(|g| -g)
            .collect();
        let edge_match = &matchings.0;
        let cg = conjugate_gradient(
            |d, out| sys.apply(edge_match, d, out),
            &rhs,
            &mut increment,
            opts.cg_tol,
            max_cg,
        );
        report.cg_iterations += cg.iterations;
        let (candidate, reordered) = sys.advance(&current, &increment)?;
        let value = step_objective(f_prev, &candidate, tau)?;
        if value > objective {
            // rounding-level increase: keep the better iterate
            converged = cg.converged;
            previous = Some(matchings);
            break;
        }
        let decrease = objective - value;
        current = candidate;
        objective = value;
        report.objective_trace.push(value);
        previous = Some(matchings);
        last_solve_clean = cg.converged && !reordered;
        if cg.converged && decrease <= opts.outer_tol * objective.abs() {
            converged = true;
            break;
        }
    }

    let final_matchings = match previous {
        Some(m) if last_solve_clean => m,
        _ => sys.matchings(&current, f_prev)?,
    };
    report.stationarity = max_abs(&sys.gradient(&current, f_prev, &final_matchings));
    report.energy_after = dirichlet_energy(&current);
    report.penalty = l2_distance_sq(f_prev, &current)?;
    report.objective = objective;
    report.converged = converged;
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::{eta_field, sample_initial, InitialSpec};

    fn interval(r: usize) -> Arc<GridDomain> {
        Arc::new(GridDomain::new(1, r).unwrap())
    }

    #[test]
    fn one_node_closed_form() {
        // minimize 2g² + (g - 1)² / (1/2): g = 1/2
        let f = QGridFunction::from_scalars(interval(3), &[0.0, 1.0, 0.0]).unwrap();
        let (next, report) = minimize_step(&f, 0.5, &SolverOptions::default()).unwrap();
        assert!((next.value(1).coords()[0] - 0.5).abs() < 1e-15);
        assert!(report.converged);
        assert_eq!(report.energy_before, 2.0);
        assert!((report.energy_after - 0.5).abs() < 1e-15);
        assert!((report.penalty - 0.25).abs() < 1e-15);
        assert!(report.stationarity < 1e-12);
    }

    #[test]
    fn tiny_tau_barely_moves() {
        let f = sample_initial(&InitialSpec::symmetric_cos(), interval(21), 2).unwrap();
        let (next, _) = minimize_step(&f, 1e-8, &SolverOptions::default()).unwrap();
        for (a, b) in next.values().iter().zip(f.values()) {
            assert!(a.approx_eq(b, 1e-6));
        }
    }

    #[test]
    fn symmetric_data_stays_symmetric() {
        let f = sample_initial(&InitialSpec::symmetric_cos(), interval(41), 2).unwrap();
        let (next, report) = minimize_step(&f, 0.01, &SolverOptions::default()).unwrap();
        assert!(report.converged);
        assert!(eta_field(&next).iter().all(|e| e[0].abs() <= 1e-10));
    }

    #[test]
    fn constant_data_is_a_fixed_point() {
        let dom = Arc::new(GridDomain::new(2, 9).unwrap());
        let value = QPoint::scalars(&[0.3, -1.0]).unwrap();
        let f = QGridFunction::new(dom.clone(), vec![value; dom.node_count()]).unwrap();
        let (next, report) = minimize_step(&f, 0.2, &SolverOptions::default()).unwrap();
        assert_eq!(next, f);
        assert_eq!(report.outer_iterations, 0);
        assert_eq!(report.penalty, 0.0);
    }

    #[test]
    fn rejects_bad_tau() {
        let f = QGridFunction::from_scalars(interval(3), &[0.0, 1.0, 0.0]).unwrap();
        for tau in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                minimize_step(&f, tau, &SolverOptions::default()),
                Err(Error::InvalidTau(_))
            ));
        }
    }

    #[test]
    fn planar_values_decrease_objective() {
        // n = 2, Q = 2 on a small disk exercises the assignment path
        let dom = Arc::new(GridDomain::new(2, 7).unwrap());
        let values = (0..dom.node_count())
            .map(|x| {
                let c = dom.coord(x);
                QPoint::new(&[
                    vec![c[0] + 0.3, c[1] * c[1]],
                    vec![-c[1], 0.5 - c[0] * c[1]],
                ])
                .unwrap()
            })
            .collect();
        let f = QGridFunction::new(dom, values).unwrap();
        let tau = 0.05;
        let (next, report) = minimize_step(&f, tau, &SolverOptions::default()).unwrap();
        assert!(report.converged);
        assert!(report.objective <= report.energy_before);
        assert!(report.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(report.energy_after <= report.energy_before);
        assert!(report.penalty <= tau * (report.energy_before - report.energy_after) + 1e-10);
        assert!(next.same_boundary_trace(&f));
    }
}
