//! Randomized property suites shared by the acceptance tests and `verify`.
//!
//! Each suite draws its samples from a seeded ChaCha stream and reports a
//! [`CheckOutcome`] whose margin is the worst slack seen.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{
    dirichlet_energy, eta_cross_term, sample_initial, translate_field, GridDomain, InitialSpec,
    Preset, QGridFunction,
};
use crate::morseflow::checks::CheckOutcome;
use crate::morseflow::{minimize_step, run_flow, SolverOptions, StepSchedule};
use crate::oracle::{brute_force_step, exhaustive_matching_cost, implicit_euler_chain};
use crate::qspace::{
    eta, matching_cost, metric_g, metric_g_sq, optimal_matching, rho_pav, translate, xi_sorted,
    QPoint,
};

fn outcome(name: &str, margin: f64, detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed: margin >= 0.0,
        margin,
        detail,
    }
}

fn random_qpoint(rng: &mut ChaCha8Rng, n: usize, q: usize) -> QPoint {
    let pts: Vec<Vec<f64>> = (0..q)
        .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect();
    QPoint::new(&pts).expect("finite random values")
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Symmetry, identity of indiscernibles and the triangle inequality of 𝒢 on
/// random values with Q <= 6, n <= 3.
pub fn metric_axioms(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    for _ in 0..samples {
        let n = rng.gen_range(1..=3);
        let q = rng.gen_range(1..=6);
        let (a, b, c) = (
            random_qpoint(&mut rng, n, q),
            random_qpoint(&mut rng, n, q),
            random_qpoint(&mut rng, n, q),
        );
        let (ab, ba) = (metric_g(&a, &b)?, metric_g(&b, &a)?);
        margin = margin.min(1e-12 - (ab - ba).abs());
        margin = margin.min(metric_g(&a, &c)? + metric_g(&c, &b)? + 1e-10 - ab);
        if metric_g(&a, &a)? != 0.0 || (ab == 0.0) != (a == b) {
            margin = margin.min(-1.0);
        }
        // a reordered copy is the same multiset
        let mut pts: Vec<Vec<f64>> = a.points().map(<[f64]>::to_vec).collect();
        pts.reverse();
        if metric_g(&a, &QPoint::new(&pts)?)? != 0.0 {
            margin = margin.min(-1.0);
        }
    }
    Ok(outcome("metric_axioms", margin, format!("{samples} random triples")))
}

/// For n = 1 the sorted identity pairing is optimal: exhaustive search over
/// all Q! permutations returns exactly the sorted cost.
pub fn sorted_matching(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..samples {
        let q = rng.gen_range(1..=6);
        let (a, b) = (random_qpoint(&mut rng, 1, q), random_qpoint(&mut rng, 1, q));
        let identity: Vec<usize> = (0..q).collect();
        let sorted = matching_cost(&a, &b, &identity);
        if exhaustive_matching_cost(&a, &b)? != sorted || metric_g_sq(&a, &b)? != sorted {
            mismatches += 1;
        }
    }
    Ok(outcome(
        "sorted_matching",
        if mismatches == 0 { 0.0 } else { -(mismatches as f64) },
        format!("{mismatches} of {samples} samples differ from exhaustive search"),
    ))
}

/// The assignment solver for n > 1 agrees with exhaustive enumeration.
pub fn assignment_vs_exhaustive(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    for _ in 0..samples {
        let n = rng.gen_range(2..=3);
        let q = rng.gen_range(1..=5);
        let (a, b) = (random_qpoint(&mut rng, n, q), random_qpoint(&mut rng, n, q));
        let m = optimal_matching(&a, &b)?;
        let brute = exhaustive_matching_cost(&a, &b)?;
        let recomputed = matching_cost(&a, &b, &m.sigma);
        let scale = brute.max(1.0);
        margin = margin
            .min(1e-12 * scale - (m.cost - brute).abs())
            .min(1e-12 * scale - (recomputed - m.cost).abs());
    }
    Ok(outcome("assignment_vs_exhaustive", margin, format!("{samples} random pairs")))
}

/// `|xi(S) - xi(W)| = 𝒢(S, W)` on random n = 1 pairs.
pub fn xi_isometry(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    for _ in 0..samples {
        let q = rng.gen_range(1..=6);
        let (a, b) = (random_qpoint(&mut rng, 1, q), random_qpoint(&mut rng, 1, q));
        let gap = (dist(&xi_sorted(&a)?, &xi_sorted(&b)?) - metric_g(&a, &b)?).abs();
        margin = margin.min(1e-12 - gap);
    }
    Ok(outcome("xi_isometry", margin, format!("{samples} random pairs")))
}

/// Idempotence and the 1-Lipschitz property of the isotonic projection.
pub fn rho_projection(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    let mut not_idempotent = 0;
    for _ in 0..samples {
        let q = rng.gen_range(1..=6);
        let (x, y) = (random_vec(&mut rng, q), random_vec(&mut rng, q));
        let (rx, ry) = (rho_pav(&x), rho_pav(&y));
        if rho_pav(&rx) != rx || rho_pav(&ry) != ry {
            not_idempotent += 1;
        }
        let d = dist(&x, &y);
        margin = margin.min(d * (1.0 + 1e-12) - dist(&rx, &ry));
    }
    if not_idempotent > 0 {
        margin = margin.min(-(not_idempotent as f64));
    }
    Ok(outcome(
        "rho_projection",
        margin,
        format!("{samples} random pairs, {not_idempotent} not idempotent"),
    ))
}

/// `eta(S + v) = eta(S) + v`.
pub fn translation_mean(samples: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    for _ in 0..samples {
        let n = rng.gen_range(1..=3);
        let q = rng.gen_range(1..=6);
        let s = random_qpoint(&mut rng, n, q);
        let v = random_vec(&mut rng, n);
        let moved = eta(&translate(&s, &v)?);
        let expected: Vec<f64> = eta(&s).iter().zip(&v).map(|(e, v)| e + v).collect();
        margin = margin.min(1e-14 * 10.0 - dist(&moved, &expected));
    }
    Ok(outcome("translation_mean", margin, format!("{samples} random translations")))
}

fn random_grid_function(rng: &mut ChaCha8Rng, dom: &Arc<GridDomain>, n: usize, q: usize) -> QGridFunction {
    let values = (0..dom.node_count()).map(|_| random_qpoint(rng, n, q)).collect();
    QGridFunction::new(dom.clone(), values).expect("consistent shapes")
}

/// `Dir(f (+) phi) = Dir(f) + 2Q <D eta(f), D phi> + Q Dir(phi)` on random pairs.
pub fn energy_expansion(pairs: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let m = rng.gen_range(1..=2);
        let res = 2 * rng.gen_range(1..=5) + 1;
        let dom = Arc::new(GridDomain::new(m, res)?);
        let n = rng.gen_range(1..=2);
        let q = rng.gen_range(1..=4);
        let f = random_grid_function(&mut rng, &dom, n, q);
        let phi = random_grid_function(&mut rng, &dom, n, 1);
        let lhs = dirichlet_energy(&translate_field(&f, &phi)?);
        let qf = q as f64;
        let rhs = dirichlet_energy(&f) + 2.0 * qf * eta_cross_term(&f, &phi)? + qf * dirichlet_energy(&phi);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE));
    }
    Ok(outcome(
        "energy_expansion",
        1e-10 - worst,
        format!("{pairs} random pairs, worst relative error {worst:.3e}"),
    ))
}

/// `minimize_step` reaches the exhaustive global objective on tiny random
/// instances (at most 3 interior nodes, Q = 2).
pub fn brute_force_equivalence(instances: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = [(1, 3), (1, 5), (2, 3)];
    let opts = SolverOptions::default();
    let mut margin = f64::INFINITY;
    for _ in 0..instances {
        let (m, res) = shapes[rng.gen_range(0..shapes.len())];
        let dom = Arc::new(GridDomain::new(m, res)?);
        let f = random_grid_function(&mut rng, &dom, 1, 2);
        let tau = rng.gen_range(0.05..1.0);
        let (_, global) = brute_force_step(&f, tau)?;
        let (_, report) = minimize_step(&f, tau, &opts)?;
        let scale = global.abs().max(1.0);
        margin = margin.min(1e-8 * scale - (report.objective - global).abs());
        if !report.converged {
            margin = margin.min(-1.0);
        }
    }
    Ok(outcome(
        "brute_force_equivalence",
        margin,
        format!("{instances} tiny instances"),
    ))
}

/// Single-valued uniform flow equals the tridiagonal implicit-Euler chain at
/// every snapshot.
pub fn scalar_chain_equivalence(resolution: usize, steps: usize, t_final: f64) -> Result<CheckOutcome> {
    let dom = Arc::new(GridDomain::new(1, resolution)?);
    let spec = InitialSpec::new(Preset::Branches, vec![0.2, 1.0, -0.5, 0.3]);
    let f0 = sample_initial(&spec, dom.clone(), 1)?;
    let schedule = StepSchedule::uniform(t_final, steps)?;
    let traj = run_flow(&f0, &schedule, &SolverOptions::default())?;
    let mut u = f0.branch(0)?;
    let mut worst: f64 = 0.0;
    for (k, snap) in traj.snapshots.iter().enumerate().skip(1) {
        u = implicit_euler_chain(&dom, &u, &[schedule.tau(k)?])?;
        let got = snap.branch(0)?;
        let diff = got.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    let margin = if traj.complete { 1e-8 - worst } else { -1.0 };
    Ok(outcome(
        "scalar_chain_equivalence",
        margin,
        format!(
            "resolution {resolution}, N {steps}, {} snapshots, worst max-norm gap {worst:.3e}",
            traj.snapshots.len()
        ),
    ))
}
