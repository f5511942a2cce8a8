//! Trajectory-level checks of the properties the flow must satisfy.
//!
//! Every check recomputes its quantities from the stored snapshots rather
//! than trusting the step reports, so tampered or corrupted snapshots are
//! caught. Margins are signed: nonnegative means the property holds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{dirichlet_energy, eta_field, l2_distance_sq, weak_residual_eta, QGridFunction};
use crate::oracle::max_principle_check;

use super::{check_holder, FlowTrajectory, ScheduleMode};

pub mod tol {
    /// Relative slack on `Dir(f^k) <= Dir(f^{k-1})`.
    pub const ENERGY: f64 = 1e-10;
    pub const STEP_ESTIMATE: f64 = 1e-10;
    /// Relative to `1 + max |eta|`.
    pub const ETA_RESIDUAL: f64 = 1e-8;
    pub const SYMMETRY: f64 = 1e-10;
    pub const POSITIVITY: f64 = 1e-12;
    pub const MAX_NORM: f64 = 1e-12;
    pub const HOLDER: f64 = 1e-8;
}

pub const CHECK_NAMES: [&str; 9] = [
    "solver_convergence",
    "boundary_trace",
    "energy_monotonicity",
    "step_estimate",
    "eta_residual",
    "symmetry",
    "positivity",
    "max_norm",
    "holder",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst signed slack over everything the check inspected.
    pub margin: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn from_margin(name: &str, margin: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: margin >= 0.0,
            margin,
            detail,
        }
    }

    fn skipped(name: &str, why: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            margin: 0.0,
            detail: format!("not applicable: {why}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub holder_samples: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            holder_samples: 100,
            seed: 0,
        }
    }
}

pub fn solver_convergence(traj: &FlowTrajectory) -> CheckOutcome {
    let failed: Vec<usize> = traj.reports.iter().filter(|r| !r.converged).map(|r| r.k).collect();
    let ok = traj.complete && failed.is_empty();
    CheckOutcome {
        name: "solver_convergence".into(),
        passed: ok,
        margin: if ok { 0.0 } else { -1.0 },
        detail: format!(
            "{} of {} steps taken, unconverged steps {:?}",
            traj.steps_taken(),
            traj.schedule.steps,
            failed
        ),
    }
}

pub fn boundary_trace(traj: &FlowTrajectory) -> CheckOutcome {
    let f0 = traj.initial();
    let bad: Vec<usize> = (0..traj.snapshots.len())
        .filter(|&k| !traj.snapshots[k].same_boundary_trace(f0))
        .collect();
    CheckOutcome {
        name: "boundary_trace".into(),
        passed: bad.is_empty(),
        margin: if bad.is_empty() { 0.0 } else { -1.0 },
        detail: format!("snapshots with altered boundary values: {bad:?}"),
    }
}

pub fn energy_monotonicity(traj: &FlowTrajectory) -> CheckOutcome {
    let energies = traj.energies();
    let (mut margin, mut worst) = (f64::INFINITY, 0);
    for k in 1..energies.len() {
        let slack = energies[k - 1] + tol::ENERGY * energies[k - 1].max(1.0) - energies[k];
        if slack < margin {
            margin = slack;
            worst = k;
        }
    }
    if energies.len() < 2 {
        margin = 0.0;
    }
    CheckOutcome::from_margin(
        "energy_monotonicity",
        margin,
        format!("worst step {worst}, Dir(f^0) = {:.6e}", energies[0]),
    )
}

pub fn step_estimate(traj: &FlowTrajectory) -> Result<CheckOutcome> {
    let energies = traj.energies();
    let (mut margin, mut worst) = (f64::INFINITY, 0);
    for k in 1..traj.snapshots.len() {
        let tau = traj.schedule.tau(k)?;
        let penalty = l2_distance_sq(&traj.snapshots[k - 1], &traj.snapshots[k])?;
        let raw = tau * (energies[k - 1] - energies[k]) - penalty;
        if raw < margin {
            margin = raw;
            worst = k;
        }
    }
    if traj.snapshots.len() < 2 {
        margin = 0.0;
    }
    Ok(CheckOutcome::from_margin(
        "step_estimate",
        margin + tol::STEP_ESTIMATE,
        format!("worst step {worst}, raw margin {margin:.6e}"),
    ))
}

fn max_abs_eta(f: &QGridFunction) -> f64 {
    eta_field(f)
        .iter()
        .flat_map(|e| e.iter())
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// A step whose time scale is so small that one rounding unit of the stored
/// snapshots, divided by `tau`, already exceeds the tolerance cannot be
/// judged by this check.
fn resolvable(prev: &QGridFunction, curr: &QGridFunction, tau: f64, allowed: f64) -> bool {
    let scale = max_abs_eta(prev).max(max_abs_eta(curr));
    f64::EPSILON * scale / tau <= allowed
}

pub fn eta_residual(traj: &FlowTrajectory) -> Result<CheckOutcome> {
    if traj.initial().n() != 1 {
        return Ok(CheckOutcome::skipped("eta_residual", "values are not scalar"));
    }
    let (mut margin, mut worst, mut checked, mut unresolved) = (f64::INFINITY, 0, 0, 0);
    for r in traj.reports.iter().filter(|r| r.converged) {
        let (prev, curr) = (&traj.snapshots[r.k - 1], &traj.snapshots[r.k]);
        let tau = traj.schedule.tau(r.k)?;
        let allowed = tol::ETA_RESIDUAL * (1.0 + max_abs_eta(curr));
        if !resolvable(prev, curr, tau, allowed) {
            unresolved += 1;
            continue;
        }
        checked += 1;
        let slack = allowed - weak_residual_eta(prev, curr, tau)?;
        if slack < margin {
            margin = slack;
            worst = r.k;
        }
    }
    if checked == 0 {
        margin = 0.0;
    }
    Ok(CheckOutcome::from_margin(
        "eta_residual",
        margin,
        format!("{checked} steps checked, worst step {worst}, {unresolved} steps below rounding resolution"),
    ))
}

fn is_symmetric_pair(f: &QGridFunction) -> bool {
    f.q() == 2 && max_abs_eta(f) == 0.0
}

pub fn symmetry(traj: &FlowTrajectory) -> CheckOutcome {
    if !is_symmetric_pair(traj.initial()) {
        return CheckOutcome::skipped("symmetry", "initial data is not a symmetric pair");
    }
    let worst = traj.snapshots.iter().map(max_abs_eta).fold(0.0, f64::max);
    CheckOutcome::from_margin(
        "symmetry",
        tol::SYMMETRY - worst,
        format!("max |eta| over all snapshots {worst:.6e}"),
    )
}

pub fn positivity(traj: &FlowTrajectory) -> CheckOutcome {
    let f0 = traj.initial();
    if f0.n() != 1 || !is_symmetric_pair(f0) || f0.domain().interior_nodes().all(|x| f0.value(x).coords()[1] == 0.0) {
        return CheckOutcome::skipped("positivity", "initial data is not a nonzero symmetric pair");
    }
    let (mut lowest, mut at) = (f64::INFINITY, (0, 0));
    for (k, f) in traj.snapshots.iter().enumerate().skip(1) {
        for x in f.domain().interior_nodes() {
            let upper = f.value(x).coords()[1];
            if upper < lowest {
                lowest = upper;
                at = (k, x);
            }
        }
    }
    if traj.snapshots.len() < 2 {
        lowest = f64::INFINITY;
    }
    CheckOutcome {
        name: "positivity".into(),
        passed: lowest > tol::POSITIVITY,
        margin: lowest - tol::POSITIVITY,
        detail: format!("smallest upper branch {lowest:.6e} at step {} node {}", at.0, at.1),
    }
}

pub fn max_norm(traj: &FlowTrajectory) -> CheckOutcome {
    if traj.schedule.mode != ScheduleMode::Uniform {
        return CheckOutcome::skipped("max_norm", "geometric schedule");
    }
    let norms: Vec<f64> = traj.snapshots.iter().map(QGridFunction::max_norm).collect();
    let margin = norms
        .windows(2)
        .map(|w| w[0] + tol::MAX_NORM * w[0].max(1.0) - w[1])
        .fold(f64::INFINITY, f64::min);
    let margin = if margin.is_finite() { margin } else { 0.0 };
    let oracle = max_principle_check(&traj.snapshots, false);
    CheckOutcome {
        name: "max_norm".into(),
        passed: oracle && margin >= 0.0,
        margin,
        detail: format!("max-norm from {:.6e} to {:.6e}", norms[0], norms[norms.len() - 1]),
    }
}

/// Hölder slack at `samples` random time pairs `0 <= t < s <= horizon`.
pub fn holder(traj: &FlowTrajectory, samples: usize, seed: u64) -> Result<CheckOutcome> {
    if traj.initial().n() != 1 {
        return Ok(CheckOutcome::skipped("holder", "values are not scalar"));
    }
    let end = traj.horizon();
    let dir0 = dirichlet_energy(traj.initial());
    if end == 0.0 || samples == 0 {
        return Ok(CheckOutcome::skipped("holder", "no time interval to sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut margin, mut worst) = (f64::INFINITY, (0.0, 0.0));
    let mut drawn = 0;
    while drawn < samples {
        let a = rng.gen_range(0.0..=end);
        let b = rng.gen_range(0.0..=end);
        if a == b {
            continue;
        }
        let (t, s) = if a < b { (a, b) } else { (b, a) };
        drawn += 1;
        let slack = check_holder(traj, t, s)?;
        if slack < margin {
            margin = slack;
            worst = (t, s);
        }
    }
    Ok(CheckOutcome::from_margin(
        "holder",
        margin + tol::HOLDER,
        format!(
            "{samples} pairs, worst (t, s) = ({:.6e}, {:.6e}), raw margin {margin:.6e}, Dir(f^0) = {dir0:.6e}",
            worst.0, worst.1
        ),
    ))
}

/// Runs every check in [`CHECK_NAMES`] order.
pub fn run_checks(traj: &FlowTrajectory, cfg: &CheckConfig) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        solver_convergence(traj),
        boundary_trace(traj),
        energy_monotonicity(traj),
        step_estimate(traj)?,
        eta_residual(traj)?,
        symmetry(traj),
        positivity(traj),
        max_norm(traj),
        holder(traj, cfg.holder_samples, cfg.seed)?,
    ])
}
