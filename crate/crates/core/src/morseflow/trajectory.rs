use crate::error::{Error, Result};
use crate::grid::{dirichlet_energy, l2_distance_sq, QGridFunction};
use crate::qspace::{rho_pav, xi_inverse, QPoint};

use super::step::minimize_step;
use super::{ScheduleMode, SolverOptions, StepReport, StepSchedule};

/// Snapshots `f^0, ..., f^L` of a run together with their step reports.
///
/// `complete` is false when a step failed to converge; the trajectory then
/// ends with that step's best iterate and `L < schedule.steps`.
#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub schedule: StepSchedule,
    pub snapshots: Vec<QGridFunction>,
    pub reports: Vec<StepReport>,
    pub complete: bool,
}

impl FlowTrajectory {
    pub fn initial(&self) -> &QGridFunction {
        &self.snapshots[0]
    }

    pub fn steps_taken(&self) -> usize {
        self.snapshots.len() - 1
    }

    /// Latest time at which the flow is defined.
    pub fn horizon(&self) -> f64 {
        self.steps_taken() as f64 * self.schedule.h
    }

    pub fn energies(&self) -> Vec<f64> {
        self.snapshots.iter().map(dirichlet_energy).collect()
    }
}

/// Runs `schedule.steps` minimizing steps from `f0`.
pub fn run_flow(f0: &QGridFunction, schedule: &StepSchedule, opts: &SolverOptions) -> Result<FlowTrajectory> {
    let mut snapshots = vec![f0.clone()];
    let mut reports = Vec::with_capacity(schedule.steps);
    let mut complete = true;
    for k in 1..=schedule.steps {
        let tau = schedule.tau(k)?;
        let (next, mut report) = minimize_step(snapshots.last().unwrap(), tau, opts)?;
        report.k = k;
        let ok = report.converged;
        snapshots.push(next);
        reports.push(report);
        if !ok {
            complete = false;
            break;
        }
    }
    Ok(FlowTrajectory {
        schedule: *schedule,
        snapshots,
        reports,
        complete,
    })
}

/// Node-wise blend `xi^{-1}(rho((1 - w) xi(a) + w xi(b)))`.
fn blend(a: &QGridFunction, b: &QGridFunction, w: f64) -> Result<QGridFunction> {
    if a.n() != 1 {
        return Err(Error::RequiresScalarValues(a.n()));
    }
    let mut out = a.clone();
    for (x, (va, vb)) in a.values().iter().zip(b.values()).enumerate() {
        if va == vb {
            continue;
        }
        let line: Vec<f64> = va
            .coords()
            .iter()
            .zip(vb.coords())
            .map(|(p, q)| p + w * (q - p))
            .collect();
        let value: QPoint = xi_inverse(&rho_pav(&line))?;
        out.set_value(x, value)?;
    }
    Ok(out)
}

/// The interpolated flow `F_h(t)`.
///
/// Geometric mode holds `f^{i-1}` on `[(i-1)h, ih - h/2^i]` and ramps to
/// `f^i` over `[ih - h/2^i, ih]`; uniform mode blends linearly on
/// `[ih, (i+1)h]`. At `t = ih` the result is exactly `f^i`.
pub fn evaluate_at_time(traj: &FlowTrajectory, t: f64) -> Result<QGridFunction> {
    let end = traj.horizon();
    if !(0.0..=end).contains(&t) {
        return Err(Error::TimeOutOfRange { t, end });
    }
    let h = traj.schedule.h;
    let last = traj.steps_taken();
    if t == end {
        return Ok(traj.snapshots[last].clone());
    }
    let whole = ((t / h).floor() as usize).min(last - 1);
    match traj.schedule.mode {
        ScheduleMode::Geometric => {
            let i = whole + 1;
            let tau = traj.schedule.tau(i)?;
            let ramp_start = i as f64 * h - tau;
            if t <= ramp_start {
                return Ok(traj.snapshots[i - 1].clone());
            }
            let w = (t - ramp_start) / tau;
            blend(&traj.snapshots[i - 1], &traj.snapshots[i], w)
        }
        ScheduleMode::Uniform => {
            let w = (t - whole as f64 * h) / h;
            if w == 0.0 {
                return Ok(traj.snapshots[whole].clone());
            }
            blend(&traj.snapshots[whole], &traj.snapshots[whole + 1], w)
        }
    }
}

/// Slack in the step estimate: `tau (E_before - E_after) - penalty`.
pub fn check_step_estimate(report: &StepReport) -> f64 {
    report.tau * (report.energy_before - report.energy_after) - report.penalty
}

/// Slack in the Hölder bound `|F(t) - F(s)| <= sqrt(s - t + h) sqrt(Dir(f_0))`.
pub fn check_holder(traj: &FlowTrajectory, t: f64, s: f64) -> Result<f64> {
    let end = traj.horizon();
    if !(0.0 <= t && t < s && s <= end) {
        return Err(Error::TimeOutOfRange {
            t: if t < 0.0 || t >= s { t } else { s },
            end,
        });
    }
    let bound = (s - t + traj.schedule.h).sqrt() * dirichlet_energy(traj.initial()).sqrt();
    let ft = evaluate_at_time(traj, t)?;
    let fs = evaluate_at_time(traj, s)?;
    Ok(bound - l2_distance_sq(&ft, &fs)?.sqrt())
}
