//! Heat-limit comparison of the uniform scheme against the exact eigen-solution.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sample_initial, GridDomain, InitialSpec};
use crate::morseflow::{evaluate_at_time, run_flow, SolverOptions, StepSchedule};
use crate::oracle::{heat_exact_eigen, EigenHeatSpec};

/// Errors of one (resolution, N) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    pub resolution: usize,
    pub steps: usize,
    pub tau: f64,
    pub l2_error: f64,
    pub linf_error: f64,
    pub relative_l2_error: f64,
    pub converged: bool,
}

/// Runs the symmetric cosine pair (Q = 2, m = 1) with `steps` uniform steps to
/// `t_final` and compares the upper branch of `F(t_final)` with
/// `exp(-(pi/2)^2 t) cos(pi x / 2)`.
pub fn heat_limit_cell(resolution: usize, steps: usize, t_final: f64, opts: &SolverOptions) -> Result<HeatCell> {
    let dom = Arc::new(GridDomain::new(1, resolution)?);
    let f0 = sample_initial(&InitialSpec::symmetric_cos(), dom.clone(), 2)?;
    let schedule = StepSchedule::uniform(t_final, steps)?;
    let traj = run_flow(&f0, &schedule, opts)?;
    if !traj.complete {
        return Err(Error::Solver(format!(
            "heat run (resolution {resolution}, N {steps}) did not converge"
        )));
    }
    let upper = evaluate_at_time(&traj, traj.horizon())?.branch(1)?;
    let exact = heat_exact_eigen(&EigenHeatSpec::new(1, 1.0)?, t_final, &dom)?;
    let w = dom.node_weight();
    let (mut err_sq, mut ref_sq, mut linf) = (0.0, 0.0, 0.0f64);
    for (u, e) in upper.iter().zip(&exact) {
        err_sq += (u - e).powi(2) * w;
        ref_sq += e * e * w;
        linf = linf.max((u - e).abs());
    }
    Ok(HeatCell {
        resolution,
        steps,
        tau: schedule.h,
        l2_error: err_sq.sqrt(),
        linf_error: linf,
        relative_l2_error: (err_sq / ref_sq).sqrt(),
        converged: traj.complete,
    })
}

/// `log(e_coarse / e_fine) / log(ratio)`.
pub fn observed_order(e_coarse: f64, e_fine: f64, ratio: f64) -> f64 {
    (e_coarse / e_fine).ln() / ratio.ln()
}

/// Three-level estimate `log((e1 - e2) / (e2 - e3)) / log(ratio)`.
///
/// Any error component that does not change along the ladder cancels, so
/// this isolates the order of the refined parameter.
pub fn richardson_order(e1: f64, e2: f64, e3: f64, ratio: f64) -> f64 {
    ((e1 - e2) / (e2 - e3)).ln() / ratio.ln()
}
