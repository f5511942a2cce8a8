//! Discrete Morse flow: each step minimizes
//! `G(g) = Dir(g) + |f_prev - g|²_{L²} / tau` over grid functions with the
//! boundary values of `f_0`, and the snapshots are joined into a flow `F_h(t)`.
//!
//! Two schedules are supported. The geometric one uses `tau_k = h / 2^k` and
//! holds each snapshot on a plateau before a short ramp of length `tau_k`; the
//! uniform one uses `tau_k = h = T / N` and blends linearly between snapshots.

mod cg;
pub mod checks;
mod step;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cg::{conjugate_gradient, CgOutcome};
pub use step::{minimize_step, step_objective};
pub use trajectory::{check_holder, check_step_estimate, evaluate_at_time, run_flow, FlowTrajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Geometric,
    Uniform,
}

impl std::str::FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(ScheduleMode::Geometric),
            "uniform" => Ok(ScheduleMode::Uniform),
            other => Err(Error::InvalidSchedule(format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScheduleMode::Geometric => "geometric",
            ScheduleMode::Uniform => "uniform",
        })
    }
}

/// Per-step penalty time scales.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub mode: ScheduleMode,
    /// Base step: snapshot `k` sits at time `k * h`.
    pub h: f64,
    pub steps: usize,
}

impl StepSchedule {
    /// `tau_k = h / 2^k`.
    pub fn geometric(h: f64, steps: usize) -> Result<Self> {
        Self::validated(ScheduleMode::Geometric, h, steps)
    }

    /// `tau_k = T / N` for every step.
    pub fn uniform(t_final: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidSchedule("need at least one step".into()));
        }
        Self::validated(ScheduleMode::Uniform, t_final / steps as f64, steps)
    }

    fn validated(mode: ScheduleMode, h: f64, steps: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidSchedule(format!("h must be positive, got {h}")));
        }
        if steps == 0 {
            return Err(Error::InvalidSchedule("need at least one step".into()));
        }
        let s = Self { mode, h, steps };
        let smallest = s.tau_unchecked(steps);
        if !(smallest.is_normal()) {
            return Err(Error::InvalidSchedule(format!(
                "tau underflows at step {steps}"
            )));
        }
        Ok(s)
    }

    fn tau_unchecked(&self, k: usize) -> f64 {
        match self.mode {
            ScheduleMode::Geometric => self.h * 0.5f64.powi(k as i32),
            ScheduleMode::Uniform => self.h,
        }
    }

    /// Time scale of step `k`, `1 <= k <= steps`.
    pub fn tau(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.steps {
            return Err(Error::StepOutOfRange {
                k,
                steps: self.steps,
            });
        }
        Ok(self.tau_unchecked(k))
    }

    /// Wall time `N h` covered by the flow.
    pub fn end_time(&self) -> f64 {
        self.steps as f64 * self.h
    }

    /// Sum of `tau_k`, the diffusion time the steps actually integrate.
    pub fn effective_time(&self) -> f64 {
        (1..=self.steps).map(|k| self.tau_unchecked(k)).sum()
    }

    /// Total length of the interpolation ramps in `[0, N h]`.
    pub fn ramp_measure(&self) -> f64 {
        match self.mode {
            ScheduleMode::Geometric => self.effective_time(),
            ScheduleMode::Uniform => self.end_time(),
        }
    }
}

/// Free function form of [`StepSchedule::tau`].
pub fn schedule_tau(schedule: &StepSchedule, k: usize) -> Result<f64> {
    schedule.tau(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when the relative objective decrease of an outer pass drops below this.
    pub outer_tol: f64,
    pub max_outer: usize,
    /// Relative residual target of each conjugate-gradient solve.
    pub cg_tol: f64,
    /// CG iteration cap as a multiple of the unknown count.
    pub cg_iter_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            outer_tol: 1e-12,
            max_outer: 100,
            cg_tol: 1e-12,
            cg_iter_factor: 10,
        }
    }
}

/// Diagnostics of one minimizing step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub k: usize,
    pub tau: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// Squared L² matching distance between the previous and new snapshot.
    pub penalty: f64,
    pub objective: f64,
    pub outer_iterations: usize,
    pub cg_iterations: usize,
    pub converged: bool,
    /// Max-norm of the frozen-matching gradient at the returned iterate, strong scaling.
    pub stationarity: f64,
    pub objective_trace: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_taus_halve() {
        let s = StepSchedule::geometric(1.0, 5).unwrap();
        assert_eq!(s.tau(1).unwrap(), 0.5);
        assert_eq!(s.tau(3).unwrap(), 0.125);
        for k in 1..5 {
            assert_eq!(s.tau(k + 1).unwrap(), s.tau(k).unwrap() / 2.0);
        }
        assert_eq!(schedule_tau(&s, 6), Err(Error::StepOutOfRange { k: 6, steps: 5 }));
        assert!(s.tau(0).is_err());
    }

    #[test]
    fn uniform_taus_are_constant() {
        let s = StepSchedule::uniform(1.0, 4).unwrap();
        for k in 1..=4 {
            assert_eq!(s.tau(k).unwrap(), 0.25);
        }
        assert_eq!(s.end_time(), 1.0);
    }

    #[test]
    fn ramp_measure_is_geometric_sum() {
        for n in [1, 5, 20, 64] {
            let s = StepSchedule::geometric(1.0, n).unwrap();
            assert_eq!(s.ramp_measure(), 1.0 - 0.5f64.powi(n as i32));
        }
    }

    #[test]
    fn invalid_schedules() {
        assert!(StepSchedule::geometric(0.0, 3).is_err());
        assert!(StepSchedule::uniform(1.0, 0).is_err());
        assert!(StepSchedule::geometric(1.0, 2000).is_err());
        assert!("sideways".parse::<ScheduleMode>().is_err());
    }
}
