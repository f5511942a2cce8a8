//! Discrete Morse flow for multiple-valued functions.
//!
//! Values live in the space of unordered Q-tuples of points ([`qspace`]),
//! functions are sampled on a grid of the unit ball ([`grid`]), and the flow
//! is built from successive minimizing steps ([`morseflow`]). The [`oracle`]
//! module holds independent reference computations, and [`suites`] and
//! [`convergence`] run the randomized and refinement checks.

pub mod convergence;
pub mod error;
pub mod grid;
pub mod morseflow;
pub mod oracle;
pub mod qspace;
pub mod suites;

pub use error::{Error, Result};
pub use grid::{
    build_domain, dirichlet_energy, eta_field, l2_distance_sq, sample_initial, weak_residual_eta,
    GridDomain, InitialSpec, NodeClass, Preset, QGridFunction,
};
pub use morseflow::checks::{run_checks, CheckConfig, CheckOutcome};
pub use morseflow::{
    evaluate_at_time, minimize_step, run_flow, FlowTrajectory, ScheduleMode, SolverOptions,
    StepReport, StepSchedule,
};
pub use qspace::{make_qpoint, metric_g, optimal_matching, Matching, QPoint};
