//! Outer translational loop: extended per-axis models, constraint schedule,
//! terminal-cost synthesis and the box-constrained MPC.

pub mod axis;
pub mod controller;
pub mod extension;
pub mod setup;
pub mod solver;

pub use axis::AxisModel;
pub use controller::{
    axis_state, kappa_rollout, local_kappa, outer_step, stack_state, AxisProblem, OuterController,
    OuterDesign, OuterState, OuterStep,
};
pub use extension::{
    constraint_schedule, filter_flow, filter_interval_peak, select_gamma_alpha, FilterGains,
};
pub use setup::{cost_eval, cost_hessian, cost_value, CostEval, MpcSetup};
pub use solver::{shift_warm_start, solve_axis_mpc, AxisSolution, SolverKind, SolverOptions};
