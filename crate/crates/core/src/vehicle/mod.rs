//! Quadrotor plant, reference trajectories and their feasibility bounds.

pub mod bounds;
pub mod dynamics;
pub mod integrate;
pub mod reference;

pub use bounds::{assumption_bounds, FeasibilityBounds};
pub use dynamics::{quad_derivative, VehicleDerivative, VehicleParams, VehicleState};
pub use integrate::{rk4_step, rk4_vehicle};
pub use reference::{builtin, Hover, Orbit, RefSample, Trajectory};
