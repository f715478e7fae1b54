//! JSON run configuration. Every key is required and unknown keys are rejected.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::inner_hybrid::{ControllerMode, PotentialConfig};
use crate::outer_mpc::SolverOptions;
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    /// `R(0) = R_d(0) exp(angle axis^)`.
    pub attitude_axis: [f64; 3],
    pub attitude_angle: f64,
    pub angular_velocity: [f64; 3],
    pub mu_d: [f64; 3],
    pub eta: [f64; 3],
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub duration: f64,
    pub dt_inner: f64,
    pub h: f64,
    pub horizon: usize,
    pub drag: [f64; 3],
    pub gravity: f64,
    pub max_thrust: f64,
    /// Diagonal of the inertia matrix.
    pub inertia: [f64; 3],
    pub epsilon: f64,
    pub gamma_frac: f64,
    pub alpha_frac: f64,
    pub gamma_max: f64,
    pub theta_frac: f64,
    pub q: [[f64; 3]; 3],
    pub k_r: f64,
    pub k_omega: f64,
    pub k_theta: f64,
    pub a_diag: [f64; 3],
    pub gamma_theta: f64,
    pub theta_set: Vec<f64>,
    pub delta: f64,
    pub u_axis: [f64; 3],
    pub controller: ControllerMode,
    pub trajectory: String,
    /// Sampling step for the trajectory suprema.
    pub bounds_grid: f64,
    /// Sampling step for the per-interval bound schedule.
    pub schedule_grid: f64,
    pub solver: SolverOptions,
    pub initial: InitialState,
    pub output: String,
}

impl Default for SimConfig {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        let pot = PotentialConfig::default();
        Self {
            duration: 20.0,
            dt_inner: 1e-3,
            h: 0.05,
            horizon: 25,
            drag: [0.5; 3],
            gravity: 9.81,
            max_thrust: 25.0,
            inertia: [0.0159, 0.0150, 0.0297],
            epsilon: 0.5,
            gamma_frac: 0.9,
            alpha_frac: 1.0,
            gamma_max: 1.0,
            theta_frac: 1.1,
            q: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            k_r: pot.k_r,
            k_omega: pot.k_omega,
            k_theta: pot.k_theta,
            a_diag: pot.a_diag.into(),
            gamma_theta: pot.gamma_theta,
            theta_set: pot.theta_set,
            delta: pot.delta,
            u_axis: pot.u_axis.into(),
            controller: ControllerMode::Hybrid,
            trajectory: "orbit".into(),
            bounds_grid: 1e-4,
            schedule_grid: 1e-4,
            solver: SolverOptions::default(),
            initial: InitialState {
                position: [0.0; 3],
                velocity: [0.0; 3],
                attitude_axis: [1.0, 0.0, 0.0],
                attitude_angle: pi,
                angular_velocity: [0.0; 3],
                mu_d: [0.0; 3],
                eta: [0.0; 3],
                theta: 0.0,
            },
            output: "trace.csv".into(),
        }
    }
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let cfg: SimConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            self.duration,
            self.dt_inner,
            self.h,
            self.gravity,
            self.max_thrust,
            self.epsilon,
            self.gamma_frac,
            self.alpha_frac,
            self.gamma_max,
            self.theta_frac,
            self.bounds_grid,
            self.schedule_grid,
            self.initial.attitude_angle,
            self.initial.theta,
        ];
        ensure_finite(&scalars, "config")?;
        if !(self.duration > 0.0) {
            return Err(bad("duration must be positive"));
        }
        if !(self.dt_inner > 0.0 && self.h > 0.0) {
            return Err(bad("dt_inner and h must be positive"));
        }
        let ratio = self.h / self.dt_inner;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(bad(format!("h = {} is not an integer multiple of dt_inner = {}", self.h, self.dt_inner)));
        }
        let steps = self.duration / self.h;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(bad(format!("duration = {} is not an integer multiple of h = {}", self.duration, self.h)));
        }
        if self.horizon == 0 {
            return Err(bad("horizon must be at least 1"));
        }
        if !(self.bounds_grid > 0.0 && self.schedule_grid > 0.0) {
            return Err(bad("sampling grids must be positive"));
        }
        if !(self.gravity > 0.0 && self.max_thrust > 0.0) {
            return Err(bad("gravity and max_thrust must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < self.gravity) {
            return Err(bad("epsilon must lie in (0, gravity)"));
        }
        if (Vector3::from(self.initial.attitude_axis).norm() - 1.0).abs() > 1e-9 {
            return Err(bad("initial.attitude_axis must be a unit vector"));
        }
        self.vehicle_params()?.validate()?;
        self.potential().validate()?;
        Ok(())
    }

    pub fn vehicle_params(&self) -> Result<VehicleParams> {
        let p = VehicleParams {
            gravity: self.gravity,
            drag: self.drag.into(),
            inertia: Matrix3::from_diagonal(&Vector3::from(self.inertia)),
            max_thrust: self.max_thrust,
        };
        Ok(p)
    }

    pub fn q_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.q[i][j])
    }

    pub fn potential(&self) -> PotentialConfig {
        PotentialConfig {
            a_diag: self.a_diag.into(),
            gamma_theta: self.gamma_theta,
            theta_set: self.theta_set.clone(),
            delta: self.delta,
            u_axis: self.u_axis.into(),
            k_r: self.k_r,
            k_omega: self.k_omega,
            k_theta: self.k_theta,
        }
    }

    /// Number of outer samples in the run.
    pub fn samples(&self) -> usize {
        (self.duration / self.h).round() as usize
    }

    pub fn substeps(&self) -> usize {
        (self.h / self.dt_inner).round() as usize
    }
}
