//! Hybrid geometric attitude tracking on SO(3).
//!
//! The potential family is `U(R, theta) = tr(A (I - R_u(theta) R)) + gamma_theta theta^2 / 2`
//! with `R_u(theta) = exp(theta u^)` for a fixed unit axis `u`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::mathkit::{dist, expm_so3, psi_map, skew, Rotation};

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    /// Diagonal of the trace weight `A`.
    pub a_diag: Vector3<f64>,
    pub gamma_theta: f64,
    /// Candidate values of the hybrid variable after a jump.
    pub theta_set: Vec<f64>,
    /// Jump threshold on the potential gap.
    pub delta: f64,
    pub u_axis: Vector3<f64>,
    pub k_r: f64,
    pub k_omega: f64,
    pub k_theta: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            a_diag: Vector3::new(2.0, 4.0, 6.0),
            gamma_theta: 7.0 / (pi * pi),
            theta_set: vec![0.9 * pi],
            delta: 0.324,
            u_axis: Vector3::repeat(1.0 / 3f64.sqrt()),
            k_r: 1.5,
            k_omega: 0.2,
            k_theta: 10.0,
        }
    }
}

impl PotentialConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.a_diag.as_slice(), "A")?;
        ensure_finite(self.u_axis.as_slice(), "u_axis")?;
        ensure_finite(&[self.gamma_theta, self.delta, self.k_r, self.k_omega, self.k_theta], "hybrid gains")?;
        ensure_finite(&self.theta_set, "theta set")?;
        let a = &self.a_diag;
        if a.iter().any(|&v| v <= 0.0) || a[0] == a[1] || a[1] == a[2] || a[0] == a[2] {
            return Err(Error::InvalidArgument("A must have distinct positive entries".into()));
        }
        if (self.u_axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("u_axis must be a unit vector".into()));
        }
        if self.theta_set.is_empty() {
            return Err(Error::InvalidArgument("theta set must not be empty".into()));
        }
        if self.gamma_theta <= 0.0 || self.delta <= 0.0 || self.k_r <= 0.0 || self.k_omega <= 0.0 || self.k_theta <= 0.0
        {
            return Err(Error::InvalidArgument("hybrid gains must be positive".into()));
        }
        Ok(())
    }

    pub fn a(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.a_diag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    #[default]
    Hybrid,
    /// Classical law with the hybrid variable pinned at zero.
    NonHybrid,
}

impl std::str::FromStr for ControllerMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(Self::Hybrid),
            "nonhybrid" | "non_hybrid" => Ok(Self::NonHybrid),
            other => Err(Error::Config(format!(
                "unknown controller `{other}` (expected `hybrid` or `nonhybrid`)"
            ))),
        }
    }
}

impl std::fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Hybrid => "hybrid",
            Self::NonHybrid => "nonhybrid",
        })
    }
}

/// Discrete part of the controller state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridCtrlState {
    pub theta: f64,
    pub jumps: u64,
}

/// `R~ = R_d^T R`, `w~ = w - R~^T w_d`.
pub fn attitude_error(
    r: &Rotation,
    omega: &Vector3<f64>,
    r_d: &Rotation,
    omega_d: &Vector3<f64>,
) -> (Rotation, Vector3<f64>) {
    let rt = r_d.transpose().compose(r);
    let w = omega - rt.matrix().transpose() * omega_d;
    (rt, w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialEval {
    pub u: f64,
    pub du_dtheta: f64,
    /// Attitude error vector; `dU/dt = 2 e_R . w` along `R' = R w^`.
    pub e_r: Vector3<f64>,
}

pub fn potential_eval(rt: &Matrix3<f64>, theta: f64, cfg: &PotentialConfig) -> PotentialEval {
    let a = cfg.a();
    let ru = expm_so3(&(cfg.u_axis * theta)).into_inner();
    let t = ru * rt;
    let at = a * t;
    PotentialEval {
        u: a.trace() - at.trace() + 0.5 * cfg.gamma_theta * theta * theta,
        du_dtheta: -(a * skew(&cfg.u_axis) * t).trace() + cfg.gamma_theta * theta,
        e_r: psi_map(&at),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HybridDecision {
    Flow { theta_dot: f64 },
    Jump { theta_plus: f64, gap: f64 },
}

/// Potential gap `U(R, theta) - min over the jump set`, and its argmin.
pub fn potential_gap(rt: &Matrix3<f64>, theta: f64, cfg: &PotentialConfig) -> (f64, f64) {
    let here = potential_eval(rt, theta, cfg).u;
    let mut best = (f64::INFINITY, f64::INFINITY);
    for &c in &cfg.theta_set {
        let v = potential_eval(rt, c, cfg).u;
        if v < best.0 || (v == best.0 && c < best.1) {
            best = (v, c);
        }
    }
    (here - best.0, best.1)
}

pub fn hybrid_update(rt: &Matrix3<f64>, theta: f64, cfg: &PotentialConfig) -> HybridDecision {
    let (gap, arg) = potential_gap(rt, theta, cfg);
    if gap >= cfg.delta {
        HybridDecision::Jump { theta_plus: arg, gap }
    } else {
        HybridDecision::Flow {
            theta_dot: -cfg.k_theta * potential_eval(rt, theta, cfg).du_dtheta,
        }
    }
}

/// Feedforward `J R~^T w_d' + (R~^T w_d)^ J R~^T w_d`.
pub fn upsilon(rt: &Matrix3<f64>, omega_d: &Vector3<f64>, omega_d_dot: &Vector3<f64>, j: &Matrix3<f64>) -> Vector3<f64> {
    let wb = rt.transpose() * omega_d;
    j * (rt.transpose() * omega_d_dot) + wb.cross(&(j * wb))
}

/// Skew matrix of the error dynamics, `J w~' = Sigma w~ - Upsilon + tau`.
pub fn sigma_matrix(rt: &Matrix3<f64>, omega_err: &Vector3<f64>, omega_d: &Vector3<f64>, j: &Matrix3<f64>) -> Matrix3<f64> {
    let wb = rt.transpose() * omega_d;
    let sw = skew(&wb);
    skew(&(j * omega_err)) + skew(&(j * wb)) - (sw * j + j * sw)
}

#[allow(clippy::too_many_arguments)]
pub fn torque(
    rt: &Matrix3<f64>,
    theta: f64,
    omega_err: &Vector3<f64>,
    omega_d: &Vector3<f64>,
    omega_d_dot: &Vector3<f64>,
    j: &Matrix3<f64>,
    cfg: &PotentialConfig,
    mode: ControllerMode,
) -> Vector3<f64> {
    let th = match mode {
        ControllerMode::Hybrid => theta,
        ControllerMode::NonHybrid => 0.0,
    };
    let e_r = potential_eval(rt, th, cfg).e_r;
    upsilon(rt, omega_d, omega_d_dot, j) - (e_r * (2.0 * cfg.k_r) + omega_err * cfg.k_omega)
}

/// Derivative of the error state `(R~, w~)` under torque `tau`.
pub fn error_dynamics(
    rt: &Matrix3<f64>,
    omega_err: &Vector3<f64>,
    omega_d: &Vector3<f64>,
    omega_d_dot: &Vector3<f64>,
    j: &Matrix3<f64>,
    tau: &Vector3<f64>,
) -> Result<(Matrix3<f64>, Vector3<f64>)> {
    let jinv = j.try_inverse().ok_or(Error::Singular("inertia"))?;
    let rhs = sigma_matrix(rt, omega_err, omega_d, j) * omega_err - upsilon(rt, omega_d, omega_d_dot, j) + tau;
    Ok((rt * skew(omega_err), jinv * rhs))
}

/// Normalized attitude distance of the error.
pub fn error_distance(rt: &Rotation) -> f64 {
    dist(rt)
}
