use nalgebra::{Matrix3, Vector3};

use crate::error::{ensure_finite, Error, Result};
use crate::mathkit::{skew, Rotation};

/// Physical constants of the quadrotor (all mass-normalized).
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Gravitational acceleration, m/s^2.
    pub gravity: f64,
    /// Diagonal of the rotor drag matrix `D`, 1/s.
    pub drag: Vector3<f64>,
    /// Inertia matrix, kg m^2.
    pub inertia: Matrix3<f64>,
    /// Maximum mass-normalized thrust, m/s^2.
    pub max_thrust: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            drag: Vector3::new(0.5, 0.5, 0.5),
            inertia: Matrix3::from_diagonal(&Vector3::new(0.0159, 0.0150, 0.0297)),
            max_thrust: 25.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(&[self.gravity, self.max_thrust], "vehicle params")?;
        ensure_finite(self.drag.as_slice(), "drag")?;
        ensure_finite(self.inertia.as_slice(), "inertia")?;
        if self.gravity <= 0.0 {
            return Err(Error::InvalidArgument("gravity must be positive".into()));
        }
        if self.drag.iter().any(|&d| d <= 0.0) {
            return Err(Error::InvalidArgument("drag coefficients must be positive".into()));
        }
        if self.max_thrust <= self.gravity {
            return Err(Error::InvalidArgument(format!(
                "max thrust {} must exceed gravity {}",
                self.max_thrust, self.gravity
            )));
        }
        let asym = (self.inertia - self.inertia.transpose()).amax();
        if asym > 1e-12 * self.inertia.amax() {
            return Err(Error::Asymmetric { deviation: asym });
        }
        if self.inertia.cholesky().is_none() {
            return Err(Error::InvalidArgument("inertia must be positive definite".into()));
        }
        Ok(())
    }

    pub fn drag_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.drag)
    }

    pub fn inertia_inverse(&self) -> Result<Matrix3<f64>> {
        self.inertia.try_inverse().ok_or(Error::Singular("inertia"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: Rotation,
    /// Body-frame angular velocity.
    pub angular_velocity: Vector3<f64>,
}

impl VehicleState {
    pub fn at_rest(attitude: Rotation) -> Self {
        Self {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            attitude,
            angular_velocity: Vector3::zeros(),
        }
    }
}

/// Time derivative of a [`VehicleState`]; `attitude_rate` is `R w^`.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleDerivative {
    pub position_rate: Vector3<f64>,
    pub velocity_rate: Vector3<f64>,
    pub attitude_rate: Matrix3<f64>,
    pub angular_accel: Vector3<f64>,
}

/// Rigid-body dynamics with linear rotor drag:
/// `p' = v`, `v' = g e3 - T R e3 - D v`, `R' = R w^`, `J w' = -w x J w + tau`.
///
/// `attitude` may be a slightly non-orthonormal matrix (Runge-Kutta stages).
pub fn quad_derivative_raw(
    velocity: &Vector3<f64>,
    attitude: &Matrix3<f64>,
    angular_velocity: &Vector3<f64>,
    thrust: f64,
    torque: &Vector3<f64>,
    params: &VehicleParams,
    inertia_inv: &Matrix3<f64>,
) -> VehicleDerivative {
    let e3 = Vector3::z();
    let jw = params.inertia * angular_velocity;
    VehicleDerivative {
        position_rate: *velocity,
        velocity_rate: e3 * params.gravity - attitude * e3 * thrust - params.drag.component_mul(velocity),
        attitude_rate: attitude * skew(angular_velocity),
        angular_accel: inertia_inv * (torque - angular_velocity.cross(&jw)),
    }
}

pub fn quad_derivative(
    state: &VehicleState,
    thrust: f64,
    torque: &Vector3<f64>,
    params: &VehicleParams,
) -> Result<VehicleDerivative> {
    if thrust < 0.0 {
        return Err(Error::InvalidArgument(format!("thrust must be nonnegative, got {thrust}")));
    }
    ensure_finite(&[thrust], "thrust")?;
    ensure_finite(torque.as_slice(), "torque")?;
    ensure_finite(state.position.as_slice(), "position")?;
    ensure_finite(state.velocity.as_slice(), "velocity")?;
    ensure_finite(state.angular_velocity.as_slice(), "angular velocity")?;
    let jinv = params.inertia_inverse()?;
    Ok(quad_derivative_raw(
        &state.velocity,
        state.attitude.matrix(),
        &state.angular_velocity,
        thrust,
        torque,
        params,
        &jinv,
    ))
}
