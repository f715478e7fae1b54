//! Thrust and desired attitude from the virtual acceleration, the admissible
//! input bound, and the desired angular velocity/acceleration chain.

use nalgebra::{Matrix3, Vector3};

use crate::error::{ensure_finite, Error, Result};
use crate::mathkit::{psi_map, Rotation};
use crate::vehicle::{RefSample, VehicleParams};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const HEADING_GUARD: f64 = 1e-9;

/// Time-varying admissible magnitude of the virtual input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputBound {
    /// Keeps the thrust at least `eps`.
    pub b1: f64,
    /// Keeps the thrust at most `Tmax`.
    pub b2: f64,
    pub b: f64,
    /// `b / sqrt(3)`, the per-component bound.
    pub b_axis: f64,
}

pub fn constraint_bound(r: &RefSample, params: &VehicleParams, eps: f64) -> Result<InputBound> {
    let w = params.drag.component_mul(&r.vel) + r.acc;
    let b1 = params.gravity - w[2] - eps;
    let b2 = params.max_thrust - (Vector3::z() * params.gravity - w).norm();
    let b = b1.min(b2);
    ensure_finite(&[b1, b2], "input bound")?;
    if b <= 0.0 {
        return Err(Error::Infeasible(format!(
            "admissible input bound is not positive (B1 = {b1:.6}, B2 = {b2:.6})"
        )));
    }
    Ok(InputBound {
        b1,
        b2,
        b,
        b_axis: b / SQRT3,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesiredAttitude {
    pub thrust: f64,
    pub rotation: Rotation,
    pub omega: Vector3<f64>,
    pub omega_dot: Vector3<f64>,
    /// Analytic `dR_d/dt`.
    pub rotation_rate: Matrix3<f64>,
}

/// Thrust vector `g e3 - D r' - r'' - mu_d`.
fn thrust_vector(mu_d: &Vector3<f64>, r: &RefSample, params: &VehicleParams) -> Vector3<f64> {
    Vector3::z() * params.gravity - params.drag.component_mul(&r.vel) - r.acc - mu_d
}

fn heading(psi: f64) -> Vector3<f64> {
    Vector3::new(psi.cos(), psi.sin(), 0.0)
}

/// Thrust magnitude and desired rotation `[x_d, z_d x x_d, z_d]`.
pub fn extract_attitude(
    mu_d: &Vector3<f64>,
    r: &RefSample,
    params: &VehicleParams,
) -> Result<(f64, Rotation)> {
    ensure_finite(mu_d.as_slice(), "mu_d")?;
    let nu = thrust_vector(mu_d, r, params);
    let thrust = nu.norm();
    if !(thrust > 0.0) {
        return Err(Error::NonPositiveThrust(thrust));
    }
    let z = nu / thrust;
    let nx = heading(r.yaw) - z * z.dot(&heading(r.yaw));
    let m = nx.norm();
    if m < HEADING_GUARD {
        return Err(Error::ExtractionSingular(m));
    }
    let x = nx / m;
    let y = z.cross(&x);
    Ok((thrust, Rotation::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]))))
}

/// Unit vector `v / |v|` with its first two time derivatives.
fn normalize_chain(
    v: &Vector3<f64>,
    dv: &Vector3<f64>,
    ddv: &Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let n = v.norm();
    let u = v / n;
    let pi = Matrix3::identity() - u * u.transpose();
    let du = pi * dv / n;
    let dn = u.dot(dv);
    let dpi = -(du * u.transpose() + u * du.transpose());
    let ddu = (dpi * dv + pi * ddv - du * dn) / n;
    (u, du, ddu)
}

/// Desired angular velocity and acceleration (body frame) from the extension
/// states `mu_d`, `eta` and the held input `u`.
#[allow(clippy::too_many_arguments)]
pub fn desired_rates(
    mu_d: &Vector3<f64>,
    eta: &Vector3<f64>,
    u: &Vector3<f64>,
    r: &RefSample,
    params: &VehicleParams,
    gamma: f64,
    alpha: f64,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    Ok(desired_attitude(mu_d, eta, u, r, params, gamma, alpha)?.rates())
}

/// Full extraction including rates.
#[allow(clippy::too_many_arguments)]
pub fn desired_attitude(
    mu_d: &Vector3<f64>,
    eta: &Vector3<f64>,
    u: &Vector3<f64>,
    r: &RefSample,
    params: &VehicleParams,
    gamma: f64,
    alpha: f64,
) -> Result<DesiredAttitude> {
    ensure_finite(eta.as_slice(), "eta")?;
    ensure_finite(u.as_slice(), "u")?;
    let (thrust, rotation) = extract_attitude(mu_d, r, params)?;
    let d = &params.drag;
    let g2 = gamma * gamma;

    let nu = thrust_vector(mu_d, r, params);
    let dnu = -d.component_mul(&r.acc) - r.jerk + (mu_d - eta * alpha) / gamma;
    let ddnu = -d.component_mul(&r.jerk) - r.snap - mu_d / g2 + eta * (2.0 * alpha / g2)
        - u * (alpha * alpha / g2);
    let (z, dz, ddz) = normalize_chain(&nu, &dnu, &ddnu);

    let pz = Matrix3::identity() - z * z.transpose();
    let dpz = -(dz * z.transpose() + z * dz.transpose());
    let ddpz = -(ddz * z.transpose() + dz * dz.transpose() * 2.0 + z * ddz.transpose());
    let (c, s) = (r.yaw.cos(), r.yaw.sin());
    let xb = Vector3::new(c, s, 0.0);
    let dxb = Vector3::new(-s, c, 0.0) * r.yaw_rate;
    let ddxb = Vector3::new(-s, c, 0.0) * r.yaw_accel - xb * (r.yaw_rate * r.yaw_rate);
    let nx = pz * xb;
    let dnx = dpz * xb + pz * dxb;
    let ddnx = ddpz * xb + dpz * dxb * 2.0 + pz * ddxb;
    let (x, dx, ddx) = normalize_chain(&nx, &dnx, &ddnx);

    let y = z.cross(&x);
    let dy = dz.cross(&x) + z.cross(&dx);
    let ddy = ddz.cross(&x) + dz.cross(&dx) * 2.0 + z.cross(&ddx);

    let rd = Matrix3::from_columns(&[x, y, z]);
    let drd = Matrix3::from_columns(&[dx, dy, dz]);
    let ddrd = Matrix3::from_columns(&[ddx, ddy, ddz]);
    let omega = psi_map(&(rd.transpose() * drd));
    let omega_dot = psi_map(&(drd.transpose() * drd + rd.transpose() * ddrd));
    ensure_finite(omega.as_slice(), "omega_d")?;
    ensure_finite(omega_dot.as_slice(), "omega_d rate")?;
    debug_assert!((rotation.matrix() - rd).amax() < 1e-12);
    Ok(DesiredAttitude {
        thrust,
        rotation,
        omega,
        omega_dot,
        rotation_rate: drd,
    })
}

impl DesiredAttitude {
    pub fn rates(&self) -> (Vector3<f64>, Vector3<f64>) {
        (self.omega, self.omega_dot)
    }
}
