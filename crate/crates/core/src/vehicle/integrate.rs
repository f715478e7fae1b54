use nalgebra::{Matrix3, SVector, Vector3};

use crate::error::{ensure_finite, Error, Result};
use crate::mathkit::Rotation;

use super::dynamics::{quad_derivative_raw, VehicleParams, VehicleState};

/// One classical Runge-Kutta step for `x' = f(t, x)`.
pub fn rk4_step<const N: usize, F>(f: F, t: f64, x: &SVector<f64, N>, dt: f64) -> Result<SVector<f64, N>>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {dt}")));
    }
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * dt, &(x + k1 * (0.5 * dt)));
    let k3 = f(t + 0.5 * dt, &(x + k2 * (0.5 * dt)));
    let k4 = f(t + dt, &(x + k3 * dt));
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    ensure_finite(next.as_slice(), "rk4 state")?;
    Ok(next)
}

/// Number of scalars in the flat vehicle state: p, v, vec(R), w.
pub const VEHICLE_DIM: usize = 18;

pub fn pack_vehicle(s: &VehicleState) -> SVector<f64, VEHICLE_DIM> {
    let mut x = SVector::<f64, VEHICLE_DIM>::zeros();
    x.fixed_rows_mut::<3>(0).copy_from(&s.position);
    x.fixed_rows_mut::<3>(3).copy_from(&s.velocity);
    x.fixed_rows_mut::<9>(6).copy_from_slice(s.attitude.matrix().as_slice());
    x.fixed_rows_mut::<3>(15).copy_from(&s.angular_velocity);
    x
}

/// Inverse of [`pack_vehicle`]; the attitude block is projected back onto SO(3).
pub fn unpack_vehicle(x: &SVector<f64, VEHICLE_DIM>) -> Result<VehicleState> {
    let r = Matrix3::from_column_slice(x.fixed_rows::<9>(6).as_slice());
    Ok(VehicleState {
        position: x.fixed_rows::<3>(0).into_owned(),
        velocity: x.fixed_rows::<3>(3).into_owned(),
        attitude: Rotation::project(&r)?,
        angular_velocity: x.fixed_rows::<3>(15).into_owned(),
    })
}

/// Flat-vector form of the vehicle vector field, inputs held constant.
pub fn vehicle_field(
    x: &SVector<f64, VEHICLE_DIM>,
    thrust: f64,
    torque: &Vector3<f64>,
    params: &VehicleParams,
    inertia_inv: &Matrix3<f64>,
) -> SVector<f64, VEHICLE_DIM> {
    let v: Vector3<f64> = x.fixed_rows::<3>(3).into_owned();
    let r = Matrix3::from_column_slice(x.fixed_rows::<9>(6).as_slice());
    let w: Vector3<f64> = x.fixed_rows::<3>(15).into_owned();
    let d = quad_derivative_raw(&v, &r, &w, thrust, torque, params, inertia_inv);
    let mut dx = SVector::<f64, VEHICLE_DIM>::zeros();
    dx.fixed_rows_mut::<3>(0).copy_from(&d.position_rate);
    dx.fixed_rows_mut::<3>(3).copy_from(&d.velocity_rate);
    dx.fixed_rows_mut::<9>(6).copy_from_slice(d.attitude_rate.as_slice());
    dx.fixed_rows_mut::<3>(15).copy_from(&d.angular_accel);
    dx
}

/// Advances the vehicle with thrust and torque held over the step.
pub fn rk4_vehicle(
    s: &VehicleState,
    thrust: f64,
    torque: &Vector3<f64>,
    params: &VehicleParams,
    dt: f64,
) -> Result<VehicleState> {
    if thrust < 0.0 {
        return Err(Error::InvalidArgument(format!("thrust must be nonnegative, got {thrust}")));
    }
    let jinv = params.inertia_inverse()?;
    let x = pack_vehicle(s);
    let next = rk4_step(|_, y| vehicle_field(y, thrust, torque, params, &jinv), 0.0, &x, dt)?;
    unpack_vehicle(&next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathkit::{expm_so3, so3::orthogonality_error};
    use nalgebra::Vector1;

    #[test]
    fn zero_field_is_identity() {
        let x = SVector::<f64, 3>::new(1.0, -2.0, 3.5);
        let y = rk4_step(|_, _| SVector::<f64, 3>::zeros(), 0.0, &x, 0.1).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn fourth_order_on_decay() {
        let err = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let mut x = Vector1::new(1.0);
            for i in 0..steps {
                x = rk4_step(|_, y| -y, i as f64 * dt, &x, dt).unwrap();
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_step() {
        let x = Vector1::new(1.0);
        assert!(rk4_step(|_, y| -y, 0.0, &x, 0.0).is_err());
        assert!(rk4_step(|_, y| -y, 0.0, &x, f64::NAN).is_err());
    }

    #[test]
    fn hover_hold() {
        let p = VehicleParams::default();
        let mut s = VehicleState::at_rest(Rotation::identity());
        for _ in 0..10_000 {
            s = rk4_vehicle(&s, p.gravity, &Vector3::zeros(), &p, 1e-3).unwrap();
        }
        assert!(s.position.norm() <= 1e-9);
    }

    #[test]
    fn tumbling_keeps_orthonormality() {
        let p = VehicleParams::default();
        let mut s = VehicleState::at_rest(expm_so3(&Vector3::new(0.2, 0.5, -0.3)));
        s.angular_velocity = Vector3::new(3.0, -1.0, 2.0);
        for _ in 0..60_000 {
            s = rk4_vehicle(&s, 0.0, &Vector3::new(1e-3, 0.0, -2e-3), &p, 1e-3).unwrap();
        }
        assert!(orthogonality_error(s.attitude.matrix()) < 1e-8);
        assert!((s.attitude.matrix().determinant() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pack_round_trip() {
        let s = VehicleState {
            position: Vector3::new(1.0, 2.0, 3.0),
            velocity: Vector3::new(-1.0, 0.5, 0.0),
            attitude: expm_so3(&Vector3::new(0.1, 0.2, 0.3)),
            angular_velocity: Vector3::new(0.0, 1.0, -1.0),
        };
        let back = unpack_vehicle(&pack_vehicle(&s)).unwrap();
        assert!((back.attitude.matrix() - s.attitude.matrix()).amax() < 1e-15);
        assert_eq!(back.position, s.position);
    }
}
