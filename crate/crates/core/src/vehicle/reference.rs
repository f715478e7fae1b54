//! Reference trajectories with analytic derivatives up to fourth order.

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Position reference and its derivatives plus the yaw reference at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSample {
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub acc: Vector3<f64>,
    pub jerk: Vector3<f64>,
    pub snap: Vector3<f64>,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub yaw_accel: f64,
}

impl RefSample {
    pub fn stationary(pos: Vector3<f64>, yaw: f64) -> Self {
        Self {
            pos,
            vel: Vector3::zeros(),
            acc: Vector3::zeros(),
            jerk: Vector3::zeros(),
            snap: Vector3::zeros(),
            yaw,
            yaw_rate: 0.0,
            yaw_accel: 0.0,
        }
    }
}

/// Anything that can be sampled as a four-times differentiable reference.
pub trait Trajectory: Send + Sync {
    fn sample(&self, t: f64) -> RefSample;

    /// Common period of the position derivatives, when there is one. Bounds
    /// over all `t >= 0` are computed over one period in that case.
    fn period(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> &str;
}

/// `r(t) = (3 sin 2t, 3 cos 2t, 8 + 4 cos t)`, `psi_d(t) = t / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Orbit;

impl Trajectory for Orbit {
    fn sample(&self, t: f64) -> RefSample {
        let (s2, c2) = (2.0 * t).sin_cos();
        let (s1, c1) = t.sin_cos();
        RefSample {
            pos: Vector3::new(3.0 * s2, 3.0 * c2, 8.0 + 4.0 * c1),
            vel: Vector3::new(6.0 * c2, -6.0 * s2, -4.0 * s1),
            acc: Vector3::new(-12.0 * s2, -12.0 * c2, -4.0 * c1),
            jerk: Vector3::new(-24.0 * c2, 24.0 * s2, 4.0 * s1),
            snap: Vector3::new(48.0 * s2, 48.0 * c2, 4.0 * c1),
            yaw: 0.5 * t,
            yaw_rate: 0.5,
            yaw_accel: 0.0,
        }
    }

    fn period(&self) -> Option<f64> {
        Some(2.0 * std::f64::consts::PI)
    }

    fn name(&self) -> &str {
        "orbit"
    }
}

/// Fixed point with constant yaw rate (zero by default).
#[derive(Debug, Clone, Copy)]
pub struct Hover {
    pub point: Vector3<f64>,
    pub yaw: f64,
    pub yaw_rate: f64,
}

impl Default for Hover {
    fn default() -> Self {
        Self {
            point: Vector3::zeros(),
            yaw: 0.0,
            yaw_rate: 0.0,
        }
    }
}

impl Trajectory for Hover {
    fn sample(&self, t: f64) -> RefSample {
        let mut s = RefSample::stationary(self.point, self.yaw + self.yaw_rate * t);
        s.yaw_rate = self.yaw_rate;
        s
    }

    fn period(&self) -> Option<f64> {
        // position derivatives are constant; any window works
        Some(1.0)
    }

    fn name(&self) -> &str {
        "hover"
    }
}

/// Looks up a built-in trajectory by name.
pub fn builtin(name: &str) -> Result<Box<dyn Trajectory>> {
    match name {
        "orbit" => Ok(Box::new(Orbit)),
        "hover" => Ok(Box::new(Hover::default())),
        other => Err(Error::Config(format!(
            "unknown trajectory `{other}` (expected `orbit` or `hover`)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn orbit_at_origin_time() {
        let s = Orbit.sample(0.0);
        assert_eq!(s.pos, Vector3::new(0.0, 3.0, 12.0));
        assert_eq!(s.vel, Vector3::new(6.0, 0.0, 0.0));
        assert_eq!(Orbit.sample(2.0).yaw, 1.0);
    }

    #[test]
    fn derivative_chain_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let step = 1e-5;
        for _ in 0..100 {
            let t: f64 = rng.random_range(0.0..20.0);
            let (a, b, c) = (Orbit.sample(t - step), Orbit.sample(t), Orbit.sample(t + step));
            let fd = |f: fn(&RefSample) -> Vector3<f64>| (f(&c) - f(&a)) / (2.0 * step);
            assert!((fd(|s| s.pos) - b.vel).amax() < 1e-6);
            assert!((fd(|s| s.vel) - b.acc).amax() < 1e-6);
            assert!((fd(|s| s.acc) - b.jerk).amax() < 1e-6);
            assert!((fd(|s| s.jerk) - b.snap).amax() < 1e-6);
            assert!(((c.yaw - a.yaw) / (2.0 * step) - b.yaw_rate).abs() < 1e-6);
        }
    }

    #[test]
    fn orbit_is_periodic() {
        for &t in &[0.0, 0.3, 1.7, 5.5] {
            let a = Orbit.sample(t);
            let b = Orbit.sample(t + 2.0 * PI);
            assert!((a.pos - b.pos).amax() < 1e-12);
            assert!((a.snap - b.snap).amax() < 1e-12);
        }
    }

    #[test]
    fn builtin_lookup() {
        assert_eq!(builtin("orbit").unwrap().name(), "orbit");
        assert!(builtin("spiral").is_err());
    }
}
