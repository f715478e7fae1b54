//! Feasibility bounds of a reference trajectory, by dense sampling with
//! Lipschitz padding.

use nalgebra::Vector3;

use crate::error::{ensure_finite, Error, Result};

use super::dynamics::VehicleParams;
use super::reference::Trajectory;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityBounds {
    /// sup ||D r' + r''||
    pub delta_r: f64,
    /// sup e3^T (D r' + r'')
    pub delta_rz: f64,
    /// sup ||r''||
    pub l1: f64,
    /// sup ||r'''||
    pub l2: f64,
    /// Lipschitz constant of the per-axis bound.
    pub l_bar: f64,
    /// Global lower bound on the per-axis admissible input.
    pub delta: f64,
    pub feasible: bool,
    /// Human-readable reasons when `feasible` is false.
    pub violations: Vec<String>,
}

impl FeasibilityBounds {
    pub fn ensure_feasible(&self) -> Result<()> {
        if self.feasible {
            Ok(())
        } else {
            Err(Error::Infeasible(self.violations.join("; ")))
        }
    }
}

/// Sampled suprema over one period (or over `[0, horizon]` for aperiodic
/// references), padded by `grid / 2` times the sampled sup of the next derivative.
pub fn assumption_bounds(
    traj: &dyn Trajectory,
    params: &VehicleParams,
    eps: f64,
    horizon: f64,
    grid: f64,
) -> Result<FeasibilityBounds> {
    ensure_finite(&[eps, horizon, grid], "assumption_bounds arguments")?;
    if !(eps > 0.0 && eps < params.gravity) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, g), got {eps}"
        )));
    }
    if grid <= 0.0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let span = match traj.period() {
        Some(p) => p,
        None => horizon,
    };
    if !(span > 0.0) {
        return Err(Error::InvalidArgument("sampling horizon must be positive".into()));
    }

    let d = params.drag;
    let n = (span / grid).ceil() as usize;
    let (mut dr, mut drz, mut l1, mut l2) = (0.0f64, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    let (mut ddr, mut ddrz, mut l3, mut l4) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..=n {
        let s = traj.sample((i as f64 * grid).min(span));
        ensure_finite(s.pos.as_slice(), "reference")?;
        let w: Vector3<f64> = d.component_mul(&s.vel) + s.acc;
        let wdot: Vector3<f64> = d.component_mul(&s.acc) + s.jerk;
        dr = dr.max(w.norm());
        drz = drz.max(w[2]);
        l1 = l1.max(s.acc.norm());
        l2 = l2.max(s.jerk.norm());
        ddr = ddr.max(wdot.norm());
        ddrz = ddrz.max(wdot[2].abs());
        l3 = l3.max(s.jerk.norm());
        l4 = l4.max(s.snap.norm());
    }
    let pad = 0.5 * grid;
    let delta_r = dr + pad * ddr;
    let delta_rz = drz + pad * ddrz;
    let l1 = l1 + pad * l3;
    let l2 = l2 + pad * l4;
    let d_max = d.max();
    let l_bar = (d_max * l1 + l2) / SQRT3;
    let headroom = params.max_thrust - params.gravity;
    let delta = (headroom - delta_r).min(params.gravity - delta_rz - eps) / SQRT3;

    let mut violations = Vec::new();
    if delta_r >= headroom {
        violations.push(format!(
            "delta_r = {delta_r:.6} is not below Tmax - g = {headroom:.6}"
        ));
    }
    if delta_rz >= params.gravity {
        violations.push(format!("delta_rz = {delta_rz:.6} is not below g"));
    }
    if eps >= params.gravity - delta_rz {
        violations.push(format!(
            "epsilon = {eps} is not below g - delta_rz = {:.6}",
            params.gravity - delta_rz
        ));
    }
    if delta <= 0.0 {
        violations.push(format!("input bound Delta = {delta:.6} is not positive"));
    }
    Ok(FeasibilityBounds {
        delta_r,
        delta_rz,
        l1,
        l2,
        l_bar,
        delta,
        feasible: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::reference::{Hover, Orbit, RefSample};

    struct Sprint;
    impl Trajectory for Sprint {
        fn sample(&self, t: f64) -> RefSample {
            let mut s = RefSample::stationary(Vector3::zeros(), 0.0);
            s.pos = Vector3::new(10.0 * t * t, 0.0, 0.0);
            s.vel = Vector3::new(20.0 * t, 0.0, 0.0);
            s.acc = Vector3::new(20.0, 0.0, 0.0);
            s
        }
        fn name(&self) -> &str {
            "sprint"
        }
    }

    #[test]
    fn constant_reference() {
        let p = VehicleParams::default();
        let b = assumption_bounds(&Hover::default(), &p, 0.5, 10.0, 1e-3).unwrap();
        assert_eq!((b.delta_r, b.l1, b.l2, b.l_bar), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(b.delta_rz, 0.0);
        let expect = (25.0f64 - 9.81).min(9.81 - 0.5) / 3f64.sqrt();
        assert!((b.delta - expect).abs() < 1e-15);
        assert!(b.feasible);
    }

    #[test]
    fn orbit_fixture() {
        // sup over one period, sampled at 1e-4
        let p = VehicleParams::default();
        let b = assumption_bounds(&Orbit, &p, 0.5, 0.0, 1e-4).unwrap();
        assert!(b.feasible, "{:?}", b.violations);
        // ||D r' + r''||^2 = 153 + (2 sin t + 4 cos t)^2, horizontal part constant
        let within = |v: f64, exact: f64| v >= exact && v - exact < 3e-3;
        assert!(within(b.delta_r, 173f64.sqrt()), "{b:?}");
        assert!(within(b.delta_rz, 20f64.sqrt()), "{b:?}");
        assert!(within(b.l1, 160f64.sqrt()), "{b:?}");
        assert!(within(b.l2, 592f64.sqrt()), "{b:?}");
        let expect = (25.0 - 9.81 - 173f64.sqrt()) / 3f64.sqrt();
        assert!((b.delta - expect).abs() < 2e-3);
        assert!(b.delta >= 1.0);
        // padding keeps every value conservative
        assert!(b.delta <= expect);
    }

    #[test]
    fn aggressive_reference_is_infeasible() {
        let p = VehicleParams::default();
        let b = assumption_bounds(&Sprint, &p, 0.5, 1.0, 1e-3).unwrap();
        assert!(!b.feasible);
        assert!(b.ensure_feasible().is_err());
    }

    #[test]
    fn epsilon_shrinks_delta() {
        // the vertical branch is active for a hover point
        let p = VehicleParams {
            max_thrust: 40.0,
            ..VehicleParams::default()
        };
        let a = assumption_bounds(&Hover::default(), &p, 0.5, 1.0, 1e-3).unwrap();
        let b = assumption_bounds(&Hover::default(), &p, 1.0, 1.0, 1e-3).unwrap();
        assert!(b.delta < a.delta);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let p = VehicleParams::default();
        assert!(assumption_bounds(&Orbit, &p, 0.0, 1.0, 1e-3).is_err());
        assert!(assumption_bounds(&Orbit, &p, 9.81, 1.0, 1e-3).is_err());
    }
}
