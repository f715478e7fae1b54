//! Smooth saturation family used in the stage cost and the local terminal law.
//!
//! The family is fixed to `sigma(x) = tanh(x)` with antiderivative
//! `psi(x) = ln cosh(x)`. The admissible-input bound is carried along for the
//! feasibility check of the local law, it does not rescale `sigma`.

use crate::error::{Error, Result};

/// Values of the saturation family at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatEval {
    pub sigma: f64,
    pub psi: f64,
    pub dsigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatFamily {
    bound: f64,
}

impl SatFamily {
    pub fn new(bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "saturation bound must be positive, got {bound}"
            )));
        }
        Ok(Self { bound })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// The local law `-sigma(.)` has magnitude below 1, so it only fits inside
    /// the input box when the bound is at least 1.
    pub fn ensure_local_law_feasible(&self) -> Result<()> {
        if self.bound >= 1.0 {
            Ok(())
        } else {
            Err(Error::Infeasible(format!(
                "input bound {:.6} < 1: the tanh local law cannot be kept inside the box",
                self.bound
            )))
        }
    }

    pub fn eval(&self, x: f64) -> SatEval {
        sat_eval(x)
    }
}

#[inline]
pub fn sigma(x: f64) -> f64 {
    x.tanh()
}

#[inline]
pub fn dsigma(x: f64) -> f64 {
    let t = x.tanh();
    1.0 - t * t
}

/// `ln cosh(x)` without overflow for large `|x|`.
#[inline]
pub fn psi(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

pub fn sat_eval(x: f64) -> SatEval {
    SatEval {
        sigma: sigma(x),
        psi: psi(x),
        dsigma: dsigma(x),
    }
}
