//! Per-axis extended translational chain `(p, v, mu_d, eta)` and its exact
//! discretization in the Jordan basis.

use nalgebra::{Matrix3, Matrix3x4, Matrix4, RowVector4, Vector3, Vector4};

use crate::error::{ensure_finite, Error, Result};
use crate::mathkit::{expm_zoh, spectral_radius};

#[derive(Debug, Clone, PartialEq)]
pub struct AxisModel {
    pub d: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub h: f64,
    pub a0: Matrix4<f64>,
    pub b0: Vector4<f64>,
    /// `exp(A0 h)` by the augmented exponential.
    pub a_bar: Matrix4<f64>,
    pub b_bar: Vector4<f64>,
    pub p: Matrix4<f64>,
    pub p_inv: Matrix4<f64>,
    /// `exp(J0 h)` in closed form.
    pub a_hat: Matrix4<f64>,
    pub b_hat: Vector4<f64>,
    pub a_hat1: Matrix3<f64>,
    pub b_hat1: Vector3<f64>,
    /// Input gain of the marginal mode.
    pub b_hat2: f64,
    /// First three rows of `P^-1`.
    pub p1: Matrix3x4<f64>,
    /// Last row of `P^-1`.
    pub p2: RowVector4<f64>,
}

pub fn continuous_matrices(d: f64, gamma: f64, alpha: f64) -> (Matrix4<f64>, Vector4<f64>) {
    let ig = 1.0 / gamma;
    let a0 = Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        0.0, -d, 1.0, 0.0, //
        0.0, 0.0, -ig, alpha * ig, //
        0.0, 0.0, 0.0, -ig,
    );
    (a0, Vector4::new(0.0, 0.0, 0.0, alpha * ig))
}

pub fn jordan_matrix(d: f64, gamma: f64) -> Matrix4<f64> {
    let ig = 1.0 / gamma;
    Matrix4::new(
        -d, 0.0, 0.0, 0.0, //
        0.0, -ig, 1.0, 0.0, //
        0.0, 0.0, -ig, 0.0, //
        0.0, 0.0, 0.0, 0.0,
    )
}

/// Closed-form similarity `P` with `P^-1 A0 P = J0`, and its inverse.
pub fn jordan_basis(d: f64, gamma: f64, alpha: f64) -> (Matrix4<f64>, Matrix4<f64>) {
    let g = gamma;
    let k = g * d - 1.0;
    let p = Matrix4::new(
        1.0, -g * g, -g.powi(3) + g.powi(3) / k, 1.0, //
        -d, g, -g * g / k, 0.0, //
        0.0, k, 0.0, 0.0, //
        0.0, 0.0, g * k / alpha, 0.0,
    );
    let p_inv = Matrix4::new(
        0.0, -1.0 / d, g / (d * k), -alpha * g / (d * k * k), //
        0.0, 0.0, 1.0 / k, 0.0, //
        0.0, 0.0, 0.0, alpha / (g * k), //
        1.0, 1.0 / d, g / d, alpha * g / d,
    );
    (p, p_inv)
}

/// `exp(J0 h)` and `int_0^h exp(J0 s) ds P^-1 B0`.
pub fn jordan_discretization(d: f64, gamma: f64, alpha: f64, h: f64) -> (Matrix4<f64>, Vector4<f64>) {
    let e = (-h / gamma).exp();
    let ed = (-d * h).exp();
    let a_hat = Matrix4::new(
        ed, 0.0, 0.0, 0.0, //
        0.0, e, h * e, 0.0, //
        0.0, 0.0, e, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    );
    let k = gamma * d - 1.0;
    let a2 = alpha * alpha;
    let c1 = -a2 / (d * k * k);
    let c3 = a2 / (gamma * gamma * k);
    let c4 = a2 / d;
    let b_hat = Vector4::new(
        c1 * (-(-d * h).exp_m1()) / d,
        c3 * gamma * gamma * (1.0 - e * (1.0 + h / gamma)),
        c3 * gamma * (-(-h / gamma).exp_m1()),
        c4 * h,
    );
    (a_hat, b_hat)
}

impl AxisModel {
    pub fn new(d: f64, gamma: f64, alpha: f64, h: f64) -> Result<Self> {
        ensure_finite(&[d, gamma, alpha, h], "axis model parameters")?;
        if d <= 0.0 || gamma <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "axis model needs d, gamma, h > 0 (got d = {d}, gamma = {gamma}, h = {h})"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if (gamma * d - 1.0).abs() < 1e-12 {
            return Err(Error::Singular("Jordan basis (gamma * d = 1)"));
        }
        let (a0, b0) = continuous_matrices(d, gamma, alpha);
        let (a_bar, b_bar) = expm_zoh(&a0, &b0, h)?;
        let (p, p_inv) = jordan_basis(d, gamma, alpha);
        let (a_hat, b_hat) = jordan_discretization(d, gamma, alpha, h);

        let model = Self {
            d,
            gamma,
            alpha,
            h,
            a0,
            b0,
            a_bar,
            b_bar,
            p,
            p_inv,
            a_hat,
            b_hat,
            a_hat1: a_hat.fixed_view::<3, 3>(0, 0).into_owned(),
            b_hat1: b_hat.fixed_rows::<3>(0).into_owned(),
            b_hat2: b_hat[3],
            p1: p_inv.fixed_rows::<3>(0).into_owned(),
            p2: p_inv.row(3).into_owned(),
        };
        model.check_consistency()?;
        Ok(model)
    }

    /// Cross-checks the numerical discretization against the Jordan closed form.
    fn check_consistency(&self) -> Result<()> {
        let tol = 1e-8;
        let a_err = (self.p * self.a_hat * self.p_inv - self.a_bar).amax();
        let b_err = (self.p * self.b_hat - self.b_bar).amax();
        let scale = self.a_bar.amax().max(self.b_bar.amax()).max(1.0);
        if a_err > tol * scale || b_err > tol * scale {
            return Err(Error::Inconsistent(format!(
                "Jordan closed form disagrees with the ZOH discretization (A: {a_err:.3e}, B: {b_err:.3e})"
            )));
        }
        let radius = spectral_radius(&self.a_hat1);
        if radius >= 1.0 {
            return Err(Error::NotSchurStable { radius });
        }
        Ok(())
    }

    pub fn step(&self, x: &Vector4<f64>, u: f64) -> Vector4<f64> {
        self.a_bar * x + self.b_bar * u
    }

    /// Local coordinates split into the stable block and the marginal mode.
    pub fn split(&self, x: &Vector4<f64>) -> (Vector3<f64>, f64) {
        (self.p1 * x, (self.p2 * x)[0])
    }
}
