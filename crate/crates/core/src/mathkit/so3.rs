//! SO(3) helpers: hat/vee maps, Rodrigues exponential, the antisymmetric-part
//! map used by the attitude error, and the normalized distance to identity.

use nalgebra::{Matrix3, Vector3};

use crate::error::{ensure_finite, Error, Result};

const ROTATION_TOL: f64 = 1e-10;
const SKEW_TOL: f64 = 1e-10;

/// A 3x3 rotation matrix, `R^T R = I` and `det R = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates orthonormality and orientation within `1e-10`.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        Self::with_tolerance(m, ROTATION_TOL)
    }

    pub fn with_tolerance(m: Matrix3<f64>, tol: f64) -> Result<Self> {
        ensure_finite(m.as_slice(), "rotation")?;
        let orthogonality = orthogonality_error(&m);
        let det = m.determinant();
        if orthogonality > tol || (det - 1.0).abs() > tol {
            return Err(Error::NotRotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix the caller has already established is a rotation
    /// (e.g. one built column by column from an orthonormal frame).
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    /// Nearest rotation in the Frobenius sense (polar factor of `m`).
    pub fn project(m: &Matrix3<f64>) -> Result<Self> {
        ensure_finite(m.as_slice(), "rotation projection")?;
        let svd = m.svd(true, true);
        let (u, vt) = match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return Err(Error::Singular("polar projection")),
        };
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut fix = Matrix3::identity();
            fix[(2, 2)] = -1.0;
            r = u * fix * vt;
        }
        Ok(Self(r))
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument("rotation axis must be nonzero".into()));
        }
        Ok(expm_so3(&(axis * (angle / n))))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix3<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Self {
        Self(self.0 * other.0)
    }
}

impl TryFrom<Matrix3<f64>> for Rotation {
    type Error = Error;
    fn try_from(m: Matrix3<f64>) -> Result<Self> {
        Rotation::new(m)
    }
}

impl From<Rotation> for Matrix3<f64> {
    fn from(r: Rotation) -> Self {
        r.0
    }
}

/// Max-entry deviation of `R^T R` from the identity.
pub fn orthogonality_error(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).amax()
}

#[inline]
pub fn skew(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -x[2], x[1], x[2], 0.0, -x[0], -x[1], x[0], 0.0)
}

/// Inverse of [`skew`] without validation.
#[inline]
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

pub fn vee_checked(m: &Matrix3<f64>) -> Result<Vector3<f64>> {
    ensure_finite(m.as_slice(), "vee argument")?;
    let deviation = (m + m.transpose()).amax();
    if deviation > SKEW_TOL * m.amax().max(1.0) {
        return Err(Error::NotSkew { deviation });
    }
    Ok(vee(m))
}

/// `1/2 vee(B - B^T)`.
#[inline]
pub fn psi_map(b: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (b[(2, 1)] - b[(1, 2)]),
        0.5 * (b[(0, 2)] - b[(2, 0)]),
        0.5 * (b[(1, 0)] - b[(0, 1)]),
    )
}

/// Rodrigues formula for `exp(x^)`.
pub fn expm_so3(x: &Vector3<f64>) -> Rotation {
    let theta = x.norm();
    let k = skew(x);
    let (a, b) = if theta < 1e-8 {
        (1.0 - theta * theta / 6.0, 0.5 - theta * theta / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Rotation(Matrix3::identity() + k * a + k * k * b)
}

/// Normalized distance to identity, `1/2 sqrt(tr(I - R))`, in `[0, 1]`.
pub fn dist(r: &Rotation) -> f64 {
    0.5 * (3.0 - r.0.trace()).clamp(0.0, 4.0).sqrt()
}
