use nalgebra::{Matrix3, SMatrix, SVector};

use crate::error::{ensure_finite, Error, Result};

pub fn spectral_radius(a: &Matrix3<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Solves `A1^T W A1 - W = -Q` for `W`.
///
/// Uses the vectorized form `(I - A1^T (x) A1^T) vec(W) = vec(Q)`. The result is
/// symmetrized; the residual is checked against `1e-10` (relative to `|Q|`).
pub fn solve_dlyap(a1: &Matrix3<f64>, q: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    ensure_finite(a1.as_slice(), "dlyap A1")?;
    ensure_finite(q.as_slice(), "dlyap Q")?;
    let radius = spectral_radius(a1);
    if radius >= 1.0 {
        return Err(Error::NotSchurStable { radius });
    }

    let at = a1.transpose();
    let mut lhs = SMatrix::<f64, 9, 9>::identity();
    // vec is column-major: vec(X)[3 j + i] = X[(i, j)]; kron(B^T, A) vec(X) = vec(A X B)
    for bj in 0..3 {
        for bi in 0..3 {
            let b = a1[(bi, bj)];
            for ai in 0..3 {
                for aj in 0..3 {
                    lhs[(3 * bj + ai, 3 * bi + aj)] -= b * at[(ai, aj)];
                }
            }
        }
    }
    let rhs = SVector::<f64, 9>::from_column_slice(q.as_slice());
    let sol = lhs.lu().solve(&rhs).ok_or(Error::Singular("discrete Lyapunov"))?;
    let w = Matrix3::from_column_slice(sol.as_slice());
    let w = (w + w.transpose()) * 0.5;

    let residual = dlyap_residual(a1, q, &w);
    if residual > 1e-10 * q.amax().max(1.0) {
        return Err(Error::Inconsistent(format!(
            "discrete Lyapunov residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(w)
}

/// Infinity norm of `A1^T W A1 - W + Q`.
pub fn dlyap_residual(a1: &Matrix3<f64>, q: &Matrix3<f64>, w: &Matrix3<f64>) -> f64 {
    let r = a1.transpose() * w * a1 - w + q;
    r.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
