//! Dense matrix exponential for the small matrices of the axis model, and the
//! exact zero-order-hold discretization built on it.

use nalgebra::{Matrix4, SMatrix, Vector4};

use crate::error::{ensure_finite, Error, Result};

const TERM_TOL: f64 = 1e-16;
const MAX_TERMS: usize = 64;

fn inf_norm<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(A)` by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled to infinity-norm at most 1/2, the series is summed
/// until the next term is below `1e-16` relative to the partial sum, and the
/// result is squared back.
pub fn expm<const N: usize>(a: &SMatrix<f64, N, N>) -> Result<SMatrix<f64, N, N>> {
    ensure_finite(a.as_slice(), "expm argument")?;
    let norm = inf_norm(a);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a / 2f64.powi(squarings as i32);

    let mut sum = SMatrix::<f64, N, N>::identity();
    let mut term = SMatrix::<f64, N, N>::identity();
    for k in 1..=MAX_TERMS {
        term = term * scaled / k as f64;
        sum += term;
        if inf_norm(&term) < TERM_TOL * inf_norm(&sum).max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    ensure_finite(sum.as_slice(), "expm result")?;
    Ok(sum)
}

/// Exact discretization of `x' = A0 x + B0 u` with `u` held over `[0, h)`.
///
/// Exponentiates the augmented generator `[A0 B0; 0 0]` and reads off
/// `Abar = exp(A0 h)` and `Bbar = int_0^h exp(A0 s) B0 ds`.
pub fn expm_zoh(a0: &Matrix4<f64>, b0: &Vector4<f64>, h: f64) -> Result<(Matrix4<f64>, Vector4<f64>)> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("sampling period must be positive, got {h}")));
    }
    ensure_finite(a0.as_slice(), "A0")?;
    ensure_finite(b0.as_slice(), "B0")?;

    let mut aug = SMatrix::<f64, 5, 5>::zeros();
    aug.fixed_view_mut::<4, 4>(0, 0).copy_from(&(a0 * h));
    aug.fixed_view_mut::<4, 1>(0, 4).copy_from(&(b0 * h));
    let e = expm(&aug)?;
    let a_bar: Matrix4<f64> = e.fixed_view::<4, 4>(0, 0).into_owned();
    let b_bar: Vector4<f64> = e.fixed_view::<4, 1>(0, 4).into_owned();
    Ok((a_bar, b_bar))
}
