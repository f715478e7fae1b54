use nalgebra::SMatrix;

use crate::error::{ensure_finite, Error, Result};

const MAX_SWEEPS: usize = 50;
const OFF_TOL: f64 = 1e-14;
const SYMMETRY_TOL: f64 = 1e-10;

fn check_symmetric<const N: usize>(s: &SMatrix<f64, N, N>) -> Result<()> {
    ensure_finite(s.as_slice(), "symmetric eigen input")?;
    let scale = s.amax().max(1.0);
    let deviation = (s - s.transpose()).amax();
    if deviation > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric { deviation });
    }
    Ok(())
}

/// All eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// in ascending order.
pub fn sym_eigenvalues<const N: usize>(s: &SMatrix<f64, N, N>) -> Result<[f64; N]> {
    check_symmetric(s)?;
    let mut a = (s + s.transpose()) * 0.5;
    let scale = a.amax().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= OFF_TOL * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..N {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
            }
        }
    }

    let mut out = [0.0; N];
    for (i, v) in out.iter_mut().enumerate() {
        *v = a[(i, i)];
    }
    out.sort_by(|x, y| x.total_cmp(y));
    Ok(out)
}

/// `(lambda_min, lambda_max)` of a symmetric matrix.
pub fn sym_eig_extrema<const N: usize>(s: &SMatrix<f64, N, N>) -> Result<(f64, f64)> {
    let ev = sym_eigenvalues(s)?;
    Ok((ev[0], ev[N - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Matrix4};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Real roots of the characteristic cubic of a symmetric 3x3 via the
    /// trigonometric closed form.
    fn cubic_roots(a: &Matrix3<f64>) -> [f64; 3] {
        let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        let q = a.trace() / 3.0;
        let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = (a - Matrix3::identity() * q) / p;
        let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        let e2 = 3.0 * q - e1 - e3;
        let mut out = [e1, e2, e3];
        out.sort_by(|x, y| x.total_cmp(y));
        out
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(sym_eig_extrema(&Matrix3::<f64>::identity()).unwrap(), (1.0, 1.0));
        let d = Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, 4.0, 6.0));
        assert_eq!(sym_eig_extrema(&d).unwrap(), (2.0, 6.0));
    }

    #[test]
    fn matches_cubic_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut m = Matrix3::zeros();
            for i in 0..3 {
                for j in i..3 {
                    let v: f64 = rng.random_range(-5.0..5.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            let ev = sym_eigenvalues(&m).unwrap();
            let oracle = cubic_roots(&m);
            for k in 0..3 {
                assert!((ev[k] - oracle[k]).abs() < 1e-9, "{ev:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn four_by_four_trace_and_det() {
        let m = Matrix4::new(
            4.0, 1.0, -2.0, 0.5, 1.0, 3.0, 0.0, 1.0, -2.0, 0.0, 5.0, -1.0, 0.5, 1.0, -1.0, 2.0,
        );
        let ev = sym_eigenvalues(&m).unwrap();
        let sum: f64 = ev.iter().sum();
        let prod: f64 = ev.iter().product();
        assert!((sum - m.trace()).abs() < 1e-12);
        assert!((prod - m.determinant()).abs() < 1e-10);
    }

    #[test]
    fn rejects_asymmetric() {
        let mut m = Matrix3::<f64>::identity();
        m[(0, 1)] = 1e-3;
        assert!(matches!(sym_eig_extrema(&m), Err(Error::Asymmetric { .. })));
    }
}
