//! Terminal-cost synthesis and the horizon cost with its derivatives.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, RowVector4, Vector4};

use crate::error::{ensure_finite, Error, Result};
use crate::mathkit::{sat_eval, solve_dlyap, sym_eig_extrema};

use super::axis::AxisModel;

#[derive(Debug, Clone)]
pub struct MpcSetup {
    pub horizon: usize,
    pub q: Matrix3<f64>,
    pub w: Matrix3<f64>,
    /// Terminal metric in the original coordinates.
    pub m: Matrix4<f64>,
    pub theta: f64,
    /// Lower bound on `theta` that `theta_frac` multiplies.
    pub theta_min: f64,
    pub gamma_big: f64,
    pub eps_par: f64,
    /// `sqrt(theta * lambda_max(M))`.
    pub c3: f64,
    /// Per-interval input bounds, shared between axes.
    pub schedule: Arc<Vec<f64>>,
    /// Global lower bound on the schedule.
    pub delta: f64,
    /// `P1^T P1`.
    pub s: Matrix4<f64>,
    /// Constant part of the cost Hessian in `u`.
    pub(crate) h0: DMatrix<f64>,
    /// Sensitivities of the marginal coordinate of `x_i` to the inputs, `i = 1..N-1`.
    pub(crate) q_rows: Vec<DVector<f64>>,
}

impl MpcSetup {
    pub fn new(
        model: &AxisModel,
        q: &Matrix3<f64>,
        theta_frac: f64,
        horizon: usize,
        schedule: Arc<Vec<f64>>,
        delta: f64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if !(theta_frac >= 1.0 && theta_frac.is_finite()) {
            return Err(Error::InvalidArgument(format!("theta_frac must be >= 1, got {theta_frac}")));
        }
        ensure_finite(&[delta], "delta")?;
        if schedule.iter().any(|&d| !(d >= delta && d > 0.0)) {
            return Err(Error::InvalidArgument(
                "schedule entries must be positive and not below delta".into(),
            ));
        }
        let (q_min, _) = sym_eig_extrema(q)?;
        if q_min <= 0.0 {
            return Err(Error::InvalidArgument("Q must be positive definite".into()));
        }
        let a1 = &model.a_hat1;
        let b1 = &model.b_hat1;
        let b = model.b_hat2;
        let w = solve_dlyap(a1, q)?;
        let aww = a1.transpose() * w * w.transpose() * a1;
        let (_, aww_max) = sym_eig_extrema(&((aww + aww.transpose()) * 0.5))?;
        let eps_par = q_min / (2.0 * aww_max);
        let gamma_big = b * b + (b1.transpose() * w * b1)[0] + b1.norm_squared() / eps_par + b.abs();
        let theta_min = 1.0 / (0.5 * q_min).min(b.abs()).min(b * b / gamma_big);
        let theta = theta_frac * theta_min;

        let mut blk = Matrix4::zeros();
        blk.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
        blk[(3, 3)] = 1.0;
        let m = model.p_inv.transpose() * blk * model.p_inv;
        let m = (m + m.transpose()) * 0.5;
        let (m_min, m_max) = sym_eig_extrema(&m)?;
        if m_min <= 0.0 {
            return Err(Error::Inconsistent("terminal metric is not positive definite".into()));
        }
        let s = model.p1.transpose() * model.p1;

        // x_i = A^i x0 + G_i u, column j of G_i is A^(i-1-j) B for j < i
        let n = horizon;
        let mut g = vec![DMatrix::<f64>::zeros(4, n); n + 1];
        for i in 1..=n {
            let (prev, cur) = g.split_at_mut(i);
            let prev = &prev[i - 1];
            let cur = &mut cur[0];
            for j in 0..i - 1 {
                let col: Vector4<f64> = model.a_bar * prev.fixed_view::<4, 1>(0, j);
                cur.fixed_view_mut::<4, 1>(0, j).copy_from(&col);
            }
            cur.fixed_view_mut::<4, 1>(0, i - 1).copy_from(&model.b_bar);
        }
        let s_dyn = DMatrix::from_column_slice(4, 4, s.as_slice());
        let m_dyn = DMatrix::from_column_slice(4, 4, m.as_slice());
        let mut h0 = DMatrix::<f64>::identity(n, n) * 2.0;
        for gi in g.iter().take(n).skip(1) {
            h0 += gi.transpose() * &s_dyn * gi * 2.0;
        }
        h0 += g[n].transpose() * &m_dyn * &g[n] * (2.0 * theta);
        let h0 = (&h0 + h0.transpose()) * 0.5;
        let p2 = DMatrix::from_row_slice(1, 4, model.p2.as_slice());
        let q_rows = (1..n).map(|i| (&p2 * &g[i]).transpose().column(0).into_owned()).collect();

        Ok(Self {
            horizon,
            q: *q,
            w,
            m,
            theta,
            theta_min,
            gamma_big,
            eps_par,
            c3: (theta * m_max).sqrt(),
            schedule,
            delta,
            s,
            h0,
            q_rows,
        })
    }

    /// Input bound for the `i`-th prediction step of the problem posed at `k`.
    pub fn bound(&self, k: usize, i: usize) -> Result<f64> {
        self.schedule.get(k + i).copied().ok_or_else(|| {
            Error::InvalidArgument(format!(
                "constraint schedule has {} entries, index {} requested",
                self.schedule.len(),
                k + i
            ))
        })
    }

    pub fn stage_cost(&self, p2: &RowVector4<f64>, x: &Vector4<f64>, u: f64) -> f64 {
        (x.transpose() * self.s * x)[0] + sat_eval((p2 * x)[0]).psi + u * u
    }

    pub fn terminal_cost(&self, x: &Vector4<f64>) -> f64 {
        self.theta * (x.transpose() * self.m * x)[0]
    }
}

/// Value of the horizon cost and its gradient in `u`.
#[derive(Debug, Clone)]
pub struct CostEval {
    pub value: f64,
    pub grad: DVector<f64>,
    /// Magnitude bound on the rounding error of each gradient entry.
    pub grad_noise: DVector<f64>,
}

pub fn cost_value(x0: &Vector4<f64>, u: &[f64], model: &AxisModel, setup: &MpcSetup) -> f64 {
    let mut x = *x0;
    let mut j = 0.0;
    for &ui in u {
        j += setup.stage_cost(&model.p2, &x, ui);
        x = model.step(&x, ui);
    }
    j + setup.terminal_cost(&x)
}

/// Rolls the model forward and runs the adjoint recursion backward.
pub fn cost_eval(x0: &Vector4<f64>, u: &[f64], model: &AxisModel, setup: &MpcSetup) -> Result<CostEval> {
    ensure_finite(x0.as_slice(), "cost state")?;
    ensure_finite(u, "cost inputs")?;
    let n = u.len();
    if n != setup.horizon {
        return Err(Error::InvalidArgument(format!(
            "input sequence has {n} entries, horizon is {}",
            setup.horizon
        )));
    }
    let mut xs = Vec::with_capacity(n + 1);
    xs.push(*x0);
    let mut value = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        let x = xs[i];
        value += setup.stage_cost(&model.p2, &x, ui);
        xs.push(model.step(&x, ui));
    }
    value += setup.terminal_cost(&xs[n]);

    let abs_a = model.a_bar.abs();
    let abs_b = model.b_bar.abs();
    let abs_s = setup.s.abs();
    let abs_p2 = model.p2.abs();
    let mut lam = setup.m * xs[n] * (2.0 * setup.theta);
    let mut lam_abs = setup.m.abs() * xs[n].abs() * (2.0 * setup.theta);
    let mut grad = DVector::zeros(n);
    let mut noise = DVector::zeros(n);
    for i in (0..n).rev() {
        grad[i] = 2.0 * u[i] + model.b_bar.dot(&lam);
        noise[i] = 2.0 * u[i].abs() + abs_b.dot(&lam_abs);
        let x = &xs[i];
        let sig = sat_eval((model.p2 * x)[0]).sigma;
        lam = setup.s * x * 2.0 + model.p2.transpose() * sig + model.a_bar.transpose() * lam;
        lam_abs = abs_s * x.abs() * 2.0 + abs_p2.transpose() * sig.abs() + abs_a.transpose() * lam_abs;
    }
    // accumulated rounding of an O(N)-term recursion
    let noise = noise * (8.0 * (n as f64 + 4.0) * f64::EPSILON);
    Ok(CostEval {
        value,
        grad,
        grad_noise: noise,
    })
}

/// Hessian of the horizon cost in `u`.
pub fn cost_hessian(x0: &Vector4<f64>, u: &[f64], model: &AxisModel, setup: &MpcSetup) -> DMatrix<f64> {
    let mut h = setup.h0.clone();
    let mut x = *x0;
    for i in 1..setup.horizon {
        x = model.step(&x, u[i - 1]);
        let ds = sat_eval((model.p2 * x)[0]).dsigma;
        let q = &setup.q_rows[i - 1];
        h.ger(ds, q, q, 1.0);
    }
    h
}
