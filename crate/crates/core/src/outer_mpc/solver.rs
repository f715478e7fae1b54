//! Box-constrained minimization of the horizon cost.

use nalgebra::{DMatrix, DVector, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Result};

use super::axis::AxisModel;
use super::setup::{cost_eval, cost_hessian, cost_value, CostEval, MpcSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Projected Newton on the free variables with an arc line search.
    #[default]
    ProjectedNewton,
    /// Accelerated projected gradient with backtracking and restarts.
    ProjectedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub kind: SolverKind,
    /// Projected-gradient stationarity target (infinity norm).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::ProjectedNewton,
            tol: 1e-8,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSolution {
    pub u: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    /// Final `||u - P(u - grad)||_inf`.
    pub residual: f64,
    /// Iteration cap reached, or progress stopped above the rounding level,
    /// before the stationarity test passed.
    pub degraded: bool,
}

const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACK: usize = 60;
const STALL_ULPS: f64 = 1e4;

fn project(u: &mut [f64], bounds: &[f64]) {
    for (ui, &b) in u.iter_mut().zip(bounds) {
        *ui = ui.clamp(-b, b);
    }
}

/// Stationarity measure and whether every coordinate is within tolerance
/// (or within its gradient rounding floor).
fn stationarity(u: &[f64], grad: &DVector<f64>, noise: &DVector<f64>, bounds: &[f64], tol: f64) -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut ok = true;
    for i in 0..u.len() {
        let r = (u[i] - (u[i] - grad[i]).clamp(-bounds[i], bounds[i])).abs();
        worst = worst.max(r);
        if r > tol.max(noise[i]) {
            ok = false;
        }
    }
    (worst, ok)
}

/// Minimizes the horizon cost from `x0` over `|u_i| <= Delta_{k+i}`.
///
/// `warm` is projected into the box; `None` starts from zero.
pub fn solve_axis_mpc(
    x0: &Vector4<f64>,
    k: usize,
    model: &AxisModel,
    setup: &MpcSetup,
    warm: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<AxisSolution> {
    ensure_finite(x0.as_slice(), "mpc state")?;
    let n = setup.horizon;
    let bounds: Vec<f64> = (0..n).map(|i| setup.bound(k, i)).collect::<Result<_>>()?;
    if x0[2].abs() > bounds[0] || x0[3].abs() > bounds[0] {
        log::warn!(
            "filter states ({:.4}, {:.4}) exceed the input bound {:.4} at step {k}",
            x0[2],
            x0[3],
            bounds[0]
        );
    }
    let mut u = match warm {
        Some(w) if w.len() == n && w.iter().all(|v| v.is_finite()) => w.to_vec(),
        _ => vec![0.0; n],
    };
    project(&mut u, &bounds);
    match opts.kind {
        SolverKind::ProjectedNewton => projected_newton(x0, u, &bounds, model, setup, opts),
        SolverKind::ProjectedGradient => projected_gradient(x0, u, &bounds, model, setup, opts),
    }
}

fn projected_newton(
    x0: &Vector4<f64>,
    mut u: Vec<f64>,
    bounds: &[f64],
    model: &AxisModel,
    setup: &MpcSetup,
    opts: &SolverOptions,
) -> Result<AxisSolution> {
    let n = u.len();
    let mut eval = cost_eval(x0, &u, model, setup)?;
    let mut iterations = 0;
    loop {
        let (residual, converged) = stationarity(&u, &eval.grad, &eval.grad_noise, bounds, opts.tol);
        if converged || iterations >= opts.max_iter {
            return Ok(AxisSolution {
                cost: eval.value,
                u,
                iterations,
                residual,
                degraded: !converged,
            });
        }
        iterations += 1;

        // coordinates held at a bound by the gradient
        let margin = residual.min(1e-3);
        let active: Vec<bool> = (0..n)
            .map(|i| {
                (u[i] <= -bounds[i] + margin && eval.grad[i] > 0.0)
                    || (u[i] >= bounds[i] - margin && eval.grad[i] < 0.0)
            })
            .collect();
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let hess = cost_hessian(x0, &u, model, setup);
        let mut dir = DVector::<f64>::zeros(n);
        for i in 0..n {
            if active[i] {
                dir[i] = -eval.grad[i] / hess[(i, i)];
            }
        }
        if !free.is_empty() {
            let hf = DMatrix::from_fn(free.len(), free.len(), |a, b| hess[(free[a], free[b])]);
            let gf = DVector::from_fn(free.len(), |a, _| -eval.grad[free[a]]);
            let step = match hf.cholesky() {
                Some(c) => c.solve(&gf),
                None => DVector::from_fn(free.len(), |a, _| gf[a] / hess[(free[a], free[a])]),
            };
            for (a, &i) in free.iter().enumerate() {
                dir[i] = step[a];
            }
        }

        let predicted = -free.iter().map(|&i| eval.grad[i] * dir[i]).sum::<f64>();
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let mut trial: Vec<f64> = u.iter().zip(dir.iter()).map(|(a, d)| a + s * d).collect();
            project(&mut trial, bounds);
            let decrease: f64 = (0..n).map(|i| eval.grad[i] * (trial[i] - u[i])).sum();
            let value = cost_value(x0, &trial, model, setup);
            if value <= eval.value + ARMIJO * decrease {
                accepted = Some(trial);
                break;
            }
            s *= SHRINK;
        }
        match accepted {
            Some(trial) => {
                let next = cost_eval(x0, &trial, model, setup)?;
                if next.value < eval.value {
                    u = trial;
                    eval = next;
                    continue;
                }
            }
            None => {}
        }
        return Ok(stalled(u, &eval, iterations, residual, predicted));
    }
}

/// Result when no step decreases the cost any further. The iterate counts as
/// converged when the decrease predicted by the last step is at the rounding
/// level of the cost.
fn stalled(u: Vec<f64>, eval: &CostEval, iterations: usize, residual: f64, predicted: f64) -> AxisSolution {
    let floor = STALL_ULPS * f64::EPSILON * eval.value.abs().max(1.0);
    AxisSolution {
        cost: eval.value,
        u,
        iterations,
        residual,
        degraded: predicted > floor,
    }
}

fn projected_gradient(
    x0: &Vector4<f64>,
    mut u: Vec<f64>,
    bounds: &[f64],
    model: &AxisModel,
    setup: &MpcSetup,
    opts: &SolverOptions,
) -> Result<AxisSolution> {
    let n = u.len();
    let mut eval = cost_eval(x0, &u, model, setup)?;
    let mut prev = u.clone();
    let mut momentum = 0.0f64;
    let mut t_k = 1.0f64;
    // initial step from the Hessian scale
    let mut step = 1.0 / cost_hessian(x0, &u, model, setup).diagonal().amax();
    let mut iterations = 0;
    loop {
        let (residual, converged) = stationarity(&u, &eval.grad, &eval.grad_noise, bounds, opts.tol);
        if converged || iterations >= opts.max_iter {
            return Ok(AxisSolution {
                cost: eval.value,
                u,
                iterations,
                residual,
                degraded: !converged,
            });
        }
        iterations += 1;

        let mut y: Vec<f64> = (0..n).map(|i| u[i] + momentum * (u[i] - prev[i])).collect();
        project(&mut y, bounds);
        let ey = cost_eval(x0, &y, model, setup)?;
        let mut accepted = None;
        let mut s = step * 2.0;
        let mut predicted = 0.0;
        for _ in 0..MAX_BACKTRACK {
            let mut trial: Vec<f64> = (0..n).map(|i| y[i] - s * ey.grad[i]).collect();
            project(&mut trial, bounds);
            let decrease: f64 = (0..n).map(|i| ey.grad[i] * (trial[i] - y[i])).sum();
            let value = cost_value(x0, &trial, model, setup);
            predicted = -decrease;
            if value <= ey.value + ARMIJO * decrease {
                accepted = Some((trial, value));
                break;
            }
            s *= SHRINK;
        }
        step = s;
        let Some((trial, value)) = accepted else {
            return Ok(stalled(u, &eval, iterations, residual, predicted));
        };
        if momentum == 0.0 && value >= eval.value {
            return Ok(stalled(u, &eval, iterations, residual, predicted));
        }
        if value > eval.value {
            // restart: drop the momentum and retry from the current iterate
            momentum = 0.0;
            t_k = 1.0;
            prev.clone_from(&u);
            continue;
        }
        prev = std::mem::replace(&mut u, trial);
        eval = cost_eval(x0, &u, model, setup)?;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
        momentum = (t_k - 1.0) / t_next;
        t_k = t_next;
    }
}

/// Shift-by-one warm start with the last entry repeated.
pub fn shift_warm_start(prev: &[f64]) -> Vec<f64> {
    if prev.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<f64> = prev[1..].to_vec();
    out.push(*prev.last().unwrap_or(&0.0));
    out
}
