//! Receding-horizon feedback for the three decoupled axes.

use std::sync::Arc;
use std::thread;

use nalgebra::{Matrix3, SVector, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::mathkit::sat::sigma;

use super::axis::AxisModel;
use super::extension::FilterGains;
use super::setup::MpcSetup;
use super::solver::{shift_warm_start, solve_axis_mpc, AxisSolution, SolverOptions};

/// Stacked outer state `(p_err, v_err, mu_d, eta)`, three entries each.
pub type OuterState = SVector<f64, 12>;

/// Per-axis view `(p_err_i, v_err_i, mu_d_i, eta_i)` of the stacked state.
pub fn axis_state(x: &OuterState, i: usize) -> Vector4<f64> {
    Vector4::new(x[i], x[3 + i], x[6 + i], x[9 + i])
}

pub fn stack_state(p: &Vector3<f64>, v: &Vector3<f64>, mu: &Vector3<f64>, eta: &Vector3<f64>) -> OuterState {
    let mut x = OuterState::zeros();
    for i in 0..3 {
        x[i] = p[i];
        x[3 + i] = v[i];
        x[6 + i] = mu[i];
        x[9 + i] = eta[i];
    }
    x
}

#[derive(Debug, Clone)]
pub struct AxisProblem {
    pub model: AxisModel,
    pub setup: MpcSetup,
}

/// Saturated feedback on the marginal mode, `-tanh(b P2 x / Gamma)`.
pub fn local_kappa(x: &Vector4<f64>, model: &AxisModel, setup: &MpcSetup) -> f64 {
    -sigma(model.b_hat2 * (model.p2 * x)[0] / setup.gamma_big)
}

/// Inputs and cost of applying [`local_kappa`] in closed loop over the horizon.
pub fn kappa_rollout(x0: &Vector4<f64>, model: &AxisModel, setup: &MpcSetup) -> (Vec<f64>, f64) {
    let mut x = *x0;
    let mut u = Vec::with_capacity(setup.horizon);
    let mut cost = 0.0;
    for _ in 0..setup.horizon {
        let k = local_kappa(&x, model, setup);
        cost += setup.stage_cost(&model.p2, &x, k);
        x = model.step(&x, k);
        u.push(k);
    }
    (u, cost + setup.terminal_cost(&x))
}

/// Solves the three axis problems posed at step `k`, concurrently.
pub fn outer_step(
    x_out: &OuterState,
    k: usize,
    axes: &[AxisProblem; 3],
    warm: [Option<&[f64]>; 3],
    opts: &SolverOptions,
) -> Result<[AxisSolution; 3]> {
    let results: Vec<Result<AxisSolution>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..3)
            .map(|i| {
                let axis = &axes[i];
                let w = warm[i];
                scope.spawn(move || {
                    solve_axis_mpc(&axis_state(x_out, i), k, &axis.model, &axis.setup, w, opts)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Inconsistent("axis solver thread panicked".into())))
            })
            .collect()
    });
    let mut it = results.into_iter();
    let (a, b, c) = match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), Some(c)) => (a?, b?, c?),
        _ => return Err(Error::Inconsistent("missing axis solution".into())),
    };
    Ok([a, b, c])
}

/// Synthesis inputs shared by the three axes.
#[derive(Debug, Clone)]
pub struct OuterDesign {
    pub drag: Vector3<f64>,
    pub gains: FilterGains,
    pub h: f64,
    pub q: Matrix3<f64>,
    pub theta_frac: f64,
    pub horizon: usize,
    pub schedule: Arc<Vec<f64>>,
    pub delta: f64,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone)]
pub struct OuterStep {
    pub u: Vector3<f64>,
    pub solutions: [AxisSolution; 3],
}

/// Outer controller with warm starts carried between samples.
#[derive(Debug, Clone)]
pub struct OuterController {
    pub axes: [AxisProblem; 3],
    pub solver: SolverOptions,
    warm: [Option<Vec<f64>>; 3],
}

impl OuterController {
    pub fn new(design: &OuterDesign) -> Result<Self> {
        let build = |i: usize| -> Result<AxisProblem> {
            let model = AxisModel::new(design.drag[i], design.gains.gamma, design.gains.alpha, design.h)?;
            let setup = MpcSetup::new(
                &model,
                &design.q,
                design.theta_frac,
                design.horizon,
                design.schedule.clone(),
                design.delta,
            )?;
            Ok(AxisProblem { model, setup })
        };
        Ok(Self {
            axes: [build(0)?, build(1)?, build(2)?],
            solver: design.solver,
            warm: [None, None, None],
        })
    }

    pub fn step(&mut self, x_out: &OuterState, k: usize) -> Result<OuterStep> {
        let warm = [
            self.warm[0].as_deref(),
            self.warm[1].as_deref(),
            self.warm[2].as_deref(),
        ];
        let solutions = outer_step(x_out, k, &self.axes, warm, &self.solver)?;
        for (slot, s) in self.warm.iter_mut().zip(solutions.iter()) {
            *slot = Some(shift_warm_start(&s.u));
        }
        let u = Vector3::new(solutions[0].u[0], solutions[1].u[0], solutions[2].u[0]);
        Ok(OuterStep { u, solutions })
    }

    pub fn reset(&mut self) {
        self.warm = [None, None, None];
    }
}
