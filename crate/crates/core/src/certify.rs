//! Numerical certificates for the closed-loop guarantees: filter invariance,
//! terminal decrease, value decrease and the input/state bound. Also the
//! brute-force oracle for two-step problems.

use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::outer_mpc::{
    filter_flow, filter_interval_peak, local_kappa, solve_axis_mpc, AxisModel, AxisProblem, FilterGains,
    MpcSetup, SolverOptions,
};

/// Minimum of a two-step horizon cost over a uniform grid on the box
/// `|u0| <= Delta_k`, `|u1| <= Delta_{k+1}` with spacing `res`.
///
/// For a fixed outer coordinate the cost is a convex quadratic in the inner
/// one, so the row minimum over the grid sits at one of the two grid points
/// around the row's continuous minimizer. Only those two are evaluated.
pub fn exhaustive_two_step(
    x0: &Vector4<f64>,
    k: usize,
    model: &AxisModel,
    setup: &MpcSetup,
    res: f64,
) -> Result<(f64, [f64; 2])> {
    two_step_grid(x0, k, model, setup, res, false)
}

fn two_step_grid(
    x0: &Vector4<f64>,
    k: usize,
    model: &AxisModel,
    setup: &MpcSetup,
    res: f64,
    full_rows: bool,
) -> Result<(f64, [f64; 2])> {
    if setup.horizon != 2 {
        return Err(Error::InvalidArgument("exhaustive oracle needs horizon 2".into()));
    }
    if !(res > 0.0) {
        return Err(Error::InvalidArgument("grid spacing must be positive".into()));
    }
    let (b0, b1) = (setup.bound(k, 0)?, setup.bound(k, 1)?);
    let n0 = (2.0 * b0 / res).round().max(1.0) as usize;
    let n1 = (2.0 * b1 / res).round().max(1.0) as usize;
    let grid = |b: f64, n: usize, j: usize| -b + 2.0 * b * j as f64 / n as f64;
    let bm = setup.m * model.b_bar;
    let c = 1.0 + setup.theta * model.b_bar.dot(&bm);
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..=n0 {
        let u0 = grid(b0, n0, i);
        let x1 = model.step(x0, u0);
        let ax1 = model.a_bar * x1;
        let base = setup.stage_cost(&model.p2, x0, u0)
            + setup.stage_cost(&model.p2, &x1, 0.0)
            + setup.terminal_cost(&ax1);
        let lin = 2.0 * setup.theta * bm.dot(&ax1);
        let row = |j: usize| base + grid(b1, n1, j) * (lin + c * grid(b1, n1, j));
        let candidates: Vec<usize> = if full_rows {
            (0..=n1).collect()
        } else {
            let pos = ((-lin / (2.0 * c) + b1) * n1 as f64 / (2.0 * b1)).clamp(0.0, n1 as f64);
            vec![pos.floor() as usize, (pos.ceil() as usize).min(n1)]
        };
        for j in candidates {
            let v = row(j);
            if v < best.0 {
                best = (v, [u0, grid(b1, n1, j)]);
            }
        }
    }
    Ok(best)
}

/// Outcome of the filter forward-invariance Monte Carlo.
#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub sequences: usize,
    pub periods: usize,
    pub violations: usize,
    /// Largest `peak / Delta_k` seen over all intervals and both filters.
    pub worst_ratio: f64,
}

/// Draws admissible input sequences `|u_k| <= Delta_k` and initial filter
/// states inside `Delta_0`, and checks the exact interval peaks of both
/// filters against `Delta_k` and the end states against `Delta_{k+1}`.
///
/// Half of the inputs are drawn at the bound with a random sign.
pub fn filter_invariance_mc(
    gains: &FilterGains,
    schedule: &[f64],
    h: f64,
    sequences: usize,
    periods: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    if schedule.len() < periods + 1 {
        return Err(Error::InvalidArgument(format!(
            "schedule has {} entries, need {}",
            schedule.len(),
            periods + 1
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..sequences {
        let d0 = schedule[0];
        let mut mu = rng.random_range(-d0..=d0);
        let mut eta = rng.random_range(-d0..=d0);
        for k in 0..periods {
            let dk = schedule[k];
            let u = if rng.random_bool(0.5) {
                if rng.random_bool(0.5) { dk } else { -dk }
            } else {
                rng.random_range(-dk..=dk)
            };
            let (mp, ep) = filter_interval_peak(mu, eta, u, gains.gamma, gains.alpha, h);
            let (m1, e1) = filter_flow(mu, eta, u, gains.gamma, gains.alpha, h);
            let next = schedule[k + 1];
            worst = worst.max(mp / dk).max(ep / dk).max(m1.abs() / next).max(e1.abs() / next);
            if mp > dk || ep > dk || m1.abs() > next || e1.abs() > next {
                violations += 1;
            }
            mu = m1;
            eta = e1;
        }
    }
    Ok(InvarianceReport {
        sequences,
        periods,
        violations,
        worst_ratio: worst,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TerminalReport {
    pub states: usize,
    pub violations: usize,
    /// Largest `V_f(A x + B kappa) - V_f(x) + l(x, kappa)`.
    pub max_excess: f64,
}

/// Terminal decrease under the local law at random states. Each state is a
/// random direction scaled by a log-uniform radius in `[1e-3, max_radius]`.
pub fn terminal_decrease_check(
    problem: &AxisProblem,
    states: usize,
    max_radius: f64,
    tol: f64,
    seed: u64,
) -> TerminalReport {
    let (model, setup) = (&problem.model, &problem.setup);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (1e-3f64.ln(), max_radius.max(2e-3).ln());
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..states {
        let dir: Vector4<f64> = Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let x = dir * (rng.random_range(lo..hi).exp() / dir.norm().max(1e-12));
        let k = local_kappa(&x, model, setup);
        let excess = setup.terminal_cost(&model.step(&x, k)) - setup.terminal_cost(&x)
            + setup.stage_cost(&model.p2, &x, k);
        if excess > tol {
            violations += 1;
        }
        max_excess = max_excess.max(excess);
    }
    TerminalReport {
        states,
        violations,
        max_excess,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueDecreaseReport {
    pub steps: usize,
    /// Largest `J*(x_{k+1}) - J*(x_k) + l(x_k, u_k)`.
    pub max_excess: f64,
    pub within_tight: usize,
    pub tight: f64,
    pub loose: f64,
    pub loose_violations: usize,
}

impl ValueDecreaseReport {
    pub fn tight_fraction(&self) -> f64 {
        if self.steps == 0 {
            1.0
        } else {
            self.within_tight as f64 / self.steps as f64
        }
    }
}

/// Optimal-value decrease along the nominal discrete closed loop
/// `x_{k+1} = A x_k + B u_k` started at `x0`, schedule index from `k0`.
pub fn value_decrease_nominal(
    problem: &AxisProblem,
    x0: &Vector4<f64>,
    k0: usize,
    steps: usize,
    opts: &SolverOptions,
) -> Result<ValueDecreaseReport> {
    let (model, setup) = (&problem.model, &problem.setup);
    let (tight, loose) = (1e-6, 1e-4);
    let mut x = *x0;
    let mut sol = solve_axis_mpc(&x, k0, model, setup, None, opts)?;
    let mut report = ValueDecreaseReport {
        steps,
        max_excess: f64::NEG_INFINITY,
        within_tight: 0,
        tight,
        loose,
        loose_violations: 0,
    };
    for k in 0..steps {
        let u = sol.u[0];
        let stage = setup.stage_cost(&model.p2, &x, u);
        let x1 = model.step(&x, u);
        let warm = crate::outer_mpc::shift_warm_start(&sol.u);
        let next = solve_axis_mpc(&x1, k0 + k + 1, model, setup, Some(&warm), opts)?;
        let excess = next.cost - sol.cost + stage;
        report.max_excess = report.max_excess.max(excess);
        if excess <= tight {
            report.within_tight += 1;
        }
        if excess > loose {
            report.loose_violations += 1;
        }
        x = x1;
        sol = next;
    }
    Ok(report)
}

/// `max |u_k| / |x_k|` over rows with `|x_k| > 1e-9`.
pub fn input_state_ratio<'a>(rows: impl IntoIterator<Item = (&'a Vector4<f64>, f64)>) -> f64 {
    rows.into_iter()
        .filter(|(x, _)| x.norm() > 1e-9)
        .map(|(x, u)| u.abs() / x.norm())
        .fold(0.0, f64::max)
}
