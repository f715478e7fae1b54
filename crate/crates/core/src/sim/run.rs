//! Cascaded closed loop: sampled MPC on the translational error, continuous
//! extension filters, and the hybrid attitude loop integrated with RK4.

use std::sync::Arc;

use log::{debug, warn};
use nalgebra::{Matrix3, SVector, Vector3, Vector4};
use serde::Serialize;

use crate::attitude_ref::{constraint_bound, desired_attitude};
use crate::error::{Error, Result};
use crate::inner_hybrid::{attitude_error, hybrid_update, potential_eval, potential_gap, torque, ControllerMode, HybridDecision, PotentialConfig};
use crate::mathkit::{dist, sym_eig_extrema, Rotation, SatFamily};
use crate::outer_mpc::{
    axis_state, constraint_schedule, select_gamma_alpha, stack_state, FilterGains, OuterController, OuterDesign,
    OuterState,
};
use crate::vehicle::integrate::{pack_vehicle, unpack_vehicle, vehicle_field, VEHICLE_DIM};
use crate::vehicle::{assumption_bounds, builtin, FeasibilityBounds, Trajectory, VehicleParams, VehicleState};

use super::config::SimConfig;
use super::trace::TraceRow;

/// Vehicle, both filters and the hybrid variable.
const DIM: usize = VEHICLE_DIM + 7;
type State = SVector<f64, DIM>;

/// Constants derived from a configuration before the run starts.
pub struct Synthesis {
    pub params: VehicleParams,
    pub trajectory: Box<dyn Trajectory>,
    pub bounds: FeasibilityBounds,
    pub gains: FilterGains,
    pub schedule: Arc<Vec<f64>>,
    pub controller: OuterController,
    pub potential: PotentialConfig,
    pub epsilon: f64,
}

impl Synthesis {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.vehicle_params()?;
        let trajectory = builtin(&cfg.trajectory)?;
        let span = cfg.duration + (cfg.horizon as f64 + 1.0) * cfg.h;
        let bounds = assumption_bounds(trajectory.as_ref(), &params, cfg.epsilon, span, cfg.bounds_grid)?;
        bounds.ensure_feasible()?;
        SatFamily::new(bounds.delta)?.ensure_local_law_feasible()?;
        let gains = select_gamma_alpha(bounds.delta, bounds.l_bar, cfg.h, cfg.gamma_frac, cfg.alpha_frac, cfg.gamma_max)?;
        let k_len = cfg.samples() + cfg.horizon + 1;
        let schedule = Arc::new(constraint_schedule(
            trajectory.as_ref(),
            &params,
            cfg.epsilon,
            cfg.h,
            k_len,
            cfg.schedule_grid,
            bounds.l_bar,
        )?);
        let design = OuterDesign {
            drag: params.drag,
            gains,
            h: cfg.h,
            q: cfg.q_matrix(),
            theta_frac: cfg.theta_frac,
            horizon: cfg.horizon,
            schedule: schedule.clone(),
            delta: bounds.delta,
            solver: cfg.solver,
        };
        let controller = OuterController::new(&design)?;
        let d0 = schedule[0];
        for (name, v) in [("mu_d", cfg.initial.mu_d), ("eta", cfg.initial.eta)] {
            if v.iter().any(|x| x.abs() > d0) {
                return Err(Error::Config(format!(
                    "initial {name} {v:?} exceeds the first input bound {d0:.6}"
                )));
            }
        }
        Ok(Self {
            params,
            trajectory,
            bounds,
            gains,
            schedule,
            controller,
            potential: cfg.potential(),
            epsilon: cfg.epsilon,
        })
    }

    pub fn metadata(&self, cfg: &SimConfig) -> Result<SimMeta> {
        let mut axes = Vec::new();
        for a in &self.controller.axes {
            let (_, m_max) = sym_eig_extrema(&a.setup.m)?;
            axes.push(AxisMeta {
                drag: a.model.d,
                b_hat: a.model.b_hat2,
                theta: a.setup.theta,
                theta_min: a.setup.theta_min,
                gamma_big: a.setup.gamma_big,
                eps_par: a.setup.eps_par,
                lambda_max_m: m_max,
                c3: a.setup.c3,
            });
        }
        Ok(SimMeta {
            version: env!("CARGO_PKG_VERSION"),
            config: cfg.clone(),
            delta_r: self.bounds.delta_r,
            delta_rz: self.bounds.delta_rz,
            l1: self.bounds.l1,
            l2: self.bounds.l2,
            l_bar: self.bounds.l_bar,
            delta: self.bounds.delta,
            gamma: self.gains.gamma,
            alpha: self.gains.alpha,
            beta: self.gains.beta,
            schedule_min: self.schedule.iter().copied().fold(f64::INFINITY, f64::min),
            schedule_len: self.schedule.len(),
            axes,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisMeta {
    pub drag: f64,
    pub b_hat: f64,
    pub theta: f64,
    pub theta_min: f64,
    pub gamma_big: f64,
    pub eps_par: f64,
    pub lambda_max_m: f64,
    pub c3: f64,
}

/// Synthesized constants recorded next to a trace.
#[derive(Debug, Clone, Serialize)]
pub struct SimMeta {
    pub version: &'static str,
    pub config: SimConfig,
    pub delta_r: f64,
    pub delta_rz: f64,
    pub l1: f64,
    pub l2: f64,
    pub l_bar: f64,
    pub delta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub schedule_min: f64,
    pub schedule_len: usize,
    pub axes: Vec<AxisMeta>,
}

/// One outer sample: the state the MPC saw and what it returned.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub k: usize,
    pub t: f64,
    pub x_out: OuterState,
    pub u: Vector3<f64>,
    pub cost: [f64; 3],
    pub iterations: [usize; 3],
    pub degraded: [bool; 3],
}

impl SampleRecord {
    pub fn axis(&self, i: usize) -> Vector4<f64> {
        axis_state(&self.x_out, i)
    }
}

pub struct SimOutput {
    pub rows: Vec<TraceRow>,
    pub samples: Vec<SampleRecord>,
    pub meta: SimMeta,
}

impl SimOutput {
    pub fn degraded_samples(&self) -> usize {
        self.samples.iter().filter(|s| s.degraded.iter().any(|&d| d)).count()
    }
}

fn pack(v: &VehicleState, mu: &Vector3<f64>, eta: &Vector3<f64>, theta: f64) -> State {
    let mut x = State::zeros();
    x.fixed_rows_mut::<VEHICLE_DIM>(0).copy_from(&pack_vehicle(v));
    x.fixed_rows_mut::<3>(VEHICLE_DIM).copy_from(mu);
    x.fixed_rows_mut::<3>(VEHICLE_DIM + 3).copy_from(eta);
    x[DIM - 1] = theta;
    x
}

fn filters(x: &State) -> (Vector3<f64>, Vector3<f64>) {
    (
        x.fixed_rows::<3>(VEHICLE_DIM).into_owned(),
        x.fixed_rows::<3>(VEHICLE_DIM + 3).into_owned(),
    )
}

fn unpack(x: &State) -> Result<(VehicleState, Vector3<f64>, Vector3<f64>, f64)> {
    let v = unpack_vehicle(&x.fixed_rows::<VEHICLE_DIM>(0).into_owned())?;
    let (mu, eta) = filters(x);
    Ok((v, mu, eta, x[DIM - 1]))
}

struct Loop<'a> {
    syn: &'a Synthesis,
    mode: ControllerMode,
    jinv: Matrix3<f64>,
}

impl Loop<'_> {
    /// Right-hand side of the coupled continuous dynamics with `u` held.
    fn field(&self, t: f64, x: &State, u: &Vector3<f64>) -> Result<State> {
        let syn = self.syn;
        let (g, a) = (syn.gains.gamma, syn.gains.alpha);
        let (mu, eta) = filters(x);
        let theta = x[DIM - 1];
        let r = syn.trajectory.sample(t);
        let des = desired_attitude(&mu, &eta, u, &r, &syn.params, g, a)?;
        let rm = Matrix3::from_column_slice(x.fixed_rows::<9>(6).as_slice());
        let w: Vector3<f64> = x.fixed_rows::<3>(15).into_owned();
        let rt = des.rotation.matrix().transpose() * rm;
        let w_err = w - rt.transpose() * des.omega;
        let j = &syn.params.inertia;
        let tau = torque(&rt, theta, &w_err, &des.omega, &des.omega_dot, j, &syn.potential, self.mode);
        let veh = vehicle_field(&x.fixed_rows::<VEHICLE_DIM>(0).into_owned(), des.thrust, &tau, &syn.params, &self.jinv);
        let mut dx = State::zeros();
        dx.fixed_rows_mut::<VEHICLE_DIM>(0).copy_from(&veh);
        dx.fixed_rows_mut::<3>(VEHICLE_DIM).copy_from(&((eta * a - mu) / g));
        dx.fixed_rows_mut::<3>(VEHICLE_DIM + 3).copy_from(&((u * a - eta) / g));
        if self.mode == ControllerMode::Hybrid {
            dx[DIM - 1] = -syn.potential.k_theta * potential_eval(&rt, theta, &syn.potential).du_dtheta;
        }
        Ok(dx)
    }

    fn rk4(&self, t: f64, x: &State, u: &Vector3<f64>, dt: f64) -> Result<State> {
        let k1 = self.field(t, x, u)?;
        let k2 = self.field(t + 0.5 * dt, &(x + k1 * (0.5 * dt)), u)?;
        let k3 = self.field(t + 0.5 * dt, &(x + k2 * (0.5 * dt)), u)?;
        let k4 = self.field(t + dt, &(x + k3 * dt), u)?;
        let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("closed-loop state"));
        }
        Ok(next)
    }
}

/// Checks and logs the state at `t`, applying a jump when the gap reaches
/// `delta`. Returns the row and the post-jump state.
#[allow(clippy::too_many_arguments)]
fn observe(
    syn: &Synthesis,
    mode: ControllerMode,
    t: f64,
    x: &mut State,
    u: &Vector3<f64>,
    sample: &SampleRecord,
    jumps: &mut u64,
) -> Result<TraceRow> {
    let (veh, mu, eta, theta) = unpack(x)?;
    let r = syn.trajectory.sample(t);
    let bound = constraint_bound(&r, &syn.params, syn.epsilon)?;
    let peak = mu.amax();
    if peak > bound.b_axis {
        return Err(Error::Certificate {
            t,
            what: format!("max |mu_d| = {peak:.9} exceeds the axis bound {:.9}", bound.b_axis),
        });
    }
    let des = desired_attitude(&mu, &eta, u, &r, &syn.params, syn.gains.gamma, syn.gains.alpha)?;
    if !(des.thrust > 0.0 && des.thrust <= syn.params.max_thrust) {
        return Err(Error::Certificate {
            t,
            what: format!("thrust {:.9} outside (0, {}]", des.thrust, syn.params.max_thrust),
        });
    }
    let (rt, _) = attitude_error(&veh.attitude, &veh.angular_velocity, &des.rotation, &des.omega);
    let pot = &syn.potential;
    let u_pot = potential_eval(rt.matrix(), theta, pot).u;
    let (mu_u, _) = potential_gap(rt.matrix(), theta, pot);
    if mode == ControllerMode::Hybrid {
        if let HybridDecision::Jump { theta_plus, gap } = hybrid_update(rt.matrix(), theta, pot) {
            *jumps += 1;
            x[DIM - 1] = theta_plus;
            debug!("jump {} at t = {t:.4}: gap {gap:.6}, theta -> {theta_plus:.6}", *jumps);
        }
    }
    Ok(TraceRow {
        t,
        p: veh.position,
        v: veh.velocity,
        r: r.pos,
        p_err: veh.position - r.pos,
        mu_d: mu,
        eta,
        u_mpc: *u,
        bound_b: bound.b,
        bound_b_axis: bound.b_axis,
        thrust: des.thrust,
        omega: veh.angular_velocity,
        omega_d: des.omega,
        theta,
        u_pot,
        mu_u,
        jumps: *jumps,
        dist_rtilde: dist(&rt),
        solver_iters: sample.iterations.map(|n| n as u64),
        solver_flag: sample.degraded.map(u8::from),
    })
}

pub fn initial_state(cfg: &SimConfig, syn: &Synthesis) -> Result<State> {
    let init = &cfg.initial;
    let (mu, eta) = (Vector3::from(init.mu_d), Vector3::from(init.eta));
    let r0 = syn.trajectory.sample(0.0);
    let des = desired_attitude(&mu, &eta, &Vector3::zeros(), &r0, &syn.params, syn.gains.gamma, syn.gains.alpha)?;
    let offset = if init.attitude_angle == 0.0 {
        Rotation::identity()
    } else {
        Rotation::from_axis_angle(&Vector3::from(init.attitude_axis), init.attitude_angle)?
    };
    let veh = VehicleState {
        position: init.position.into(),
        velocity: init.velocity.into(),
        attitude: des.rotation.compose(&offset),
        angular_velocity: init.angular_velocity.into(),
    };
    let theta = if cfg.controller == ControllerMode::Hybrid { init.theta } else { 0.0 };
    Ok(pack(&veh, &mu, &eta, theta))
}

pub fn run_simulation(cfg: &SimConfig) -> Result<SimOutput> {
    run_with(cfg, &Synthesis::new(cfg)?)
}

/// Runs `cfg` on an already synthesized controller.
pub fn run_with(cfg: &SimConfig, syn: &Synthesis) -> Result<SimOutput> {
    let meta = syn.metadata(cfg)?;
    let mode = cfg.controller;
    let mut x = initial_state(cfg, syn)?;
    let mut controller = syn.controller.clone();
    controller.reset();
    let lp = Loop {
        syn,
        mode,
        jinv: syn.params.inertia_inverse()?,
    };
    let (n_samples, n_sub, dt) = (cfg.samples(), cfg.substeps(), cfg.dt_inner);
    let mut rows = Vec::with_capacity(n_samples * n_sub + 1);
    let mut samples = Vec::with_capacity(n_samples);
    let mut jumps = 0;
    for k in 0..n_samples {
        let tk = k as f64 * cfg.h;
        let (veh, mu, eta, _) = unpack(&x)?;
        let r = syn.trajectory.sample(tk);
        let x_out = stack_state(&(veh.position - r.pos), &(veh.velocity - r.vel), &mu, &eta);
        let step = controller.step(&x_out, k)?;
        let sol = &step.solutions;
        if sol.iter().any(|s| s.degraded) {
            warn!("outer solver degraded at sample {k}");
        }
        let rec = SampleRecord {
            k,
            t: tk,
            x_out,
            u: step.u,
            cost: [sol[0].cost, sol[1].cost, sol[2].cost],
            iterations: [sol[0].iterations, sol[1].iterations, sol[2].iterations],
            degraded: [sol[0].degraded, sol[1].degraded, sol[2].degraded],
        };
        for n in 0..n_sub {
            let t = (k * n_sub + n) as f64 * dt;
            rows.push(observe(syn, mode, t, &mut x, &step.u, &rec, &mut jumps)?);
            x = lp.rk4(t, &x, &step.u, dt)?;
            // keep the attitude block on SO(3)
            let (veh, mu, eta, theta) = unpack(&x)?;
            x = pack(&veh, &mu, &eta, theta);
        }
        samples.push(rec);
    }
    if let Some(last) = samples.last().cloned() {
        rows.push(observe(syn, mode, (n_samples * n_sub) as f64 * dt, &mut x, &last.u, &last, &mut jumps)?);
    }
    Ok(SimOutput { rows, samples, meta })
}
