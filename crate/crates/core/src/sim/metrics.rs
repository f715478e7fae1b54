//! Summary numbers of a run.

use serde::Serialize;

use crate::certify::input_state_ratio;
use crate::error::{Error, Result};

use super::run::SimOutput;
use super::trace::TraceRow;

/// Threshold on `dist(R~)` and `|p_err|` used for the settling times.
pub const SETTLE_ATTITUDE: f64 = 0.05;
pub const SETTLE_POSITION: f64 = 0.05;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Metrics {
    pub rows: usize,
    pub max_p_err: f64,
    pub final_p_err: f64,
    /// Earliest time after which `|p_err| <= SETTLE_POSITION` holds to the end.
    pub position_settling: Option<f64>,
    /// Earliest time after which `dist(R~) < SETTLE_ATTITUDE` holds to the end.
    pub attitude_settling: Option<f64>,
    pub jumps: u64,
    /// `min_t (B_axis(t) - max_i |mu_d_i(t)|)`.
    pub min_margin: f64,
    pub max_u_mpc: f64,
    pub min_thrust: f64,
    pub max_thrust: f64,
    pub degraded_rows: usize,
    /// Per axis `max_k |u_k| / |x_k|`.
    pub prop1_ratio: Option<[f64; 3]>,
    /// Per axis `sqrt(Theta lambda_max(M))`.
    pub prop1_bound: Option<[f64; 3]>,
}

pub fn row_margin(r: &TraceRow) -> f64 {
    r.bound_b_axis - r.mu_d.amax()
}

/// Earliest row time after which `ok` holds for every remaining row.
fn settle(rows: &[TraceRow], ok: impl Fn(&TraceRow) -> bool) -> Option<f64> {
    let mut t = None;
    for r in rows.iter().rev() {
        if !ok(r) {
            break;
        }
        t = Some(r.t);
    }
    t
}

pub fn trace_metrics(rows: &[TraceRow]) -> Result<Metrics> {
    let last = rows.last().ok_or_else(|| Error::InvalidArgument("empty trace".into()))?;
    let fold = |f: &dyn Fn(&TraceRow) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
        rows.iter().map(f).fold(init, pick)
    };
    Ok(Metrics {
        rows: rows.len(),
        max_p_err: fold(&|r| r.p_err.norm(), 0.0, f64::max),
        final_p_err: last.p_err.norm(),
        position_settling: settle(rows, |r| r.p_err.norm() <= SETTLE_POSITION),
        attitude_settling: settle(rows, |r| r.dist_rtilde < SETTLE_ATTITUDE),
        jumps: last.jumps,
        min_margin: fold(&row_margin, f64::INFINITY, f64::min),
        max_u_mpc: fold(&|r| r.u_mpc.amax(), 0.0, f64::max),
        min_thrust: fold(&|r| r.thrust, f64::INFINITY, f64::min),
        max_thrust: fold(&|r| r.thrust, 0.0, f64::max),
        degraded_rows: rows.iter().filter(|r| r.solver_flag.iter().any(|&f| f != 0)).count(),
        prop1_ratio: None,
        prop1_bound: None,
    })
}

pub fn compute_metrics(out: &SimOutput) -> Result<Metrics> {
    let mut m = trace_metrics(&out.rows)?;
    let mut ratio = [0.0; 3];
    let mut bound = [0.0; 3];
    for i in 0..3 {
        let xs: Vec<_> = out.samples.iter().map(|s| (s.axis(i), s.u[i])).collect();
        ratio[i] = input_state_ratio(xs.iter().map(|(x, u)| (x, *u)));
        bound[i] = out.meta.axes.get(i).map_or(f64::NAN, |a| a.c3);
    }
    m.prop1_ratio = Some(ratio);
    m.prop1_bound = Some(bound);
    Ok(m)
}
