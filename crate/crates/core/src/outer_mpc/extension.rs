//! Extension-filter parameters, the sampled input-bound schedule, and the
//! exact flow of the `(mu_d, eta)` filters under a held input.

use crate::attitude_ref::constraint_bound;
use crate::error::{ensure_finite, Error, Result};
use crate::vehicle::{Trajectory, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterGains {
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Filter time constant `gamma` and scale factor `alpha` from the global
/// bound `delta` and the bound's Lipschitz constant `l_bar`.
pub fn select_gamma_alpha(
    delta: f64,
    l_bar: f64,
    h: f64,
    gamma_frac: f64,
    alpha_frac: f64,
    gamma_max: f64,
) -> Result<FilterGains> {
    ensure_finite(&[delta, l_bar, h, gamma_frac, alpha_frac, gamma_max], "gain selection")?;
    if delta <= 0.0 || l_bar < 0.0 || h <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "gain selection needs delta > 0, l_bar >= 0, h > 0 (got {delta}, {l_bar}, {h})"
        )));
    }
    if !(gamma_frac > 0.0 && gamma_frac < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma_frac must lie in (0, 1), got {gamma_frac}")));
    }
    if !(alpha_frac > 0.0 && alpha_frac <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha_frac must lie in (0, 1], got {alpha_frac}")));
    }
    let gamma = if l_bar > 0.0 {
        gamma_frac * delta / l_bar
    } else {
        if gamma_max <= 0.0 {
            return Err(Error::InvalidArgument("gamma_max must be positive".into()));
        }
        gamma_max
    };
    let beta = delta / (delta + l_bar * h);
    let e = (-h / gamma).exp();
    let alpha = alpha_frac * (beta - e) / (1.0 - e);
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Inconsistent(format!(
            "scale factor alpha = {alpha} outside (0, 1] for gamma = {gamma}, beta = {beta}"
        )));
    }
    if l_bar > 0.0 && gamma >= delta / l_bar {
        return Err(Error::Inconsistent(format!("gamma = {gamma} is not below delta / l_bar")));
    }
    Ok(FilterGains { gamma, alpha, beta })
}

/// Per-interval lower bounds `Delta_k` on the per-axis input bound, for
/// `k = 0..k_len`. Each interval is sampled at `grid` (both ends included) and
/// the minimum is lowered by `l_bar * grid / 2`.
pub fn constraint_schedule(
    traj: &dyn Trajectory,
    params: &VehicleParams,
    eps: f64,
    h: f64,
    k_len: usize,
    grid: f64,
    l_bar: f64,
) -> Result<Vec<f64>> {
    if !(grid > 0.0 && grid <= h / 10.0 * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "schedule grid {grid} must be positive and at most h / 10"
        )));
    }
    let per = (h / grid).round() as usize;
    let mut out = Vec::with_capacity(k_len);
    for k in 0..k_len {
        let t0 = k as f64 * h;
        let mut low = f64::INFINITY;
        for j in 0..=per {
            let t = t0 + (j as f64 * grid).min(h);
            low = low.min(constraint_bound(&traj.sample(t), params, eps)?.b_axis);
        }
        let dk = low - 0.5 * l_bar * grid;
        if !(dk > 0.0) {
            return Err(Error::Infeasible(format!(
                "constraint schedule entry {k} is not positive ({dk:.6})"
            )));
        }
        out.push(dk);
    }
    Ok(out)
}

/// State of the two filters `s` seconds into an interval with held input `u`.
pub fn filter_flow(mu0: f64, eta0: f64, u: f64, gamma: f64, alpha: f64, s: f64) -> (f64, f64) {
    let e = (-s / gamma).exp();
    let eta = alpha * u + (eta0 - alpha * u) * e;
    let mu = alpha * alpha * u
        + (mu0 - alpha * alpha * u) * e
        + (alpha / gamma) * (eta0 - alpha * u) * s * e;
    (mu, eta)
}

/// Exact maxima of `|mu_d|` and `|eta|` over `[0, h]`.
pub fn filter_interval_peak(mu0: f64, eta0: f64, u: f64, gamma: f64, alpha: f64, h: f64) -> (f64, f64) {
    let (mu_h, eta_h) = filter_flow(mu0, eta0, u, gamma, alpha, h);
    // eta relaxes monotonically toward alpha u
    let eta_peak = eta0.abs().max(eta_h.abs());
    let mut mu_peak = mu0.abs().max(mu_h.abs());
    let a = mu0 - alpha * alpha * u;
    let b = (alpha / gamma) * (eta0 - alpha * u);
    if b != 0.0 {
        let s = gamma - a / b;
        if s > 0.0 && s < h {
            mu_peak = mu_peak.max(filter_flow(mu0, eta0, u, gamma, alpha, s).0.abs());
        }
    }
    (mu_peak, eta_peak)
}
