//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quadmpc::attitude_ref::{desired_attitude, extract_attitude};
use quadmpc::certify::{
    exhaustive_two_step, filter_invariance_mc, terminal_decrease_check, value_decrease_nominal,
};
use quadmpc::inner_hybrid::{potential_eval, ControllerMode, PotentialConfig};
use quadmpc::mathkit::sat::{psi, sigma};
use quadmpc::mathkit::{dlyap_residual, expm_so3, expm_zoh, psi_map, solve_dlyap, sym_eig_extrema};
use quadmpc::outer_mpc::axis::{continuous_matrices, jordan_basis, jordan_discretization};
use quadmpc::outer_mpc::{cost_eval, cost_value, filter_flow, solve_axis_mpc, AxisModel, MpcSetup, SolverOptions};
use quadmpc::sim::{compute_metrics, row_margin, run_with, SimConfig, SimOutput, Synthesis};
use quadmpc::Error;

type Outcome = std::result::Result<(bool, String), String>;
type Check = (&'static str, fn(&Ctx) -> Outcome);

struct Ctx {
    cfg: SimConfig,
    syn: Synthesis,
    hybrid: std::result::Result<SimOutput, Error>,
}

impl Ctx {
    fn run(&self) -> std::result::Result<&SimOutput, String> {
        self.hybrid.as_ref().map_err(|e| format!("default run aborted: {e}"))
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn constraint_certificate(c: &Ctx) -> Outcome {
    let run = c.run()?;
    let tmax = c.cfg.max_thrust;
    let mut violations = 0;
    let (mut margin, mut tlo, mut thi) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for r in &run.rows {
        let m = row_margin(r);
        margin = margin.min(m);
        tlo = tlo.min(r.thrust);
        thi = thi.max(r.thrust);
        if !(m >= 0.0 && r.thrust > 0.0 && r.thrust <= tmax) {
            violations += 1;
        }
    }
    Ok((
        violations == 0,
        format!(
            "{} rows, {violations} violations, min margin {margin:.4}, T in [{tlo:.4}, {thi:.4}]",
            run.rows.len()
        ),
    ))
}

fn filter_invariance(c: &Ctx) -> Outcome {
    let r = filter_invariance_mc(&c.syn.gains, &c.syn.schedule, c.cfg.h, 1000, 100, 11).map_err(err)?;
    Ok((
        r.violations == 0,
        format!(
            "{} sequences x {} periods, {} violations, worst ratio {:.6}",
            r.sequences, r.periods, r.violations, r.worst_ratio
        ),
    ))
}

fn value_decrease(c: &Ctx) -> Outcome {
    let run = c.run()?;
    let first = run.samples.first().ok_or("run has no samples")?;
    let steps = c.cfg.samples();
    let (mut total, mut tight, mut loose, mut worst) = (0, 0, 0, f64::NEG_INFINITY);
    for (i, ax) in c.syn.controller.axes.iter().enumerate() {
        let r = value_decrease_nominal(ax, &first.axis(i), 0, steps, &c.cfg.solver).map_err(err)?;
        total += r.steps;
        tight += r.within_tight;
        loose += r.loose_violations;
        worst = worst.max(r.max_excess);
    }
    let frac = tight as f64 / total as f64;
    Ok((
        frac >= 0.99 && loose == 0,
        format!(
            "{total} steps, {:.2}% within 1e-6, {loose} above 1e-4, max excess {worst:.3e}",
            100.0 * frac
        ),
    ))
}

fn terminal_decrease(c: &Ctx) -> Outcome {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for (i, ax) in c.syn.controller.axes.iter().enumerate() {
        let r = terminal_decrease_check(ax, 1000, 10.0, 1e-9, 100 + i as u64);
        violations += r.violations;
        worst = worst.max(r.max_excess);
    }
    Ok((violations == 0, format!("3 x 1000 states, {violations} violations, max excess {worst:.3e}")))
}

fn input_state_bound(c: &Ctx) -> Outcome {
    let m = compute_metrics(c.run()?).map_err(err)?;
    let ratio = m.prop1_ratio.ok_or("no ratio")?;
    let bound = m.prop1_bound.ok_or("no bound")?;
    let ok = (0..3).all(|i| ratio[i] <= bound[i]);
    Ok((
        ok,
        format!(
            "ratio [{:.4e}, {:.4e}, {:.4e}] vs c3 [{:.4e}, {:.4e}, {:.4e}]",
            ratio[0], ratio[1], ratio[2], bound[0], bound[1], bound[2]
        ),
    ))
}

fn discretization(_: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let (mut worst_zoh, mut worst_lyap, mut worst_sym) = (0.0f64, 0.0f64, 0.0f64);
    let mut min_eig = f64::INFINITY;
    let mut n = 0;
    while n < 100 {
        let d = rng.random_range(0.1..2.0);
        let g = rng.random_range(0.02..2.0);
        if (g * d - 1.0f64).abs() <= 0.05 {
            continue;
        }
        let a = rng.random_range(0.05..1.0);
        let h = rng.random_range(0.01..0.2);
        n += 1;
        let (a0, b0) = continuous_matrices(d, g, a);
        let (abar, bbar) = expm_zoh(&a0, &b0, h).map_err(err)?;
        let (p, pinv) = jordan_basis(d, g, a);
        let (ahat, bhat) = jordan_discretization(d, g, a, h);
        let ea = (p * ahat * pinv - abar).abs().row_sum().amax();
        let eb = (p * bhat - bbar).abs().sum();
        worst_zoh = worst_zoh.max(ea).max(eb);
        let a1 = ahat.fixed_view::<3, 3>(0, 0).into_owned();
        let w = solve_dlyap(&a1, &Matrix3::identity()).map_err(err)?;
        worst_lyap = worst_lyap.max(dlyap_residual(&a1, &Matrix3::identity(), &w));
        worst_sym = worst_sym.max((w - w.transpose()).amax());
        min_eig = min_eig.min(sym_eig_extrema(&w).map_err(err)?.0);
    }
    Ok((
        worst_zoh <= 1e-10 && worst_lyap <= 1e-10 && worst_sym <= 1e-12 && min_eig > 0.0,
        format!(
            "100 draws, ZOH gap {worst_zoh:.3e}, Lyapunov residual {worst_lyap:.3e}, \
             asymmetry {worst_sym:.1e}, min eig {min_eig:.3e}"
        ),
    ))
}

fn desired_rates_fd(c: &Ctx) -> Outcome {
    let run = c.run()?;
    let (gamma, alpha, h) = (c.syn.gains.gamma, c.syn.gains.alpha, c.cfg.h);
    let params = &c.syn.params;
    let traj = &c.syn.trajectory;
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let (d1, d2) = (1e-5, 1e-4);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let s = &run.samples[rng.random_range(0..run.samples.len())];
        let x = s.x_out;
        let u = s.u;
        let filt = |dt: f64| {
            let mut mu = Vector3::zeros();
            let mut eta = Vector3::zeros();
            for i in 0..3 {
                let (m, e) = filter_flow(x[6 + i], x[9 + i], u[i], gamma, alpha, dt);
                mu[i] = m;
                eta[i] = e;
            }
            (mu, eta)
        };
        let rot = |dt: f64| -> std::result::Result<Matrix3<f64>, String> {
            let (mu, _) = filt(dt);
            Ok(extract_attitude(&mu, &traj.sample(s.t + dt), params).map_err(err)?.1.into_inner())
        };
        let omega_fd = |dt: f64| -> std::result::Result<Vector3<f64>, String> {
            let rd = rot(dt)?;
            let dr = (rot(dt + d1)? - rot(dt - d1)?) / (2.0 * d1);
            Ok(psi_map(&(rd.transpose() * dr)))
        };
        let off = rng.random_range(0.1 * h..0.9 * h);
        let (mu, eta) = filt(off);
        let des = desired_attitude(&mu, &eta, &u, &traj.sample(s.t + off), params, gamma, alpha).map_err(err)?;
        e1 = e1.max((omega_fd(off)? - des.omega).amax());
        let dw = (omega_fd(off + d2)? - omega_fd(off - d2)?) / (2.0 * d2);
        e2 = e2.max((dw - des.omega_dot).amax());
    }
    Ok((e1 <= 1e-4 && e2 <= 1e-3, format!("200 times, omega_d error {e1:.3e}, rate error {e2:.3e}")))
}

fn solver_oracle(c: &Ctx) -> Outcome {
    let ax = &c.syn.controller.axes[0];
    let model: &AxisModel = &ax.model;
    let setup = MpcSetup::new(model, &c.cfg.q_matrix(), c.cfg.theta_frac, 2, c.syn.schedule.clone(), c.syn.bounds.delta)
        .map_err(err)?;
    let opts = SolverOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let k = rng.random_range(0..c.syn.schedule.len() - 2);
        let b = setup.bound(k, 0).map_err(err)?;
        let x0 = Vector4::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-b..b),
            rng.random_range(-b..b),
        );
        let s = solve_axis_mpc(&x0, k, model, &setup, None, &opts).map_err(err)?;
        let (grid, _) = exhaustive_two_step(&x0, k, model, &setup, 2e-4).map_err(err)?;
        worst = worst.max(s.cost - grid);
    }
    Ok((worst <= 1e-6, format!("50 states, max (solver - grid) {worst:.3e}")))
}

fn tracking(c: &Ctx) -> Outcome {
    let run = c.run()?;
    let worst = run.rows.iter().filter(|r| r.t >= 15.0 - 1e-9).map(|r| r.p_err.norm()).fold(0.0, f64::max);
    let settle = compute_metrics(run).map_err(err)?.position_settling;
    Ok((
        worst <= 0.05,
        format!(
            "max |p_err| over t >= 15 s is {worst:.4} m, settles below 0.05 m at {}",
            settle.map_or("never".into(), |t| format!("{t:.2} s"))
        ),
    ))
}

fn hybrid_vs_nonhybrid(c: &Ctx) -> Outcome {
    let run = c.run()?;
    let mut cfg = c.cfg.clone();
    cfg.controller = ControllerMode::NonHybrid;
    let plain = run_with(&cfg, &c.syn).map_err(err)?;
    let th = compute_metrics(run).map_err(err)?.attitude_settling.unwrap_or(f64::INFINITY);
    let tn = compute_metrics(&plain).map_err(err)?.attitude_settling.unwrap_or(f64::INFINITY);
    let jumps = run.rows.last().map_or(0, |r| r.jumps);
    let mut prev = 0;
    let mut min_drop = f64::INFINITY;
    for r in &run.rows {
        if r.jumps > prev {
            min_drop = min_drop.min(r.mu_u);
        }
        prev = r.jumps;
    }
    let drops_ok = jumps == 0 || min_drop >= c.cfg.delta;
    Ok((
        th < tn && jumps <= 3 && drops_ok,
        format!("settling hybrid {th:.3} s vs non-hybrid {tn:.3} s, {jumps} jumps, min U drop {min_drop:.4}"),
    ))
}

fn lemma_one(_: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut v = [0; 3];
    for _ in 0..1000 {
        let a = 10.0 * (1.0 - rng.random::<f64>());
        let x = rng.random_range(-10.0..=10.0);
        if sigma(a * x) * x > a * x * x {
            v[0] += 1;
        }
    }
    for _ in 0..1000 {
        let b = rng.random_range(0.0..=1.0);
        let x = rng.random_range(-10.0..=10.0);
        if b * x * sigma(x) > x * sigma(b * x) {
            v[1] += 1;
        }
    }
    for _ in 0..1000 {
        let x = rng.random_range(-20.0..=20.0);
        if psi(x) > x * sigma(x) {
            v[2] += 1;
        }
    }
    Ok((v == [0; 3], format!("3 x 1000 draws, violations {v:?}")))
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(b * (tau * u3).cos(), a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin());
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

fn gradients(c: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let ax = &c.syn.controller.axes[0];
    let (model, setup) = (&ax.model, &ax.setup);
    let n = setup.horizon;
    let mut worst_cost = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(0..c.syn.schedule.len() - n);
        let b = setup.bound(k, 0).map_err(err)?;
        let x0 = Vector4::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-b..b),
            rng.random_range(-b..b),
        );
        let u: Vec<f64> = (0..n)
            .map(|i| {
                let bi = setup.bound(k, i).unwrap_or(b);
                rng.random_range(-bi..bi)
            })
            .collect();
        let e = cost_eval(&x0, &u, model, setup).map_err(err)?;
        let scale = e.grad.amax().max(1.0);
        let step = 1e-6;
        for i in 0..n {
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[i] += step;
            dn[i] -= step;
            let fd = (cost_value(&x0, &up, model, setup) - cost_value(&x0, &dn, model, setup)) / (2.0 * step);
            worst_cost = worst_cost.max((fd - e.grad[i]).abs() / scale);
        }
    }
    let cfg: &PotentialConfig = &c.syn.potential;
    let mut worst_pot = 0.0f64;
    let step = 1e-6;
    for _ in 0..200 {
        let rt = random_rotation(&mut rng);
        let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let w = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let e = potential_eval(&rt, theta, cfg);
        let fd_theta = (potential_eval(&rt, theta + step, cfg).u - potential_eval(&rt, theta - step, cfg).u) / (2.0 * step);
        let up = rt * expm_so3(&(w * step)).into_inner();
        let dn = rt * expm_so3(&(-w * step)).into_inner();
        let fd_r = (potential_eval(&up, theta, cfg).u - potential_eval(&dn, theta, cfg).u) / (2.0 * step);
        let an_r = 2.0 * e.e_r.dot(&w);
        worst_pot = worst_pot
            .max((fd_theta - e.du_dtheta).abs() / e.du_dtheta.abs().max(1.0))
            .max((fd_r - an_r).abs() / an_r.abs().max(1.0));
    }
    Ok((
        worst_cost <= 1e-6 && worst_pot <= 1e-6,
        format!("cost 100 instances rel err {worst_cost:.3e}, potential 200 instances rel err {worst_pot:.3e}"),
    ))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cfg = SimConfig::default();
    let syn = match Synthesis::new(&cfg) {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL synthesis of the default scenario: {e}");
            return ExitCode::FAILURE;
        }
    };
    let hybrid = run_with(&cfg, &syn);
    let ctx = Ctx { cfg, syn, hybrid };
    let checks: [Check; 12] = [
        ("constraint certificate", constraint_certificate),
        ("filter forward invariance", filter_invariance),
        ("optimal value decrease", value_decrease),
        ("terminal decrease", terminal_decrease),
        ("input/state bound", input_state_bound),
        ("discretization and Lyapunov oracle", discretization),
        ("desired rates vs finite differences", desired_rates_fd),
        ("two-step solver vs grid", solver_oracle),
        ("tracking convergence", tracking),
        ("hybrid vs non-hybrid", hybrid_vs_nonhybrid),
        ("saturation properties", lemma_one),
        ("gradient checks", gradients),
    ];
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(|| f(&ctx))).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, e));
        failed += !ok as usize;
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of 12 passed in {:.1} s", 12 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
