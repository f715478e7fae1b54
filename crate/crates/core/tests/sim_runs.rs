use std::path::Path;
use std::sync::OnceLock;

use quadmpc::attitude_ref::extract_attitude;
use quadmpc::sim::{compute_metrics, load_config, run_simulation, write_trace, SimConfig, SimOutput};
use quadmpc::vehicle::{builtin, Orbit, Trajectory};

fn default_run() -> &'static SimOutput {
    static RUN: OnceLock<SimOutput> = OnceLock::new();
    RUN.get_or_init(|| run_simulation(&SimConfig::default()).expect("default scenario runs"))
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn shipped_default_config_matches_builtin_defaults() {
    let cfg = load_config(&configs().join("default.json")).unwrap();
    assert_eq!(cfg, SimConfig::default());
    load_config(&configs().join("hover.json")).unwrap();
}

#[test]
fn hover_equilibrium_stays_put() {
    let cfg = load_config(&configs().join("hover.json")).unwrap();
    let out = run_simulation(&cfg).unwrap();
    let worst = out.rows.iter().map(|r| r.p_err.norm()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
    assert!(out.rows.iter().all(|r| r.jumps == 0 && r.dist_rtilde < 1e-6));
}

#[test]
fn rows_are_uniform_in_time() {
    let out = default_run();
    let cfg = SimConfig::default();
    assert_eq!(out.rows.len(), cfg.samples() * cfg.substeps() + 1);
    for w in out.rows.windows(2) {
        let dt = w[1].t - w[0].t;
        assert!(dt > 0.0 && (dt - cfg.dt_inner).abs() < 1e-12);
    }
}

#[test]
fn input_is_held_between_samples() {
    let out = default_run();
    let cfg = SimConfig::default();
    let n = cfg.substeps();
    for (i, w) in out.rows.windows(2).enumerate() {
        let boundary = (i + 1) % n == 0;
        if !boundary {
            assert_eq!(w[0].u_mpc, w[1].u_mpc, "input changed inside interval at row {}", i + 1);
        }
    }
    for s in &out.samples {
        assert_eq!(out.rows[s.k * n].u_mpc, s.u);
    }
}

#[test]
fn thrust_and_margin_certificates_hold_per_row() {
    for r in &default_run().rows {
        assert!(r.thrust > 0.0 && r.thrust <= 25.0);
        assert!(r.bound_b_axis - r.mu_d.amax() >= 0.0);
    }
}

#[test]
fn jumps_match_gap_rule() {
    let rows = &default_run().rows;
    let delta = SimConfig::default().delta;
    let mut prev = 0;
    for r in rows {
        let jumped = r.jumps == prev + 1;
        assert!(r.jumps == prev || jumped);
        assert_eq!(jumped, r.mu_u >= delta, "t = {}", r.t);
        prev = r.jumps;
    }
}

#[test]
fn logged_thrust_is_reproducible() {
    let cfg = SimConfig::default();
    let params = cfg.vehicle_params().unwrap();
    let traj = builtin(&cfg.trajectory).unwrap();
    for r in default_run().rows.iter().step_by(97) {
        let (t, _) = extract_attitude(&r.mu_d, &traj.sample(r.t), &params).unwrap();
        assert!((t - r.thrust).abs() <= 1e-12, "{} vs {}", t, r.thrust);
        assert!((Orbit.sample(r.t).pos - r.r).amax() == 0.0);
    }
}

#[test]
fn identical_configs_give_identical_csv() {
    let mut cfg = SimConfig::default();
    cfg.duration = 2.0;
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_trace(&run_simulation(&cfg).unwrap().rows, &mut a).unwrap();
    write_trace(&run_simulation(&cfg).unwrap().rows, &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn metrics_margin_matches_rows() {
    let out = default_run();
    let m = compute_metrics(out).unwrap();
    let recomputed = out
        .rows
        .iter()
        .map(|r| r.bound_b_axis - r.mu_d.iter().map(|v| v.abs()).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    assert_eq!(m.min_margin, recomputed);
    assert_eq!(m.rows, out.rows.len());
}

#[test]
fn oversized_initial_filter_state_is_rejected() {
    let mut cfg = SimConfig::default();
    cfg.initial.mu_d = [50.0, 0.0, 0.0];
    assert!(run_simulation(&cfg).is_err());
}
