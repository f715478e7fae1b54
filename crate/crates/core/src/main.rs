use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use quadmpc::certify::{filter_invariance_mc, terminal_decrease_check, InvarianceReport, TerminalReport};
use quadmpc::inner_hybrid::ControllerMode;
use quadmpc::sim::{compute_metrics, export_trace, load_config, run_with, Metrics, SimMeta, Synthesis};
use quadmpc::Error;

#[derive(Parser)]
#[command(name = "quadmpc", about = "Quadrotor MPC tracking with a hybrid attitude loop")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the closed loop and write the CSV trace plus a `.meta.json` sidecar.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        controller: Option<ControllerMode>,
        #[arg(long)]
        duration: Option<f64>,
        /// Recorded in the sidecar; the loop itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Synthesize the controller and print the certificate report.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Version,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_CERTIFICATE: u8 = 2;
const EXIT_DEGRADED: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Certificate { .. } | Error::NonPositiveThrust(_) | Error::ExtractionSingular(_) => EXIT_CERTIFICATE,
        _ => EXIT_CONFIG,
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    seed: u64,
    meta: &'a SimMeta,
    metrics: &'a Metrics,
    degraded_samples: usize,
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn simulate(
    config: &Path,
    out: &Path,
    controller: Option<ControllerMode>,
    duration: Option<f64>,
    seed: u64,
) -> Result<u8, Error> {
    let mut cfg = load_config(config)?;
    if let Some(c) = controller {
        cfg.controller = c;
    }
    if let Some(d) = duration {
        cfg.duration = d;
    }
    cfg.output = out.display().to_string();
    let syn = Synthesis::new(&cfg)?;
    let run = run_with(&cfg, &syn)?;
    export_trace(&run.rows, out)?;
    let metrics = compute_metrics(&run)?;
    let degraded = run.degraded_samples();
    let side = Sidecar {
        seed,
        meta: &run.meta,
        metrics: &metrics,
        degraded_samples: degraded,
    };
    std::fs::write(sidecar_path(out), serde_json::to_string_pretty(&side)? + "\n")?;
    println!(
        "{} rows -> {}; max |p_err| {:.4} m, final {:.4} m, jumps {}, min margin {:.4}",
        metrics.rows,
        out.display(),
        metrics.max_p_err,
        metrics.final_p_err,
        metrics.jumps,
        metrics.min_margin
    );
    if degraded > 0 {
        eprintln!("solver degraded at {degraded} samples");
        return Ok(EXIT_DEGRADED);
    }
    Ok(0)
}

fn validate(config: &Path, seed: u64) -> Result<u8, Error> {
    let cfg = load_config(config)?;
    let syn = Synthesis::new(&cfg)?;
    let meta = syn.metadata(&cfg)?;
    let b = &syn.bounds;
    println!("reference `{}`", cfg.trajectory);
    println!(
        "  delta_r {:.6}  delta_rz {:.6}  L1 {:.6}  L2 {:.6}  L_bar {:.6}",
        b.delta_r, b.delta_rz, b.l1, b.l2, b.l_bar
    );
    println!("  Delta {:.6}  schedule min {:.6} over {} entries", b.delta, meta.schedule_min, meta.schedule_len);
    println!(
        "filters: gamma {:.6}  alpha {:.6}  beta {:.6}",
        syn.gains.gamma, syn.gains.alpha, syn.gains.beta
    );
    for (i, a) in meta.axes.iter().enumerate() {
        println!(
            "axis {i}: d {:.3}  b_hat {:.6e}  Theta {:.6e} (min {:.6e})  Gamma {:.6e}  c3 {:.6e}",
            a.drag, a.b_hat, a.theta, a.theta_min, a.gamma_big, a.c3
        );
    }
    let periods = 100.min(syn.schedule.len() - 1);
    let inv: InvarianceReport = filter_invariance_mc(&syn.gains, &syn.schedule, cfg.h, 1000, periods, seed)?;
    let mut ok = inv.violations == 0;
    println!(
        "filter invariance: {} sequences x {} periods, {} violations, worst ratio {:.6}",
        inv.sequences, inv.periods, inv.violations, inv.worst_ratio
    );
    for (i, ax) in syn.controller.axes.iter().enumerate() {
        let t: TerminalReport = terminal_decrease_check(ax, 1000, 10.0, 1e-9, seed.wrapping_add(i as u64));
        ok &= t.violations == 0;
        println!(
            "terminal decrease axis {i}: {} states, {} violations, max excess {:.3e}",
            t.states, t.violations, t.max_excess
        );
    }
    println!("{}", if ok { "certificates: OK" } else { "certificates: FAILED" });
    Ok(if ok { 0 } else { EXIT_CERTIFICATE })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors, which is taken by certificate failures
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let result = match cli.cmd {
        Cmd::Simulate {
            config,
            out,
            controller,
            duration,
            seed,
        } => simulate(&config, &out, controller, duration, seed),
        Cmd::Validate { config, seed } => validate(&config, seed),
        Cmd::Version => {
            println!("quadmpc {}", env!("CARGO_PKG_VERSION"));
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
