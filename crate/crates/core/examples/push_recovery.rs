//! Same push, three controllers: SLS, deadbeat and LQR on the plant.
//!
//! Usage: push_recovery [amber|cassie] [force]

use stepsls::harness::pipeline::{build_design, learn, run_controller, summarize, synthesize_design, training_dataset};
use stepsls::harness::{ControllerKind, ExperimentConfig};

fn main() -> stepsls::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next().as_deref() {
        Some("cassie") => ExperimentConfig::cassie(),
        _ => ExperimentConfig::amber(),
    };
    let force: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(cfg.push_force);

    let learned = learn(&cfg, &training_dataset(&cfg)?)?;
    let design = build_design(&cfg, &learned.model)?;
    let fir = synthesize_design(&cfg, &design)?;
    let pushes = [(cfg.push_first_step, force)];
    println!("push of {force} N over step {}", cfg.push_first_step);
    for kind in ControllerKind::ALL {
        let log = run_controller(&cfg, &design, kind, Some(&fir), &pushes, cfg.sim_steps, false)?;
        let row = summarize(&log, &pushes, &design.s0);
        println!(
            "{:<9} max|u| {:.4}  back in S0 after {:?} steps  input violations {}",
            row.controller, row.max_abs_u, row.recovery_steps[0], row.input_violations
        );
        for s in log.steps.iter().filter(|s| s.k + 1 >= cfg.push_first_step && s.k <= cfg.push_first_step + 4) {
            println!("    k {:>2}  e = ({:+.4}, {:+.4})  u = {:.4}", s.k, s.e[0], s.e[1], s.u_real);
        }
    }
    Ok(())
}
