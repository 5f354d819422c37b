//! Walks the nonlinear plant under H-LIP deadbeat stepping and prints the
//! pre-impact states next to the H-LIP prediction.

use stepsls::harness::controllers::GainStepper;
use stepsls::harness::pipeline::{hlip_model, orbit_start};
use stepsls::harness::ExperimentConfig;
use stepsls::hlip::{deadbeat_gain, s2s_matrices};
use stepsls::learn::{p1_orbit, OrbitSpec};
use stepsls::plant::{run_episode, PushSchedule};

fn main() -> stepsls::Result<()> {
    let cfg = ExperimentConfig::amber();
    let h = cfg.plant.hlip();
    let model = hlip_model(&h);
    let OrbitSpec::P1 { x_star, u_star, .. } = p1_orbit(&model, cfg.v_d, h.period)? else { unreachable!() };
    let (a, b) = s2s_matrices(&h);
    let mut ctrl = GainStepper::new("deadbeat", deadbeat_gain(&a, &b)?, x_star, u_star, h);

    let pushes = PushSchedule::new(vec![(6, 40.0)], cfg.n_push)?;
    let ep = run_episode(&cfg.plant, &mut ctrl, 14, &pushes, orbit_start(&cfg, x_star, u_star), false)?;
    println!("  k     p       v       u     pred p  pred v   push");
    let mut prev = None;
    for s in &ep.steps {
        let pred = prev.map(|(x, u)| model.predict(x, u));
        println!(
            "{:>3} {:+.4} {:+.4} {:+.4}  {}  {:>5.1}",
            s.k,
            s.x_pre.p,
            s.x_pre.v,
            s.u_real,
            pred.map_or("   -       -   ".into(), |p| format!("{:+.4} {:+.4}", p.p, p.v)),
            s.push_force
        );
        prev = Some((s.x_pre, s.u_real));
    }
    println!("fell: {}", ep.fell);
    Ok(())
}
