//! Fits the L-infinity step-to-step model on plant data and reports the
//! residual bound and the resulting orbits.

use stepsls::harness::pipeline::{learn, training_dataset};
use stepsls::harness::ExperimentConfig;
use stepsls::learn::{error_constraint_sets, p1_orbit, p2_orbit, OrbitSpec};

fn main() -> stepsls::Result<()> {
    let cfg = ExperimentConfig::amber();
    let data = training_dataset(&cfg)?;
    let learned = learn(&cfg, &data)?;
    let m = &learned.model;
    println!("{} training triples, {} held out", learned.train.len(), learned.holdout.len());
    println!("Abar = {}Bbar = {}Cbar = {}", m.abar, m.bbar, m.cbar);
    println!("d* = ({:.3e}, {:.3e})", m.dstar[0], m.dstar[1]);
    println!("held-out residuals within 1.5 d*: {:.1}%", 100.0 * learned.holdout_coverage);

    let p1 = p1_orbit(m, cfg.v_d, cfg.plant.period)?;
    if let OrbitSpec::P1 { x_star, u_star, .. } = p1 {
        println!("P1 orbit at {} m/s: x* = ({:.4}, {:.4}), u* = {u_star:.4}", cfg.v_d, x_star.p, x_star.v);
    }
    if let OrbitSpec::P2 { x_left, x_right, u_left, u_right, .. } = p2_orbit(m, cfg.v_d, cfg.plant.period, 0.3)? {
        println!(
            "P2 orbit: left ({:.4}, {:.4}) u {u_left:.3}, right ({:.4}, {:.4}) u {u_right:.3}",
            x_left.p, x_left.v, x_right.p, x_right.v
        );
    }
    let sets = error_constraint_sets(&cfg.x_set, &cfg.u_set, &p1)?;
    println!("Xe = {:?} x {:?}, Ue = {:?} x {:?}", sets.xe.lo(), sets.xe.hi(), sets.ue.lo(), sets.ue.hi());
    Ok(())
}
