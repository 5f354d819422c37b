//! Synthesizes the FIR push-recovery controller on the learned model,
//! prints its impulse response and checks the recovery certificate.

use nalgebra::DVector;
use stepsls::harness::pipeline::{build_design, certify, learn, synthesize_design, training_dataset};
use stepsls::harness::ExperimentConfig;
use stepsls::sls::rollout;

fn main() -> stepsls::Result<()> {
    let cfg = ExperimentConfig::amber();
    let learned = learn(&cfg, &training_dataset(&cfg)?)?;
    let design = build_design(&cfg, &learned.model)?;
    println!("S0 = {:?} x {:?}", design.s0.lo(), design.s0.hi());
    println!("Wext = {:?} x {:?}", design.wext.lo(), design.wext.hi());

    let fir = synthesize_design(&cfg, &design)?;
    println!("objective {:.5}, structural residual {:.1e}", fir.objective, fir.structural_residual());
    for (i, (px, pu)) in fir.phi_x.iter().zip(&fir.phi_u).enumerate() {
        println!("tap {}: Phi_x = {:?}  Phi_u = {:?}", i + 1, px.as_slice(), pu.as_slice());
    }

    let push = DVector::from_vec(design.wext.hi().to_vec());
    let mut w = vec![DVector::zeros(2); fir.horizon() + 1];
    w[1] = push;
    for (k, (e, u)) in rollout(&fir, &w).iter().enumerate() {
        println!("k = {k}: e = ({:+.4}, {:+.4}), u_e = {:+.4}", e[0], e[1], u[0]);
    }

    let cert = certify(&cfg, &design, Ok(&fir));
    print!("{}", cert.to_text());
    Ok(())
}
