//! Closed-form H-LIP quantities for the AMBER-style gait.

use stepsls::hlip::{
    deadbeat_gain, dlqr_gain, orbital_slope_sigma1, push_to_disturbance, s2s_matrices, ssp_flow, DiscreteState,
    HlipParams, GRAVITY,
};

fn main() -> stepsls::Result<()> {
    let h = HlipParams::new(0.7, 0.4, GRAVITY, 60.0)?;
    let (a, b) = s2s_matrices(&h);
    println!("lambda = {:.4} 1/s, sigma1 = {:.4} 1/s", h.lambda(), orbital_slope_sigma1(&h));
    println!("A = {a}B = {b}");

    let x0 = DiscreteState::new(-0.2, 0.9);
    for t in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let x = ssp_flow(x0, t, &h);
        println!("t = {t:.1}  p = {:+.4}  v = {:+.4}", x.p, x.v);
    }

    for f in [25.0, 50.0, 100.0] {
        let w = push_to_disturbance(f, &h);
        println!("{f:>5} N push over one step -> w = ({:+.4}, {:+.4})", w[0], w[1]);
    }

    let k_db = deadbeat_gain(&a, &b)?;
    let k_lqr = dlqr_gain(&a, &b, &nalgebra::Matrix2::identity(), 1.0)?;
    println!("deadbeat K = {}", k_db.0);
    println!("LQR K = {}", k_lqr.0);
    Ok(())
}
