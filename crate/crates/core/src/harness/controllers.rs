//! Step controllers that close the loop on the plant.
//!
//! Every controller predicts the pre-impact state from the current
//! mid-step state with the H-LIP flow and maps it to a step size, so the
//! command settles on its final value at impact.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hlip::{ssp_flow, DiscreteState, GainMatrix, HlipParams};
use crate::plant::StepController;
use crate::sls::{controller_reset, controller_step, ControllerState, FirController};

/// Pre-impact state predicted `T - t_phase` ahead.
pub fn predict_pre_impact(x: DiscreteState, t_phase: f64, hlip: &HlipParams) -> DiscreteState {
    ssp_flow(x, (hlip.period - t_phase).max(0.0), hlip)
}

/// `u = u* + K (x_pre - x*)`, optionally with a per-step uniform dither.
#[derive(Clone, Debug)]
pub struct GainStepper {
    name: String,
    gain: GainMatrix,
    x_star: DiscreteState,
    u_star: f64,
    hlip: HlipParams,
    dither: f64,
    offset: f64,
    rng: ChaCha8Rng,
}

impl GainStepper {
    pub fn new(name: &str, gain: GainMatrix, x_star: DiscreteState, u_star: f64, hlip: HlipParams) -> Self {
        Self {
            name: name.to_string(),
            gain,
            x_star,
            u_star,
            hlip,
            dither: 0.0,
            offset: 0.0,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    /// Adds `U(-amplitude, amplitude)` to every step, redrawn at each impact.
    pub fn with_dither(mut self, amplitude: f64, seed: u64) -> Self {
        self.dither = amplitude;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.offset = self.draw();
        self
    }

    fn draw(&mut self) -> f64 {
        if self.dither > 0.0 {
            self.rng.gen_range(-self.dither..=self.dither)
        } else {
            0.0
        }
    }
}

impl StepController for GainStepper {
    fn name(&self) -> &str {
        &self.name
    }

    fn command(&self, x: DiscreteState, t_phase: f64) -> f64 {
        let e = predict_pre_impact(x, t_phase, &self.hlip) - self.x_star;
        self.u_star + self.gain.apply(&e.to_vector()) + self.offset
    }

    fn commit(&mut self, _x_pre: DiscreteState, _u_real: f64) {
        self.offset = self.draw();
    }
}

/// The FIR controller wrapped around the target orbit.
#[derive(Clone, Debug)]
pub struct SlsStepper {
    fir: FirController,
    state: ControllerState,
    x_star: DiscreteState,
    u_star: f64,
    hlip: HlipParams,
}

impl SlsStepper {
    pub fn new(fir: FirController, x_star: DiscreteState, u_star: f64, hlip: HlipParams) -> Self {
        let state = controller_reset(&fir);
        Self { fir, state, x_star, u_star, hlip }
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    fn error(&self, x: DiscreteState) -> DVector<f64> {
        let e = (x - self.x_star).to_vector();
        DVector::from_column_slice(e.as_slice())
    }
}

impl StepController for SlsStepper {
    fn name(&self) -> &str {
        "sls"
    }

    /// Previews the control law on the predicted error without committing it.
    fn command(&self, x: DiscreteState, t_phase: f64) -> f64 {
        let e = self.error(predict_pre_impact(x, t_phase, &self.hlip));
        self.u_star + controller_step(&self.fir, &self.state, &e).0[0]
    }

    fn commit(&mut self, x_pre: DiscreteState, _u_real: f64) {
        let e = self.error(x_pre);
        self.state = controller_step(&self.fir, &self.state, &e).1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hlip::{deadbeat_gain, s2s_matrices, GRAVITY};
    use crate::plant::{run_episode, PlantConfig, PlantState, PushSchedule};

    #[test]
    fn prediction_at_impact_is_identity() {
        let h = HlipParams::new(0.7, 0.4, GRAVITY, 20.0).unwrap();
        let x = DiscreteState::new(0.1, 0.4);
        assert_eq!(predict_pre_impact(x, 0.4, &h), x);
    }

    #[test]
    fn hlip_deadbeat_settles_on_linear_plant() {
        let cfg = PlantConfig::for_gait(0.7, 0.4, 20.0).linear_limit();
        let h = cfg.hlip();
        let (a, b) = s2s_matrices(&h);
        let k = deadbeat_gain(&a, &b).unwrap();
        let mut c = GainStepper::new("deadbeat", k, DiscreteState::new(0.0, 0.0), 0.0, h);
        let mut start = PlantState::standstill(&cfg);
        start.vx = 0.2;
        let ep = run_episode(&cfg, &mut c, 6, &PushSchedule::none(), start, false).unwrap();
        let last = ep.steps.last().unwrap().x_pre;
        assert!(last.p.abs() < 1e-6 && last.v.abs() < 1e-6, "{last:?}");
    }

    #[test]
    fn dither_is_bounded_and_seeded() {
        let h = HlipParams::new(0.7, 0.4, GRAVITY, 20.0).unwrap();
        let mk = || GainStepper::new("d", GainMatrix::zero(), DiscreteState::new(0.0, 0.0), 0.3, h).with_dither(0.03, 9);
        let (mut a, mut b) = (mk(), mk());
        for _ in 0..50 {
            let ua = a.command(DiscreteState::new(0.0, 0.0), 0.4);
            assert_eq!(ua, b.command(DiscreteState::new(0.0, 0.0), 0.4));
            assert!((ua - 0.3).abs() <= 0.03);
            a.commit(DiscreteState::new(0.0, 0.0), ua);
            b.commit(DiscreteState::new(0.0, 0.0), ua);
        }
    }
}
